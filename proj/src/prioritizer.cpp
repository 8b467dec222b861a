#include "seqscan/prioritizer.hpp"

#include "seqscan/text.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>

namespace seqscan {

namespace {

std::string_view basename(std::string_view path) {
    const auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

}  // namespace

std::vector<std::size_t> install_files(const PackageIndex& index) {
    std::vector<std::size_t> out;
    for (const auto& path : index.package->manifest.install_script_paths) {
        if (auto f = index.file_index(path)) {
            if (std::find(out.begin(), out.end(), *f) == out.end()) out.push_back(*f);
        }
    }
    return out;
}

std::vector<std::size_t> import_closure(const PackageIndex& index, const Resolver& resolver) {
    std::vector<bool> seen(index.files.size(), false);
    std::deque<std::size_t> work;
    auto seed = [&](std::size_t f) {
        if (!seen[f]) {
            seen[f] = true;
            work.push_back(f);
        }
    };
    for (std::size_t f = 0; f < index.files.size(); ++f) {
        const auto name = basename(index.files[f].source->path);
        if (name == "__init__.py" || name == "index.js") seed(f);
    }
    if (index.package->ecosystem == Ecosystem::NPM) {
        const auto& raw = index.package->manifest.raw;
        if (auto it = raw.find("main"); it != raw.end()) {
            std::string main = std::filesystem::path(it->second).lexically_normal().generic_string();
            if (text::starts_with(main, "./")) main.erase(0, 2);
            for (const char* suffix : {"", ".js", ".cjs", ".mjs", "/index.js"}) {
                if (main.empty() || text::starts_with(main, "..")) break;
                if (auto f = index.file_index(main + suffix)) {
                    seed(*f);
                    break;
                }
            }
        }
    }
    const auto installs = install_files(index);
    // Install scripts seed the closure but stay install-time themselves.
    for (const auto f : installs) {
        for (const auto g : resolver.imported_files(f)) {
            if (!seen[g]) {
                seen[g] = true;
                work.push_back(g);
            }
        }
    }
    while (!work.empty()) {
        const std::size_t f = work.front();
        work.pop_front();
        for (const auto g : resolver.imported_files(f)) {
            if (!seen[g]) {
                seen[g] = true;
                work.push_back(g);
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < seen.size(); ++f) {
        if (seen[f] && std::find(installs.begin(), installs.end(), f) == installs.end()) out.push_back(f);
    }
    return out;
}

std::vector<TriggerScenario> assign_trigger_scenarios(const PackageIndex& index, const Resolver& resolver) {
    std::vector<TriggerScenario> out(index.methods.size(), TriggerScenario::RunTime);
    for (const auto f : import_closure(index, resolver)) out[index.main_of(f)] = TriggerScenario::ImportTime;
    for (const auto f : install_files(index)) out[index.main_of(f)] = TriggerScenario::InstallTime;
    return out;
}

std::vector<MethodId> prioritize_methods(const PackageIndex& index, const std::vector<TriggerScenario>& scenarios) {
    std::vector<MethodId> roots;
    for (MethodId id = 0; id < index.methods.size(); ++id) {
        if (index.methods[id].visibility == Visibility::Public) roots.push_back(id);
    }
    std::stable_sort(roots.begin(), roots.end(), [&](MethodId a, MethodId b) {
        if (scenarios[a] != scenarios[b]) return scenarios[a] < scenarios[b];
        return index.methods[a].qualified_name < index.methods[b].qualified_name;
    });
    return roots;
}

}  // namespace seqscan
