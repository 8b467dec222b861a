#include "seqscan/methods.hpp"

#include "seqscan/text.hpp"

#include <algorithm>
#include <climits>

namespace seqscan {

std::string_view to_string(MethodKind k) { return k == MethodKind::ImplicitMain ? "main" : "method"; }

std::string_view to_string(Visibility v) { return v == Visibility::Private ? "private" : "public"; }

std::string_view to_string(TriggerScenario s) {
    switch (s) {
        case TriggerScenario::InstallTime: return "install";
        case TriggerScenario::ImportTime: return "import";
        case TriggerScenario::RunTime: return "run";
    }
    return "run";
}

Visibility visibility_for(std::string_view name, Language language) {
    if (language == Language::JavaScript) {
        return text::starts_with(name, "#") ? Visibility::Private : Visibility::Public;
    }
    if (name.size() > 2 && text::starts_with(name, "__") && !text::ends_with(name, "__")) return Visibility::Private;
    return Visibility::Public;
}

std::optional<std::size_t> PackageIndex::file_index(std::string_view path) const {
    const auto it = std::lower_bound(files.begin(), files.end(), path,
                                     [](const ParsedSource& f, std::string_view p) { return f.source->path < p; });
    if (it == files.end() || it->source->path != path) return std::nullopt;
    return static_cast<std::size_t>(it - files.begin());
}

MethodId PackageIndex::owner_of(std::size_t file, syntax::Position pos) const {
    const auto& ids = file_methods[file];
    MethodId best = ids.front();
    for (std::size_t k = 1; k < ids.size(); ++k) {
        const auto& m = methods[ids[k]];
        if (m.span.begin > pos) break;  // explicit methods are sorted by start
        if (m.span.contains(pos)) best = ids[k];
    }
    return best;
}

std::optional<MethodId> PackageIndex::find(std::size_t file, std::string_view local_name) const {
    const auto it = by_local.find(std::to_string(file) + "\t" + std::string(local_name));
    if (it == by_local.end()) return std::nullopt;
    return it->second;
}

PackageIndex index_package(const Package& package) {
    PackageIndex index;
    index.package = &package;
    const Language language = analyzed_language(package.ecosystem);
    for (const auto& source : package.sources) {
        if (source.language != language) continue;
        ParsedSource parsed{&source, syntax::parse(source)};
        if (!parsed.syntax.ok) {
            index.warnings.push_back("ParseFailure: " + source.path + ": " + parsed.syntax.error);
        }
        index.files.push_back(std::move(parsed));
    }

    for (std::size_t f = 0; f < index.files.size(); ++f) {
        const auto& file = index.files[f];
        const std::string& path = file.source->path;
        std::vector<MethodId> ids;

        MethodRef main;
        main.file = path;
        main.local_name = std::string(kMainName);
        main.qualified_name = path + "::" + main.local_name;
        main.kind = MethodKind::ImplicitMain;
        main.start_line = 1;
        main.end_line = std::max(1, file.syntax.line_count);
        main.span = {{1, 0}, {INT_MAX, INT_MAX}};
        main.file_index = f;
        ids.push_back(index.methods.size());
        index.by_local[std::to_string(f) + "\t" + main.local_name] = index.methods.size();
        index.methods.push_back(std::move(main));

        for (const auto& def : file.syntax.functions) {
            MethodRef m;
            m.file = path;
            m.local_name = def.qualified;
            for (int suffix = 2; index.by_local.count(std::to_string(f) + "\t" + m.local_name); ++suffix) {
                m.local_name = def.qualified + "@" + std::to_string(suffix);
            }
            m.qualified_name = path + "::" + m.local_name;
            m.kind = MethodKind::ExplicitMethod;
            m.visibility = visibility_for(def.name, file.source->language);
            m.start_line = def.span.begin.line;
            m.end_line = def.span.end.line;
            m.span = def.span;
            m.owner_class = def.owner_class;
            m.file_index = f;
            ids.push_back(index.methods.size());
            index.by_local[std::to_string(f) + "\t" + m.local_name] = index.methods.size();
            index.methods.push_back(std::move(m));
        }
        index.file_methods.push_back(std::move(ids));
    }
    return index;
}

std::vector<MethodRef> enumerate_methods(const Package& package) { return index_package(package).methods; }

}  // namespace seqscan
