#include "seqscan/resolver.hpp"

#include "seqscan/text.hpp"

#include <algorithm>
#include <filesystem>

namespace seqscan {

namespace {

constexpr int kMaxDepth = 8;

std::string dirname(std::string_view path) {
    const auto slash = path.rfind('/');
    return slash == std::string_view::npos ? std::string() : std::string(path.substr(0, slash));
}

std::string join(const std::string& dir, std::string_view rel) {
    return dir.empty() ? std::string(rel) : dir + "/" + std::string(rel);
}

// Lexically normalized relative path, or "" when it escapes the root.
std::string normalize(const std::string& path) {
    const std::string out = std::filesystem::path(path).lexically_normal().generic_string();
    if (out.empty() || out == "." || text::starts_with(out, "../") || out == ".." || text::starts_with(out, "/")) {
        return "";
    }
    return out;
}

std::string dotted_to_path(std::string_view dotted) {
    std::string out(dotted);
    std::replace(out.begin(), out.end(), '.', '/');
    return out;
}

std::pair<std::string_view, std::string_view> split_head(std::string_view name) {
    const auto dot = name.find('.');
    if (dot == std::string_view::npos) return {name, {}};
    return {name.substr(0, dot), name.substr(dot + 1)};
}

std::string concat(std::string_view a, std::string_view b) {
    if (a.empty()) return std::string(b);
    if (b.empty()) return std::string(a);
    return std::string(a) + "." + std::string(b);
}

}  // namespace

Resolver::Resolver(const PackageIndex& index) : index_(index) { compute_imports(); }

std::optional<std::size_t> Resolver::file_at(const std::string& path) const {
    if (path.empty()) return std::nullopt;
    return index_.file_index(path);
}

std::optional<std::size_t> Resolver::python_module_file(const std::string& dir, std::string_view dotted) const {
    if (dotted.empty()) return file_at(normalize(join(dir, "__init__.py")));
    const std::string base = join(dir, dotted_to_path(dotted));
    if (auto f = file_at(normalize(base + ".py"))) return f;
    return file_at(normalize(base + "/__init__.py"));
}

std::optional<std::pair<std::size_t, std::string>> Resolver::python_module(std::size_t from_file,
                                                                           std::string_view dotted, int level) const {
    std::vector<std::string> roots;
    const std::string own_dir = dirname(index_.files[from_file].source->path);
    if (level > 0) {
        std::string dir = own_dir;
        for (int up = 1; up < level; ++up) {
            if (dir.empty()) return std::nullopt;
            dir = dirname(dir);
        }
        roots.push_back(dir);
    } else {
        // Implicit relative imports first (Python 2 style), then the package
        // root and a `src/` layout.
        roots = {own_dir, "", "src"};
    }
    const auto parts = text::split(dotted, '.');
    for (const auto& root : roots) {
        for (std::size_t n = parts.size(); n-- > 0;) {
            if (dotted.empty() && n == 0) break;
            std::vector<std::string> head(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(n + 1));
            if (auto f = python_module_file(root, text::join(head, "."))) {
                std::vector<std::string> tail(parts.begin() + static_cast<std::ptrdiff_t>(n + 1), parts.end());
                return std::make_pair(*f, text::join(tail, "."));
            }
        }
        if (dotted.empty() && level > 0) {
            if (auto f = python_module_file(root, "")) return std::make_pair(*f, std::string());
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> Resolver::js_module_file(std::size_t from_file, std::string_view spec) const {
    if (!(text::starts_with(spec, "./") || text::starts_with(spec, "../") || spec == "." || spec == "..")) {
        return std::nullopt;
    }
    const std::string base = normalize(join(dirname(index_.files[from_file].source->path), spec));
    for (const char* suffix : {"", ".js", ".cjs", ".mjs", "/index.js", "/index.cjs", "/index.mjs"}) {
        const std::string candidate = base.empty() ? normalize(std::string(suffix).substr(suffix[0] == '/' ? 1 : 0))
                                                   : base + suffix;
        if (auto f = file_at(candidate)) return f;
    }
    return std::nullopt;
}

void Resolver::compute_imports() {
    imports_.resize(index_.files.size());
    for (std::size_t f = 0; f < index_.files.size(); ++f) {
        const auto& parsed = index_.files[f].syntax;
        auto& out = imports_[f];
        const bool js = index_.files[f].source->language == Language::JavaScript;
        for (const auto& imp : parsed.imports) {
            if (js) {
                if (auto target = js_module_file(f, imp.module)) out.push_back(*target);
            } else if (auto target = python_module(f, imp.module, imp.level)) {
                out.push_back(target->first);
            }
        }
        if (!js) {
            // `from pkg import sub` may name a submodule.
            for (const auto& b : parsed.bindings) {
                if (b.member.empty() || b.member == "*") continue;
                if (auto target = python_module(f, concat(b.module, b.member), b.level)) {
                    if (target->second.empty()) out.push_back(target->first);
                }
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        out.erase(std::remove(out.begin(), out.end(), f), out.end());
    }
}

std::optional<MethodId> Resolver::local_or_constructor(std::size_t file, const std::string& name) const {
    if (name.empty()) return std::nullopt;
    if (auto m = index_.find(file, name)) return m;
    const auto& classes = index_.files[file].syntax.classes;
    const bool is_class = std::any_of(classes.begin(), classes.end(),
                                      [&](const syntax::ClassDecl& c) { return c.qualified == name; });
    if (!is_class) return std::nullopt;
    const bool js = index_.files[file].source->language == Language::JavaScript;
    return index_.find(file, name + (js ? ".constructor" : ".__init__"));
}

std::optional<MethodId> Resolver::lookup_symbol(std::size_t file, std::string_view symbol, int depth) const {
    if (symbol.empty() || depth > kMaxDepth) return std::nullopt;
    const auto& parsed = index_.files[file].syntax;
    std::string name(symbol);
    if (index_.files[file].source->language == Language::JavaScript) {
        auto [head, rest] = split_head(symbol);
        for (const auto& e : parsed.exports) {
            if (e.exported == head) {
                name = concat(e.local, rest);
                break;
            }
        }
        if (name == symbol && head == "default") name = concat("module.exports", rest);
    }
    if (auto m = local_or_constructor(file, name)) return m;
    // Re-exported through an import in the target file.
    const auto [head, rest] = split_head(name);
    for (auto it = parsed.bindings.rbegin(); it != parsed.bindings.rend(); ++it) {
        if (it->local == head) return through_binding(file, *it, rest, depth + 1);
    }
    return std::nullopt;
}

std::optional<MethodId> Resolver::through_binding(std::size_t file, const syntax::Binding& b, std::string_view rest,
                                                  int depth) const {
    if (depth > kMaxDepth) return std::nullopt;
    if (index_.files[file].source->language == Language::JavaScript) {
        const auto target = js_module_file(file, b.module);
        if (!target) return std::nullopt;
        const std::string symbol = b.member.empty() ? std::string(rest) : concat(b.member, rest);
        if (symbol.empty()) {
            // Calling the module object itself: its default export.
            return lookup_symbol(*target, "default", depth);
        }
        return lookup_symbol(*target, symbol, depth);
    }
    const std::string dotted = b.member.empty() ? concat(b.module, rest) : concat(concat(b.module, b.member), rest);
    const auto target = python_module(file, dotted, b.level);
    if (!target) return std::nullopt;
    return lookup_symbol(target->first, target->second, depth);
}

std::optional<MethodId> Resolver::resolve_call(MethodId caller, const syntax::CallSite& call) const {
    return resolve_call(caller, call.callee, call.is_new);
}

std::optional<MethodId> Resolver::resolve_call(MethodId caller, std::string_view callee, bool) const {
    const MethodRef& m = index_.methods[caller];
    const std::size_t file = m.file_index;
    const auto& parsed = index_.files[file].syntax;
    const bool js = index_.files[file].source->language == Language::JavaScript;

    const auto [head, rest] = split_head(callee);
    if (head == "self" || head == "cls" || head == "this") {
        if (m.owner_class.empty() || rest.empty()) return std::nullopt;
        return local_or_constructor(file, m.owner_class + "." + std::string(rest));
    }
    if (head == "super") return std::nullopt;

    // Enclosing scopes, innermost first. Python class bodies are not
    // enclosing scopes for the functions inside them.
    std::string scope = m.kind == MethodKind::ImplicitMain ? std::string() : m.local_name;
    while (true) {
        bool class_scope = false;
        if (!js && !scope.empty()) {
            class_scope = std::any_of(parsed.classes.begin(), parsed.classes.end(),
                                      [&](const syntax::ClassDecl& c) { return c.qualified == scope; });
        }
        if (!class_scope) {
            if (auto hit = local_or_constructor(file, concat(scope, callee))) return hit;
        }
        if (scope.empty()) break;
        const auto dot = scope.rfind('.');
        scope = dot == std::string::npos ? std::string() : scope.substr(0, dot);
    }

    for (auto it = parsed.bindings.rbegin(); it != parsed.bindings.rend(); ++it) {
        if (it->member == "*" || it->local != head) continue;
        return through_binding(file, *it, rest, 0);
    }
    if (!js) {
        for (const auto& b : parsed.bindings) {
            if (b.member != "*") continue;
            if (auto target = python_module(file, b.module, b.level)) {
                if (target->second.empty()) {
                    if (auto hit = lookup_symbol(target->first, callee, 1)) return hit;
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace seqscan
