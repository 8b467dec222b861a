#pragma once

#include "seqscan/package.hpp"
#include "seqscan/syntax.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqscan {

using MethodId = std::size_t;

enum class MethodKind { ExplicitMethod, ImplicitMain };
enum class Visibility { Public, Private };

// Lower value runs earlier and is traversed first.
enum class TriggerScenario { InstallTime = 0, ImportTime = 1, RunTime = 2 };

std::string_view to_string(MethodKind k);
std::string_view to_string(Visibility v);
std::string_view to_string(TriggerScenario s);

inline constexpr std::string_view kMainName = "__main__";

struct MethodRef {
    std::string file;            // relative path of the defining file
    std::string qualified_name;  // `<file>::__main__` or `<file>::Cls.method`
    std::string local_name;      // part after `::`
    MethodKind kind = MethodKind::ExplicitMethod;
    Visibility visibility = Visibility::Public;
    int start_line = 1;
    int end_line = 1;
    syntax::Span span;
    std::string owner_class;  // for `self.x()` / `this.x()` resolution
    std::size_t file_index = 0;
};

// Python: `__x` but not `__x__`. JavaScript: `#x`.
Visibility visibility_for(std::string_view simple_name, Language language);

struct ParsedSource {
    const SourceFile* source = nullptr;
    syntax::ParsedFile syntax;
};

// Every analyzable file of a package, parsed once, with its methods. The
// package must outlive the index.
struct PackageIndex {
    const Package* package = nullptr;
    std::vector<ParsedSource> files;                 // sorted by path
    std::vector<MethodRef> methods;                  // per file: main first, then source order
    std::vector<std::vector<MethodId>> file_methods; // parallel to `files`
    std::vector<std::string> warnings;

    std::optional<std::size_t> file_index(std::string_view path) const;
    MethodId main_of(std::size_t file) const { return file_methods[file].front(); }
    // Innermost method whose span contains `pos`; the file main otherwise.
    MethodId owner_of(std::size_t file, syntax::Position pos) const;
    std::optional<MethodId> find(std::size_t file, std::string_view local_name) const;

    std::unordered_map<std::string, MethodId> by_local;  // "<file_index>\t<local>" -> id
};

PackageIndex index_package(const Package& package);

// enumerate_methods(package): one ImplicitMain per analyzable source file and
// one ExplicitMethod per declaration, nested names dotted.
std::vector<MethodRef> enumerate_methods(const Package& package);

}  // namespace seqscan
