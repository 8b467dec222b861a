#pragma once

#include "seqscan/methods.hpp"
#include "seqscan/syntax.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqscan {

// Flow-insensitive, name-based resolution of modules and callees inside one
// package. Nothing outside the package ever resolves.
class Resolver {
public:
    explicit Resolver(const PackageIndex& index);

    // In-package files a file imports (directly), sorted, without duplicates.
    const std::vector<std::size_t>& imported_files(std::size_t file) const { return imports_[file]; }

    // The in-package method a call site lands on, if any. `caller` must be
    // the method that owns the call.
    std::optional<MethodId> resolve_call(MethodId caller, const syntax::CallSite& call) const;
    std::optional<MethodId> resolve_call(MethodId caller, std::string_view callee_text, bool is_new = false) const;

    // File for a JS module specifier (`./lib/x`) imported from `from_file`.
    std::optional<std::size_t> js_module_file(std::size_t from_file, std::string_view spec) const;
    // Python: the longest dotted prefix of `dotted` that names an in-package
    // module, and the remaining symbol path.
    std::optional<std::pair<std::size_t, std::string>> python_module(std::size_t from_file, std::string_view dotted,
                                                                     int level) const;

private:
    std::optional<std::size_t> file_at(const std::string& path) const;
    std::optional<std::size_t> python_module_file(const std::string& dir, std::string_view dotted) const;
    std::optional<MethodId> through_binding(std::size_t file, const syntax::Binding& b, std::string_view rest,
                                            int depth) const;
    std::optional<MethodId> lookup_symbol(std::size_t file, std::string_view symbol, int depth) const;
    std::optional<MethodId> local_or_constructor(std::size_t file, const std::string& name) const;
    void compute_imports();

    const PackageIndex& index_;
    std::vector<std::vector<std::size_t>> imports_;
};

}  // namespace seqscan
