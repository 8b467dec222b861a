#pragma once

#include "seqscan/methods.hpp"
#include "seqscan/resolver.hpp"

#include <vector>

namespace seqscan {

// Files whose top-level code runs at install time, in manifest order.
std::vector<std::size_t> install_files(const PackageIndex& index);

// Files whose top-level code runs on import: `__init__.py` / `index.js` at
// any depth, the package.json `main` target, and everything those files and
// the install scripts import, transitively.
std::vector<std::size_t> import_closure(const PackageIndex& index, const Resolver& resolver);

// Scenario of every method, indexed by MethodId.
std::vector<TriggerScenario> assign_trigger_scenarios(const PackageIndex& index, const Resolver& resolver);

// Traversal roots M: all methods except private ones, stably sorted by
// (scenario, qualified_name byte-wise).
std::vector<MethodId> prioritize_methods(const PackageIndex& index, const std::vector<TriggerScenario>& scenarios);

}  // namespace seqscan
