#pragma once

#include "seqscan/methods.hpp"
#include "seqscan/resolver.hpp"

#include <string>
#include <vector>

namespace seqscan {

struct CallEdge {
    MethodId caller = 0;
    int line = 1;
    int column = 0;
    MethodId callee = 0;

    bool operator==(const CallEdge&) const = default;
};

// G = <M, E>. `methods` is the prioritized root list; private methods are
// nodes (edge endpoints) without being roots.
struct CallGraph {
    std::vector<MethodId> methods;
    std::vector<CallEdge> edges;                   // sorted by (caller, line, column)
    std::vector<std::vector<std::size_t>> by_caller;  // MethodId -> indices into `edges`

    const std::vector<std::size_t>& edges_of(MethodId m) const { return by_caller[m]; }
};

// One edge per call expression whose callee resolves to an in-package method.
CallGraph build_call_graph(const PackageIndex& index, const Resolver& resolver, std::vector<MethodId> roots);

// One edge per line: `caller TAB line TAB callee` (qualified names).
std::string dump_call_graph(const PackageIndex& index, const CallGraph& graph);

}  // namespace seqscan
