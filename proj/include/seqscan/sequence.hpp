#pragma once

#include "seqscan/call_graph.hpp"
#include "seqscan/features.hpp"
#include "seqscan/methods.hpp"

#include <string>
#include <vector>

namespace seqscan {

// Feature instances of every method, indexed by MethodId, each list sorted
// by (line, column).
using FeatureIndex = std::vector<std::vector<FeatureInstance>>;

struct EntryTrace {
    MethodId root = 0;
    std::string root_file;
    std::vector<FeatureInstance> items;
};

struct BehaviorSequence {
    std::vector<EntryTrace> entries;  // prioritized root order

    // S: all items of all entries, in order.
    std::vector<FeatureInstance> flatten() const;
};

// Depth-first walk from `root`: a method's own instances and outgoing edges
// are merged by (line, column), an instance winning a tie; an edge descends
// into its callee unless that callee was already visited in this walk.
std::vector<FeatureInstance> traverse_entry(MethodId root, const CallGraph& graph, const FeatureIndex& features);

// Methods visited by traverse_entry(root, ...), in first-visit order.
std::vector<MethodId> reachable_from(MethodId root, const CallGraph& graph);

BehaviorSequence generate_behavior_sequence(const CallGraph& graph, const FeatureIndex& features,
                                            const std::vector<MethodRef>& methods);

// One item per line: `root TAB method TAB line TAB feature_id`.
std::string dump_sequence(const std::vector<MethodRef>& methods, const BehaviorSequence& sequence);

}  // namespace seqscan
