#include "seqscan/sequence.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_set>

namespace seqscan {

namespace {

struct WorkItem {
    int line;
    int column;
    bool is_edge;  // instances sort before edges at the same position
    std::size_t index;
};

std::vector<WorkItem> worklist(MethodId m, const CallGraph& graph, const FeatureIndex& features) {
    std::vector<WorkItem> items;
    if (m < features.size()) {
        for (std::size_t i = 0; i < features[m].size(); ++i) {
            items.push_back({features[m][i].line, features[m][i].column, false, i});
        }
    }
    for (const auto e : graph.edges_of(m)) items.push_back({graph.edges[e].line, graph.edges[e].column, true, e});
    std::stable_sort(items.begin(), items.end(), [](const WorkItem& a, const WorkItem& b) {
        return std::tie(a.line, a.column, a.is_edge) < std::tie(b.line, b.column, b.is_edge);
    });
    return items;
}

// Shared walk; `on_feature` sees instances, `on_visit` sees methods.
template <typename OnFeature, typename OnVisit>
void walk(MethodId root, const CallGraph& graph, const FeatureIndex& features, OnFeature on_feature,
          OnVisit on_visit) {
    struct Frame {
        MethodId method;
        std::vector<WorkItem> items;
        std::size_t next = 0;
    };
    std::unordered_set<MethodId> visited{root};
    on_visit(root);
    std::vector<Frame> stack;
    stack.push_back({root, worklist(root, graph, features)});
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next == top.items.size()) {
            stack.pop_back();
            continue;
        }
        const WorkItem item = top.items[top.next++];
        const MethodId m = top.method;
        if (!item.is_edge) {
            on_feature(features[m][item.index]);
            continue;
        }
        const MethodId callee = graph.edges[item.index].callee;
        if (!visited.insert(callee).second) continue;
        on_visit(callee);
        stack.push_back({callee, worklist(callee, graph, features)});
    }
}

}  // namespace

std::vector<FeatureInstance> BehaviorSequence::flatten() const {
    std::vector<FeatureInstance> out;
    for (const auto& e : entries) out.insert(out.end(), e.items.begin(), e.items.end());
    return out;
}

std::vector<FeatureInstance> traverse_entry(MethodId root, const CallGraph& graph, const FeatureIndex& features) {
    std::vector<FeatureInstance> out;
    walk(root, graph, features, [&](const FeatureInstance& f) { out.push_back(f); }, [](MethodId) {});
    return out;
}

std::vector<MethodId> reachable_from(MethodId root, const CallGraph& graph) {
    std::vector<MethodId> out;
    const FeatureIndex none;
    walk(root, graph, none, [](const FeatureInstance&) {}, [&](MethodId m) { out.push_back(m); });
    return out;
}

BehaviorSequence generate_behavior_sequence(const CallGraph& graph, const FeatureIndex& features,
                                            const std::vector<MethodRef>& methods) {
    BehaviorSequence seq;
    for (const MethodId root : graph.methods) {
        seq.entries.push_back(EntryTrace{root, methods[root].file, traverse_entry(root, graph, features)});
    }
    return seq;
}

std::string dump_sequence(const std::vector<MethodRef>& methods, const BehaviorSequence& sequence) {
    std::string out;
    for (const auto& entry : sequence.entries) {
        for (const auto& item : entry.items) {
            out += methods[entry.root].qualified_name;
            out += '\t';
            out += methods[item.method].qualified_name;
            out += '\t';
            out += std::to_string(item.line);
            out += '\t';
            out += code(item.id);
            out += '\n';
        }
    }
    return out;
}

}  // namespace seqscan
