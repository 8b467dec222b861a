#include "seqscan/call_graph.hpp"

#include <algorithm>
#include <tuple>

namespace seqscan {

CallGraph build_call_graph(const PackageIndex& index, const Resolver& resolver, std::vector<MethodId> roots) {
    CallGraph g;
    g.methods = std::move(roots);
    g.by_caller.resize(index.methods.size());
    for (std::size_t f = 0; f < index.files.size(); ++f) {
        for (const auto& call : index.files[f].syntax.calls) {
            const MethodId caller = index.owner_of(f, call.pos);
            if (auto callee = resolver.resolve_call(caller, call)) {
                g.edges.push_back(CallEdge{caller, call.pos.line, call.pos.column, *callee});
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const CallEdge& a, const CallEdge& b) {
        return std::tie(a.caller, a.line, a.column, a.callee) < std::tie(b.caller, b.line, b.column, b.callee);
    });
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    for (std::size_t e = 0; e < g.edges.size(); ++e) g.by_caller[g.edges[e].caller].push_back(e);
    return g;
}

std::string dump_call_graph(const PackageIndex& index, const CallGraph& graph) {
    std::string out;
    for (const auto& e : graph.edges) {
        out += index.methods[e.caller].qualified_name;
        out += '\t';
        out += std::to_string(e.line);
        out += '\t';
        out += index.methods[e.callee].qualified_name;
        out += '\n';
    }
    return out;
}

}  // namespace seqscan
