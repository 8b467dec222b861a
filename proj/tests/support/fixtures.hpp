#pragma once

#include "seqscan/features.hpp"
#include "seqscan/scan.hpp"
#include "seqscan/sequence.hpp"

#include <filesystem>
#include <memory>
#include <utility>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan::testing {

std::filesystem::path fixture_path(std::string_view name);

struct OracleEntry {
    std::string root;
    std::vector<std::string> ids;
};

// `<name>.expected`: root TAB space-separated feature codes, '#' comments.
std::vector<OracleEntry> read_sequence_oracle(std::string_view name);

struct OracleEdge {
    std::string caller;
    int line = 0;
    std::string callee;
};
std::vector<OracleEdge> read_edge_oracle(std::string_view name);

// Feature phrases typed out again here so rendering is checked against
// an independent copy of the feature table.
std::string_view oracle_phrase(std::string_view code);

// The description an entry list should render to, before truncation.
std::string oracle_render(const std::vector<OracleEntry>& entries);

std::vector<std::string> codes_of(const std::vector<FeatureInstance>& items);
std::vector<std::string> codes_of(const std::vector<FeatureId>& ids);

// Non-empty entries of a sequence as (root qualified name, codes).
std::vector<OracleEntry> entries_of(const BehaviorSequence& sequence, const std::vector<MethodRef>& methods);

// A package written from (relative path, content) pairs and analyzed.
struct Analyzed {
    std::unique_ptr<Package> package;
    Analysis analysis;

    const std::vector<MethodRef>& methods() const { return analysis.methods(); }
    std::optional<MethodId> method(std::string_view qualified_name) const;
    // Feature codes of one method, in (line, column) order.
    std::vector<std::string> codes(std::string_view qualified_name) const;
    std::vector<OracleEntry> entries() const { return entries_of(analysis.sequence, methods()); }
};

Analyzed analyze_sources(const std::vector<std::pair<std::string, std::string>>& files, Ecosystem ecosystem,
                         const CategoryTable& tables = CategoryTable::defaults());
Analyzed analyze_fixture(std::string_view name, Ecosystem ecosystem);

}  // namespace seqscan::testing
