#pragma once

#include "seqscan/call_graph.hpp"
#include "seqscan/classifier.hpp"
#include "seqscan/features.hpp"
#include "seqscan/methods.hpp"
#include "seqscan/package.hpp"
#include "seqscan/render.hpp"
#include "seqscan/resolver.hpp"
#include "seqscan/sequence.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace seqscan {

enum class ScanMode { Sequence, Unordered };

std::string_view to_string(ScanMode m);
std::optional<ScanMode> parse_scan_mode(std::string_view s);

// Everything derived from one package, from parsing to the behavior sequence.
struct Analysis {
    std::unique_ptr<PackageIndex> index;
    std::unique_ptr<Resolver> resolver;
    std::vector<TriggerScenario> scenarios;  // by MethodId
    FeatureIndex features;                   // by MethodId
    CallGraph graph;
    BehaviorSequence sequence;

    const std::vector<MethodRef>& methods() const { return index->methods; }
    // For every root, the instances of every method it reaches, pooled and
    // sorted by (file, line, column): the input of the unordered rendering.
    // A method reached from k roots contributes its instances k times, the
    // same multiplicity the behavior sequence has.
    std::vector<FeatureInstance> reachable_features() const;
    std::vector<FeatureInstance> all_features() const;
};

struct StageTimings {
    double load_ms = 0;
    double extract_ms = 0;
    double graph_ms = 0;
    double sequence_ms = 0;
    double render_ms = 0;
    double predict_ms = 0;
};

Analysis analyze(const Package& package, const CategoryTable& tables, StageTimings* timings = nullptr);

struct ScanOptions {
    ScanMode mode = ScanMode::Sequence;
    std::size_t token_limit = kPipelineTokenLimit;
    const CategoryTable* tables = nullptr;  // defaults when null
    const BaselineModel* model = nullptr;   // no prediction when null
    std::uint64_t max_archive_bytes = archive::kDefaultMaxBytes;
};

struct EntrySummary {
    std::string root;  // qualified name
    std::string file;
    TriggerScenario scenario = TriggerScenario::RunTime;
    std::vector<FeatureId> feature_ids;
    std::string description;
};

struct ScanReport {
    static constexpr int kSchemaVersion = 1;

    bool ok = true;
    std::string error_kind;
    std::string error_message;

    std::string archive;
    std::string sha256;  // of the archive bytes; empty for directories
    std::string name;
    std::string version;
    Ecosystem ecosystem = Ecosystem::PyPI;
    ScanMode mode = ScanMode::Sequence;

    std::vector<std::string> warnings;
    std::array<std::size_t, kFeatureCount> feature_counts{};
    std::vector<EntrySummary> entries;  // non-empty entries only
    std::vector<FeatureId> ordered_feature_ids;
    TextualDescription description;
    std::optional<Prediction> prediction;
    StageTimings timings;

    std::string to_json(bool include_timings = true) const;
    std::string summary() const;  // short human-readable form
    CorpusRecord to_record(std::optional<Label> label = std::nullopt) const;
};

// load -> extract -> prioritize -> graph -> sequence -> render -> predict.
// Module errors are reported in a failed report rather than thrown.
ScanReport scan_package(const std::filesystem::path& archive_path, Ecosystem ecosystem, const ScanOptions& options);
ScanReport scan_loaded(const Package& package, const ScanOptions& options);

}  // namespace seqscan
