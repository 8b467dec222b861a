#include "seqscan/scan.hpp"

#include "seqscan/digest.hpp"
#include "seqscan/error.hpp"
#include "seqscan/prioritizer.hpp"
#include "seqscan/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <tuple>

namespace seqscan {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string entry_text(const EntryTrace& entry) {
    std::string text = "start entry " + entry.root_file;
    for (const auto& item : entry.items) {
        text += ", ";
        text += description(item.id);
    }
    return text + ", end of entry";
}

std::vector<FeatureId> ids_of(const std::vector<FeatureInstance>& items) {
    std::vector<FeatureId> out;
    out.reserve(items.size());
    for (const auto& f : items) out.push_back(f.id);
    return out;
}

}  // namespace

std::string_view to_string(ScanMode m) { return m == ScanMode::Unordered ? "unordered" : "sequence"; }

std::optional<ScanMode> parse_scan_mode(std::string_view s) {
    if (s == "sequence") return ScanMode::Sequence;
    if (s == "unordered") return ScanMode::Unordered;
    return std::nullopt;
}

std::vector<FeatureInstance> Analysis::all_features() const {
    std::vector<FeatureInstance> out;
    for (const auto& list : features) out.insert(out.end(), list.begin(), list.end());
    return out;
}

std::vector<FeatureInstance> Analysis::reachable_features() const {
    std::vector<FeatureInstance> out;
    for (const MethodId root : graph.methods) {
        for (const MethodId m : reachable_from(root, graph)) out.insert(out.end(), features[m].begin(), features[m].end());
    }
    const auto& methods = index->methods;
    std::stable_sort(out.begin(), out.end(), [&](const FeatureInstance& a, const FeatureInstance& b) {
        return std::tie(methods[a.method].file, a.line, a.column) < std::tie(methods[b.method].file, b.line, b.column);
    });
    return out;
}

Analysis analyze(const Package& package, const CategoryTable& tables, StageTimings* timings) {
    Analysis a;
    auto t0 = Clock::now();
    a.index = std::make_unique<PackageIndex>(index_package(package));
    a.resolver = std::make_unique<Resolver>(*a.index);
    const PackageIndex& index = *a.index;

    a.features.resize(index.methods.size());
    for (std::size_t f = 0; f < index.files.size(); ++f) {
        const auto& ids = index.file_methods[f];
        std::vector<MethodRef> local;
        local.reserve(ids.size());
        for (const auto id : ids) local.push_back(index.methods[id]);
        const InPackageCall in_package = [&](MethodId caller, const syntax::CallSite& call) {
            return a.resolver->resolve_call(ids[caller], call).has_value();
        };
        for (auto inst : extract_features(*index.files[f].source, index.files[f].syntax, local, tables, in_package)) {
            inst.method = ids[inst.method];
            a.features[inst.method].push_back(inst);
        }
    }
    if (timings) timings->extract_ms = elapsed_ms(t0);

    t0 = Clock::now();
    a.scenarios = assign_trigger_scenarios(index, *a.resolver);
    a.graph = build_call_graph(index, *a.resolver, prioritize_methods(index, a.scenarios));
    if (timings) timings->graph_ms = elapsed_ms(t0);

    t0 = Clock::now();
    a.sequence = generate_behavior_sequence(a.graph, a.features, index.methods);
    if (timings) timings->sequence_ms = elapsed_ms(t0);
    return a;
}

ScanReport scan_loaded(const Package& package, const ScanOptions& options) {
    ScanReport r;
    r.name = package.name;
    r.version = package.version;
    r.ecosystem = package.ecosystem;
    r.mode = options.mode;
    r.warnings = package.warnings;
    const CategoryTable& tables = options.tables ? *options.tables : CategoryTable::defaults();

    const Analysis a = analyze(package, tables, &r.timings);
    r.warnings.insert(r.warnings.end(), a.index->warnings.begin(), a.index->warnings.end());
    for (const auto& list : a.features) {
        for (const auto& f : list) ++r.feature_counts[static_cast<std::size_t>(f.id)];
    }
    for (const auto& entry : a.sequence.entries) {
        if (entry.items.empty()) continue;
        r.entries.push_back(EntrySummary{a.methods()[entry.root].qualified_name, entry.root_file,
                                         a.scenarios[entry.root], ids_of(entry.items), entry_text(entry)});
    }

    auto t0 = Clock::now();
    if (options.mode == ScanMode::Sequence) {
        r.ordered_feature_ids = ids_of(a.sequence.flatten());
        r.description = render(a.sequence, options.token_limit);
    } else {
        const auto unordered = a.reachable_features();
        r.ordered_feature_ids = ids_of(unordered);
        r.description = render_unordered(unordered, a.methods(), options.token_limit);
    }
    r.timings.render_ms = elapsed_ms(t0);

    if (options.model) {
        t0 = Clock::now();
        r.prediction = predict(*options.model, r.ordered_feature_ids);
        r.timings.predict_ms = elapsed_ms(t0);
    }
    return r;
}

ScanReport scan_package(const std::filesystem::path& archive_path, Ecosystem ecosystem, const ScanOptions& options) {
    ScanReport r;
    r.archive = archive_path.string();
    r.ecosystem = ecosystem;
    r.mode = options.mode;
    try {
        const auto t0 = Clock::now();
        std::error_code ec;
        const bool is_dir = std::filesystem::is_directory(archive_path, ec);
        Package package = load_package(archive_path, ecosystem, LoadOptions{options.max_archive_bytes});
        const double load_ms = elapsed_ms(t0);
        r = scan_loaded(package, options);
        r.archive = archive_path.string();
        if (!is_dir) r.sha256 = sha256_file(archive_path);
        r.timings.load_ms = load_ms;
    } catch (const Error& e) {
        r.ok = false;
        r.error_kind = std::string(to_string(e.kind()));
        r.error_message = e.what();
    } catch (const std::exception& e) {
        r.ok = false;
        r.error_kind = "Internal";
        r.error_message = e.what();
    }
    return r;
}

std::string ScanReport::to_json(bool include_timings) const {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["status"] = ok ? "ok" : "failed";
    doc["error"] = nullptr;
    if (!ok) doc["error"] = {{"kind", error_kind}, {"message", error_message}};
    doc["package"] = {{"name", name},
                      {"version", version},
                      {"ecosystem", to_string(ecosystem)},
                      {"archive", archive},
                      {"sha256", sha256}};
    doc["mode"] = to_string(mode);
    doc["warnings"] = warnings;
    json counts = json::object();
    for (const auto id : kAllFeatures) counts[std::string(code(id))] = feature_counts[static_cast<std::size_t>(id)];
    doc["feature_counts"] = counts;
    json entry_list = json::array();
    for (const auto& e : entries) {
        json ids = json::array();
        for (const auto id : e.feature_ids) ids.push_back(code(id));
        entry_list.push_back({{"root", e.root},
                              {"file", e.file},
                              {"scenario", to_string(e.scenario)},
                              {"feature_ids", ids},
                              {"description", e.description}});
    }
    doc["entries"] = entry_list;
    json ids = json::array();
    for (const auto id : ordered_feature_ids) ids.push_back(code(id));
    doc["ordered_feature_ids"] = ids;
    doc["description"] = {{"text", description.text},
                          {"token_count", description.token_count},
                          {"truncated", description.truncated}};
    if (prediction) {
        doc["prediction"] = {{"label", to_string(prediction->label)},
                             {"score", prediction->score},
                             {"model_id", prediction->model_id}};
    } else {
        doc["prediction"] = nullptr;
    }
    if (include_timings) {
        doc["timings_ms"] = {{"load", timings.load_ms},         {"extract", timings.extract_ms},
                             {"graph", timings.graph_ms},       {"sequence", timings.sequence_ms},
                             {"render", timings.render_ms},     {"predict", timings.predict_ms}};
    }
    return doc.dump(2, ' ', false, json::error_handler_t::replace);
}

std::string ScanReport::summary() const {
    std::string out = name.empty() ? archive : name + " " + version;
    out += " (" + std::string(to_string(ecosystem)) + ")";
    if (!ok) return out + ": scan failed: " + error_message + "\n";
    out += ": " + std::to_string(ordered_feature_ids.size()) + " items in " + std::to_string(entries.size()) +
           " entries";
    if (prediction) {
        char score[32];
        std::snprintf(score, sizeof score, "%.4f", prediction->score);
        out += ", verdict " + std::string(to_string(prediction->label)) + " (score " + score + ")";
    }
    out += "\n";
    for (const auto& w : warnings) out += "  warning: " + w + "\n";
    if (!description.text.empty()) out += "  " + description.text + (description.truncated ? " ..." : "") + "\n";
    return out;
}

CorpusRecord ScanReport::to_record(std::optional<Label> label) const {
    return CorpusRecord{name, version, std::string(to_string(ecosystem)), description.text, ordered_feature_ids, label};
}

}  // namespace seqscan
