// seqscan command-line front end.
//
// Exit codes: 0 scanned (any verdict), 2 scan or I/O failure, 3 bad usage.

#include "seqscan/call_graph.hpp"
#include "seqscan/classifier.hpp"
#include "seqscan/error.hpp"
#include "seqscan/registry.hpp"
#include "seqscan/scan.hpp"
#include "seqscan/sequence.hpp"
#include "seqscan/text.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace seqscan;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 2;
constexpr int kExitUsage = 3;

struct CommonOptions {
    std::string ecosystem = "pypi";
    std::string mode = "sequence";
    std::string tables_path;
    std::string model_path;
    std::size_t token_limit = kPipelineTokenLimit;
    bool json_out = false;
    bool no_timings = false;
    std::uint64_t max_archive_bytes = archive::kDefaultMaxBytes;
};

// Loaded once per invocation and shared read-only by every worker.
struct Resources {
    Ecosystem ecosystem = Ecosystem::PyPI;
    std::optional<CategoryTable> tables;
    std::optional<BaselineModel> model;
    ScanOptions scan;
};

Resources load_resources(const CommonOptions& o) {
    Resources r;
    const auto eco = parse_ecosystem(o.ecosystem);
    if (!eco) throw Error(ErrorKind::BadUsage, "unknown ecosystem: " + o.ecosystem);
    r.ecosystem = *eco;
    const auto mode = parse_scan_mode(o.mode);
    if (!mode) throw Error(ErrorKind::BadUsage, "unknown mode: " + o.mode);
    if (o.token_limit < 8) throw Error(ErrorKind::BadUsage, "--token-limit must be at least 8");
    if (!o.tables_path.empty()) r.tables = CategoryTable::load(o.tables_path);
    if (!o.model_path.empty()) r.model = BaselineModel::load(o.model_path);
    r.scan.mode = *mode;
    r.scan.token_limit = o.token_limit;
    r.scan.max_archive_bytes = o.max_archive_bytes;
    return r;
}

ScanOptions bind(const Resources& r) {
    ScanOptions s = r.scan;
    s.tables = r.tables ? &*r.tables : nullptr;
    s.model = r.model ? &*r.model : nullptr;
    return s;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool scanning) {
    cmd->add_option("--ecosystem", o.ecosystem, "pypi or npm")->check(CLI::IsMember({"pypi", "npm"}));
    cmd->add_option("--tables", o.tables_path, "category table overrides (JSON)");
    cmd->add_flag("--json", o.json_out, "emit JSON instead of a summary");
    if (!scanning) return;
    cmd->add_option("--mode", o.mode, "sequence or unordered")->check(CLI::IsMember({"sequence", "unordered"}));
    cmd->add_option("--model", o.model_path, "baseline model file");
    cmd->add_option("--token-limit", o.token_limit, "word cap of the description");
    cmd->add_option("--max-archive-bytes", o.max_archive_bytes, "extraction size cap");
    cmd->add_flag("--no-timings", o.no_timings, "omit timings from JSON reports");
}

std::vector<ScanReport> scan_many(const std::vector<std::string>& paths, const Resources& res, std::size_t parallel) {
    std::vector<ScanReport> reports(paths.size());
    const ScanOptions options = bind(res);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < paths.size(); i = next++) {
            reports[i] = scan_package(paths[i], res.ecosystem, options);
        }
    };
    const std::size_t n = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(paths.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return reports;
}

void print_reports(const std::vector<ScanReport>& reports, const CommonOptions& o, bool as_array) {
    if (!o.json_out) {
        for (const auto& r : reports) std::cout << r.summary();
        return;
    }
    if (!as_array) {
        std::cout << reports.front().to_json(!o.no_timings) << "\n";
        return;
    }
    std::cout << "[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::cout << (i ? ",\n" : "\n") << reports[i].to_json(!o.no_timings);
    }
    std::cout << "\n]\n";
}

int exit_for(const std::vector<ScanReport>& reports) {
    for (const auto& r : reports) {
        if (!r.ok) return kExitFailure;
    }
    return kExitOk;
}

std::optional<Label> label_option(const std::string& s) {
    if (s.empty() || s == "none") return std::nullopt;
    const auto l = parse_label(s);
    if (!l) throw Error(ErrorKind::BadUsage, "unknown label: " + s);
    return l;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path);
}

std::string metrics_json(const Metrics& m, std::size_t n) {
    json doc = {{"records", n},
                {"true_positive", m.true_positive},
                {"false_positive", m.false_positive},
                {"false_negative", m.false_negative},
                {"true_negative", m.true_negative},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"precision_undefined", m.precision_undefined},
                {"recall_undefined", m.recall_undefined}};
    return doc.dump(2);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Static behavior-sequence scanner for PyPI and NPM packages"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");

    // scan
    CommonOptions scan_o;
    std::string scan_path;
    auto* scan = app.add_subcommand("scan", "scan one archive or directory");
    add_common(scan, scan_o, true);
    scan->add_option("archive", scan_path, "archive or unpacked package directory")->required();

    // batch
    CommonOptions batch_o;
    std::vector<std::string> batch_paths;
    std::size_t batch_parallel = 1;
    auto* batch = app.add_subcommand("batch", "scan many archives");
    add_common(batch, batch_o, true);
    batch->add_option("--parallel", batch_parallel, "worker count")->check(CLI::PositiveNumber);
    batch->add_option("archives", batch_paths, "archives or directories")->required();

    // export-corpus
    CommonOptions export_o;
    std::vector<std::string> export_paths;
    std::string export_out, export_label, export_list;
    bool export_append = false;
    std::size_t export_parallel = 1;
    auto* exporter = app.add_subcommand("export-corpus", "scan packages and write a JSON Lines corpus");
    add_common(exporter, export_o, true);
    exporter->add_option("--out", export_out, "corpus file")->required();
    exporter->add_option("--label", export_label, "malicious, benign or none")
        ->check(CLI::IsMember({"malicious", "benign", "none"}));
    exporter->add_option("--list", export_list, "file of `<path>` or `<label> <path>` lines");
    exporter->add_flag("--append", export_append, "append instead of overwriting");
    exporter->add_option("--parallel", export_parallel, "worker count")->check(CLI::PositiveNumber);
    exporter->add_option("archives", export_paths, "archives or directories");

    // train-baseline
    std::string train_corpus, train_out, train_test_out;
    int train_n = 3;
    double train_fraction = 1.0;
    std::uint64_t train_seed = 0;
    bool train_json = false;
    auto* train = app.add_subcommand("train-baseline", "train the n-gram baseline classifier");
    train->add_option("--corpus", train_corpus, "labeled corpus")->required();
    train->add_option("--out", train_out, "model file")->required();
    train->add_option("--n", train_n, "n-gram order (1-5)");
    train->add_option("--train-fraction", train_fraction, "stratified split; 1 trains on everything");
    train->add_option("--seed", train_seed, "split seed");
    train->add_option("--test-out", train_test_out, "write the held-out records here");
    train->add_flag("--json", train_json, "emit JSON");

    // eval
    std::string eval_corpus, eval_model, eval_predictions;
    bool eval_json = false;
    auto* eval = app.add_subcommand("eval", "precision, recall and F1 against corpus labels");
    eval->add_option("--corpus", eval_corpus, "labeled corpus")->required();
    auto* eval_m = eval->add_option("--model", eval_model, "baseline model file");
    auto* eval_p = eval->add_option("--predictions", eval_predictions, "predictions JSON Lines file");
    eval_m->excludes(eval_p);
    eval->add_flag("--json", eval_json, "emit JSON");

    // monitor
    CommonOptions monitor_o;
    std::string monitor_since, monitor_cursor, monitor_out_dir, monitor_endpoint, monitor_registry;
    std::size_t monitor_limit = 50, monitor_parallel = 4;
    int monitor_interval_ms = 500;
    auto* monitor = app.add_subcommand("monitor", "fetch and scan newly published versions once");
    add_common(monitor, monitor_o, true);
    monitor->add_option("--since", monitor_since, "RFC 3339 lower bound (exclusive)");
    monitor->add_option("--cursor", monitor_cursor, "file persisting the last seen publish time");
    monitor->add_option("--out-dir", monitor_out_dir, "download directory")->required();
    monitor->add_option("--endpoint", monitor_endpoint, "registry base URL override");
    monitor->add_option("--registry-endpoint", monitor_registry, "NPM packument base URL override");
    monitor->add_option("--limit", monitor_limit, "maximum events per cycle");
    monitor->add_option("--parallel", monitor_parallel, "concurrent downloads")->check(CLI::PositiveNumber);
    monitor->add_option("--min-interval-ms", monitor_interval_ms, "per-host request spacing");

    // dump-tables
    CommonOptions tables_o;
    auto* dump_tables = app.add_subcommand("dump-tables", "print the effective category tables");
    dump_tables->add_option("--tables", tables_o.tables_path, "category table overrides (JSON)");

    // dump-graph
    CommonOptions graph_o;
    std::string graph_path;
    bool graph_sequence = false;
    auto* dump_graph = app.add_subcommand("dump-graph", "print the call graph or the behavior sequence");
    dump_graph->add_option("--ecosystem", graph_o.ecosystem, "pypi or npm")->check(CLI::IsMember({"pypi", "npm"}));
    dump_graph->add_option("--tables", graph_o.tables_path, "category table overrides (JSON)");
    dump_graph->add_flag("--sequence", graph_sequence, "print `root method line feature` items instead");
    dump_graph->add_option("archive", graph_path, "archive or directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*scan) {
            const Resources res = load_resources(scan_o);
            const auto reports = std::vector<ScanReport>{scan_package(scan_path, res.ecosystem, bind(res))};
            print_reports(reports, scan_o, false);
            return exit_for(reports);
        }
        if (*batch) {
            const Resources res = load_resources(batch_o);
            const auto reports = scan_many(batch_paths, res, batch_parallel);
            print_reports(reports, batch_o, true);
            return exit_for(reports);
        }
        if (*exporter) {
            const Resources res = load_resources(export_o);
            std::vector<std::string> paths = export_paths;
            std::vector<std::optional<Label>> labels(paths.size(), label_option(export_label));
            if (!export_list.empty()) {
                for (const auto& raw : text::split(read_file(export_list), '\n')) {
                    const auto words = text::split_whitespace(raw);
                    if (words.empty() || words[0][0] == '#') continue;
                    if (words.size() > 2) throw Error(ErrorKind::BadUsage, "bad list line: " + raw);
                    labels.push_back(words.size() == 2 ? label_option(words[0]) : label_option(export_label));
                    paths.push_back(words.back());
                }
            }
            if (paths.empty()) throw Error(ErrorKind::BadUsage, "no packages to export");
            const auto reports = scan_many(paths, res, export_parallel);
            std::vector<CorpusRecord> records;
            if (export_append && std::filesystem::exists(export_out)) records = import_corpus(export_out);
            for (std::size_t i = 0; i < reports.size(); ++i) {
                if (!reports[i].ok) {
                    std::cerr << "skipped " << paths[i] << ": " << reports[i].error_message << "\n";
                    continue;
                }
                records.push_back(reports[i].to_record(labels[i]));
            }
            const auto n = export_corpus(records, export_out);
            std::cout << "wrote " << n << " records to " << export_out << "\n";
            return exit_for(reports);
        }
        if (*train) {
            auto corpus = import_corpus(train_corpus);
            std::vector<CorpusRecord> test;
            if (train_fraction < 1.0) {
                if (train_fraction <= 0.0) throw Error(ErrorKind::BadUsage, "--train-fraction must be in (0, 1]");
                std::tie(corpus, test) = split_corpus(corpus, train_fraction, train_seed);
                if (!train_test_out.empty()) export_corpus(test, train_test_out);
            }
            const BaselineModel model = train_baseline(corpus, train_n);
            model.save(train_out);
            if (train_json) {
                std::cout << json{{"model_id", model.model_id()},
                                  {"n", model.n},
                                  {"train_records", corpus.size()},
                                  {"test_records", test.size()},
                                  {"grams", model.weights.size()}}
                                 .dump(2)
                          << "\n";
            } else {
                std::cout << "trained " << model.model_id() << " on " << corpus.size() << " records ("
                          << model.weights.size() << " grams)\n";
            }
            return kExitOk;
        }
        if (*eval) {
            if (eval_model.empty() == eval_predictions.empty()) {
                throw Error(ErrorKind::BadUsage, "eval needs exactly one of --model or --predictions");
            }
            const auto corpus = import_corpus(eval_corpus);
            std::vector<Label> actual, predicted;
            if (!eval_model.empty()) {
                const auto model = BaselineModel::load(eval_model);
                for (const auto& r : corpus) {
                    if (!r.label) throw Error(ErrorKind::BadUsage, "unlabeled record " + r.package_name);
                    actual.push_back(*r.label);
                    predicted.push_back(predict(model, r).label);
                }
            } else {
                std::map<std::tuple<std::string, std::string, std::string>, Label> by_key;
                for (const auto& p : import_predictions(eval_predictions)) {
                    by_key[{p.package_name, p.version, p.ecosystem}] = p.prediction.label;
                }
                for (const auto& r : corpus) {
                    if (!r.label) throw Error(ErrorKind::BadUsage, "unlabeled record " + r.package_name);
                    const auto it = by_key.find({r.package_name, r.version, r.ecosystem});
                    if (it == by_key.end()) {
                        throw Error(ErrorKind::LengthMismatch, "no prediction for " + r.package_name + " " + r.version);
                    }
                    actual.push_back(*r.label);
                    predicted.push_back(it->second);
                }
                if (by_key.size() != corpus.size()) {
                    throw Error(ErrorKind::LengthMismatch, std::to_string(by_key.size()) + " predictions for " +
                                                               std::to_string(corpus.size()) + " records");
                }
            }
            const Metrics m = evaluate(predicted, actual);
            if (eval_json) {
                std::cout << metrics_json(m, corpus.size()) << "\n";
            } else {
                std::printf("records %zu  precision %.4f%s  recall %.4f%s  f1 %.4f\n", corpus.size(), m.precision,
                            m.precision_undefined ? " (undefined)" : "", m.recall,
                            m.recall_undefined ? " (undefined)" : "", m.f1);
            }
            return kExitOk;
        }
        if (*monitor) {
            const Resources res = load_resources(monitor_o);
            registry::ClientOptions copts;
            copts.min_interval = std::chrono::milliseconds(monitor_interval_ms);
            copts.max_archive_bytes = monitor_o.max_archive_bytes;
            if (!monitor_endpoint.empty()) {
                copts.pypi_endpoint = monitor_endpoint;
                copts.npm_changes_endpoint = monitor_endpoint;
                copts.npm_registry_endpoint = monitor_endpoint;
            }
            if (!monitor_registry.empty()) copts.npm_registry_endpoint = monitor_registry;

            registry::Timestamp since = registry::now() - 3600;
            if (!monitor_cursor.empty() && std::filesystem::exists(monitor_cursor)) {
                const auto t = registry::parse_rfc3339(text::trim(read_file(monitor_cursor)));
                if (!t) throw Error(ErrorKind::ConfigInvalid, "cursor file is not RFC 3339: " + monitor_cursor);
                since = *t;
            }
            if (!monitor_since.empty()) {
                const auto t = registry::parse_rfc3339(monitor_since);
                if (!t) throw Error(ErrorKind::BadUsage, "--since is not RFC 3339: " + monitor_since);
                since = *t;
            }

            registry::Client client(copts);
            const auto events = client.list_recent(res.ecosystem, since, monitor_limit);
            std::filesystem::create_directories(monitor_out_dir);
            const auto outcomes = client.fetch_all(events, monitor_out_dir, monitor_parallel);

            std::vector<std::string> paths;
            std::vector<std::size_t> scanned;
            std::size_t removed = 0, failed = 0;
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (outcomes[i].result) {
                    paths.push_back(outcomes[i].result->path.string());
                    scanned.push_back(i);
                } else if (outcomes[i].error == ErrorKind::NotFound) {
                    ++removed;
                } else {
                    ++failed;
                    std::cerr << "fetch failed: " << outcomes[i].message << "\n";
                }
            }
            auto reports = scan_many(paths, res, 1);
            for (std::size_t k = 0; k < reports.size(); ++k) {
                if (reports[k].ok) reports[k].sha256 = outcomes[scanned[k]].result->sha256;
            }

            if (monitor_o.json_out) {
                json doc;
                doc["since"] = registry::format_rfc3339(since);
                doc["events"] = events.size();
                doc["removed_before_fetch"] = removed;
                doc["fetch_failures"] = failed;
                json list = json::array();
                for (const auto& r : reports) list.push_back(json::parse(r.to_json(!monitor_o.no_timings)));
                doc["reports"] = list;
                std::cout << doc.dump(2) << "\n";
            } else {
                std::cout << events.size() << " new versions since " << registry::format_rfc3339(since) << ", "
                          << removed << " removed before fetch, " << failed << " fetch failures\n";
                for (const auto& r : reports) std::cout << r.summary();
            }
            if (!monitor_cursor.empty()) {
                registry::Timestamp latest = since;
                for (const auto& e : events) latest = std::max(latest, e.published_at);
                write_file(monitor_cursor, registry::format_rfc3339(latest) + "\n");
            }
            return exit_for(reports);
        }
        if (*dump_tables) {
            const CategoryTable tables =
                tables_o.tables_path.empty() ? CategoryTable::defaults() : CategoryTable::load(tables_o.tables_path);
            std::cout << tables.to_json() << "\n";
            return kExitOk;
        }
        if (*dump_graph) {
            const Resources res = load_resources(graph_o);
            const Package package = load_package(graph_path, res.ecosystem);
            const Analysis a = analyze(package, res.tables ? *res.tables : CategoryTable::defaults());
            std::cout << (graph_sequence ? dump_sequence(a.methods(), a.sequence) : dump_call_graph(*a.index, a.graph));
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "seqscan: " << e.what() << "\n";
        return e.kind() == ErrorKind::BadUsage ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "seqscan: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
