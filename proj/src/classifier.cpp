#include "seqscan/classifier.hpp"

#include "seqscan/error.hpp"
#include "seqscan/text.hpp"

#include "json.hpp"

#include <array>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <unordered_map>

namespace seqscan {

namespace {

using json = nlohmann::ordered_json;

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F f) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) continue;
        try {
            f(line);
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string_view to_string(Label l) { return l == Label::Malicious ? "malicious" : "benign"; }

std::optional<Label> parse_label(std::string_view s) {
    const std::string lower = text::to_lower(s);
    if (lower == "malicious") return Label::Malicious;
    if (lower == "benign") return Label::Benign;
    return std::nullopt;
}

std::vector<std::string> ngrams(const std::vector<FeatureId>& ids, int n) {
    std::vector<std::string> out;
    if (ids.empty() || n < 1) return out;
    std::vector<std::string_view> symbols;
    for (int i = 1; i < n; ++i) symbols.push_back(kBos);
    for (const auto id : ids) symbols.push_back(code(id));
    for (int i = 1; i < n; ++i) symbols.push_back(kEos);
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= symbols.size(); ++i) {
        std::string gram(symbols[i]);
        for (int k = 1; k < n; ++k) {
            gram += ' ';
            gram += symbols[i + static_cast<std::size_t>(k)];
        }
        out.push_back(std::move(gram));
    }
    return out;
}

BaselineModel train_baseline(const std::vector<CorpusRecord>& corpus, int n) {
    if (n < 1 || n > 5) throw Error(ErrorKind::BadOrder, "n-gram order must be in [1, 5], got " + std::to_string(n));
    std::unordered_map<std::string, std::pair<double, double>> counts;  // gram -> (malicious, benign)
    double grams_m = 0, grams_b = 0;
    std::size_t docs_m = 0, docs_b = 0;
    for (const auto& record : corpus) {
        if (!record.label) continue;
        const bool malicious = *record.label == Label::Malicious;
        (malicious ? docs_m : docs_b) += 1;
        for (const auto& g : ngrams(record.ordered_feature_ids, n)) {
            auto& c = counts[g];
            (malicious ? c.first : c.second) += 1;
            (malicious ? grams_m : grams_b) += 1;
        }
    }
    if (docs_m == 0 || docs_b == 0) {
        throw Error(ErrorKind::EmptyClass, std::string("training corpus has no ") +
                                               (docs_m == 0 ? "malicious" : "benign") + " records");
    }
    const double vocab = static_cast<double>(counts.size());
    const double denom_m = grams_m + vocab;
    const double denom_b = grams_b + vocab;
    BaselineModel model;
    model.n = n;
    model.prior_log_odds = std::log(static_cast<double>(docs_m) / static_cast<double>(docs_b));
    // With an empty vocabulary both denominators are zero; unseen grams are
    // then neutral.
    model.unseen_weight = vocab > 0 || grams_m + grams_b > 0 ? std::log(denom_b / denom_m) : 0.0;
    for (const auto& [gram, c] : counts) {
        model.weights[gram] = std::log((c.first + 1) / denom_m) - std::log((c.second + 1) / denom_b);
    }
    return model;
}

Prediction predict(const BaselineModel& model, const std::vector<FeatureId>& ids) {
    double logit = model.prior_log_odds;
    for (const auto& g : ngrams(ids, model.n)) {
        const auto it = model.weights.find(g);
        logit += it == model.weights.end() ? model.unseen_weight : it->second;
    }
    Prediction p;
    p.score = sigmoid(logit);
    p.label = p.score > model.threshold ? Label::Malicious : Label::Benign;
    p.model_id = model.model_id();
    return p;
}

Prediction predict(const BaselineModel& model, const CorpusRecord& record) {
    return predict(model, record.ordered_feature_ids);
}

std::string BaselineModel::model_id() const {
    std::string key = std::to_string(n);
    for (const auto& [gram, w] : weights) key += gram + "=" + json(w).dump() + ";";
    key += json(prior_log_odds).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return "baseline-n" + std::to_string(n) + "-" + std::string(buf, 8);
}

std::string BaselineModel::to_json() const {
    json w = json::object();
    for (const auto& [gram, value] : weights) w[gram] = value;
    json doc{{"format", "seqscan-baseline"},
             {"version", kVersion},
             {"n", n},
             {"threshold", threshold},
             {"prior_log_odds", prior_log_odds},
             {"unseen_weight", unseen_weight},
             {"weights", w}};
    return doc.dump(2) + "\n";
}

BaselineModel BaselineModel::from_json(std::string_view doc) {
    BaselineModel m;
    try {
        const json j = json::parse(doc);
        if (j.at("format") != "seqscan-baseline") throw Error(ErrorKind::ConfigInvalid, "not a baseline model file");
        if (j.at("version") != kVersion) {
            throw Error(ErrorKind::ConfigInvalid, "unsupported model version " + j.at("version").dump());
        }
        m.n = j.at("n").get<int>();
        m.threshold = j.at("threshold").get<double>();
        m.prior_log_odds = j.at("prior_log_odds").get<double>();
        m.unseen_weight = j.at("unseen_weight").get<double>();
        for (const auto& [gram, value] : j.at("weights").items()) m.weights[gram] = value.get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("model file: ") + e.what());
    }
    if (m.n < 1 || m.n > 5) throw Error(ErrorKind::BadOrder, "model n-gram order out of range");
    return m;
}

void BaselineModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << to_json();
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
}

BaselineModel BaselineModel::load(const std::filesystem::path& path) { return from_json(read_all(path)); }

std::string record_to_json(const CorpusRecord& r) {
    json ids = json::array();
    for (const auto id : r.ordered_feature_ids) ids.push_back(code(id));
    json doc{{"package_name", r.package_name},
             {"version", r.version},
             {"ecosystem", r.ecosystem},
             {"description_text", r.description_text},
             {"ordered_feature_ids", ids},
             {"label", r.label ? json(to_string(*r.label)) : json(nullptr)}};
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

CorpusRecord record_from_json(std::string_view line) {
    CorpusRecord r;
    try {
        const json j = json::parse(line);
        r.package_name = j.at("package_name").get<std::string>();
        r.version = j.at("version").get<std::string>();
        r.ecosystem = j.at("ecosystem").get<std::string>();
        r.description_text = j.at("description_text").get<std::string>();
        for (const auto& id : j.at("ordered_feature_ids")) {
            const auto parsed = parse_feature_id(id.get<std::string>());
            if (!parsed) throw Error(ErrorKind::ConfigInvalid, "unknown feature id " + id.dump());
            r.ordered_feature_ids.push_back(*parsed);
        }
        if (j.contains("label") && !j.at("label").is_null()) {
            r.label = parse_label(j.at("label").get<std::string>());
            if (!r.label) throw Error(ErrorKind::ConfigInvalid, "unknown label " + j.at("label").dump());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("corpus record: ") + e.what());
    }
    return r;
}

std::size_t export_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    for (const auto& r : records) out << record_to_json(r) << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    return records.size();
}

std::vector<CorpusRecord> import_corpus(const std::filesystem::path& path) {
    std::vector<CorpusRecord> out;
    for_each_line(path, [&](const std::string& line) { out.push_back(record_from_json(line)); });
    return out;
}

std::string prediction_to_json(const PredictionRecord& r) {
    json doc{{"package_name", r.package_name},
             {"version", r.version},
             {"ecosystem", r.ecosystem},
             {"score", r.prediction.score},
             {"label", to_string(r.prediction.label)},
             {"model_id", r.prediction.model_id}};
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::vector<PredictionRecord> import_predictions(const std::filesystem::path& path) {
    std::vector<PredictionRecord> out;
    for_each_line(path, [&](const std::string& line) {
        PredictionRecord r;
        try {
            const json j = json::parse(line);
            r.package_name = j.at("package_name").get<std::string>();
            r.version = j.at("version").get<std::string>();
            r.ecosystem = j.value("ecosystem", "");
            r.prediction.score = j.at("score").get<double>();
            const auto label = parse_label(j.at("label").get<std::string>());
            if (!label) throw Error(ErrorKind::ConfigInvalid, "unknown label " + j.at("label").dump());
            r.prediction.label = *label;
            r.prediction.model_id = j.value("model_id", "");
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigInvalid, std::string("prediction record: ") + e.what());
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::pair<std::vector<CorpusRecord>, std::vector<CorpusRecord>> split_corpus(const std::vector<CorpusRecord>& records,
                                                                             double train_fraction,
                                                                             std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::BadUsage, "train fraction must be in (0, 1)");
    }
    // Strata in a fixed order: malicious, benign, unlabeled.
    std::array<std::vector<std::size_t>, 3> strata;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& l = records[i].label;
        strata[!l ? 2 : (*l == Label::Malicious ? 0 : 1)].push_back(i);
    }
    std::mt19937_64 rng(seed);
    for (auto& s : strata) {
        // Fisher-Yates with an explicit modulo-free bounded draw, so results
        // do not depend on the standard library's distribution code.
        for (std::size_t i = s.size(); i > 1; --i) {
            const std::uint64_t bound = i;
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
            std::uint64_t draw;
            do {
                draw = rng();
            } while (draw >= limit);
            std::swap(s[i - 1], s[draw % bound]);
        }
    }
    const auto total = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(records.size())));
    std::array<std::size_t, 3> take{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = train_fraction * static_cast<double>(strata[k].size());
        take[k] = static_cast<std::size_t>(std::floor(exact));
        remainder[k] = exact - static_cast<double>(take[k]);
        assigned += take[k];
    }
    while (assigned < total) {
        std::size_t best = 3;
        for (std::size_t k = 0; k < 3; ++k) {
            if (take[k] >= strata[k].size()) continue;
            if (best == 3 || remainder[k] > remainder[best]) best = k;
        }
        if (best == 3) break;
        ++take[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    std::pair<std::vector<CorpusRecord>, std::vector<CorpusRecord>> out;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < strata[k].size(); ++i) {
            (i < take[k] ? out.first : out.second).push_back(records[strata[k][i]]);
        }
    }
    return out;
}

Metrics evaluate(const std::vector<Label>& predicted, const std::vector<Label>& actual) {
    if (predicted.size() != actual.size() || predicted.empty()) {
        throw Error(ErrorKind::LengthMismatch, "predictions (" + std::to_string(predicted.size()) + ") and labels (" +
                                                   std::to_string(actual.size()) + ") must be equal and non-empty");
    }
    Metrics m;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == Label::Malicious;
        const bool a = actual[i] == Label::Malicious;
        if (p && a) ++m.true_positive;
        if (p && !a) ++m.false_positive;
        if (!p && a) ++m.false_negative;
        if (!p && !a) ++m.true_negative;
    }
    const double tp = static_cast<double>(m.true_positive);
    if (m.true_positive + m.false_positive == 0) {
        m.precision_undefined = true;
    } else {
        m.precision = tp / static_cast<double>(m.true_positive + m.false_positive);
    }
    if (m.true_positive + m.false_negative == 0) {
        m.recall_undefined = true;
    } else {
        m.recall = tp / static_cast<double>(m.true_positive + m.false_negative);
    }
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

}  // namespace seqscan
