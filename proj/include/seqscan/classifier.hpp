#pragma once

#include "seqscan/features.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqscan {

enum class Label { Malicious, Benign };

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view s);

struct Prediction {
    Label label = Label::Benign;
    double score = 0.0;  // probability of Malicious
    std::string model_id;
};

struct CorpusRecord {
    std::string package_name;
    std::string version;
    std::string ecosystem;
    std::string description_text;
    std::vector<FeatureId> ordered_feature_ids;
    std::optional<Label> label;

    bool operator==(const CorpusRecord&) const = default;
};

// Boundary symbols used to pad sequences for n > 1.
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

// Multinomial naive Bayes over feature-id n-grams, expressed as log-odds:
// score = sigmoid(prior + sum of per-gram weights).
struct BaselineModel {
    static constexpr int kVersion = 1;

    int n = 3;
    double threshold = 0.5;  // Malicious iff score > threshold
    double prior_log_odds = 0.0;
    double unseen_weight = 0.0;  // weight of a gram never seen in training
    std::map<std::string, double> weights;  // space-joined gram -> log-odds

    std::string model_id() const;
    std::string to_json() const;
    static BaselineModel from_json(std::string_view doc);
    void save(const std::filesystem::path& path) const;
    static BaselineModel load(const std::filesystem::path& path);
};

// The space-joined n-grams of a sequence; for n > 1 padded with n-1 boundary
// symbols on each side. An empty sequence has no grams.
std::vector<std::string> ngrams(const std::vector<FeatureId>& ids, int n);

BaselineModel train_baseline(const std::vector<CorpusRecord>& corpus, int n = 3);
Prediction predict(const BaselineModel& model, const CorpusRecord& record);
Prediction predict(const BaselineModel& model, const std::vector<FeatureId>& ids);

// JSON Lines, one record per line, fields in declaration order.
std::string record_to_json(const CorpusRecord& record);
CorpusRecord record_from_json(std::string_view line);
std::size_t export_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path);
std::vector<CorpusRecord> import_corpus(const std::filesystem::path& path);

// Predictions file written by an external classifier:
// {package_name, version, ecosystem, score, label[, model_id]} per line.
struct PredictionRecord {
    std::string package_name;
    std::string version;
    std::string ecosystem;
    Prediction prediction;
};
std::string prediction_to_json(const PredictionRecord& record);
std::vector<PredictionRecord> import_predictions(const std::filesystem::path& path);

// Seeded, label-stratified split. The train side gets round(fraction * N)
// records in total, distributed over labels by largest remainder.
std::pair<std::vector<CorpusRecord>, std::vector<CorpusRecord>> split_corpus(const std::vector<CorpusRecord>& records,
                                                                             double train_fraction = 0.9,
                                                                             std::uint64_t seed = 0);

struct Metrics {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::size_t true_negative = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  // no positive predictions
    bool recall_undefined = false;     // no positive labels
};

// Malicious is the positive class.
Metrics evaluate(const std::vector<Label>& predicted, const std::vector<Label>& actual);

}  // namespace seqscan
