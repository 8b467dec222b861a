#include "seqscan/classifier.hpp"
#include "seqscan/error.hpp"
#include "seqscan/package.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

using namespace seqscan;

namespace {

using F = FeatureId;

CorpusRecord rec(std::string name, std::vector<FeatureId> ids, std::optional<Label> label, std::string eco = "pypi") {
    return {std::move(name), "1.0", std::move(eco), "text of " + std::to_string(ids.size()), std::move(ids), label};
}

std::vector<CorpusRecord> small_corpus() {
    const auto M = Label::Malicious, B = Label::Benign;
    return {
        rec("m1", {F::R5, F::D2}, M),           rec("m2", {F::R1, F::R5, F::D2}, M),
        rec("m3", {F::E3, F::E2, F::P4}, M),    rec("m4", {F::R5, F::D3, F::D2}, M),
        rec("b1", {F::R1, F::R4}, B),           rec("b2", {F::D1, F::D2, F::R5}, B),
        rec("b3", {F::R4, F::R4, F::R4}, B),    rec("b4", {}, B),
        rec("b5", {F::E1, F::E2}, B),           rec("b6", {F::D2, F::R5}, B, "npm"),
    };
}

// Straight transcription of multinomial naive Bayes with add-one smoothing.
double oracle_log_odds(const std::vector<CorpusRecord>& train, const std::vector<FeatureId>& doc, int n) {
    auto grams = [n](const std::vector<FeatureId>& ids) {
        std::vector<std::string> toks;
        if (ids.empty()) return toks;
        for (int i = 1; i < n; ++i) toks.push_back("<s>");
        for (auto id : ids) toks.emplace_back(code(id));
        for (int i = 1; i < n; ++i) toks.push_back("</s>");
        std::vector<std::string> out;
        for (std::size_t i = 0; i + n <= toks.size(); ++i) {
            std::string g;
            for (int k = 0; k < n; ++k) g += (k ? " " : "") + toks[i + k];
            out.push_back(g);
        }
        return out;
    };
    std::map<std::string, double> cm, cb;
    std::set<std::string> vocab;
    double nm = 0, nb = 0, tm = 0, tb = 0;
    for (const auto& r : train) {
        const bool mal = *r.label == Label::Malicious;
        (mal ? nm : nb) += 1;
        for (const auto& g : grams(r.ordered_feature_ids)) {
            (mal ? cm : cb)[g] += 1;
            (mal ? tm : tb) += 1;
            vocab.insert(g);
        }
    }
    const double v = static_cast<double>(vocab.size());
    double logit = std::log(nm / nb);
    for (const auto& g : grams(doc)) logit += std::log((cm[g] + 1) / (tm + v)) - std::log((cb[g] + 1) / (tb + v));
    return logit;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::BadUsage;
}

}  // namespace

TEST(Ngrams, PaddingAndOrders) {
    EXPECT_EQ(ngrams({F::R1, F::D2}, 1), (std::vector<std::string>{"R1", "D2"}));
    EXPECT_EQ(ngrams({F::R1, F::D2}, 2), (std::vector<std::string>{"<s> R1", "R1 D2", "D2 </s>"}));
    EXPECT_EQ(ngrams({F::P4}, 3), (std::vector<std::string>{"<s> <s> P4", "<s> P4 </s>", "P4 </s> </s>"}));
    EXPECT_TRUE(ngrams({}, 3).empty());
}

TEST(Baseline, HandComputedUnigramScore) {
    const auto m = train_baseline({rec("a", {F::R5}, Label::Malicious), rec("b", {F::R1}, Label::Benign)}, 1);
    EXPECT_NEAR(predict(m, std::vector<FeatureId>{F::R5}).score, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(predict(m, std::vector<FeatureId>{F::R1}).score, 1.0 / 3.0, 1e-12);
}

TEST(Baseline, LogOddsMatchTheOracleForEveryOrder) {
    const auto corpus = small_corpus();
    const std::vector<std::vector<FeatureId>> probes = {
        {}, {F::R5, F::D2}, {F::D2, F::R5}, {F::P4, F::P4, F::P3}, {F::R1, F::R4, F::E2, F::D3}};
    for (int n = 1; n <= 4; ++n) {
        const auto model = train_baseline(corpus, n);
        for (const auto& doc : probes) {
            EXPECT_NEAR(predict(model, doc).score, sigmoid(oracle_log_odds(corpus, doc, n)), 1e-12) << "n=" << n;
        }
    }
}

TEST(Baseline, EmptyRecordScoresThePrior) {
    const auto model = train_baseline(small_corpus(), 3);
    EXPECT_NEAR(predict(model, std::vector<FeatureId>{}).score, sigmoid(std::log(4.0 / 6.0)), 1e-12);
}

TEST(Baseline, OrderMattersForBigramsButNotUnigrams) {
    const auto corpus = small_corpus();
    const auto uni = train_baseline(corpus, 1);
    EXPECT_DOUBLE_EQ(predict(uni, std::vector<FeatureId>{F::R5, F::D2}).score,
                     predict(uni, std::vector<FeatureId>{F::D2, F::R5}).score);
    const auto tri = train_baseline(corpus, 3);
    EXPECT_NE(predict(tri, std::vector<FeatureId>{F::R5, F::D2}).score,
              predict(tri, std::vector<FeatureId>{F::D2, F::R5}).score);
    auto a = rec("x", {F::R5, F::D2}, std::nullopt), b = rec("y", {F::R5, F::D2}, std::nullopt, "npm");
    EXPECT_EQ(predict(tri, a).score, predict(tri, b).score);
}

TEST(Baseline, RejectsEmptyClassesAndBadOrders) {
    auto only_benign = small_corpus();
    std::erase_if(only_benign, [](const auto& r) { return r.label == Label::Malicious; });
    EXPECT_EQ(kind_of([&] { train_baseline(only_benign, 3); }), ErrorKind::EmptyClass);
    EXPECT_EQ(kind_of([] { train_baseline(small_corpus(), 0); }), ErrorKind::BadOrder);
    EXPECT_EQ(kind_of([] { train_baseline(small_corpus(), 6); }), ErrorKind::BadOrder);
}

TEST(Baseline, UnlabeledRecordsAreIgnoredInTraining) {
    auto corpus = small_corpus();
    const auto base = train_baseline(corpus, 2);
    corpus.push_back(rec("u", {F::P4, F::P4}, std::nullopt));
    EXPECT_EQ(train_baseline(corpus, 2).to_json(), base.to_json());
}

TEST(Baseline, ModelRoundTripsThroughJsonAndDisk) {
    const auto model = train_baseline(small_corpus(), 3);
    const auto back = BaselineModel::from_json(model.to_json());
    EXPECT_EQ(back.to_json(), model.to_json());
    EXPECT_EQ(back.model_id(), model.model_id());
    TempDir dir;
    model.save(dir.path() / "m.json");
    const auto loaded = BaselineModel::load(dir.path() / "m.json");
    for (const auto& r : small_corpus()) EXPECT_EQ(predict(loaded, r).score, predict(model, r).score);
    EXPECT_EQ(kind_of([] { BaselineModel::from_json("{\"format\": \"other\"}"); }), ErrorKind::ConfigInvalid);
    EXPECT_EQ(kind_of([&] { BaselineModel::load(dir.path() / "missing.json"); }), ErrorKind::IoFailure);
}

TEST(Corpus, RecordsRoundTripThroughJsonLines) {
    TempDir dir;
    auto records = small_corpus();
    records.push_back(rec("unlabeled \"quoted\" \xc3\xa9", {F::E4}, std::nullopt, "npm"));
    EXPECT_EQ(export_corpus(records, dir.path() / "c.jsonl"), records.size());
    EXPECT_EQ(import_corpus(dir.path() / "c.jsonl"), records);
    const auto line = record_to_json(records[0]);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(line,
              R"({"package_name":"m1","version":"1.0","ecosystem":"pypi","description_text":"text of 2",)"
              R"("ordered_feature_ids":["R5","D2"],"label":"malicious"})");
    EXPECT_EQ(record_from_json(record_to_json(records.back())), records.back());
    EXPECT_EQ(kind_of([] { record_from_json(R"({"package_name":"x"})"); }), ErrorKind::ConfigInvalid);
    EXPECT_EQ(kind_of([] { record_from_json(R"({"package_name":"x","version":"1","ecosystem":"pypi",
        "description_text":"","ordered_feature_ids":["Q7"],"label":null})"); }), ErrorKind::ConfigInvalid);
}

TEST(Corpus, PredictionsImport) {
    TempDir dir;
    const PredictionRecord p{"pkg", "2.0", "npm", {Label::Malicious, 0.93, "external-v1"}};
    {
        std::ofstream out(dir.path() / "p.jsonl");
        out << prediction_to_json(p) << "\n\n"
            << R"({"package_name":"q","version":"1","ecosystem":"pypi","score":0.1,"label":"benign"})" << "\n";
    }
    const auto got = import_predictions(dir.path() / "p.jsonl");
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].package_name, "pkg");
    EXPECT_EQ(got[0].prediction.label, Label::Malicious);
    EXPECT_DOUBLE_EQ(got[0].prediction.score, 0.93);
    EXPECT_EQ(got[0].prediction.model_id, "external-v1");
    EXPECT_EQ(got[1].prediction.label, Label::Benign);
}

TEST(Split, NinetyTenOfTenRecords) {
    const auto corpus = small_corpus();
    const auto [train, test] = split_corpus(corpus, 0.9, 42);
    EXPECT_EQ(train.size(), 9u);
    EXPECT_EQ(test.size(), 1u);
    std::multiset<std::string> names;
    for (const auto& r : train) names.insert(r.package_name);
    for (const auto& r : test) names.insert(r.package_name);
    EXPECT_EQ(names.size(), 10u);
    EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 10u);
    const auto again = split_corpus(corpus, 0.9, 42);
    EXPECT_EQ(again.first, train);
    EXPECT_EQ(again.second, test);
}

TEST(Split, StratifiedByLabel) {
    const std::vector<CorpusRecord> four = {rec("m1", {}, Label::Malicious), rec("m2", {}, Label::Malicious),
                                            rec("b1", {}, Label::Benign), rec("b2", {}, Label::Benign)};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto [train, test] = split_corpus(four, 0.5, seed);
        ASSERT_EQ(train.size(), 2u);
        ASSERT_EQ(test.size(), 2u);
        EXPECT_NE(train[0].label, train[1].label);
        EXPECT_NE(test[0].label, test[1].label);
    }
    std::set<std::string> first_train;
    for (std::uint64_t seed = 0; seed < 20; ++seed) first_train.insert(split_corpus(four, 0.5, seed).first[0].package_name);
    EXPECT_GT(first_train.size(), 1u);  // the seed matters
    EXPECT_EQ(kind_of([&] { split_corpus(four, 1.0, 0); }), ErrorKind::BadUsage);
}

TEST(Metrics, CountsAndRatios) {
    const auto M = Label::Malicious, B = Label::Benign;
    // TP=3, FP=1, FN=2, TN=1
    const auto m = evaluate({M, M, M, M, B, B, B}, {M, M, M, B, M, M, B});
    EXPECT_EQ(m.true_positive, 3u);
    EXPECT_EQ(m.false_positive, 1u);
    EXPECT_EQ(m.false_negative, 2u);
    EXPECT_EQ(m.true_negative, 1u);
    EXPECT_DOUBLE_EQ(m.precision, 0.75);
    EXPECT_DOUBLE_EQ(m.recall, 0.6);
    EXPECT_DOUBLE_EQ(m.f1, 2 * 0.75 * 0.6 / 1.35);

    const auto none = evaluate({B, B}, {B, B});
    EXPECT_TRUE(none.precision_undefined);
    EXPECT_TRUE(none.recall_undefined);
    EXPECT_EQ(none.f1, 0.0);
    EXPECT_EQ(kind_of([&] { evaluate({M}, {M, B}); }), ErrorKind::LengthMismatch);
    EXPECT_EQ(kind_of([&] { evaluate({}, {}); }), ErrorKind::LengthMismatch);
}
