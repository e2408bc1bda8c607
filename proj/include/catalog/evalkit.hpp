#pragma once

#include "catalog/error.hpp"
#include "catalog/random.hpp"
#include "catalog/serialize.hpp"
#include "catalog/title_classifier.hpp"
#include "catalog/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace catalog {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
    ConfusionMatrix matrix;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> kappa;

    bool operator==(const MetricsReport&) const = default;
};

void to_json(Json& j, const ConfusionMatrix& m);
void from_json(const Json& j, ConfusionMatrix& m);
void to_json(Json& j, const MetricsReport& m);
void from_json(const Json& j, MetricsReport& m);

template <typename T>
struct Split {
    std::vector<T> train;
    std::vector<T> test;
};

// Stratified seeded split. Each class contributes round(n_class * ratio)
// items to train; both halves are then shuffled. Throws TooFewItems below 5
// items and InvalidValue unless 0 < ratio < 1.
template <typename T, typename LabelOf>
Split<T> split_train_test(const std::vector<T>& items, double ratio, std::uint64_t seed, LabelOf label_of) {
    if (items.size() < 5) throw TooFewItems("need at least 5 items, got " + std::to_string(items.size()));
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidValue("train ratio must be in (0, 1)");
    std::map<decltype(label_of(items.front())), std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < items.size(); ++i) groups[label_of(items[i])].push_back(i);

    Split<T> out;
    std::uint64_t salt = 0;
    for (auto& [label, idx] : groups) {
        seeded_shuffle(idx, seed + 0x9e3779b97f4a7c15ULL * ++salt);
        const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * ratio));
        for (std::size_t i = 0; i < idx.size(); ++i) (i < n_train ? out.train : out.test).push_back(items[idx[i]]);
    }
    seeded_shuffle(out.train, seed);
    seeded_shuffle(out.test, seed + 1);
    return out;
}

Split<LabeledTitle> split_train_test(const std::vector<LabeledTitle>& items, double ratio = 0.8,
                                     std::uint64_t seed = 0);

// "Relevant" is the positive class. Throws LengthMismatch, InvalidValue on
// empty input.
ConfusionMatrix confusion_matrix(const std::vector<bool>& predictions, const std::vector<bool>& labels);
// Precision, recall and f1 are 0 when their denominators are 0.
MetricsReport metrics_from(const ConfusionMatrix& matrix);
MetricsReport compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels);

// Observed agreement p_o.
double raw_agreement(const std::vector<std::string>& a, const std::vector<std::string>& b);
// (p_o - p_e) / (1 - p_e); when p_e is 1 the result is 1 if p_o is 1, else 0.
double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

enum class SummaryFlag { HallucinationRisk, NoConsequence, Degeneration, Decontextualized };
std::string_view to_string(SummaryFlag f) noexcept;

struct ScreeningThresholds {
    double min_supported_fraction = 0.3;
    std::size_t max_run = 8;
    double min_distinct_ratio = 0.3;
    std::size_t min_chars = 60;
};

// Advisory heuristics only; `no_consequence` passes through the caller's
// filter verdict. Flags come back in enum order.
std::vector<SummaryFlag> screen_summary(std::string_view summary, const Article& article, bool no_consequence = false,
                                        const ScreeningThresholds& thresholds = {});

// Lowercase tokens with stopwords removed.
std::vector<std::string> content_words(std::string_view text);
bool is_stopword(std::string_view token);

// CSV with header "News Source,Retrieved,Title Filter,Content Filter"; each
// filter cell is "N (P%)" with P relative to Retrieved, then a Total row.
std::string render_funnel_table(const PipelineReport& report);
std::string format_funnel_cell(std::size_t count, std::size_t retrieved);

struct FunnelTable {
    std::vector<SourceFunnel> rows;  // cards_emitted is not part of the table
    FunnelCounts total;
};
// Throws MalformedCsv when the header or a cell does not match the layout.
FunnelTable parse_funnel_table(std::string_view csv);

// Eval datasets. Labels accept 1/0, yes/no, true/false, relevant/irrelevant.
std::vector<LabeledTitle> read_labeled_titles(std::string_view csv);
struct AnnotationPair {
    std::string text;
    std::string label_a;
    std::string label_b;
};
std::vector<AnnotationPair> read_annotations(std::string_view csv);
bool parse_bool_label(std::string_view s);

// Linearly separable toy titles: relevant ones mix a technology noun with a
// harm phrase, irrelevant ones the same nouns with product-news phrases.
// Half of the titles are relevant (n rounded down).
std::vector<LabeledTitle> synthetic_titles(std::size_t n, std::uint64_t seed);

struct TitleEvaluation {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    TitleClassifierModel model;
    MetricsReport metrics;
};

// Stratified split, train the baseline on train, score the test half at 0.5.
TitleEvaluation evaluate_title_baseline(const std::vector<LabeledTitle>& items, std::uint64_t seed,
                                        double ratio = 0.8, const TrainOptions& options = {});
MetricsReport evaluate_classifier(TitleClassifier& classifier, const std::vector<LabeledTitle>& test);

}  // namespace catalog
