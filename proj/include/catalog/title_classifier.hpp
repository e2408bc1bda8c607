#pragma once

#include "catalog/serialize.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace catalog {

// Relevance scorer for article titles; callers treat score >= 0.5 as relevant.
class TitleClassifier {
public:
    virtual ~TitleClassifier() = default;
    virtual double score(std::string_view title) = 0;
    virtual std::string id() const = 0;
};

struct LabeledTitle {
    std::string title;
    bool relevant = false;
};

// Bag-of-words logistic regression over lowercased word-unigram counts.
// `weights` holds one weight per vocabulary entry followed by the bias.
struct TitleClassifierModel {
    std::map<std::string, std::size_t> vocabulary;
    std::vector<double> weights;
    std::string trained_on;            // sha256 of the training set
    std::vector<double> loss_history;  // training objective after each epoch

    double bias() const { return weights.back(); }
    bool operator==(const TitleClassifierModel&) const = default;
};

void to_json(Json& j, const TitleClassifierModel& m);
void from_json(const Json& j, TitleClassifierModel& m);

struct TrainOptions {
    int epochs = 50;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::size_t batch_size = 32;
};

// Mini-batch gradient descent on mean log-loss + (l2/2)·|w|² (bias not
// penalized), starting from zero weights; the example order is reshuffled
// every epoch from `seed`. Identical inputs and seed give identical weights.
// Throws DegenerateDataset unless each class has at least two examples.
TitleClassifierModel train_title_baseline(std::span<const LabeledTitle> labeled, std::uint64_t seed,
                                          const TrainOptions& options = {});

// sigmoid(w·x + b); tokens outside the vocabulary contribute nothing.
double predict_title(const TitleClassifierModel& model, std::string_view title);

class BaselineTitleClassifier final : public TitleClassifier {
public:
    explicit BaselineTitleClassifier(TitleClassifierModel model) : model_(std::move(model)) {}
    static std::shared_ptr<BaselineTitleClassifier> load(const std::string& path);

    double score(std::string_view title) override { return predict_title(model_, title); }
    std::string id() const override { return "baseline:" + model_.trained_on.substr(0, 12); }
    const TitleClassifierModel& model() const noexcept { return model_; }

private:
    TitleClassifierModel model_;
};

// Fixed label table keyed by exact (trimmed) title; used for fixture runs
// where the verdicts are given. Unknown titles get `default_score`.
// File format: {"default_score": 0.0, "labels": [{"title": "...", "relevant": true}]}.
class StubTitleClassifier final : public TitleClassifier {
public:
    explicit StubTitleClassifier(std::vector<LabeledTitle> labels, double default_score = 0.0);
    static std::shared_ptr<StubTitleClassifier> load(const std::string& path);

    double score(std::string_view title) override;
    std::string id() const override { return "stub"; }

private:
    std::map<std::string, bool, std::less<>> labels_;
    double default_score_;
};

// Remote scorer: POST <url> {"title": "..."} -> {"score": 0.87}.
class RemoteTitleClassifier final : public TitleClassifier {
public:
    RemoteTitleClassifier(std::string url, std::string api_key = {},
                          std::chrono::seconds timeout = std::chrono::seconds{30});

    // Throws ProviderUnavailable on transport errors or a malformed reply.
    double score(std::string_view title) override;
    std::string id() const override { return "remote:" + url_; }

private:
    std::string url_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

}  // namespace catalog
