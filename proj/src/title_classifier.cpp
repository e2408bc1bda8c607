#include "catalog/title_classifier.hpp"

#include "catalog/error.hpp"
#include "catalog/random.hpp"
#include "catalog/text.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace catalog {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Sparse bag-of-words vector: (vocabulary index, count).
using Features = std::vector<std::pair<std::size_t, double>>;

Features featurize(const std::map<std::string, std::size_t>& vocab, std::string_view title) {
    std::map<std::size_t, double> counts;
    for (const auto& tok : text::word_tokens(title)) {
        if (auto it = vocab.find(tok); it != vocab.end()) counts[it->second] += 1.0;
    }
    return {counts.begin(), counts.end()};
}

double linear(const std::vector<double>& w, const Features& x) {
    double z = w.back();
    for (const auto& [i, v] : x) z += w[i] * v;
    return z;
}

// log(1 + e^{-y'z}) with y' = +-1, computed without overflow
double log_loss(double z, bool positive) {
    const double m = positive ? -z : z;
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

std::string fingerprint(std::span<const LabeledTitle> labeled) {
    std::string buf;
    for (const auto& l : labeled) {
        buf += l.relevant ? "1\t" : "0\t";
        buf += l.title;
        buf += '\n';
    }
    return text::sha256_hex(buf);
}

}  // namespace

void to_json(Json& j, const TitleClassifierModel& m) {
    j = Json{{"vocabulary", m.vocabulary},
             {"weights", m.weights},
             {"trained_on", m.trained_on},
             {"loss_history", m.loss_history}};
}

void from_json(const Json& j, TitleClassifierModel& m) {
    j.at("vocabulary").get_to(m.vocabulary);
    j.at("weights").get_to(m.weights);
    m.trained_on = j.value("trained_on", "");
    m.loss_history = j.value("loss_history", std::vector<double>{});
    if (m.weights.size() != m.vocabulary.size() + 1) {
        throw InvalidValue("title model has " + std::to_string(m.weights.size()) + " weights for " +
                           std::to_string(m.vocabulary.size()) + " vocabulary entries");
    }
    for (double w : m.weights) {
        if (!std::isfinite(w)) throw InvalidValue("title model has a non-finite weight");
    }
}

TitleClassifierModel train_title_baseline(std::span<const LabeledTitle> labeled, std::uint64_t seed,
                                          const TrainOptions& options) {
    std::size_t pos = 0;
    for (const auto& l : labeled) pos += l.relevant ? 1 : 0;
    const std::size_t neg = labeled.size() - pos;
    if (pos < 2 || neg < 2) {
        throw DegenerateDataset("need at least two titles of each class (got " + std::to_string(pos) +
                                " relevant, " + std::to_string(neg) + " irrelevant)");
    }

    TitleClassifierModel model;
    std::set<std::string> tokens;
    for (const auto& l : labeled) {
        for (auto& t : text::word_tokens(l.title)) tokens.insert(std::move(t));
    }
    if (tokens.empty()) throw DegenerateDataset("training titles contain no word tokens");
    for (const auto& t : tokens) model.vocabulary.emplace(t, model.vocabulary.size());
    model.weights.assign(model.vocabulary.size() + 1, 0.0);
    model.trained_on = fingerprint(labeled);

    std::vector<Features> xs;
    xs.reserve(labeled.size());
    for (const auto& l : labeled) xs.push_back(featurize(model.vocabulary, l.title));

    const std::size_t n = labeled.size();
    const std::size_t bias = model.weights.size() - 1;
    auto objective = [&] {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) loss += log_loss(linear(model.weights, xs[i]), labeled[i].relevant);
        double reg = 0.0;
        for (std::size_t k = 0; k < bias; ++k) reg += model.weights[k] * model.weights[k];
        return loss / static_cast<double>(n) + 0.5 * options.l2 * reg;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(model.weights.size());
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        seeded_shuffle(order, seed + static_cast<std::uint64_t>(epoch));
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = order[b];
                const double err = sigmoid(linear(model.weights, xs[i])) - (labeled[i].relevant ? 1.0 : 0.0);
                for (const auto& [k, v] : xs[i]) grad[k] += err * v;
                grad[bias] += err;
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = 0; k < model.weights.size(); ++k) {
                double g = grad[k] * scale;
                if (k != bias) g += options.l2 * model.weights[k];
                model.weights[k] -= options.learning_rate * g;
            }
        }
        model.loss_history.push_back(objective());
    }
    return model;
}

double predict_title(const TitleClassifierModel& model, std::string_view title) {
    if (model.weights.empty()) throw InvalidValue("title model is untrained");
    return sigmoid(linear(model.weights, featurize(model.vocabulary, title)));
}

std::shared_ptr<BaselineTitleClassifier> BaselineTitleClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot open title model " + path);
    try {
        return std::make_shared<BaselineTitleClassifier>(Json::parse(in).get<TitleClassifierModel>());
    } catch (const Json::exception& e) {
        throw InvalidValue("bad title model " + path + ": " + e.what());
    }
}

StubTitleClassifier::StubTitleClassifier(std::vector<LabeledTitle> labels, double default_score)
    : default_score_(default_score) {
    for (auto& l : labels) labels_[std::string(text::trim(l.title))] = l.relevant;
}

std::shared_ptr<StubTitleClassifier> StubTitleClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot open title label table " + path);
    try {
        const Json j = Json::parse(in);
        std::vector<LabeledTitle> labels;
        for (const auto& e : j.at("labels")) {
            labels.push_back({e.at("title").get<std::string>(), e.at("relevant").get<bool>()});
        }
        return std::make_shared<StubTitleClassifier>(std::move(labels), j.value("default_score", 0.0));
    } catch (const Json::exception& e) {
        throw InvalidValue("bad title label table " + path + ": " + e.what());
    }
}

double StubTitleClassifier::score(std::string_view title) {
    auto it = labels_.find(text::trim(title));
    if (it == labels_.end()) return default_score_;
    return it->second ? 1.0 : 0.0;
}

}  // namespace catalog
