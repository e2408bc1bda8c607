#include "catalog/evalkit.hpp"

#include "catalog/csv.hpp"
#include "catalog/text.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

namespace catalog {

void to_json(Json& j, const ConfusionMatrix& m) { j = Json{{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}}; }

void from_json(const Json& j, ConfusionMatrix& m) {
    m.tp = j.at("tp").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
}

void to_json(Json& j, const MetricsReport& m) {
    j = Json{{"matrix", m.matrix},
             {"accuracy", m.accuracy},
             {"precision", m.precision},
             {"recall", m.recall},
             {"f1", m.f1},
             {"kappa", m.kappa ? Json(*m.kappa) : Json(nullptr)}};
}

void from_json(const Json& j, MetricsReport& m) {
    m.matrix = j.at("matrix").get<ConfusionMatrix>();
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.kappa.reset();
    if (j.contains("kappa") && !j.at("kappa").is_null()) m.kappa = j.at("kappa").get<double>();
}

Split<LabeledTitle> split_train_test(const std::vector<LabeledTitle>& items, double ratio, std::uint64_t seed) {
    return split_train_test(items, ratio, seed, [](const LabeledTitle& t) { return t.relevant; });
}

ConfusionMatrix confusion_matrix(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
    if (predictions.size() != labels.size()) {
        throw LengthMismatch(std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw InvalidValue("no predictions to score");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i]) {
            ++(labels[i] ? m.tp : m.fp);
        } else {
            ++(labels[i] ? m.fn : m.tn);
        }
    }
    return m;
}

MetricsReport metrics_from(const ConfusionMatrix& m) {
    if (m.total() == 0) throw InvalidValue("empty confusion matrix");
    const auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    MetricsReport r;
    r.matrix = m;
    r.accuracy = ratio(m.tp + m.tn, m.total());
    r.precision = ratio(m.tp, m.tp + m.fp);
    r.recall = ratio(m.tp, m.tp + m.fn);
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

MetricsReport compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
    return metrics_from(confusion_matrix(predictions, labels));
}

namespace {

void check_pair(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) {
        throw LengthMismatch(std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " annotations");
    }
    if (a.empty()) throw InvalidValue("no annotations");
}

}  // namespace

double raw_agreement(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    check_pair(a, b);
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const double po = raw_agreement(a, b);
    std::map<std::string, std::pair<std::size_t, std::size_t>> marginals;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++marginals[a[i]].first;
        ++marginals[b[i]].second;
    }
    const double n = static_cast<double>(a.size());
    double pe = 0.0;
    for (const auto& [label, counts] : marginals) {
        pe += (static_cast<double>(counts.first) / n) * (static_cast<double>(counts.second) / n);
    }
    if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

std::string_view to_string(SummaryFlag f) noexcept {
    switch (f) {
        case SummaryFlag::HallucinationRisk: return "hallucination_risk";
        case SummaryFlag::NoConsequence: return "no_consequence";
        case SummaryFlag::Degeneration: return "degeneration";
        case SummaryFlag::Decontextualized: return "decontextualized";
    }
    return "unknown";
}

bool is_stopword(std::string_view token) {
    static const std::set<std::string, std::less<>> words{
        "a",       "about",  "above",  "after",   "again",   "against", "all",   "also",   "am",     "an",
        "and",     "any",    "are",    "as",      "at",      "be",      "been",  "before", "being",  "below",
        "between", "both",   "but",    "by",      "can",     "could",   "did",   "do",     "does",   "doing",
        "down",    "during", "each",   "even",    "few",     "for",     "from",  "further", "had",   "has",
        "have",    "having", "he",     "her",     "here",    "hers",    "him",   "his",    "how",    "i",
        "if",      "in",     "into",   "is",      "it",      "its",     "itself", "just",  "like",   "make",
        "may",     "me",     "might",  "more",    "most",    "much",    "must",  "my",     "no",     "nor",
        "not",     "now",    "of",     "off",     "often",   "on",      "once",  "one",    "only",   "or",
        "other",   "our",    "ours",   "out",     "over",    "own",     "probably", "same", "she",   "should",
        "so",      "some",   "such",   "than",    "that",    "the",     "their", "theirs", "them",   "then",
        "there",   "these",  "they",   "this",    "those",   "through", "to",    "too",    "under",  "until",
        "up",      "us",     "very",   "was",     "we",      "were",    "what",  "when",   "where",  "which",
        "while",   "who",    "whom",   "why",     "will",    "with",    "would", "you",    "your",   "yours"};
    return words.count(token) > 0;
}

std::vector<std::string> content_words(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : text::word_tokens(text)) {
        if (!is_stopword(t)) out.push_back(std::move(t));
    }
    return out;
}

std::vector<SummaryFlag> screen_summary(std::string_view summary, const Article& article, bool no_consequence,
                                        const ScreeningThresholds& th) {
    std::vector<SummaryFlag> flags;
    const auto words = content_words(summary);
    const std::set<std::string> summary_words(words.begin(), words.end());
    std::set<std::string> source;
    for (auto& w : content_words(article.title)) source.insert(std::move(w));
    for (auto& w : content_words(article.body)) source.insert(std::move(w));

    std::size_t supported = 0;
    bool shares_noun = false;
    for (const auto& w : summary_words) {
        if (!source.count(w)) continue;
        ++supported;
        // crude noun test: a shared content word that is not a bare number
        if (w.size() >= 4 && !std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            shares_noun = true;
        }
    }
    if (!summary_words.empty() &&
        static_cast<double>(supported) / static_cast<double>(summary_words.size()) < th.min_supported_fraction) {
        flags.push_back(SummaryFlag::HallucinationRisk);
    }
    if (no_consequence) flags.push_back(SummaryFlag::NoConsequence);

    const auto tokens = text::word_tokens(summary);
    std::size_t run = 0, longest = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        run = (i > 0 && tokens[i] == tokens[i - 1]) ? run + 1 : 1;
        longest = std::max(longest, run);
    }
    const std::set<std::string> distinct(tokens.begin(), tokens.end());
    if (longest > th.max_run ||
        (!tokens.empty() &&
         static_cast<double>(distinct.size()) / static_cast<double>(tokens.size()) < th.min_distinct_ratio)) {
        flags.push_back(SummaryFlag::Degeneration);
    }
    if (text::utf8_length(text::trim(summary)) < th.min_chars || !shares_noun) {
        flags.push_back(SummaryFlag::Decontextualized);
    }
    return flags;
}

namespace {

const csv::Row kFunnelHeader{"News Source", "Retrieved", "Title Filter", "Content Filter"};

std::size_t parse_count(const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw MalformedCsv("not a count: '" + s + "'");
    }
    return static_cast<std::size_t>(std::stoull(s));
}

std::size_t parse_cell(const std::string& cell, std::size_t retrieved) {
    static const std::regex re(R"(^(\d+) \((\d+)%\)$)");
    std::smatch m;
    if (!std::regex_match(cell, m, re)) throw MalformedCsv("bad funnel cell '" + cell + "'");
    const auto count = parse_count(m[1].str());
    if (static_cast<int>(parse_count(m[2].str())) != percent_of(count, retrieved)) {
        throw MalformedCsv("percentage does not match count in '" + cell + "'");
    }
    return count;
}

}  // namespace

std::string format_funnel_cell(std::size_t count, std::size_t retrieved) {
    return std::to_string(count) + " (" + std::to_string(percent_of(count, retrieved)) + "%)";
}

std::string render_funnel_table(const PipelineReport& report) {
    const auto row = [](const std::string& name, const FunnelCounts& c) {
        return csv::format_row({name, std::to_string(c.retrieved), format_funnel_cell(c.after_title_filter, c.retrieved),
                                format_funnel_cell(c.after_content_filter, c.retrieved)});
    };
    std::string out = csv::format_row(kFunnelHeader);
    for (const auto& s : report.per_source) out += row(s.source, s.counts);
    out += row("Total", report.totals);
    return out;
}

FunnelTable parse_funnel_table(std::string_view data) {
    const auto table = csv::parse_table(data);
    if (table.header != kFunnelHeader) throw MalformedCsv("unexpected funnel table header");
    FunnelTable out;
    bool saw_total = false;
    for (const auto& r : table.rows) {
        if (saw_total) throw MalformedCsv("rows after the Total row");
        FunnelCounts c;
        c.retrieved = parse_count(r[1]);
        c.after_title_filter = parse_cell(r[2], c.retrieved);
        c.after_content_filter = parse_cell(r[3], c.retrieved);
        if (r[0] == "Total") {
            out.total = c;
            saw_total = true;
        } else {
            out.rows.push_back({r[0], c});
        }
    }
    if (!saw_total) throw MalformedCsv("missing Total row");
    return out;
}

bool parse_bool_label(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "1" || v == "yes" || v == "true" || v == "relevant") return true;
    if (v == "0" || v == "no" || v == "false" || v == "irrelevant") return false;
    throw InvalidValue("unrecognized label '" + std::string(s) + "'");
}

std::vector<LabeledTitle> read_labeled_titles(std::string_view data) {
    const auto table = csv::parse_table(data);
    const auto text_col = table.column("text");
    const auto label_col = table.column("label");
    if (!text_col || !label_col) throw MalformedCsv("expected columns text,label");
    std::vector<LabeledTitle> out;
    for (const auto& r : table.rows) out.push_back({r[*text_col], parse_bool_label(r[*label_col])});
    return out;
}

std::vector<AnnotationPair> read_annotations(std::string_view data) {
    const auto table = csv::parse_table(data);
    const auto text_col = table.column("text");
    const auto a_col = table.column("label_a");
    const auto b_col = table.column("label_b");
    if (!text_col || !a_col || !b_col) throw MalformedCsv("expected columns text,label_a,label_b");
    std::vector<AnnotationPair> out;
    for (const auto& r : table.rows) {
        out.push_back({r[*text_col], std::string(text::trim(r[*a_col])), std::string(text::trim(r[*b_col]))});
    }
    return out;
}

std::vector<LabeledTitle> synthetic_titles(std::size_t n, std::uint64_t seed) {
    static const std::array<std::string_view, 12> nouns{
        "smart speakers", "social media",   "VR headsets",      "chatbots",     "face recognition", "ride-hailing apps",
        "fitness trackers", "smart doorbells", "dating apps", "voice assistants", "deepfake tools", "delivery robots"};
    static const std::array<std::string_view, 12> harms{
        "leak private conversations", "fuel teen anxiety",        "spread election misinformation",
        "enable stalking",            "deepen racial bias",       "cost warehouse workers their jobs",
        "disrupt sleep for millions", "expose children to abuse", "drive compulsive addiction",
        "widen the wage gap",         "erode public trust",       "harm mental health"};
    static const std::array<std::string_view, 12> neutral{
        "get new color options",     "arrive in stores next week", "receive a software update",
        "win a design award",        "add a dark mode",            "ship with longer battery life",
        "launch in three countries", "get a price cut",            "are reviewed side by side",
        "add holiday themes",        "expand the app store",       "unveil a compact model"};
    static const std::array<std::string_view, 5> prefixes{"", "Report: ", "Explainer: ", "Opinion: ", "Analysis: "};

    std::mt19937_64 rng(seed);
    const auto pick = [&](const auto& arr) { return std::string(arr[uniform_below(rng, arr.size())]); };
    std::vector<LabeledTitle> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool relevant = i < n / 2;
        std::string title = pick(prefixes) + pick(nouns) + " " + (relevant ? pick(harms) : pick(neutral));
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        out.push_back({std::move(title), relevant});
    }
    seeded_shuffle(out, seed ^ 0x5bd1e995ULL);
    return out;
}

MetricsReport evaluate_classifier(TitleClassifier& classifier, const std::vector<LabeledTitle>& test) {
    std::vector<bool> preds, labels;
    for (const auto& t : test) {
        preds.push_back(classifier.score(t.title) >= 0.5);
        labels.push_back(t.relevant);
    }
    return compute_metrics(preds, labels);
}

TitleEvaluation evaluate_title_baseline(const std::vector<LabeledTitle>& items, std::uint64_t seed, double ratio,
                                        const TrainOptions& options) {
    const auto split = split_train_test(items, ratio, seed);
    TitleEvaluation ev;
    ev.train_size = split.train.size();
    ev.test_size = split.test.size();
    ev.model = train_title_baseline(split.train, seed, options);
    BaselineTitleClassifier classifier(ev.model);
    ev.metrics = evaluate_classifier(classifier, split.test);
    return ev;
}

}  // namespace catalog
