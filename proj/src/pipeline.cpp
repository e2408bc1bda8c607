#include "catalog/pipeline.hpp"

#include "catalog/error.hpp"
#include "catalog/serialize.hpp"
#include "catalog/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

namespace catalog {

namespace {

constexpr std::string_view kDomain = "<domain>";
constexpr std::string_view kTitle = "<title>";
constexpr std::string_view kSummary = "<summary>";

std::string aspect_list() {
    std::string out = "List of possible aspects: ";
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        if (i) out += ", ";
        out += canonical_name(kAllAspects[i]);
    }
    return out;
}

std::string strip_punct_lower(std::string_view token) {
    std::string out;
    for (char c : token) {
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string stage_prompt(std::string_view body, std::string_view instruction) {
    std::string p(body);
    p += "\n\n";
    p += instruction;
    return p;
}

}  // namespace

StagePromptSet StagePromptSet::defaults() {
    StagePromptSet p;
    p.content_filter_template =
        "Does the article above discuss unintended or undesirable consequences on society of <domain>? "
        "Answer Yes or No.";
    p.summary_template = "To summarize in a short paragraph, the main undesirable consequence of <domain> being "
                         "discussed here is";
    p.aspect_template = aspect_list() +
                        "\nWhich aspect of life does the following consequence affect?\n\nTitle: <title>\n\n"
                        "Summary: <summary>\n\nAspect:";
    return p;
}

void StagePromptSet::validate() const {
    if (content_filter_template.find(kDomain) == std::string::npos ||
        !text::ends_with(content_filter_template, "Answer Yes or No.")) {
        throw InvalidValue("content filter template needs <domain> and must end with \"Answer Yes or No.\"");
    }
    if (summary_template.find(kDomain) == std::string::npos ||
        !text::ends_with(summary_template, "being discussed here is")) {
        throw InvalidValue("summary template needs <domain> and must end with \"being discussed here is\"");
    }
    if (aspect_template.find(kTitle) == std::string::npos || aspect_template.find(kSummary) == std::string::npos) {
        throw InvalidValue("aspect template needs <title> and <summary>");
    }
    for (Aspect a : kAllAspects) {
        if (aspect_template.find(canonical_name(a)) == std::string::npos) {
            throw InvalidValue("aspect template does not list " + std::string(canonical_name(a)));
        }
    }
}

void to_json(Json& j, const StagePromptSet& p) {
    j = Json{{"content_filter_template", p.content_filter_template},
             {"summary_template", p.summary_template},
             {"aspect_template", p.aspect_template}};
}

void from_json(const Json& j, StagePromptSet& p) {
    const auto d = StagePromptSet::defaults();
    p.content_filter_template = j.value("content_filter_template", d.content_filter_template);
    p.summary_template = j.value("summary_template", d.summary_template);
    p.aspect_template = j.value("aspect_template", d.aspect_template);
}

std::string truncate_body(std::string_view body, std::size_t budget) {
    if (body.size() <= budget) return std::string(body);
    std::size_t cut = budget;
    // a cut that lands on whitespace keeps the whole last word
    while (cut > 0 && !std::isspace(static_cast<unsigned char>(body[cut]))) --cut;
    if (cut == 0) {
        cut = budget;
        while (cut > 0 && (static_cast<unsigned char>(body[cut]) & 0xC0) == 0x80) --cut;
    }
    while (cut > 0 && std::isspace(static_cast<unsigned char>(body[cut - 1]))) --cut;
    return std::string(body.substr(0, cut));
}

std::string fill_domain(std::string_view tmpl, std::string_view domain) {
    return text::replace_all(std::string(tmpl), kDomain, domain);
}

std::string build_content_filter_prompt(const Article& article, const TechDomain& domain,
                                        const PipelineOptions& options) {
    return stage_prompt(truncate_body(article.body, options.body_char_budget),
                        fill_domain(options.prompts.content_filter_template, domain.name));
}

std::string build_summary_prompt(const Article& article, const TechDomain& domain, const PipelineOptions& options) {
    return stage_prompt(truncate_body(article.body, options.body_char_budget),
                        fill_domain(options.prompts.summary_template, domain.name));
}

std::string build_aspect_prompt(std::string_view title, std::string_view summary, const StagePromptSet& prompts) {
    // fill <summary> first so a title containing "<summary>" is left alone
    std::string p = text::replace_all(prompts.aspect_template, kSummary, summary);
    const auto at = p.find(kTitle);
    if (at != std::string::npos) p.replace(at, kTitle.size(), title);
    return p;
}

FilterDecision filter_title(std::string_view title, TitleClassifier& classifier) {
    if (text::trim(title).empty()) throw EmptyTitle("article title is empty");
    FilterDecision d;
    d.stage = Stage::Title;
    d.score = classifier.score(text::trim(title));
    d.verdict = *d.score >= 0.5 ? Verdict::Relevant : Verdict::Irrelevant;
    d.raw = classifier.id();
    return d;
}

Verdict parse_yes_no(std::string_view completion) {
    const auto tokens = text::split_whitespace(completion);
    if (tokens.empty()) return Verdict::Undetermined;
    const std::string first = strip_punct_lower(tokens.front());
    if (first == "yes") return Verdict::Relevant;
    if (first == "no") return Verdict::Irrelevant;
    return Verdict::Undetermined;
}

FilterDecision filter_content(const Article& article, const TechDomain& domain, Gateway& gateway,
                              const PipelineOptions& options) {
    const auto r = gateway.complete(
        {build_content_filter_prompt(article, domain, options), options.content_max_tokens, 0.0, {}, "content"});
    FilterDecision d;
    d.stage = Stage::Content;
    d.verdict = parse_yes_no(r.text);
    d.raw = r.text;
    return d;
}

std::string validate_summary(std::string_view completion) {
    const std::string s(text::trim(completion));
    const std::size_t n = text::utf8_length(s);
    if (n < kMinSummaryChars) {
        throw InvalidSummary("too_short", "summary has " + std::to_string(n) + " characters; at least " +
                                              std::to_string(kMinSummaryChars) + " required");
    }
    if (n > kMaxSummaryChars) {
        throw InvalidSummary("too_long", "summary has " + std::to_string(n) + " characters; at most " +
                                             std::to_string(kMaxSummaryChars) + " allowed");
    }
    std::string prev;
    int run = 0;
    for (auto tok : text::split_whitespace(s)) {
        std::string norm = strip_punct_lower(tok);
        if (norm.empty()) norm = std::string(tok);
        run = norm == prev ? run + 1 : 1;
        if (run > 8) throw InvalidSummary("degeneration", "summary repeats \"" + std::string(tok) + "\" more than 8 times");
        prev = std::move(norm);
    }
    if (s.find_first_of(".!?") == std::string::npos) {
        throw InvalidSummary("no_sentence", "summary has no sentence terminator");
    }
    return s;
}

std::string summarize(const Article& article, const TechDomain& domain, Gateway& gateway,
                      const PipelineOptions& options) {
    const auto r = gateway.complete(
        {build_summary_prompt(article, domain, options), options.summary_max_tokens, 0.0, {}, "summary"});
    return validate_summary(r.text);
}

Categorization categorize(std::string_view title, std::string_view summary, Gateway& gateway,
                          const PipelineOptions& options) {
    Categorization c;
    c.prompt = build_aspect_prompt(title, summary, options.prompts);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto r = gateway.complete({c.prompt, options.aspect_max_tokens, 0.0, {"\n"}, "aspect"});
        c.raw = r.text;
        try {
            c.aspect = parse_aspect(r.text);
            return c;
        } catch (const UnknownAspect&) {
        }
    }
    throw UncategorizableCard("no valid aspect after 2 attempts (last reply \"" + c.raw + "\")");
}

namespace {

enum class Outcome { TitleRejected, ContentRejected, Undetermined, ContentError, SummaryFailed, AspectFailed, Card };

struct ArticleRun {
    Outcome outcome = Outcome::TitleRejected;
    std::optional<ConsequenceCard> card;
    std::string error;
};

ConsequenceCard make_card(const Article& article, const TechDomain& domain, Gateway& gateway,
                          const std::string& content_prompt, const std::string& summary_prompt,
                          const std::string& summary, const Categorization& cat, Timestamp created_at) {
    ConsequenceCard card;
    card.id = card_id_for(article.id, domain.name);
    card.article_id = article.id;
    card.domain = domain.name;
    card.summary = summary;
    card.aspect = cat.aspect;
    card.provenance.provider = gateway.provider_id();
    card.provenance.model = gateway.model_id();
    if (!content_prompt.empty()) card.provenance.prompt_hashes["content"] = text::sha256_hex(content_prompt);
    card.provenance.prompt_hashes["summary"] = text::sha256_hex(summary_prompt);
    card.provenance.prompt_hashes["aspect"] = text::sha256_hex(cat.prompt);
    card.provenance.aspect_raw = cat.raw;
    card.created_at = created_at;
    card.validate();
    return card;
}

Timestamp batch_time(const PipelineOptions& options) {
    if (options.created_at) return *options.created_at;
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

ArticleRun run_one(const Article& article, const TechDomain& domain, TitleClassifier& classifier, Gateway& gateway,
                   const PipelineOptions& options, Timestamp created_at) {
    ArticleRun run;
    const std::string tag = article.id + ": ";
    try {
        if (filter_title(article.title, classifier).verdict != Verdict::Relevant) return run;
    } catch (const Error& e) {
        run.error = tag + "title: " + e.what();
        return run;
    }

    const std::string content_prompt = build_content_filter_prompt(article, domain, options);
    try {
        const auto d = filter_content(article, domain, gateway, options);
        if (d.verdict == Verdict::Irrelevant) {
            run.outcome = Outcome::ContentRejected;
            return run;
        }
        if (d.verdict == Verdict::Undetermined) {
            run.outcome = Outcome::Undetermined;
            run.error = tag + "content verdict undetermined (\"" + d.raw + "\")";
            return run;
        }
    } catch (const Error& e) {
        run.outcome = Outcome::ContentError;
        run.error = tag + "content: " + e.what();
        return run;
    }

    std::string summary;
    try {
        summary = summarize(article, domain, gateway, options);
    } catch (const Error& e) {
        run.outcome = Outcome::SummaryFailed;
        run.error = tag + "summary: " + e.what();
        return run;
    }

    try {
        const auto cat = categorize(article.title, summary, gateway, options);
        run.card = make_card(article, domain, gateway, content_prompt, build_summary_prompt(article, domain, options),
                             summary, cat, created_at);
        run.outcome = Outcome::Card;
    } catch (const Error& e) {
        run.outcome = Outcome::AspectFailed;
        run.error = tag + "aspect: " + e.what();
    }
    return run;
}

FunnelCounts funnel_of(const ArticleRun& run) {
    FunnelCounts c;
    c.retrieved = 1;
    c.after_title_filter = run.outcome != Outcome::TitleRejected;
    c.after_content_filter = run.outcome == Outcome::SummaryFailed || run.outcome == Outcome::AspectFailed ||
                             run.outcome == Outcome::Card;
    c.cards_emitted = run.outcome == Outcome::Card;
    return c;
}

}  // namespace

ConsequenceCard curate_article(const Article& article, const TechDomain& domain, Gateway& gateway,
                               TitleClassifier* classifier, const PipelineOptions& options) {
    if (classifier && filter_title(article.title, *classifier).verdict != Verdict::Relevant) {
        throw PipelineRejected("title", "title classifier judged the article irrelevant to " + domain.name);
    }
    const std::string content_prompt = build_content_filter_prompt(article, domain, options);
    const auto d = filter_content(article, domain, gateway, options);
    if (d.verdict != Verdict::Relevant) {
        throw PipelineRejected("content", "content filter answered \"" + d.raw + "\" for " + domain.name);
    }
    std::string summary;
    try {
        summary = summarize(article, domain, gateway, options);
    } catch (const InvalidSummary& e) {
        throw PipelineRejected("summary", e.what());
    }
    Categorization cat;
    try {
        cat = categorize(article.title, summary, gateway, options);
    } catch (const UncategorizableCard& e) {
        throw PipelineRejected("aspect", e.what());
    }
    return make_card(article, domain, gateway, content_prompt, build_summary_prompt(article, domain, options), summary,
                     cat, batch_time(options));
}

PipelineResult run_pipeline(const std::vector<Article>& articles, const TechDomain& domain,
                            TitleClassifier& classifier, Gateway& gateway, const PipelineOptions& options) {
    options.prompts.validate();
    const Timestamp created_at = batch_time(options);

    std::vector<const Article*> unique;
    std::set<std::string> seen;
    for (const auto& a : articles) {
        if (seen.insert(a.id).second) unique.push_back(&a);
    }

    std::vector<ArticleRun> runs(unique.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < unique.size(); i = next++) {
            runs[i] = run_one(*unique[i], domain, classifier, gateway, options, created_at);
            if (options.on_article_done) options.on_article_done(funnel_of(runs[i]));
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(1, unique.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    PipelineResult result;
    result.report.domain = domain.name;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        const auto& run = runs[i];
        const FunnelCounts c = funnel_of(run);
        result.report.totals += c;
        result.report.source_row(unique[i]->source) += c;
        switch (run.outcome) {
            case Outcome::Undetermined: ++result.report.content_undetermined; break;
            case Outcome::ContentError: ++result.report.content_errors; break;
            case Outcome::SummaryFailed: ++result.report.summary_failures; break;
            case Outcome::AspectFailed: ++result.report.aspect_failures; break;
            default: break;
        }
        if (!run.error.empty()) result.report.errors.push_back(run.error);
        if (run.card) result.cards.push_back(*run.card);
    }
    std::sort(result.cards.begin(), result.cards.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(result.report.errors.begin(), result.report.errors.end());
    return result;
}

std::string cards_to_jsonl(std::vector<ConsequenceCard> cards) {
    std::sort(cards.begin(), cards.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::string out;
    for (const auto& c : cards) {
        out += canonical_card_json(c);
        out += '\n';
    }
    return out;
}

std::vector<ConsequenceCard> cards_from_jsonl(std::string_view jsonl) {
    std::vector<ConsequenceCard> cards;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        const auto line = text::trim(jsonl.substr(start, end - start));
        if (!line.empty()) cards.push_back(parse_card_json(line));
        start = end + 1;
    }
    return cards;
}

}  // namespace catalog
