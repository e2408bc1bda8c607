#pragma once

#include "catalog/gateway.hpp"
#include "catalog/title_classifier.hpp"
#include "catalog/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catalog {

// Instruction text for the three model stages. Placeholders: <domain> in the
// first two, <title> and <summary> in the aspect template.
struct StagePromptSet {
    std::string content_filter_template;
    std::string summary_template;
    std::string aspect_template;

    static StagePromptSet defaults();

    // Throws InvalidValue when a template lacks its placeholders or the
    // required endings ("Answer Yes or No." / "being discussed here is").
    void validate() const;
    bool operator==(const StagePromptSet&) const = default;
};

void to_json(Json& j, const StagePromptSet& p);
void from_json(const Json& j, StagePromptSet& p);

struct PipelineOptions {
    StagePromptSet prompts = StagePromptSet::defaults();
    std::size_t body_char_budget = 12'000;
    std::size_t parallelism = 4;
    int content_max_tokens = 3;
    int summary_max_tokens = 256;
    int aspect_max_tokens = 8;
    std::optional<Timestamp> created_at;  // batch timestamp; now() when unset
    // Called from worker threads with each finished article's funnel row.
    std::function<void(const FunnelCounts&)> on_article_done;
};

// Head of `body` no longer than `budget` bytes, cut at the last whitespace
// that fits (or at a code-point boundary when a single word is longer).
std::string truncate_body(std::string_view body, std::size_t budget);

std::string fill_domain(std::string_view tmpl, std::string_view domain);
std::string build_content_filter_prompt(const Article& article, const TechDomain& domain,
                                        const PipelineOptions& options = {});
std::string build_summary_prompt(const Article& article, const TechDomain& domain,
                                 const PipelineOptions& options = {});
std::string build_aspect_prompt(std::string_view title, std::string_view summary,
                                const StagePromptSet& prompts = StagePromptSet::defaults());

// Throws EmptyTitle for a blank title.
FilterDecision filter_title(std::string_view title, TitleClassifier& classifier);

// Leading token, punctuation stripped, case-insensitive: yes / no / anything else.
Verdict parse_yes_no(std::string_view completion);

FilterDecision filter_content(const Article& article, const TechDomain& domain, Gateway& gateway,
                              const PipelineOptions& options = {});

// Trimmed summary, or InvalidSummary with rule "too_short", "too_long",
// "degeneration" (a token repeated more than 8 times in a row) or
// "no_sentence" (no '.', '!' or '?').
std::string validate_summary(std::string_view completion);

std::string summarize(const Article& article, const TechDomain& domain, Gateway& gateway,
                      const PipelineOptions& options = {});

struct Categorization {
    Aspect aspect = Aspect::Economy;
    std::string raw;
    std::string prompt;
};

// Retries once when the reply is not one of the ten aspects; throws
// UncategorizableCard when the second reply fails too.
Categorization categorize(std::string_view title, std::string_view summary, Gateway& gateway,
                          const PipelineOptions& options = {});

// Runs one article through every stage and returns its card. With a null
// classifier the title stage is skipped (user-submitted articles). Throws
// PipelineRejected naming the stage ("title", "content", "summary",
// "aspect") that turned the article down; gateway errors propagate.
ConsequenceCard curate_article(const Article& article, const TechDomain& domain, Gateway& gateway,
                               TitleClassifier* classifier, const PipelineOptions& options = {});

struct PipelineResult {
    std::vector<ConsequenceCard> cards;  // sorted by id
    PipelineReport report;
};

// Batch run with per-article failure isolation. Articles are processed by up
// to `options.parallelism` workers; the outcome does not depend on it.
// Duplicate article ids in the input are processed once.
PipelineResult run_pipeline(const std::vector<Article>& articles, const TechDomain& domain,
                            TitleClassifier& classifier, Gateway& gateway, const PipelineOptions& options = {});

// One canonical card per line, sorted by card id.
std::string cards_to_jsonl(std::vector<ConsequenceCard> cards);
std::vector<ConsequenceCard> cards_from_jsonl(std::string_view jsonl);

}  // namespace catalog
