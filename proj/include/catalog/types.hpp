#pragma once

#include "catalog/aspect.hpp"
#include "catalog/clock.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace catalog {

// A technology area and the search phrases used to retrieve its articles.
struct TechDomain {
    std::string name;
    std::vector<std::string> keywords;
    bool approved = true;

    // Throws InvalidValue on an empty name, no keywords, or a blank keyword.
    void validate() const;
    bool operator==(const TechDomain&) const = default;
};

struct Article {
    std::string id;
    std::string canonical_url;
    std::string source;
    std::string title;
    std::string body;
    std::optional<Date> published_at;
    Timestamp fetched_at{};
    std::size_t word_count = 0;

    bool operator==(const Article&) const = default;
};

// Identifiers are derived from content so that repeated runs agree.
std::string article_id_for(std::string_view canonical_url);
std::string card_id_for(std::string_view article_id, std::string_view domain);

enum class Stage { Title, Content };
enum class Verdict { Relevant, Irrelevant, Undetermined };

std::string_view to_string(Stage s) noexcept;
std::string_view to_string(Verdict v) noexcept;
Stage parse_stage(std::string_view s);
Verdict parse_verdict(std::string_view s);

struct FilterDecision {
    Stage stage = Stage::Title;
    Verdict verdict = Verdict::Undetermined;
    std::optional<double> score;
    std::string raw;

    void validate() const;
    bool operator==(const FilterDecision&) const = default;
};

// Which model produced a card, plus a hash of each stage's prompt so a card
// can be traced back to the exact text that was sent. `aspect_raw` keeps the
// unparsed categorization output.
struct Provenance {
    std::string provider;
    std::string model;
    std::map<std::string, std::string> prompt_hashes;  // stage -> sha256 hex
    std::string aspect_raw;

    bool operator==(const Provenance&) const = default;
};

inline constexpr std::size_t kMinSummaryChars = 30;
inline constexpr std::size_t kMaxSummaryChars = 1500;

struct ConsequenceCard {
    std::string id;
    std::string article_id;
    std::string domain;
    std::string summary;
    Aspect aspect = Aspect::Economy;
    Provenance provenance;
    Timestamp created_at{};

    void validate() const;
    bool operator==(const ConsequenceCard&) const = default;
};

struct FunnelCounts {
    std::size_t retrieved = 0;
    std::size_t after_title_filter = 0;
    std::size_t after_content_filter = 0;
    std::size_t cards_emitted = 0;

    FunnelCounts& operator+=(const FunnelCounts& o);
    bool monotone() const noexcept;
    bool operator==(const FunnelCounts&) const = default;
};

struct SourceFunnel {
    std::string source;
    FunnelCounts counts;
    bool operator==(const SourceFunnel&) const = default;
};

// Integer percentage of part/whole, rounded half up; 0 when whole is 0.
int percent_of(std::size_t part, std::size_t whole) noexcept;

// Per-stage funnel for one run. Percentages are always relative to the
// retrieved count. The failure counters record articles that dropped out for
// reasons other than a negative verdict.
struct PipelineReport {
    std::string domain;
    FunnelCounts totals;
    std::vector<SourceFunnel> per_source;  // sorted by source name
    std::size_t content_undetermined = 0;
    std::size_t content_errors = 0;
    std::size_t summary_failures = 0;
    std::size_t aspect_failures = 0;
    std::vector<std::string> errors;

    int pct_title() const noexcept { return percent_of(totals.after_title_filter, totals.retrieved); }
    int pct_content() const noexcept {
        return percent_of(totals.after_content_filter, totals.retrieved);
    }
    FunnelCounts& source_row(const std::string& source);
    // Adds another run's counts (per-source rows are merged by name).
    void merge(const PipelineReport& other);

    bool operator==(const PipelineReport&) const = default;
};

}  // namespace catalog
