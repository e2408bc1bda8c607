#include "catalog/types.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

#include <algorithm>
#include <cmath>

namespace catalog {

void TechDomain::validate() const {
    if (text::trim(name).empty()) throw InvalidValue("domain name is empty");
    if (keywords.empty()) throw InvalidValue("domain '" + name + "' has no keywords");
    for (const auto& k : keywords) {
        if (text::trim(k).empty()) throw InvalidValue("domain '" + name + "' has a blank keyword");
    }
}

std::string article_id_for(std::string_view canonical_url) {
    return "a_" + text::sha256_hex(canonical_url).substr(0, 16);
}

std::string card_id_for(std::string_view article_id, std::string_view domain) {
    std::string key(article_id);
    key.push_back('\x1f');
    key += text::to_lower(text::trim(domain));
    return "c_" + text::sha256_hex(key).substr(0, 16);
}

std::string_view to_string(Stage s) noexcept { return s == Stage::Title ? "title" : "content"; }

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Relevant: return "relevant";
        case Verdict::Irrelevant: return "irrelevant";
        case Verdict::Undetermined: return "undetermined";
    }
    return "undetermined";
}

Stage parse_stage(std::string_view s) {
    if (s == "title") return Stage::Title;
    if (s == "content") return Stage::Content;
    throw InvalidValue("unknown stage: " + std::string(s));
}

Verdict parse_verdict(std::string_view s) {
    if (s == "relevant") return Verdict::Relevant;
    if (s == "irrelevant") return Verdict::Irrelevant;
    if (s == "undetermined") return Verdict::Undetermined;
    throw InvalidValue("unknown verdict: " + std::string(s));
}

void FilterDecision::validate() const {
    if (score && !(std::isfinite(*score) && *score >= 0.0 && *score <= 1.0)) {
        throw InvalidValue("filter score outside [0,1]");
    }
    if (stage == Stage::Content && raw.empty()) {
        throw InvalidValue("content decision without raw model output");
    }
}

void ConsequenceCard::validate() const {
    if (id.empty() || article_id.empty()) throw InvalidValue("card is missing an identifier");
    if (text::trim(domain).empty()) throw InvalidValue("card has no domain");
    const auto chars = text::utf8_length(summary);
    if (chars < kMinSummaryChars || chars > kMaxSummaryChars) {
        throw InvalidValue("summary length " + std::to_string(chars) +
                           " outside [30, 1500]");
    }
    if (static_cast<std::size_t>(aspect) >= kAspectCount) throw InvalidValue("aspect out of range");
}

FunnelCounts& FunnelCounts::operator+=(const FunnelCounts& o) {
    retrieved += o.retrieved;
    after_title_filter += o.after_title_filter;
    after_content_filter += o.after_content_filter;
    cards_emitted += o.cards_emitted;
    return *this;
}

bool FunnelCounts::monotone() const noexcept {
    return retrieved >= after_title_filter && after_title_filter >= after_content_filter &&
           after_content_filter >= cards_emitted;
}

int percent_of(std::size_t part, std::size_t whole) noexcept {
    if (whole == 0) return 0;
    // round half up in exact integer arithmetic: floor((200 p + w) / 2w)
    return static_cast<int>((200 * static_cast<unsigned long long>(part) + whole) / (2 * whole));
}

FunnelCounts& PipelineReport::source_row(const std::string& source) {
    auto it = std::lower_bound(per_source.begin(), per_source.end(), source,
                               [](const SourceFunnel& row, const std::string& s) { return row.source < s; });
    if (it == per_source.end() || it->source != source) {
        it = per_source.insert(it, SourceFunnel{source, {}});
    }
    return it->counts;
}

void PipelineReport::merge(const PipelineReport& other) {
    totals += other.totals;
    for (const auto& row : other.per_source) source_row(row.source) += row.counts;
    content_undetermined += other.content_undetermined;
    content_errors += other.content_errors;
    summary_failures += other.summary_failures;
    aspect_failures += other.aspect_failures;
    errors.insert(errors.end(), other.errors.begin(), other.errors.end());
}

}  // namespace catalog
