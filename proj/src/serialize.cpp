#include "catalog/serialize.hpp"

#include "catalog/error.hpp"

namespace catalog {

void to_json(Json& j, const TechDomain& d) {
    j = Json{{"name", d.name}, {"keywords", d.keywords}, {"approved", d.approved}};
}

void from_json(const Json& j, TechDomain& d) {
    j.at("name").get_to(d.name);
    j.at("keywords").get_to(d.keywords);
    d.approved = j.value("approved", true);
}

void to_json(Json& j, const Article& a) {
    j = Json{{"id", a.id},
             {"canonical_url", a.canonical_url},
             {"source", a.source},
             {"title", a.title},
             {"body", a.body},
             {"published_at", a.published_at ? Json(format_date(*a.published_at)) : Json(nullptr)},
             {"fetched_at", format_timestamp(a.fetched_at)},
             {"word_count", a.word_count}};
}

void from_json(const Json& j, Article& a) {
    j.at("id").get_to(a.id);
    j.at("canonical_url").get_to(a.canonical_url);
    j.at("source").get_to(a.source);
    j.at("title").get_to(a.title);
    j.at("body").get_to(a.body);
    a.published_at.reset();
    if (auto it = j.find("published_at"); it != j.end() && !it->is_null()) {
        a.published_at = parse_date_prefix(it->get<std::string>());
    }
    a.fetched_at = parse_timestamp(j.at("fetched_at").get<std::string>());
    j.at("word_count").get_to(a.word_count);
}

void to_json(Json& j, const FilterDecision& d) {
    j = Json{{"stage", to_string(d.stage)},
             {"verdict", to_string(d.verdict)},
             {"score", d.score ? Json(*d.score) : Json(nullptr)},
             {"raw", d.raw}};
}

void from_json(const Json& j, FilterDecision& d) {
    d.stage = parse_stage(j.at("stage").get<std::string>());
    d.verdict = parse_verdict(j.at("verdict").get<std::string>());
    d.score.reset();
    if (auto it = j.find("score"); it != j.end() && !it->is_null()) d.score = it->get<double>();
    d.raw = j.value("raw", "");
}

void to_json(Json& j, const Provenance& p) {
    j = Json{{"provider", p.provider},
             {"model", p.model},
             {"prompt_hashes", p.prompt_hashes},
             {"aspect_raw", p.aspect_raw}};
}

void from_json(const Json& j, Provenance& p) {
    j.at("provider").get_to(p.provider);
    j.at("model").get_to(p.model);
    p.prompt_hashes = j.value("prompt_hashes", std::map<std::string, std::string>{});
    p.aspect_raw = j.value("aspect_raw", "");
}

void to_json(Json& j, const ConsequenceCard& c) {
    j = Json{{"id", c.id},
             {"article_id", c.article_id},
             {"domain", c.domain},
             {"summary", c.summary},
             {"aspect", std::string(canonical_name(c.aspect))},
             {"provenance", c.provenance},
             {"created_at", format_timestamp(c.created_at)}};
}

void from_json(const Json& j, ConsequenceCard& c) {
    j.at("id").get_to(c.id);
    j.at("article_id").get_to(c.article_id);
    j.at("domain").get_to(c.domain);
    j.at("summary").get_to(c.summary);
    c.aspect = parse_aspect(j.at("aspect").get<std::string>());
    j.at("provenance").get_to(c.provenance);
    c.created_at = parse_timestamp(j.at("created_at").get<std::string>());
}

void to_json(Json& j, const FunnelCounts& c) {
    j = Json{{"retrieved", c.retrieved},
             {"after_title_filter", c.after_title_filter},
             {"after_content_filter", c.after_content_filter},
             {"cards_emitted", c.cards_emitted},
             {"pct_title", percent_of(c.after_title_filter, c.retrieved)},
             {"pct_content", percent_of(c.after_content_filter, c.retrieved)}};
}

void from_json(const Json& j, FunnelCounts& c) {
    j.at("retrieved").get_to(c.retrieved);
    j.at("after_title_filter").get_to(c.after_title_filter);
    j.at("after_content_filter").get_to(c.after_content_filter);
    j.at("cards_emitted").get_to(c.cards_emitted);
}

void to_json(Json& j, const PipelineReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.per_source) {
        Json item = row.counts;
        item["source"] = row.source;
        rows.push_back(std::move(item));
    }
    j = r.totals;
    j["domain"] = r.domain;
    j["per_source"] = std::move(rows);
    j["content_undetermined"] = r.content_undetermined;
    j["content_errors"] = r.content_errors;
    j["summary_failures"] = r.summary_failures;
    j["aspect_failures"] = r.aspect_failures;
    j["errors"] = r.errors;
}

void from_json(const Json& j, PipelineReport& r) {
    j.at("domain").get_to(r.domain);
    j.get_to(r.totals);
    r.per_source.clear();
    for (const auto& row : j.at("per_source")) {
        r.per_source.push_back(SourceFunnel{row.at("source").get<std::string>(), row.get<FunnelCounts>()});
    }
    r.content_undetermined = j.value("content_undetermined", std::size_t{0});
    r.content_errors = j.value("content_errors", std::size_t{0});
    r.summary_failures = j.value("summary_failures", std::size_t{0});
    r.aspect_failures = j.value("aspect_failures", std::size_t{0});
    r.errors = j.value("errors", std::vector<std::string>{});
}

std::string canonical_json(const Json& j) {
    // nlohmann::json objects are std::map-backed, so keys are already sorted.
    return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::string canonical_card_json(const ConsequenceCard& card) { return canonical_json(Json(card)); }

ConsequenceCard parse_card_json(std::string_view bytes) {
    try {
        return Json::parse(bytes).get<ConsequenceCard>();
    } catch (const Json::exception& e) {
        throw InvalidValue(std::string("malformed card record: ") + e.what());
    }
}

}  // namespace catalog
