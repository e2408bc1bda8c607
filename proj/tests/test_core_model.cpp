#include <doctest.h>

#include "catalog/aspect.hpp"
#include "catalog/error.hpp"
#include "catalog/serialize.hpp"
#include "catalog/types.hpp"

#include <random>
#include <set>

using namespace catalog;

namespace {

ConsequenceCard sample_card() {
    ConsequenceCard c;
    c.article_id = article_id_for("https://www.technologyreview.com/2021/08/17/colorism");
    c.domain = "social media";
    c.id = card_id_for(c.article_id, c.domain);
    c.summary = "It can lead to the reinforcement of colorism. Filters lighten skin tones.";
    c.aspect = Aspect::EqualityJustice;
    c.provenance.provider = "mock";
    c.provenance.model = "mock-1";
    c.provenance.prompt_hashes = {{"summary", "ab"}, {"content", "cd"}, {"aspect", "ef"}};
    c.provenance.aspect_raw = "Equality & Justice";
    c.created_at = parse_timestamp("2023-08-15T00:00:00Z");
    return c;
}

}  // namespace

TEST_CASE("parse_aspect examples") {
    CHECK(parse_aspect("Economy") == Aspect::Economy);
    CHECK(parse_aspect("security & privacy ") == Aspect::SecurityPrivacy);
    CHECK_THROWS_AS(parse_aspect("Happiness"), UnknownAspect);
}

TEST_CASE("parse_aspect normalization") {
    CHECK(parse_aspect("  SECURITY   AND privacy") == Aspect::SecurityPrivacy);
    CHECK(parse_aspect("Health and Well-being") == Aspect::HealthWellBeing);
    CHECK(parse_aspect("Social Norms &Relationships") == Aspect::SocialNormsRelationships);
    CHECK(parse_aspect("Economy.") == Aspect::Economy);
    CHECK_THROWS_AS(parse_aspect(""), UnknownAspect);
    CHECK_THROWS_AS(parse_aspect("Security"), UnknownAspect);
    CHECK_THROWS_AS(parse_aspect("Culture"), UnknownAspect);
}

TEST_CASE("aspect taxonomy has ten members that round-trip") {
    CHECK(kAllAspects.size() == 10);
    std::set<std::string_view> names;
    std::set<std::string_view> colors;
    for (Aspect a : kAllAspects) {
        CHECK(parse_aspect(canonical_name(a)) == a);
        names.insert(canonical_name(a));
        colors.insert(aspect_color(a));
    }
    CHECK(names.size() == 10);
    CHECK(colors.size() == 10);
    CHECK(canonical_name(Aspect::UserExperienceEntertainment) == "User Experience & Entertainment");
}

TEST_CASE("canonical_card_json is deterministic and key-sorted") {
    const auto card = sample_card();
    const auto a = canonical_card_json(card);
    const auto b = canonical_card_json(card);
    CHECK(a == b);
    CHECK(a.find("\": ") == std::string::npos);
    CHECK(a.find(", \"") == std::string::npos);
    CHECK(a.find('\n') == std::string::npos);
    // keys in byte order: article_id < aspect < created_at < domain < id < provenance < summary
    auto pos = [&](const char* k) { return a.find(std::string("\"") + k + "\":"); };
    CHECK(pos("article_id") < pos("aspect"));
    CHECK(pos("aspect") < pos("created_at"));
    CHECK(pos("created_at") < pos("domain"));
    CHECK(pos("domain") < pos("id"));
    CHECK(pos("id") < pos("provenance"));
    CHECK(pos("provenance") < pos("summary"));

    auto other = card;
    other.summary += " More.";
    CHECK(canonical_card_json(other) != a);
    CHECK(parse_card_json(a) == card);
}

TEST_CASE("card serialization round-trips arbitrary cards") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> alphabet = {"a", "b", " ", "X", "&", "\"", "\\", "\n", "\t",
                                               "\xc3\xa9", "\xe2\x80\x94", "\xf0\x9f\x98\x80"};
    for (int i = 0; i < 200; ++i) {
        auto card = sample_card();
        card.summary.clear();
        std::size_t len = 30 + rng() % 200;
        while (card.summary.size() < len) card.summary += alphabet[rng() % alphabet.size()];
        card.aspect = kAllAspects[rng() % kAspectCount];
        card.created_at = Timestamp{std::chrono::seconds{static_cast<long>(rng() % 2'000'000'000)}};
        card.domain = "d" + std::to_string(rng() % 5);
        const auto bytes = canonical_card_json(card);
        CHECK(parse_card_json(bytes) == card);
        CHECK(canonical_card_json(parse_card_json(bytes)) == bytes);
    }
}

TEST_CASE("other domain types round-trip") {
    Article a;
    a.canonical_url = "https://a.com/x";
    a.id = article_id_for(a.canonical_url);
    a.source = "WIRED";
    a.title = "T";
    a.body = "one two three";
    a.word_count = 3;
    a.fetched_at = parse_timestamp("2024-01-02T03:04:05Z");
    CHECK(Json(a).get<Article>() == a);
    a.published_at = parse_date_prefix("2022-02-28T10:00:00+00:00");
    REQUIRE(a.published_at);
    CHECK(Json(a).get<Article>() == a);

    TechDomain d{"virtual reality", {"virtual reality", "metaverse"}, false};
    CHECK(Json(d).get<TechDomain>() == d);

    FilterDecision f{Stage::Content, Verdict::Relevant, std::nullopt, "Yes"};
    CHECK(Json(f).get<FilterDecision>() == f);
    f.score = 0.25;
    CHECK(Json(f).get<FilterDecision>() == f);

    PipelineReport r;
    r.domain = "social media";
    r.totals = {12, 7, 4, 4};
    r.source_row("WIRED") = {5, 3, 2, 2};
    r.source_row("MIT Technology Review") = {7, 4, 2, 2};
    r.errors.push_back("x");
    CHECK(r.per_source.front().source == "MIT Technology Review");
    CHECK(Json(r).get<PipelineReport>() == r);
    CHECK(Json(r)["pct_title"] == 58);
}

TEST_CASE("domain and decision invariants") {
    CHECK_NOTHROW((TechDomain{"social media", {"social media"}}.validate()));
    CHECK_THROWS_AS((TechDomain{"", {"x"}}.validate()), InvalidValue);
    CHECK_THROWS_AS((TechDomain{"x", {}}.validate()), InvalidValue);
    CHECK_THROWS_AS((TechDomain{"x", {"ok", "  "}}.validate()), InvalidValue);

    CHECK_THROWS_AS((FilterDecision{Stage::Title, Verdict::Relevant, 1.5, ""}.validate()), InvalidValue);
    CHECK_THROWS_AS((FilterDecision{Stage::Content, Verdict::Relevant, std::nullopt, ""}.validate()),
                    InvalidValue);
    CHECK_NOTHROW((FilterDecision{Stage::Title, Verdict::Irrelevant, 0.0, ""}.validate()));

    auto card = sample_card();
    CHECK_NOTHROW(card.validate());
    card.summary = "too short";
    CHECK_THROWS_AS(card.validate(), InvalidValue);
    card.summary = std::string(1501, 'x');
    CHECK_THROWS_AS(card.validate(), InvalidValue);
    card.summary = std::string(1500, 'x');
    CHECK_NOTHROW(card.validate());
}

TEST_CASE("identifiers are stable and case-insensitive in the domain") {
    auto a = article_id_for("https://a.com/x");
    CHECK(a == article_id_for("https://a.com/x"));
    CHECK(a != article_id_for("https://a.com/y"));
    CHECK(card_id_for(a, "Social Media") == card_id_for(a, "social media"));
    CHECK(card_id_for(a, "social media") != card_id_for(a, "virtual reality"));
}

TEST_CASE("percent_of rounds half up") {
    CHECK(percent_of(26628, 42405) == 63);
    CHECK(percent_of(2616, 42405) == 6);
    CHECK(percent_of(1, 2) == 50);
    CHECK(percent_of(1, 200) == 1);   // 0.5 -> 1
    CHECK(percent_of(1, 201) == 0);   // 0.497 -> 0
    CHECK(percent_of(5, 0) == 0);
    CHECK(percent_of(7, 7) == 100);
}

TEST_CASE("funnel monotonicity check") {
    CHECK(FunnelCounts{12, 7, 4, 4}.monotone());
    CHECK_FALSE(FunnelCounts{12, 7, 8, 4}.monotone());
    CHECK_FALSE(FunnelCounts{3, 4, 0, 0}.monotone());
}

TEST_CASE("timestamps") {
    auto t = parse_timestamp("2023-08-15T12:34:56Z");
    CHECK(format_timestamp(t) == "2023-08-15T12:34:56Z");
    CHECK_THROWS_AS(parse_timestamp("2023-08-15"), InvalidValue);
    CHECK_FALSE(parse_date_prefix("2023-02-30"));
    CHECK(format_date(*parse_date_prefix("2019-01-09")) == "2019-01-09");
}
