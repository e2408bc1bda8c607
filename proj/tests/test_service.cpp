#include <doctest.h>

#include "service_harness.hpp"

#include "catalog/config.hpp"
#include "catalog/pipeline.hpp"
#include "catalog/text.hpp"

#include <cstdlib>
#include <random>
#include <set>

using namespace catalog;
using testsupport::body_of;
using testsupport::is_api_error;
using testsupport::ServiceHarness;

namespace {

// Two domains, every aspect, three cards per aspect.
void seed_cards(Store& store) {
    store.upsert_domain({"social media", {"social media"}, true});
    store.upsert_domain({"voice assistants", {"voice assistant"}, true});
    int n = 0;
    for (Aspect aspect : kAllAspects) {
        for (int i = 0; i < 3; ++i, ++n) {
            Article a;
            a.canonical_url = "https://news.example.com/story-" + std::to_string(n);
            a.id = article_id_for(a.canonical_url);
            a.source = "Example News";
            a.title = "Story " + std::to_string(n);
            a.body = "body";
            store.put_article(a);
            ConsequenceCard c;
            c.article_id = a.id;
            c.domain = n % 2 ? "voice assistants" : "social media";
            c.id = card_id_for(a.id, c.domain);
            c.summary = "Consequence number " + std::to_string(n) + " concerns " + std::string(canonical_name(aspect)) +
                        " for ordinary people.";
            c.aspect = aspect;
            c.created_at = parse_timestamp("2023-07-01T00:00:00Z") + std::chrono::hours{n};
            store.upsert_card(c);
        }
    }
}

std::vector<std::string> card_ids(const Json& cards) {
    std::vector<std::string> out;
    for (const auto& c : cards) out.push_back(c.at("id").get<std::string>());
    return out;
}

Json wait_for_job(ServiceHarness& h, const std::string& id) {
    for (int i = 0; i < 2000; ++i) {
        auto r = h.client.Get("/admin/jobs/" + id, h.headers("", true));
        REQUIRE(r);
        auto j = body_of(r);
        const auto state = j.at("state").get<std::string>();
        if (state != "queued" && state != "running") return j;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL("job did not finish");
    return {};
}

}  // namespace

TEST_CASE("update scheduler cadence") {
    FakeClock clock(parse_timestamp("2023-07-01T00:00:00Z"));
    int runs = 0;
    UpdateScheduler s(clock, std::chrono::days{7}, [&] { ++runs; });
    CHECK_FALSE(s.tick());
    clock.advance(std::chrono::days{6});
    CHECK_FALSE(s.tick());
    clock.advance(std::chrono::days{1});
    CHECK(s.tick());
    CHECK_FALSE(s.tick());
    CHECK(runs == 1);

    // 13 days later: one catch-up run, not two
    clock.advance(std::chrono::days{13});
    CHECK(s.tick());
    CHECK_FALSE(s.tick());
    CHECK(runs == 2);
    CHECK(s.next_due() == clock.now() + std::chrono::days{7});
}

TEST_CASE("update scheduler survives a failing run") {
    FakeClock clock;
    int attempts = 0;
    UpdateScheduler s(clock, std::chrono::days{7}, [&] {
        ++attempts;
        if (attempts == 1) throw FetchError("source down");
    });
    clock.advance(std::chrono::days{7});
    CHECK(s.tick());
    clock.advance(std::chrono::days{7});
    CHECK(s.tick());
    CHECK(attempts == 2);
    CHECK(s.runs() == 2);
}

TEST_CASE("update scheduler background loop") {
    FakeClock clock;
    std::atomic<int> runs{0};
    UpdateScheduler s(clock, std::chrono::days{7}, [&] { ++runs; });
    s.start(std::chrono::milliseconds(5));
    clock.advance(std::chrono::days{8});
    for (int i = 0; i < 400 && runs == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    s.stop();
    CHECK(runs == 1);
}

TEST_CASE("weekly update publishes new articles and records source failures") {
    ServiceHarness h;
    h.clock.set(parse_timestamp("2023-06-05T00:00:00Z"));
    h.store.upsert_domain({"social media", {"social media"}, true});
    h.store.upsert_domain({"drones", {"drones"}, false});  // not approved: never polled

    const auto entries = testsupport::corpus_entries();
    std::vector<std::string> mit;
    for (const auto& e : entries) {
        if (e.source == "MIT Technology Review") mit.push_back(e.url);
    }
    std::map<std::string, std::vector<std::string>> results;
    for (const auto& s : h.config.sources) {
        if (s.name == "MIT Technology Review") {
            h.fetcher.set(s.search_url("social media"), testsupport::results_page(mit));
        } else if (s.name == "WIRED") {
            h.fetcher.set(s.search_url("social media"), "oops", 500);
        } else {
            h.fetcher.set(s.search_url("social media"), testsupport::results_page({}));
        }
    }

    const auto outcome = run_weekly_update(h.services);
    CHECK(outcome.report.totals.retrieved >= 1);
    CHECK(outcome.report.totals.retrieved <= mit.size());
    CHECK(outcome.cards_published == h.store.card_count());
    CHECK(outcome.cards_published >= 1);
    bool wired_error = false;
    for (const auto& e : outcome.report.errors) wired_error |= e.rfind("WIRED: ", 0) == 0;
    CHECK(wired_error);
    const auto reports = h.store.list_reports();
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].kind == "weekly");
    CHECK(reports[0].created_at == parse_timestamp("2023-06-05T00:00:00Z"));

    // second run finds nothing new; the service is still healthy
    const auto again = run_weekly_update(h.services);
    CHECK(again.report.totals.retrieved == 0);
    CHECK(h.store.list_reports().size() == 2);
    auto health = h.client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
}

TEST_CASE("meta and health endpoints") {
    ServiceHarness h;
    auto r = h.client.Get("/meta/aspects");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto aspects = body_of(r).at("aspects");
    REQUIRE(aspects.size() == 10);
    std::set<std::string> colors;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(aspects[i].at("name") == std::string(canonical_name(kAllAspects[i])));
        colors.insert(aspects[i].at("color").get<std::string>());
    }
    CHECK(colors.size() == 10);

    auto missing = h.client.Get("/nope");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(is_api_error(missing));
}

TEST_CASE("client tokens are issued on first contact and honored afterwards") {
    ServiceHarness h;
    auto first = h.client.Get("/cards");
    REQUIRE(first);
    const auto token = first->get_header_value(kClientTokenHeader);
    CHECK(is_client_token(token));
    auto second = h.client.Get("/cards", h.headers(token));
    REQUIRE(second);
    CHECK(second->get_header_value(kClientTokenHeader) == token);
    auto bogus = h.client.Get("/cards", h.headers("not-a-token"));
    REQUIRE(bogus);
    CHECK(bogus->get_header_value(kClientTokenHeader) != "not-a-token");
    CHECK(is_client_token(bogus->get_header_value(kClientTokenHeader)));
}

TEST_CASE("GET /cards") {
    ServiceHarness h;
    seed_cards(h.store);
    const std::string token = new_client_token();

    auto r = h.client.Get("/cards?aspects=Economy&domains=voice%20assistants", h.headers(token));
    REQUIRE(r);
    CHECK(r->status == 200);
    auto j = body_of(r);
    CHECK(j.at("total").get<std::size_t>() == j.at("cards").size());
    CHECK(j.at("cards").size() >= 1);
    for (const auto& c : j.at("cards")) {
        CHECK(c.at("aspect") == "Economy");
        CHECK(c.at("domain") == "voice assistants");
        CHECK(c.at("aspect_color") == std::string(aspect_color(Aspect::Economy)));
        CHECK(c.at("article").at("title").get<std::string>().rfind("Story ", 0) == 0);
    }

    auto s1 = h.client.Get("/cards?order=shuffled&seed=7&limit=10", h.headers(token));
    auto s2 = h.client.Get("/cards?order=shuffled&seed=7&limit=10", h.headers(token));
    REQUIRE((s1 && s2));
    CHECK(card_ids(body_of(s1).at("cards")) == card_ids(body_of(s2).at("cards")));
    CHECK(body_of(s1).at("total") == 30);

    // pages of 10 cover everything once
    std::set<std::string> seen;
    for (int offset = 0; offset < 30; offset += 10) {
        auto p = h.client.Get("/cards?seed=3&limit=10&offset=" + std::to_string(offset), h.headers(token));
        REQUIRE(p);
        for (const auto& id : card_ids(body_of(p).at("cards"))) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 30);

    auto q = h.client.Get("/cards?q=SECURITY", h.headers(token));
    REQUIRE(q);
    CHECK(body_of(q).at("total") == 3);

    auto newest = h.client.Get("/cards?order=newest&limit=3", h.headers(token));
    REQUIRE(newest);
    const auto nc = body_of(newest).at("cards");
    REQUIRE(nc.size() == 3);
    CHECK(nc[0].at("created_at").get<std::string>() >= nc[1].at("created_at").get<std::string>());

    auto too_big = h.client.Get("/cards?limit=500", h.headers(token));
    REQUIRE(too_big);
    CHECK(too_big->status == 400);
    CHECK(body_of(too_big).at("code") == "limit_exceeded");
    CHECK(is_api_error(too_big));

    for (const char* bad : {"/cards?order=sideways", "/cards?aspects=Weather", "/cards?seed=-1", "/cards?limit=0",
                            "/cards?offset=x"}) {
        auto e = h.client.Get(bad, h.headers(token));
        REQUIRE(e);
        CHECK(e->status == 400);
        CHECK(is_api_error(e));
    }
}

TEST_CASE("GET /cards/search") {
    ServiceHarness h;
    seed_cards(h.store);
    const auto target = h.store.list_cards({}, CardOrder::Newest, 0, 5, 1).cards.at(0);
    auto r = h.client.Get("/cards/search?k=5&q=" + text::url_encode(target.summary));
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto results = body_of(r).at("results");
    REQUIRE(results.size() == 5);
    CHECK(results[0].at("card").at("id") == target.id);
    for (const auto& hit : results) {
        const double score = hit.at("score").get<double>();
        CHECK((score >= -1.0 && score <= 1.0 + 1e-12));
    }
    // same ranking as the store, which is checked against a brute-force oracle elsewhere
    const auto direct = h.store.semantic_search(target.summary, 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(results[i].at("card").at("id") == direct[i].card.id);

    auto filtered = h.client.Get("/cards/search?k=50&domains=voice%20assistants&q=consequence");
    REQUIRE(filtered);
    CHECK(body_of(filtered).at("results").size() == 15);

    auto missing_q = h.client.Get("/cards/search");
    REQUIRE(missing_q);
    CHECK(missing_q->status == 400);

    h.provider->down = true;
    auto down = h.client.Get("/cards/search?q=anything");
    REQUIRE(down);
    CHECK(down->status == 503);
    CHECK(body_of(down).at("code") == "provider_unavailable");
}

TEST_CASE("bookmarks and dismissals over HTTP") {
    ServiceHarness h;
    seed_cards(h.store);
    const std::string x = new_client_token();
    const std::string y = new_client_token();
    const auto ids = card_ids(body_of(h.client.Get("/cards?order=newest&limit=3", h.headers(x))).at("cards"));
    const auto& A = ids[0];
    const auto& B = ids[1];

    CHECK(h.client.Post("/bookmarks/" + A, h.headers(x), "", "application/json")->status == 200);
    CHECK(h.client.Post("/bookmarks/" + B, h.headers(x), "", "application/json")->status == 200);
    auto dup = h.client.Post("/bookmarks/" + A, h.headers(x), "", "application/json");
    CHECK(body_of(dup).at("bookmarks") == Json::array({A, B}));

    auto list = h.client.Get("/bookmarks", h.headers(x));
    REQUIRE(list);
    CHECK(card_ids(body_of(list).at("cards")) == std::vector<std::string>{A, B});
    CHECK(body_of(list).at("cards")[0].at("summary").is_string());
    CHECK(body_of(h.client.Get("/bookmarks", h.headers(y))).at("cards").empty());

    auto unknown = h.client.Post("/bookmarks/c_0000000000000000", h.headers(x), "", "application/json");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);
    CHECK(body_of(unknown).at("code") == "unknown_card");
    CHECK(h.client.Delete("/bookmarks/c_0000000000000000", h.headers(x))->status == 404);

    auto del = h.client.Delete("/bookmarks/" + A, h.headers(x));
    REQUIRE(del);
    CHECK(body_of(del).at("bookmarks") == Json::array({B}));
    CHECK(h.client.Delete("/bookmarks/" + A, h.headers(x))->status == 200);

    CHECK(h.client.Post("/dismissals/" + B, h.headers(x), "", "application/json")->status == 200);
    CHECK(h.client.Post("/dismissals/" + B, h.headers(x), "", "application/json")->status == 200);
    const auto for_x = card_ids(body_of(h.client.Get("/cards?limit=200", h.headers(x))).at("cards"));
    const auto for_y = card_ids(body_of(h.client.Get("/cards?limit=200", h.headers(y))).at("cards"));
    CHECK(std::find(for_x.begin(), for_x.end(), B) == for_x.end());
    CHECK(std::find(for_y.begin(), for_y.end(), B) != for_y.end());
    CHECK(h.client.Post("/bookmarks/" + B, h.headers(y), "", "application/json")->status == 200);
    CHECK(h.client.Post("/dismissals/c_0000000000000000", h.headers(x), "", "application/json")->status == 404);
}

TEST_CASE("imports and the approval queue") {
    ServiceHarness h;
    const auto entries = testsupport::corpus_entries();
    const std::string token = new_client_token();
    const Json good{{"url", entries[0].url}, {"domain", "social media"}};

    auto r = h.client.Post("/imports", h.headers(token), good.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto item = body_of(r);
    CHECK(item.at("state") == "pending");
    CHECK(item.at("extracted_card").at("aspect") == "Equality & Justice");
    const std::string id = item.at("id").get<std::string>();
    CHECK(h.store.card_count() == 0);

    // fx07 answers "no." to the content question
    const Json bad{{"url", entries[6].url}, {"domain", "social media"}};
    auto rejected = h.client.Post("/imports", h.headers(token), bad.dump(), "application/json");
    REQUIRE(rejected);
    CHECK(rejected->status == 422);
    CHECK(body_of(rejected).at("stage") == "content");
    CHECK(is_api_error(rejected));

    auto unfetchable = h.client.Post("/imports", h.headers(token),
                                     Json{{"url", "https://nowhere.example/a"}, {"domain", "x"}}.dump(), "application/json");
    REQUIRE(unfetchable);
    CHECK(unfetchable->status == 422);
    CHECK(body_of(unfetchable).at("stage") == "extraction");

    for (const auto& body : {std::string("{"), Json{{"url", "nope"}, {"domain", "x"}}.dump(), Json{{"url", entries[0].url}}.dump()}) {
        auto e = h.client.Post("/imports", h.headers(token), body, "application/json");
        REQUIRE(e);
        CHECK(e->status == 400);
        CHECK(is_api_error(e));
    }

    auto no_auth = h.client.Post("/imports/" + id + "/approve", h.headers(token), "", "application/json");
    REQUIRE(no_auth);
    CHECK(no_auth->status == 401);
    CHECK(body_of(no_auth).at("code") == "unauthorized");
    CHECK(h.client.Get("/imports", h.headers(token))->status == 401);

    auto queue = h.client.Get("/imports?state=pending", h.headers(token, true));
    REQUIRE(queue);
    CHECK(body_of(queue).at("imports").size() == 1);
    CHECK(body_of(h.client.Get("/imports?state=rejected", h.headers(token, true))).at("imports").size() == 2);

    auto approved = h.client.Post("/imports/" + id + "/approve", h.headers(token, true), "", "application/json");
    REQUIRE(approved);
    CHECK(approved->status == 200);
    CHECK(body_of(approved).at("import").at("state") == "approved");
    const auto card_id = body_of(approved).at("card").at("id").get<std::string>();
    CHECK(card_ids(body_of(h.client.Get("/cards", h.headers(token))).at("cards")) == std::vector<std::string>{card_id});

    auto twice = h.client.Post("/imports/" + id + "/approve", h.headers(token, true), "", "application/json");
    REQUIRE(twice);
    CHECK(twice->status == 409);
    CHECK(body_of(twice).at("code") == "invalid_transition");
    CHECK(h.client.Post("/imports/i_missing/approve", h.headers(token, true), "", "application/json")->status == 404);

    // a pending item rejected by the administrator
    auto second = h.client.Post("/imports", h.headers(token), Json{{"url", entries[1].url}, {"domain", "social media"}}.dump(),
                                "application/json");
    REQUIRE(second);
    const auto second_id = body_of(second).at("id").get<std::string>();
    auto rej = h.client.Post("/imports/" + second_id + "/reject", h.headers(token, true), Json{{"note", "off topic"}}.dump(),
                             "application/json");
    REQUIRE(rej);
    CHECK(body_of(rej).at("import").at("state") == "rejected");
    CHECK(body_of(rej).at("import").at("note") == "off topic");
}

TEST_CASE("admin routes reject random credentials") {
    ServiceHarness h;
    std::mt19937_64 rng(31);
    const std::vector<std::pair<std::string, std::string>> routes{
        {"GET", "/imports"},          {"POST", "/imports/i_x/approve"}, {"POST", "/imports/i_x/reject"},
        {"POST", "/admin/bulk-import"}, {"GET", "/admin/jobs/j_x"},     {"GET", "/admin/jobs"},
        {"GET", "/admin/reports"},    {"GET", "/admin/usage"},          {"POST", "/admin/update"}};
    for (int trial = 0; trial < 30; ++trial) {
        std::string guess;
        const std::size_t len = rng() % 40;
        for (std::size_t i = 0; i < len; ++i) guess += static_cast<char>('!' + rng() % 90);
        httplib::Headers hdr;
        if (trial % 3 == 0) hdr.emplace("Authorization", "Bearer " + guess);
        else if (trial % 3 == 1) hdr.emplace("Authorization", guess);
        for (const auto& [method, path] : routes) {
            auto r = method == "GET" ? h.client.Get(path, hdr) : h.client.Post(path, hdr, "{}", "application/json");
            REQUIRE(r);
            CHECK(r->status == 401);
            CHECK(is_api_error(r));
        }
    }
}

TEST_CASE("bulk import of the fixture corpus reproduces the golden run") {
    ServiceHarness h;
    auto r = h.client.Post("/admin/bulk-import?domain=social%20media", h.headers("", true), testsupport::corpus_csv(),
                           "text/csv");
    REQUIRE(r);
    CHECK(r->status == 202);
    const auto id = body_of(r).at("job").at("id").get<std::string>();
    const auto done = wait_for_job(h, id);
    CHECK(done.at("state") == "succeeded");
    auto report = done.at("report").get<PipelineReport>();
    CHECK(report.totals == FunnelCounts{12, 7, 4, 4});
    CHECK(done.at("progress").get<FunnelCounts>() == FunnelCounts{12, 7, 4, 4});
    CHECK(report.source_row("MIT Technology Review") == FunnelCounts{3, 2, 2, 2});
    CHECK(report.source_row("WIRED") == FunnelCounts{3, 1, 1, 1});

    std::vector<ConsequenceCard> cards = h.store.list_cards({}, CardOrder::Newest, 0, 0, 200).cards;
    CHECK(cards_to_jsonl(cards) == testsupport::slurp(testsupport::corpus_dir() + "/golden_cards.jsonl"));
    CHECK(h.store.list_reports().back().kind == "bulk");
}

TEST_CASE("bulk import conflicts and validation") {
    ServiceHarness h;
    h.fetcher.arm();
    auto first = h.client.Post("/admin/bulk-import?domain=social%20media", h.headers("", true), testsupport::corpus_csv(),
                               "text/csv");
    REQUIRE(first);
    CHECK(first->status == 202);
    const auto id = body_of(first).at("job").at("id").get<std::string>();

    auto second = h.client.Post("/admin/bulk-import?domain=social%20media", h.headers("", true),
                                testsupport::corpus_csv(), "text/csv");
    REQUIRE(second);
    CHECK(second->status == 409);
    CHECK(body_of(second).at("code") == "job_running");

    auto running = h.client.Get("/admin/jobs/" + id, h.headers("", true));
    REQUIRE(running);
    CHECK(body_of(running).at("state") == "running");
    h.fetcher.release();
    CHECK(wait_for_job(h, id).at("state") == "succeeded");

    auto bad_header = h.client.Post("/admin/bulk-import?domain=x", h.headers("", true), "link,where\na,b\n", "text/csv");
    REQUIRE(bad_header);
    CHECK(bad_header->status == 400);
    CHECK(body_of(bad_header).at("code") == "malformed_csv");

    auto ragged = h.client.Post("/admin/bulk-import?domain=x", h.headers("", true), "url,domain\na\"b,c\n", "text/csv");
    REQUIRE(ragged);
    CHECK(ragged->status == 400);

    auto no_domain = h.client.Post("/admin/bulk-import", h.headers("", true), "url\nhttps://a.example/x\n", "text/csv");
    REQUIRE(no_domain);
    CHECK(no_domain->status == 400);

    CHECK(h.client.Get("/admin/jobs/j_unknown", h.headers("", true))->status == 404);
}

TEST_CASE("bulk import by keywords") {
    ServiceHarness h;
    const auto entries = testsupport::corpus_entries();
    for (const auto& s : h.config.sources) {
        std::vector<std::string> mine;
        for (const auto& e : entries) {
            if (e.source == s.name) mine.push_back(e.url);
        }
        h.fetcher.set(s.search_url("social media"), testsupport::results_page(mine));
    }
    const Json request{{"domain", "social media"}, {"keywords", {"social media"}}, {"limit_per_keyword", 10}};
    auto r = h.client.Post("/admin/bulk-import", h.headers("", true), request.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 202);
    const auto done = wait_for_job(h, body_of(r).at("job").at("id").get<std::string>());
    CHECK(done.at("state") == "succeeded");
    CHECK(done.at("report").get<PipelineReport>().totals == FunnelCounts{12, 7, 4, 4});
}

TEST_CASE("config loading and env overrides") {
    const Json j{{"port", 9000},
                 {"db_path", "data/catalog.db"},
                 {"admin_token", "t"},
                 {"provider", {{"kind", "mock"}, {"mock_rules", "rules.json"}}},
                 {"update_interval_days", 7},
                 {"domains", {{{"name", "social media"}, {"keywords", {"social media"}}, {"approved", true}}}}};
    auto c = config_from_json(j, "/srv/cfg");
    CHECK(c.port == 9000);
    CHECK(c.db_path == "/srv/cfg/data/catalog.db");
    CHECK(c.provider.mock_rules == "/srv/cfg/rules.json");
    CHECK(c.domains.size() == 1);

    ::setenv("CATALOG_PORT", "9100", 1);
    ::setenv("CATALOG_ADMIN_TOKEN", "from-env", 1);
    apply_env_overrides(c);
    ::unsetenv("CATALOG_PORT");
    ::unsetenv("CATALOG_ADMIN_TOKEN");
    CHECK(c.port == 9100);
    CHECK(c.admin_token == "from-env");

    ::setenv("CATALOG_PORT", "eighty", 1);
    CHECK_THROWS_AS(apply_env_overrides(c), InvalidValue);
    ::unsetenv("CATALOG_PORT");

    CHECK_THROWS_AS(config_from_json(Json{{"parallelism", 0}}), InvalidValue);
    CHECK_THROWS_AS(config_from_json(Json{{"port", "x"}}), InvalidValue);
    CHECK_THROWS_AS(make_provider(ProviderSettings{"carrier-pigeon"}), InvalidValue);
}

TEST_CASE("demo configuration boots with the mock provider only") {
    auto config = load_config(std::string(CATALOG_DATA_DIR) + "/../config/demo.json");
    config.db_path = ":memory:";
    Runtime runtime(config);
    auto& sv = runtime.services();
    CHECK(sv.gateway.provider_id() == "mock");
    sv.store.import_from(std::string(CATALOG_DATA_DIR) + "/demo");
    CHECK(sv.store.card_count() >= 10);
    std::set<Aspect> aspects;
    for (const auto& c : sv.store.list_cards({}, CardOrder::Newest, 0, 0, 200).cards) aspects.insert(c.aspect);
    CHECK(aspects.size() == kAspectCount);

    JobManager jobs(sv);
    ApiServer api(sv, jobs);
    const int port = api.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    auto r = client.Get("/cards?limit=200");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r).at("total").get<std::size_t>() == sv.store.card_count());
    api.stop();
}

TEST_CASE("single-URL import over its time budget") {
    ServiceHarness h;
    h.services.config.import_timeout_seconds = 1;
    const auto entries = testsupport::corpus_entries();
    const std::string token = new_client_token();
    h.fetcher.arm();
    auto r = h.client.Post("/imports", h.headers(token), Json{{"url", entries[0].url}, {"domain", "social media"}}.dump(),
                           "application/json");
    REQUIRE(r);
    CHECK(r->status == 504);
    CHECK(body_of(r).at("code") == "import_timeout");
    h.fetcher.release();
    // the import finishes in the background and lands in the review queue
    std::size_t pending = 0;
    for (int i = 0; i < 500 && pending == 0; ++i) {
        pending = h.store.list_imports(ImportState::Pending).size();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(pending == 1);
}
