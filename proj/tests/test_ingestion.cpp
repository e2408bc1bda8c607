#include <doctest.h>

#include "support.hpp"

#include "catalog/csv.hpp"
#include "catalog/error.hpp"
#include "catalog/extract.hpp"
#include "catalog/html.hpp"
#include "catalog/source.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

#include <fstream>
#include <sstream>

using namespace catalog;
using testsupport::article_page;
using testsupport::FixtureServer;
using testsupport::MemoryLedger;
using testsupport::results_page;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(CATALOG_FIXTURE_DIR) + "/" + name);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SourceConfig fixture_source(const FixtureServer& server, const std::string& name, const std::string& prefix) {
    return SourceConfig{name, server.base(), prefix + "/search?q={keyword}", 600, true};
}

}  // namespace

TEST_CASE("canonicalize_url examples") {
    CHECK(canonicalize_url("HTTPS://A.com:443/x/?utm_source=t") == "https://a.com/x");
    CHECK(canonicalize_url("https://a.com/x#sec2") == "https://a.com/x");
    CHECK_THROWS_AS(canonicalize_url("not a url"), MalformedUrl);
    CHECK_THROWS_AS(canonicalize_url("http://"), MalformedUrl);
    CHECK_THROWS_AS(canonicalize_url("http://a.com:abc/"), MalformedUrl);
}

TEST_CASE("canonicalize_url normal form") {
    CHECK(canonicalize_url("http://Example.COM:80") == "http://example.com/");
    CHECK(canonicalize_url("http://example.com:8080/a") == "http://example.com:8080/a");
    CHECK(canonicalize_url("https://a.com/p?b=2&a=1&fbclid=x&gclid=y&utm_medium=z") == "https://a.com/p?a=1&b=2");
    CHECK(canonicalize_url("https://a.com/p?b=2&a=1&b=1") == "https://a.com/p?a=1&b=2&b=1");
    CHECK(canonicalize_url("https://a.com/") == "https://a.com/");
    CHECK(canonicalize_url("https://a.com/Case/Path/") == "https://a.com/Case/Path");
}

TEST_CASE("canonicalize_url is idempotent") {
    const std::vector<std::string> urls = {
        "HTTPS://A.com:443/x/?utm_source=t",
        "https://a.com/x#sec2",
        "http://b.org/a/b/?z=1&y=2&utm_campaign=q#f",
        "https://www.wired.com/story/some-title/",
        "http://host:81",
        "https://a.com/path?only=",
    };
    for (const auto& u : urls) {
        const auto once = canonicalize_url(u);
        CHECK(canonicalize_url(once) == once);
    }
}

TEST_CASE("resolve_url") {
    CHECK(resolve_url("https://a.com/x/y", "/z") == "https://a.com/z");
    CHECK(resolve_url("https://a.com/x/y", "z") == "https://a.com/x/z");
    CHECK(resolve_url("https://a.com/x/y", "../z") == "https://a.com/z");
    CHECK(resolve_url("https://a.com/x/y", "//b.com/q") == "https://b.com/q");
    CHECK(resolve_url("https://a.com/x/y", "http://c.com/") == "http://c.com/");
    CHECK(resolve_url("https://a.com/x/y", "?p=1") == "https://a.com/x/y?p=1");
}

TEST_CASE("html parser tolerates sloppy markup") {
    const auto doc = html::parse("<div><p>one<p>two &amp; three<br>four</div><script>if (a<b) x();</script>");
    std::vector<std::string> paras;
    html::walk(doc, [&](const html::Node& n) {
        if (n.is_element("p")) paras.push_back(text::collapse_whitespace(html::text_content(n)));
        return true;
    });
    REQUIRE(paras.size() == 2);
    CHECK(paras[0] == "one");
    CHECK(paras[1] == "two & three four");
    CHECK(html::text_content(doc).find("x()") == std::string::npos);
}

TEST_CASE("extract_article on a hand-built fixture") {
    const auto page = read_fixture("extract_basic.html");
    const auto a = extract_article(page, "https://example.com/basic", "Example", Timestamp{});
    CHECK(a.title == "T");
    const std::string expected =
        "Paragraph one describes how a new social media feature rolled out to millions of users "
        "across several countries last spring.\n\n"
        "Paragraph two explains that researchers found the feature changed how often people "
        "compared themselves with friends and strangers online.\n\n"
        "Paragraph three notes that the company promised further studies & more transparency "
        "about ranking decisions in the coming year.";
    CHECK(a.body == expected);
    CHECK(a.word_count == text::word_count(expected));
    CHECK(a.source == "Example");
    CHECK(a.id == article_id_for("https://example.com/basic"));
    REQUIRE(a.published_at.has_value());
    CHECK(format_date(*a.published_at) == "2023-03-14");
}

TEST_CASE("extract_article errors") {
    const std::string short_page =
        "<html><head><title>Short</title></head><body><p>only ten words in this body of the page "
        "here</p></body></html>";
    CHECK_THROWS_AS(extract_article(short_page, "https://e.com/s", "E"), NoContent);

    const std::string untitled = "<html><body><p>" + testsupport::filler_words(80) + "</p></body></html>";
    CHECK_THROWS_AS(extract_article(untitled, "https://e.com/u", "E"), NoTitle);
}

TEST_CASE("extract_article title precedence") {
    const std::string body = "<p>" + testsupport::filler_words(80) + "</p>";
    const auto og = extract_article("<html><head><meta property=\"og:title\" content=\"OG\"><title>Tag</title></head>"
                                    "<body><h1>H</h1>" + body + "</body></html>",
                                    "https://e.com/a", "E");
    CHECK(og.title == "OG");
    const auto tag = extract_article("<html><head><title> Tag </title></head><body><h1>H</h1>" + body + "</body></html>",
                                     "https://e.com/a", "E");
    CHECK(tag.title == "Tag");
    const auto h1 = extract_article("<html><body><h1>H <em>one</em></h1>" + body + "</body></html>", "https://e.com/a",
                                    "E");
    CHECK(h1.title == "H one");
}

TEST_CASE("extract_article picks the largest paragraph container") {
    const std::string page = "<html><head><title>X</title></head><body>"
                             "<aside><p>short aside text here</p></aside>"
                             "<div class=\"story\"><p>" + testsupport::filler_words(40) + "</p><p>" +
                             testsupport::filler_words(40, "more") + "</p></div>"
                             "<footer><p>" + testsupport::filler_words(100, "legal") + "</p></footer>"
                             "</body></html>";
    const auto a = extract_article(page, "https://e.com/a", "E");
    CHECK(a.word_count == 80);
    CHECK(a.body.find("aside") == std::string::npos);
    CHECK(a.body.find("legal") == std::string::npos);
}

TEST_CASE("extract_article repairs invalid UTF-8") {
    std::string page = "<html><head><title>Caf\xc3\xa9 \xff</title></head><body><p>" +
                       testsupport::filler_words(60) + "</p></body></html>";
    const auto a = extract_article(page, "https://e.com/a", "E");
    CHECK(a.title == "Caf\xc3\xa9 \xef\xbf\xbd");
}

TEST_CASE("extract_result_links contract") {
    const std::string marked = "<a href=\"/nav\">n</a><a data-result href=\"/a/1\">1</a>"
                               "<a class=\"card result\" href=\"https://other.com/b\">2</a>";
    CHECK(extract_result_links(marked, "https://s.com/search?q=x") ==
          std::vector<std::string>{"https://s.com/a/1", "https://other.com/b"});
    const std::string plain = "<a href=\"/a/1\">1</a><a href=\"https://other.com/b\">2</a><a href=\"a/2\">3</a>";
    CHECK(extract_result_links(plain, "https://s.com/search/") ==
          std::vector<std::string>{"https://s.com/a/1", "https://s.com/search/a/2"});
}

TEST_CASE("csv round trip") {
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
    const auto parsed = csv::parse(csv::format_row(row) + csv::format_row({"a", "b", "c", "d", "e"}));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0] == row);
    CHECK_THROWS_AS(csv::parse("a,\"open\n"), MalformedCsv);
    CHECK_THROWS_AS(csv::parse_table("a,b\n1\n"), MalformedCsv);
}

TEST_CASE("parse_url_list") {
    const auto rows = parse_url_list("\xEF\xBB\xBFURL,Domain\r\nhttps://a.com/1,social media\r\nhttps://a.com/2,\r\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].url == "https://a.com/1");
    CHECK(rows[0].domain == std::optional<std::string>("social media"));
    CHECK_FALSE(rows[1].domain.has_value());
    CHECK_THROWS_AS(parse_url_list("link\nhttps://a.com\n"), MalformedCsv);
}

TEST_CASE("SourceConfig validation") {
    SourceConfig s{"S", "https://s.com", "/search?q={keyword}", 30, true};
    CHECK_NOTHROW(s.validate());
    CHECK(s.search_url("social media") == "https://s.com/search?q=social%20media");
    s.search_path_template = "/search";
    CHECK_THROWS_AS(s.validate(), InvalidValue);
    s.search_path_template = "/{keyword}/{keyword}";
    CHECK_THROWS_AS(s.validate(), InvalidValue);
    s.search_path_template = "/{keyword}";
    s.rate_limit = 0;
    CHECK_THROWS_AS(s.validate(), InvalidValue);
    const Json j = SourceConfig{"S", "https://s.com", "/q/{keyword}", 12, false};
    CHECK(j.get<SourceConfig>() == SourceConfig{"S", "https://s.com", "/q/{keyword}", 12, false});
}

TEST_CASE("search_source against a local fixture server") {
    FixtureServer server;
    server.set("/search", results_page({"/a/1", "/a/2?utm_source=x", "/a/3#c", "/a/4", "/a/5"}));
    HttpFetcher fetcher;
    const auto source = fixture_source(server, "Fixture", "");
    const auto urls = search_source(source, "social media", 3, fetcher);
    CHECK(urls == std::vector<std::string>{server.base() + "/a/1", server.base() + "/a/2", server.base() + "/a/3"});

    server.set("/search", results_page({"/a/1", "/a/1/", "/a/1#x", "/a/2"}));
    CHECK(search_source(source, "x", 10, fetcher) ==
          std::vector<std::string>{server.base() + "/a/1", server.base() + "/a/2"});

    auto disabled = source;
    disabled.enabled = false;
    CHECK_THROWS_AS(search_source(disabled, "x", 3, fetcher), PreconditionViolation);

    server.set("/search", "boom", 500);
    try {
        search_source(source, "x", 3, fetcher);
        FAIL("expected FetchError");
    } catch (const FetchError& e) {
        CHECK(std::string(e.what()).rfind("Fixture: ", 0) == 0);
    }
}

TEST_CASE("poll_updates: idempotence and two-phase growth") {
    FixtureServer server;
    server.set("/search", results_page({"/a/1", "/a/2", "/a/3"}));
    for (int i = 1; i <= 5; ++i) server.set("/a/" + std::to_string(i), article_page("Story " + std::to_string(i)));

    HttpFetcher fetcher;
    FakeClock clock;
    MemoryLedger ledger;
    Poller poller({fixture_source(server, "Fixture", "")}, fetcher, clock);
    const std::vector<TechDomain> domains{{"social media", {"social media"}, true}};

    const auto first = poller.poll_updates(domains, std::nullopt, ledger);
    CHECK(first.articles.size() == 3);
    CHECK(first.errors.empty());
    CHECK(ledger.size() == 3);
    for (const auto& a : first.articles) {
        CHECK(first.domains.at(a.id) == std::vector<std::string>{"social media"});
        CHECK(a.source == "Fixture");
    }

    const auto second = poller.poll_updates(domains, std::nullopt, ledger);
    CHECK(second.articles.empty());
    CHECK(server.hits("/a/1") == 1);

    server.set("/search", results_page({"/a/4", "/a/1", "/a/5", "/a/2", "/a/3"}));
    const auto third = poller.poll_updates(domains, std::nullopt, ledger);
    REQUIRE(third.articles.size() == 2);
    CHECK(third.articles[0].canonical_url == server.base() + "/a/4");
    CHECK(third.articles[1].canonical_url == server.base() + "/a/5");
}

TEST_CASE("poll_updates: partial success when one source is down") {
    FixtureServer server;
    server.set("/up/search", results_page({"/up/a/1", "/up/a/2"}));
    server.set("/up/a/1", article_page("Up one"));
    server.set("/up/a/2", article_page("Up two"));
    server.set("/down/search", "unavailable", 503);

    HttpFetcher fetcher;
    FakeClock clock;
    MemoryLedger ledger;
    Poller poller({fixture_source(server, "Up", "/up"), fixture_source(server, "Down", "/down")}, fetcher, clock);
    const auto r = poller.poll_updates({{"social media", {"social media", "feeds"}, true}}, std::nullopt, ledger);
    CHECK(r.articles.size() == 2);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].source == "Down");
    CHECK(server.hits("/down/search") == 1);
}

TEST_CASE("poll_updates: since window and extraction failures") {
    FixtureServer server;
    server.set("/search", results_page({"/old", "/new", "/thin"}));
    server.set("/old", article_page("Old", 120, "2023-01-02T10:00:00Z"));
    server.set("/new", article_page("New", 120, "2023-06-02T10:00:00Z"));
    server.set("/thin", article_page("Thin", 8));

    HttpFetcher fetcher;
    FakeClock clock;
    MemoryLedger ledger;
    Poller poller({fixture_source(server, "Fixture", "")}, fetcher, clock);
    const auto r = poller.poll_updates({{"social media", {"social media"}, true}},
                                       parse_timestamp("2023-03-01T00:00:00Z"), ledger);
    REQUIRE(r.articles.size() == 1);
    CHECK(r.articles[0].title == "New");
    CHECK(r.skipped.size() == 2);
}

TEST_CASE("rate limiter paces requests per source") {
    FakeClock clock;
    RateLimiter limiter(30, clock);
    CHECK(limiter.interval() == Millis{2000});
    std::vector<TimePoint> admitted;
    for (int i = 0; i < 31; ++i) {
        limiter.acquire();
        admitted.push_back(clock.now());
    }
    for (std::size_t i = 1; i < admitted.size(); ++i) CHECK(admitted[i] - admitted[i - 1] >= Millis{2000});
    // any 60 s window holds at most 30 requests
    for (std::size_t i = 0; i + 30 < admitted.size(); ++i) CHECK(admitted[i + 30] - admitted[i] >= Millis{60000});

    RateLimiter jittered(60, clock, Millis{500}, 9);
    auto prev = clock.now();
    jittered.acquire();
    for (int i = 0; i < 10; ++i) {
        prev = clock.now();
        jittered.acquire();
        const auto gap = clock.now() - prev;
        CHECK(gap >= Millis{1000});
        CHECK(gap <= Millis{1500});
    }
}

TEST_CASE("poller requests stay within the source rate limit") {
    FixtureServer server;
    std::vector<std::string> links;
    for (int i = 0; i < 8; ++i) {
        links.push_back("/a/" + std::to_string(i));
        server.set(links.back(), article_page("S" + std::to_string(i)));
    }
    server.set("/search", results_page(links));

    class Recording final : public Fetcher {
    public:
        Recording(Fetcher& inner, Clock& clock) : inner_(inner), clock_(clock) {}
        std::string get(const std::string& url) override {
            times.push_back(clock_.now());
            return inner_.get(url);
        }
        std::vector<TimePoint> times;

    private:
        Fetcher& inner_;
        Clock& clock_;
    };

    HttpFetcher http;
    FakeClock clock;
    Recording fetcher(http, clock);
    MemoryLedger ledger;
    auto source = fixture_source(server, "Fixture", "");
    source.rate_limit = 6;
    Poller poller({source}, fetcher, clock);
    const auto r = poller.poll_updates({{"social media", {"social media"}, true}}, std::nullopt, ledger);
    CHECK(r.articles.size() == 8);
    REQUIRE(fetcher.times.size() == 9);
    for (std::size_t i = 1; i < fetcher.times.size(); ++i) CHECK(fetcher.times[i] - fetcher.times[i - 1] >= Millis{10000});
}

TEST_CASE("source_for_url") {
    const std::vector<SourceConfig> sources{{"WIRED", "https://www.wired.com", "/search?q={keyword}", 30, true}};
    CHECK(source_for_url("https://wired.com/story/x", sources) == "WIRED");
    CHECK(source_for_url("https://elsewhere.org/x", sources) == "elsewhere.org");
}
