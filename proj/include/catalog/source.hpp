#pragma once

#include "catalog/clock.hpp"
#include "catalog/serialize.hpp"
#include "catalog/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catalog {

inline constexpr std::string_view kKeywordPlaceholder = "{keyword}";

// One publisher we search for articles. `search_path_template` is appended
// to `base_url` after substituting the URL-encoded keyword for "{keyword}".
struct SourceConfig {
    std::string name;
    std::string base_url;
    std::string search_path_template;
    int rate_limit = 30;  // requests per minute
    bool enabled = true;

    void validate() const;
    std::string search_url(std::string_view keyword) const;
    bool operator==(const SourceConfig&) const = default;
};

void to_json(Json& j, const SourceConfig& s);
void from_json(const Json& j, SourceConfig& s);

// Blocking page download. Implementations throw FetchError on network
// failures and non-2xx responses.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual std::string get(const std::string& url) = 0;
};

// cpp-httplib backed fetcher (http and https), following redirects.
class HttpFetcher final : public Fetcher {
public:
    explicit HttpFetcher(std::chrono::seconds timeout = std::chrono::seconds{20},
                         std::string user_agent = "consequence-catalog/1.0");
    std::string get(const std::string& url) override;

private:
    std::chrono::seconds timeout_;
    std::string user_agent_;
};

// Spaces requests at least 60s / per_minute apart, plus an optional random
// extra delay in [0, max_jitter]. Thread-safe; callers are admitted in the
// order they call acquire().
class RateLimiter {
public:
    RateLimiter(int per_minute, Clock& clock, Millis max_jitter = Millis::zero(), std::uint64_t seed = 0);
    void acquire();
    Millis interval() const noexcept { return interval_; }

private:
    Clock& clock_;
    Millis interval_;
    Millis max_jitter_;
    std::mutex mu_;
    std::optional<TimePoint> next_;
    std::uint64_t rng_state_;
};

// Up to `limit` canonical, deduplicated result URLs in source order.
// Throws PreconditionViolation for a disabled source and FetchError (message
// prefixed with the source name) when the results page cannot be fetched.
std::vector<std::string> search_source(const SourceConfig& source, std::string_view keyword, std::size_t limit,
                                       Fetcher& fetcher, RateLimiter* limiter = nullptr);

// The part of the store the poller needs. Must be thread-safe.
class ArticleLedger {
public:
    virtual ~ArticleLedger() = default;
    virtual bool has_article(std::string_view canonical_url) const = 0;
    virtual void put_article(const Article& article) = 0;
};

struct SourceError {
    std::string source;
    std::string message;
};

struct SkippedUrl {
    std::string url;
    std::string reason;
};

struct PollResult {
    std::vector<Article> articles;                              // new articles, source order
    std::map<std::string, std::vector<std::string>> domains;    // article id -> domain names
    std::vector<SourceError> errors;                            // at most one per source
    std::vector<SkippedUrl> skipped;                            // per-article fetch/extract failures
};

struct PollOptions {
    std::size_t results_per_keyword = 50;
    std::size_t min_words = 50;
    Millis max_jitter = Millis::zero();
    std::uint64_t jitter_seed = 0;
    bool concurrent_sources = true;
};

// Weekly-update crawler. Every enabled source is searched for every keyword
// of every domain; URLs already in the ledger are skipped, new pages are
// fetched, extracted and recorded in the ledger. A failing source is
// reported in `errors` and does not affect the others. Articles with a
// known publication date before `since` are left out.
class Poller {
public:
    Poller(std::vector<SourceConfig> sources, Fetcher& fetcher, Clock& clock, PollOptions options = {});

    PollResult poll_updates(const std::vector<TechDomain>& domains, std::optional<Timestamp> since,
                            ArticleLedger& ledger);

    const std::vector<SourceConfig>& sources() const noexcept { return sources_; }

private:
    RateLimiter& limiter_for(const SourceConfig& source);

    std::vector<SourceConfig> sources_;
    Fetcher& fetcher_;
    Clock& clock_;
    PollOptions options_;
    std::mutex limiters_mu_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
};

// Source name for a URL: the configured source whose base_url host matches,
// otherwise the URL's host.
std::string source_for_url(std::string_view url, const std::vector<SourceConfig>& sources);

// Downloads and extracts one article. Throws MalformedUrl, FetchError,
// NoTitle or NoContent.
Article fetch_article(std::string_view url, std::string_view source, Fetcher& fetcher, Clock& clock,
                      std::size_t min_words = 50);

// Bulk import list: a CSV with a header row containing a "url" column and
// optionally a "domain" column.
struct UrlRow {
    std::string url;
    std::optional<std::string> domain;
};
std::vector<UrlRow> parse_url_list(std::string_view csv_text);

}  // namespace catalog
