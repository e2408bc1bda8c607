#include "catalog/source.hpp"

#include "catalog/csv.hpp"
#include "catalog/error.hpp"
#include "catalog/extract.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <unordered_set>

namespace catalog {

void SourceConfig::validate() const {
    if (text::trim(name).empty()) throw InvalidValue("source name is empty");
    parse_url(base_url);
    if (rate_limit < 1) throw InvalidValue("source '" + name + "': rate_limit must be >= 1");
    auto first = search_path_template.find(kKeywordPlaceholder);
    if (first == std::string::npos ||
        search_path_template.find(kKeywordPlaceholder, first + 1) != std::string::npos) {
        throw InvalidValue("source '" + name + "': search_path_template needs exactly one {keyword}");
    }
}

std::string SourceConfig::search_url(std::string_view keyword) const {
    std::string base = base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    std::string path = text::replace_all(search_path_template, kKeywordPlaceholder, text::url_encode(keyword));
    if (path.empty() || path[0] != '/') path.insert(path.begin(), '/');
    return base + path;
}

void to_json(Json& j, const SourceConfig& s) {
    j = Json{{"name", s.name},
             {"base_url", s.base_url},
             {"search_path_template", s.search_path_template},
             {"rate_limit", s.rate_limit},
             {"enabled", s.enabled}};
}

void from_json(const Json& j, SourceConfig& s) {
    j.at("name").get_to(s.name);
    j.at("base_url").get_to(s.base_url);
    j.at("search_path_template").get_to(s.search_path_template);
    s.rate_limit = j.value("rate_limit", 30);
    s.enabled = j.value("enabled", true);
}

RateLimiter::RateLimiter(int per_minute, Clock& clock, Millis max_jitter, std::uint64_t seed)
    : clock_(clock),
      interval_(Millis{(60'000 + std::max(per_minute, 1) - 1) / std::max(per_minute, 1)}),
      max_jitter_(max_jitter),
      rng_state_(seed) {
    if (per_minute < 1) throw InvalidValue("rate limit must be >= 1 request per minute");
}

void RateLimiter::acquire() {
    TimePoint slot;
    {
        std::lock_guard lock(mu_);
        const auto now = clock_.now();
        slot = next_ && *next_ > now ? *next_ : now;
        Millis jitter{0};
        if (max_jitter_ > Millis::zero()) {
            rng_state_ = text::mix64(rng_state_);
            jitter = Millis{static_cast<Millis::rep>(rng_state_ % (max_jitter_.count() + 1))};
        }
        next_ = slot + interval_ + jitter;
    }
    clock_.sleep_until(slot);
}

std::vector<std::string> search_source(const SourceConfig& source, std::string_view keyword, std::size_t limit,
                                       Fetcher& fetcher, RateLimiter* limiter) {
    if (!source.enabled) throw PreconditionViolation("source '" + source.name + "' is disabled");
    const std::string url = source.search_url(keyword);
    std::string page;
    try {
        if (limiter) limiter->acquire();
        page = fetcher.get(url);
    } catch (const FetchError& e) {
        throw FetchError(source.name + ": " + e.what());
    }

    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& link : extract_result_links(page, url)) {
        if (out.size() >= limit) break;
        std::string canonical;
        try {
            canonical = canonicalize_url(link);
        } catch (const MalformedUrl&) {
            continue;
        }
        if (seen.insert(canonical).second) out.push_back(std::move(canonical));
    }
    return out;
}

Poller::Poller(std::vector<SourceConfig> sources, Fetcher& fetcher, Clock& clock, PollOptions options)
    : sources_(std::move(sources)), fetcher_(fetcher), clock_(clock), options_(options) {
    for (const auto& s : sources_) s.validate();
}

RateLimiter& Poller::limiter_for(const SourceConfig& source) {
    std::lock_guard lock(limiters_mu_);
    auto& slot = limiters_[source.name];
    if (!slot) {
        slot = std::make_unique<RateLimiter>(source.rate_limit, clock_, options_.max_jitter,
                                             options_.jitter_seed ^ text::fnv1a64(source.name));
    }
    return *slot;
}

PollResult Poller::poll_updates(const std::vector<TechDomain>& domains, std::optional<Timestamp> since,
                                ArticleLedger& ledger) {
    struct SourceRun {
        std::vector<Article> articles;
        std::vector<std::pair<std::string, std::string>> links;  // article id, domain
        std::optional<SourceError> error;
        std::vector<SkippedUrl> skipped;
    };

    // URLs claimed by any source during this poll, so two sources (or two
    // keywords) never fetch the same page twice.
    std::mutex claimed_mu;
    std::map<std::string, std::string> claimed;  // canonical url -> article id ("" if failed)

    auto run_source = [&](const SourceConfig& source) {
        SourceRun run;
        RateLimiter& limiter = limiter_for(source);
        for (const auto& domain : domains) {
            if (run.error) break;
            for (const auto& keyword : domain.keywords) {
                std::vector<std::string> urls;
                try {
                    urls = search_source(source, keyword, options_.results_per_keyword, fetcher_, &limiter);
                } catch (const Error& e) {
                    run.error = SourceError{source.name, e.what()};
                    break;
                }
                for (const auto& url : urls) {
                    {
                        std::lock_guard lock(claimed_mu);
                        if (auto it = claimed.find(url); it != claimed.end()) {
                            if (!it->second.empty()) run.links.emplace_back(it->second, domain.name);
                            continue;
                        }
                        if (ledger.has_article(url)) continue;
                        claimed[url] = "";
                    }
                    try {
                        limiter.acquire();
                        Article a = fetch_article(url, source.name, fetcher_, clock_, options_.min_words);
                        if (since && a.published_at &&
                            std::chrono::sys_days{*a.published_at} < std::chrono::floor<std::chrono::days>(*since)) {
                            run.skipped.push_back({url, "published before the polling window"});
                            continue;
                        }
                        ledger.put_article(a);
                        {
                            std::lock_guard lock(claimed_mu);
                            claimed[url] = a.id;
                        }
                        run.links.emplace_back(a.id, domain.name);
                        run.articles.push_back(std::move(a));
                    } catch (const Error& e) {
                        run.skipped.push_back({url, e.what()});
                    }
                }
            }
        }
        return run;
    };

    std::vector<const SourceConfig*> enabled;
    for (const auto& s : sources_) {
        if (s.enabled) enabled.push_back(&s);
    }
    std::vector<SourceRun> runs;
    if (options_.concurrent_sources && enabled.size() > 1) {
        std::vector<std::future<SourceRun>> futures;
        for (const auto* s : enabled) futures.push_back(std::async(std::launch::async, run_source, std::cref(*s)));
        for (auto& f : futures) runs.push_back(f.get());
    } else {
        for (const auto* s : enabled) runs.push_back(run_source(*s));
    }

    PollResult result;
    for (auto& run : runs) {
        for (auto& a : run.articles) result.articles.push_back(std::move(a));
        for (auto& [id, domain] : run.links) {
            auto& ds = result.domains[id];
            if (std::find(ds.begin(), ds.end(), domain) == ds.end()) ds.push_back(domain);
        }
        if (run.error) result.errors.push_back(std::move(*run.error));
        for (auto& s : run.skipped) result.skipped.push_back(std::move(s));
    }
    // links to articles found by a later source but claimed by an earlier one
    // can reference ids that are not new in this poll; drop those
    std::set<std::string> fresh;
    for (const auto& a : result.articles) fresh.insert(a.id);
    std::erase_if(result.domains, [&](const auto& kv) { return !fresh.contains(kv.first); });
    return result;
}

std::string source_for_url(std::string_view url, const std::vector<SourceConfig>& sources) {
    const std::string host = parse_url(url).host;
    auto strip_www = [](std::string h) { return text::starts_with(h, "www.") ? h.substr(4) : h; };
    for (const auto& s : sources) {
        try {
            if (strip_www(parse_url(s.base_url).host) == strip_www(host)) return s.name;
        } catch (const MalformedUrl&) {
        }
    }
    return host;
}

Article fetch_article(std::string_view url, std::string_view source, Fetcher& fetcher, Clock& clock,
                      std::size_t min_words) {
    const std::string canonical = canonicalize_url(url);
    std::string page = fetcher.get(canonical);
    return extract_article(page, canonical, source, clock.now_seconds(), min_words);
}

std::vector<UrlRow> parse_url_list(std::string_view csv_text) {
    const auto table = csv::parse_table(csv_text);
    const auto url_col = table.column("url");
    if (!url_col) throw MalformedCsv("header row must contain a 'url' column");
    const auto domain_col = table.column("domain");
    std::vector<UrlRow> out;
    for (const auto& row : table.rows) {
        UrlRow r;
        r.url = std::string(text::trim(row[*url_col]));
        if (r.url.empty()) continue;
        if (domain_col) {
            auto d = text::trim(row[*domain_col]);
            if (!d.empty()) r.domain = std::string(d);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace catalog
