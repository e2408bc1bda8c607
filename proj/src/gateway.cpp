#include "catalog/gateway.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace catalog {

void CompletionRequest::validate() const {
    if (prompt.empty()) throw InvalidValue("completion prompt is empty");
    if (max_tokens < 1) throw InvalidValue("max_tokens must be >= 1");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw InvalidValue("temperature outside [0, 2]");
}

std::vector<double> hashing_embedding(std::string_view input, std::uint64_t seed, std::size_t dimension) {
    std::vector<double> v(dimension, 0.0);
    const std::uint64_t key = text::mix64(seed);
    auto add = [&](std::string_view token) {
        const std::uint64_t h = text::mix64(text::fnv1a64(token) ^ key);
        v[h % dimension] += (h >> 63) ? -1.0 : 1.0;
    };
    const auto tokens = text::word_tokens(input);
    for (const auto& t : tokens) add(t);
    if (tokens.empty()) add(input);

    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
        // every bucket cancelled out; fall back to a single deterministic axis
        v[text::mix64(text::fnv1a64(input) ^ key) % dimension] = 1.0;
        return v;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

MockProvider::MockProvider(std::vector<MockRule> rules, std::uint64_t seed, std::string fallback,
                           std::size_t dimension)
    : rules_(std::move(rules)), seed_(seed), fallback_(std::move(fallback)), dimension_(dimension) {
    if (dimension_ == 0) throw InvalidValue("embedding dimension must be positive");
}

std::shared_ptr<MockProvider> MockProvider::from_json(const Json& j) {
    const Json& rules_json = j.is_array() ? j : j.at("rules");
    std::vector<MockRule> rules;
    for (const auto& r : rules_json) {
        MockRule rule;
        r.at("match").get_to(rule.match);
        r.at("response").get_to(rule.response);
        rules.push_back(std::move(rule));
    }
    if (j.is_array()) return std::make_shared<MockProvider>(std::move(rules));
    return std::make_shared<MockProvider>(std::move(rules), j.value("seed", std::uint64_t{7}),
                                          j.value("fallback", std::string{}), j.value("dimension", std::size_t{64}));
}

std::shared_ptr<MockProvider> MockProvider::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot open mock rule table " + path);
    try {
        return from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw InvalidValue("bad mock rule table " + path + ": " + e.what());
    }
}

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
    std::string text = fallback_;
    for (const auto& rule : rules_) {
        bool all = true;
        for (const auto& m : rule.match) {
            if (request.prompt.find(m) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) {
            text = rule.response;
            break;
        }
    }
    for (const auto& s : request.stop) {
        if (s.empty()) continue;
        if (auto pos = text.find(s); pos != std::string::npos) text.resize(pos);
    }
    const auto words = text::split_whitespace(text);
    if (words.size() > static_cast<std::size_t>(request.max_tokens)) {
        const auto& last = words[static_cast<std::size_t>(request.max_tokens) - 1];
        text.resize(static_cast<std::size_t>(last.data() + last.size() - text.data()));
    }

    CompletionResponse r;
    r.prompt_tokens = text::word_count(request.prompt);
    r.completion_tokens = text::word_count(text);
    r.text = std::move(text);
    r.provider = id();
    r.model = model();
    return r;
}

std::vector<double> MockProvider::embed(std::string_view text) { return hashing_embedding(text, seed_, dimension_); }

void to_json(Json& j, const UsageCounters& u) {
    j = Json{{"requests", u.requests},
             {"prompt_tokens", u.prompt_tokens},
             {"completion_tokens", u.completion_tokens},
             {"total_tokens", u.total_tokens()}};
}

Gateway::Gateway(std::shared_ptr<Provider> provider, Clock& clock, RetryPolicy retry, GatewayLimits limits)
    : provider_(std::move(provider)),
      clock_(clock),
      retry_(retry),
      limits_(limits) {
    if (limits_.requests_per_minute > 0) rate_ = std::make_unique<RateLimiter>(limits_.requests_per_minute, clock_);
    if (!provider_) throw InvalidValue("gateway needs a provider");
    if (retry_.max_attempts < 1) throw InvalidValue("max_attempts must be >= 1");
}

template <typename Fn>
auto Gateway::with_retries(Fn&& fn) {
    Millis delay = retry_.base_delay;
    for (int attempt = 1;; ++attempt) {
        if (rate_) rate_->acquire();
        try {
            return fn(attempt);
        } catch (const TransientProviderError& e) {
            if (attempt >= retry_.max_attempts) {
                throw ProviderUnavailable(provider_->id() + " failed after " + std::to_string(attempt) +
                                          " attempts: " + e.what());
            }
        }
        clock_.sleep_for(delay);
        delay = Millis{static_cast<Millis::rep>(static_cast<double>(delay.count()) * retry_.factor)};
    }
}

void Gateway::reserve(std::size_t tokens) {
    std::lock_guard lock(mu_);
    const std::size_t worst = used_tokens_ + reserved_tokens_ + tokens;
    if (limits_.token_cap && worst > *limits_.token_cap) {
        throw BudgetExceeded("request needs up to " + std::to_string(tokens) + " tokens; " +
                             std::to_string(used_tokens_ + reserved_tokens_) + " of " +
                             std::to_string(*limits_.token_cap) + " already committed");
    }
    if (limits_.spend_cap_usd && static_cast<double>(worst) / 1000.0 * limits_.usd_per_1k_tokens > *limits_.spend_cap_usd) {
        throw BudgetExceeded("request could exceed the spend cap of $" + std::to_string(*limits_.spend_cap_usd));
    }
    reserved_tokens_ += tokens;
}

void Gateway::settle(std::size_t reserved, const std::string& tag, std::size_t prompt_tokens,
                     std::size_t completion_tokens) {
    std::lock_guard lock(mu_);
    reserved_tokens_ -= reserved;
    used_tokens_ += prompt_tokens + completion_tokens;
    auto& u = usage_[tag];
    u.requests += 1;
    u.prompt_tokens += prompt_tokens;
    u.completion_tokens += completion_tokens;
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
    request.validate();
    const std::size_t estimate = text::word_count(request.prompt) + static_cast<std::size_t>(request.max_tokens);
    reserve(estimate);
    try {
        const auto start = clock_.now();
        CompletionResponse r = with_retries([&](int attempt) {
            auto resp = provider_->complete(request);
            resp.attempts = attempt;
            return resp;
        });
        r.latency = clock_.now() - start;
        settle(estimate, request.tag.empty() ? "untagged" : request.tag, r.prompt_tokens, r.completion_tokens);
        return r;
    } catch (...) {
        std::lock_guard lock(mu_);
        reserved_tokens_ -= estimate;
        throw;
    }
}

std::vector<double> Gateway::embed(std::string_view input) {
    if (text::trim(input).empty()) throw InvalidValue("cannot embed empty text");
    const std::size_t estimate = text::word_count(input);
    reserve(estimate);
    std::vector<double> v;
    try {
        v = with_retries([&](int) { return provider_->embed(input); });
    } catch (...) {
        std::lock_guard lock(mu_);
        reserved_tokens_ -= estimate;
        throw;
    }
    settle(estimate, "embed", estimate, 0);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (v.size() != dimension() || !(norm > 0.0) || !std::isfinite(norm)) {
        throw ProviderUnavailable("provider returned an unusable embedding");
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

std::map<std::string, UsageCounters> Gateway::usage_by_tag() const {
    std::lock_guard lock(mu_);
    return usage_;
}

UsageCounters Gateway::total_usage() const {
    std::lock_guard lock(mu_);
    UsageCounters total;
    for (const auto& [tag, u] : usage_) {
        total.requests += u.requests;
        total.prompt_tokens += u.prompt_tokens;
        total.completion_tokens += u.completion_tokens;
    }
    return total;
}

double Gateway::spend_usd() const {
    std::lock_guard lock(mu_);
    return static_cast<double>(used_tokens_) / 1000.0 * limits_.usd_per_1k_tokens;
}

}  // namespace catalog
