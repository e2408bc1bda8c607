#pragma once

#include "catalog/clock.hpp"
#include "catalog/serialize.hpp"
#include "catalog/source.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catalog {

struct CompletionRequest {
    std::string prompt;
    int max_tokens = 16;
    double temperature = 0.0;
    std::vector<std::string> stop;
    std::string tag;  // pipeline stage, used for cost accounting

    void validate() const;
};

struct CompletionResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::string provider;
    std::string model;
    Millis latency{0};
    int attempts = 1;
};

// Anything that maps text to a unit vector of fixed dimension.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

// A concrete model backend. complete() and embed() throw
// TransientProviderError for retryable failures and ProviderUnavailable for
// permanent ones.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string id() const = 0;
    virtual std::string model() const = 0;
    virtual std::size_t embedding_dimension() const = 0;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

// Feature-hashing embedding: each lowercased word token adds +-1 to a bucket
// picked by a seeded 64-bit hash, and the result is L2-normalized.
std::vector<double> hashing_embedding(std::string_view text, std::uint64_t seed, std::size_t dimension = 64);

// Rule-table entry: the first rule whose substrings all occur in the prompt
// supplies the completion.
struct MockRule {
    std::vector<std::string> match;
    std::string response;
};

// Offline, deterministic provider for tests and demos. Completions are a pure
// function of (prompt, rule table); embeddings of (text, seed). Responses are
// cut to `max_tokens` whitespace tokens and at the first stop string.
// Token counts are whitespace-token counts.
class MockProvider final : public Provider {
public:
    explicit MockProvider(std::vector<MockRule> rules, std::uint64_t seed = 7, std::string fallback = "",
                          std::size_t dimension = 64);

    // Rule table file: {"seed": 7, "fallback": "...", "rules": [{"match": [...], "response": "..."}]}
    // (a bare array of rules is accepted too).
    static std::shared_ptr<MockProvider> from_json(const Json& j);
    static std::shared_ptr<MockProvider> load(const std::string& path);

    std::string id() const override { return "mock"; }
    std::string model() const override { return "mock-rules-v1"; }
    std::size_t embedding_dimension() const override { return dimension_; }
    CompletionResponse complete(const CompletionRequest& request) override;
    std::vector<double> embed(std::string_view text) override;

    const std::vector<MockRule>& rules() const noexcept { return rules_; }

private:
    std::vector<MockRule> rules_;
    std::uint64_t seed_;
    std::string fallback_;
    std::size_t dimension_;
};

// HTTP provider speaking the generic completion wire contract:
//   POST <completion_url> {model, prompt, max_tokens, temperature, stop}
//     -> {text, prompt_tokens, completion_tokens}
//   POST <embedding_url>  {model, input} -> {embedding: [...]}
// 429, 5xx and connection failures are transient; other errors permanent.
struct HttpProviderConfig {
    std::string completion_url;
    std::string embedding_url;
    std::string model = "default";
    std::string api_key;
    std::size_t embedding_dimension = 64;
    std::chrono::seconds timeout{60};
};

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    std::string id() const override;
    std::string model() const override { return config_.model; }
    std::size_t embedding_dimension() const override { return config_.embedding_dimension; }
    CompletionResponse complete(const CompletionRequest& request) override;
    std::vector<double> embed(std::string_view text) override;

private:
    Json post(const std::string& url, const Json& body);
    HttpProviderConfig config_;
};

struct RetryPolicy {
    int max_attempts = 3;
    Millis base_delay{1000};
    double factor = 2.0;
};

struct GatewayLimits {
    int requests_per_minute = 600;  // <= 0 disables pacing
    std::optional<std::size_t> token_cap;
    std::optional<double> spend_cap_usd;
    double usd_per_1k_tokens = 0.0;
};

struct UsageCounters {
    std::size_t requests = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;

    std::size_t total_tokens() const noexcept { return prompt_tokens + completion_tokens; }
    bool operator==(const UsageCounters&) const = default;
};

void to_json(Json& j, const UsageCounters& u);

// Shared front door to a provider: retries transient failures with
// exponential backoff, paces requests under a global per-minute budget,
// refuses requests that could cross the token/spend cap, and keeps usage
// counters per request tag. Thread-safe.
class Gateway final : public Embedder {
public:
    Gateway(std::shared_ptr<Provider> provider, Clock& clock, RetryPolicy retry = {}, GatewayLimits limits = {});

    // Throws ProviderUnavailable once retries are exhausted, BudgetExceeded
    // before sending a request whose worst case (prompt tokens + max_tokens)
    // would cross the cap.
    CompletionResponse complete(const CompletionRequest& request);

    // Unit vector from the provider (re-normalized), tagged "embed".
    std::vector<double> embed(std::string_view text) override;
    std::size_t dimension() const override { return provider_->embedding_dimension(); }

    std::map<std::string, UsageCounters> usage_by_tag() const;
    UsageCounters total_usage() const;
    double spend_usd() const;

    std::string provider_id() const { return provider_->id(); }
    std::string model_id() const { return provider_->model(); }

private:
    template <typename Fn>
    auto with_retries(Fn&& fn);
    void reserve(std::size_t tokens);
    void settle(std::size_t reserved, const std::string& tag, std::size_t prompt_tokens, std::size_t completion_tokens);

    std::shared_ptr<Provider> provider_;
    Clock& clock_;
    RetryPolicy retry_;
    GatewayLimits limits_;
    std::unique_ptr<RateLimiter> rate_;  // null when unpaced

    mutable std::mutex mu_;
    std::map<std::string, UsageCounters> usage_;
    std::size_t used_tokens_ = 0;
    std::size_t reserved_tokens_ = 0;
};

}  // namespace catalog
