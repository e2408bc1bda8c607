#pragma once

#include "catalog/gateway.hpp"
#include "catalog/pipeline.hpp"
#include "catalog/serialize.hpp"
#include "catalog/source.hpp"
#include "catalog/store.hpp"
#include "catalog/title_classifier.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace catalog {

struct ProviderSettings {
    std::string kind = "mock";  // "mock" or "http"
    std::string mock_rules;     // path to a rule file; empty = no rules
    std::uint64_t seed = 7;
    std::size_t dimension = 64;
    std::string completion_url;
    std::string embedding_url;
    std::string model = "default";
    std::string api_key;
    int timeout_seconds = 60;
    int requests_per_minute = 600;
    std::optional<std::size_t> token_cap;
    std::optional<double> spend_cap_usd;
    double usd_per_1k_tokens = 0.0;
};

struct ClassifierSettings {
    std::string kind = "accept_all";  // "accept_all", "stub", "baseline" or "remote"
    std::string path;
    std::string url;
    std::string api_key;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string db_path = "catalog.db";
    std::string admin_token;  // empty disables every admin route
    ProviderSettings provider;
    ClassifierSettings title_classifier;
    std::vector<SourceConfig> sources;
    std::vector<TechDomain> domains;  // upserted at startup
    int update_interval_days = 7;
    bool update_enabled = true;
    std::size_t results_per_keyword = 50;
    std::size_t parallelism = 4;
    std::size_t body_char_budget = 12'000;
    std::optional<StagePromptSet> prompts;
    int import_timeout_seconds = 60;
    std::size_t min_words = 50;
    int scheduler_check_seconds = 60;

    PipelineOptions pipeline_options() const;
};

// Relative paths inside the file (db_path, mock_rules, classifier path) are
// resolved against the file's directory. Throws InvalidValue.
ServiceConfig load_config(const std::string& path);
ServiceConfig config_from_json(const Json& j, const std::string& base_dir = ".");

// CATALOG_HOST, CATALOG_PORT, CATALOG_DB, CATALOG_ADMIN_TOKEN,
// CATALOG_PROVIDER, CATALOG_PROVIDER_URL, CATALOG_EMBEDDING_URL,
// CATALOG_PROVIDER_KEY, CATALOG_MODEL, CATALOG_PARALLELISM,
// CATALOG_UPDATE_DAYS, CATALOG_BODY_BUDGET.
void apply_env_overrides(ServiceConfig& config);

std::shared_ptr<Provider> make_provider(const ProviderSettings& settings);
std::shared_ptr<TitleClassifier> make_classifier(const ClassifierSettings& settings);
GatewayLimits gateway_limits(const ProviderSettings& settings);

}  // namespace catalog
