#include "catalog/config.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace catalog {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || path == ":memory:" || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read(const Json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return (v && *v) ? v : nullptr;
}

int to_int(const char* name, const char* value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != std::string_view(value).size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidValue(std::string(name) + " is not an integer: " + value);
    }
}

}  // namespace

PipelineOptions ServiceConfig::pipeline_options() const {
    PipelineOptions o;
    if (prompts) o.prompts = *prompts;
    o.parallelism = parallelism;
    o.body_char_budget = body_char_budget;
    return o;
}

ServiceConfig config_from_json(const Json& j, const std::string& base_dir) {
    if (!j.is_object()) throw InvalidValue("config must be a JSON object");
    ServiceConfig c;
    try {
        read(j, "host", c.host);
        read(j, "port", c.port);
        read(j, "db_path", c.db_path);
        read(j, "admin_token", c.admin_token);
        if (j.contains("provider")) {
            const Json& p = j.at("provider");
            read(p, "kind", c.provider.kind);
            read(p, "mock_rules", c.provider.mock_rules);
            read(p, "seed", c.provider.seed);
            read(p, "dimension", c.provider.dimension);
            read(p, "completion_url", c.provider.completion_url);
            read(p, "embedding_url", c.provider.embedding_url);
            read(p, "model", c.provider.model);
            read(p, "api_key", c.provider.api_key);
            read(p, "timeout_seconds", c.provider.timeout_seconds);
            read(p, "requests_per_minute", c.provider.requests_per_minute);
            read(p, "token_cap", c.provider.token_cap);
            read(p, "spend_cap_usd", c.provider.spend_cap_usd);
            read(p, "usd_per_1k_tokens", c.provider.usd_per_1k_tokens);
        }
        if (j.contains("title_classifier")) {
            const Json& t = j.at("title_classifier");
            read(t, "kind", c.title_classifier.kind);
            read(t, "path", c.title_classifier.path);
            read(t, "url", c.title_classifier.url);
            read(t, "api_key", c.title_classifier.api_key);
        }
        read(j, "sources", c.sources);
        read(j, "domains", c.domains);
        read(j, "update_interval_days", c.update_interval_days);
        read(j, "update_enabled", c.update_enabled);
        read(j, "results_per_keyword", c.results_per_keyword);
        read(j, "parallelism", c.parallelism);
        read(j, "body_char_budget", c.body_char_budget);
        read(j, "prompts", c.prompts);
        read(j, "import_timeout_seconds", c.import_timeout_seconds);
        read(j, "min_words", c.min_words);
        read(j, "scheduler_check_seconds", c.scheduler_check_seconds);
    } catch (const Json::exception& e) {
        throw InvalidValue(std::string("bad config: ") + e.what());
    }
    c.db_path = resolve(base_dir, c.db_path);
    c.provider.mock_rules = resolve(base_dir, c.provider.mock_rules);
    c.title_classifier.path = resolve(base_dir, c.title_classifier.path);

    if (c.port < 0 || c.port > 65535) throw InvalidValue("port out of range");
    if (c.update_interval_days < 1) throw InvalidValue("update_interval_days must be >= 1");
    if (c.parallelism < 1) throw InvalidValue("parallelism must be >= 1");
    if (c.import_timeout_seconds < 1) throw InvalidValue("import_timeout_seconds must be >= 1");
    for (const auto& s : c.sources) s.validate();
    for (const auto& d : c.domains) d.validate();
    if (c.prompts) c.prompts->validate();
    return c;
}

ServiceConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Json j;
    try {
        j = Json::parse(ss.str());
    } catch (const Json::exception& e) {
        throw InvalidValue("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

void apply_env_overrides(ServiceConfig& c) {
    if (auto v = env("CATALOG_HOST")) c.host = v;
    if (auto v = env("CATALOG_PORT")) c.port = to_int("CATALOG_PORT", v);
    if (auto v = env("CATALOG_DB")) c.db_path = v;
    if (auto v = env("CATALOG_ADMIN_TOKEN")) c.admin_token = v;
    if (auto v = env("CATALOG_PROVIDER")) c.provider.kind = v;
    if (auto v = env("CATALOG_PROVIDER_URL")) c.provider.completion_url = v;
    if (auto v = env("CATALOG_EMBEDDING_URL")) c.provider.embedding_url = v;
    if (auto v = env("CATALOG_PROVIDER_KEY")) c.provider.api_key = v;
    if (auto v = env("CATALOG_MODEL")) c.provider.model = v;
    if (auto v = env("CATALOG_PARALLELISM")) c.parallelism = static_cast<std::size_t>(to_int("CATALOG_PARALLELISM", v));
    if (auto v = env("CATALOG_UPDATE_DAYS")) c.update_interval_days = to_int("CATALOG_UPDATE_DAYS", v);
    if (auto v = env("CATALOG_BODY_BUDGET")) {
        c.body_char_budget = static_cast<std::size_t>(to_int("CATALOG_BODY_BUDGET", v));
    }
}

std::shared_ptr<Provider> make_provider(const ProviderSettings& s) {
    if (s.kind == "mock") {
        if (!s.mock_rules.empty()) return MockProvider::load(s.mock_rules);
        return std::make_shared<MockProvider>(std::vector<MockRule>{}, s.seed, "", s.dimension);
    }
    if (s.kind == "http") {
        HttpProviderConfig h;
        h.completion_url = s.completion_url;
        h.embedding_url = s.embedding_url;
        h.model = s.model;
        h.api_key = s.api_key;
        h.embedding_dimension = s.dimension;
        h.timeout = std::chrono::seconds{s.timeout_seconds};
        return std::make_shared<HttpProvider>(h);
    }
    throw InvalidValue("unknown provider kind '" + s.kind + "'");
}

std::shared_ptr<TitleClassifier> make_classifier(const ClassifierSettings& s) {
    if (s.kind == "accept_all") return std::make_shared<StubTitleClassifier>(std::vector<LabeledTitle>{}, 1.0);
    if (s.kind == "stub") return StubTitleClassifier::load(s.path);
    if (s.kind == "baseline") return BaselineTitleClassifier::load(s.path);
    if (s.kind == "remote") return std::make_shared<RemoteTitleClassifier>(s.url, s.api_key);
    throw InvalidValue("unknown title classifier kind '" + s.kind + "'");
}

GatewayLimits gateway_limits(const ProviderSettings& s) {
    GatewayLimits l;
    l.requests_per_minute = s.requests_per_minute;
    l.token_cap = s.token_cap;
    l.spend_cap_usd = s.spend_cap_usd;
    l.usd_per_1k_tokens = s.usd_per_1k_tokens;
    return l;
}

}  // namespace catalog
