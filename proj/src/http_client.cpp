#include <httplib.h>

#include "catalog/error.hpp"
#include "catalog/gateway.hpp"
#include "catalog/source.hpp"
#include "catalog/title_classifier.hpp"
#include "catalog/url.hpp"

#include <cmath>

namespace catalog {

namespace {

struct Target {
    std::string origin;  // scheme://host[:port]
    std::string path;    // path + query
};

Target split_target(const std::string& url) {
    const UrlParts p = parse_url(url);
    if (p.scheme != "http" && p.scheme != "https") throw MalformedUrl("unsupported scheme: " + url);
    Target t;
    t.origin = p.scheme + "://" + p.host;
    if (p.port) t.origin += ":" + std::to_string(*p.port);
    t.path = p.path.empty() ? "/" : p.path;
    if (!p.query.empty()) t.path += "?" + p.query;
    return t;
}

httplib::Client make_client(const std::string& origin, std::chrono::seconds timeout) {
    httplib::Client cli(origin);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    cli.set_follow_location(true);
    return cli;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpFetcher::HttpFetcher(std::chrono::seconds timeout, std::string user_agent)
    : timeout_(timeout), user_agent_(std::move(user_agent)) {}

std::string HttpFetcher::get(const std::string& url) {
    const Target t = split_target(url);
    auto cli = make_client(t.origin, timeout_);
    auto res = cli.Get(t.path, httplib::Headers{{"User-Agent", user_agent_}});
    if (!res) throw FetchError("GET " + url + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw FetchError("GET " + url + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.completion_url.empty()) throw InvalidValue("http provider needs a completion_url");
    split_target(config_.completion_url);
    if (!config_.embedding_url.empty()) split_target(config_.embedding_url);
    if (config_.embedding_dimension == 0) throw InvalidValue("embedding dimension must be positive");
}

std::string HttpProvider::id() const { return "http:" + split_target(config_.completion_url).origin; }

Json HttpProvider::post(const std::string& url, const Json& body) {
    const Target t = split_target(url);
    auto cli = make_client(t.origin, config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = cli.Post(t.path, headers, body.dump(), "application/json");
    if (!res) throw TransientProviderError("POST " + url + ": " + httplib::to_string(res.error()));
    if (transient_status(res->status)) {
        throw TransientProviderError("POST " + url + ": HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderUnavailable("POST " + url + ": HTTP " + std::to_string(res->status));
    }
    try {
        return Json::parse(res->body);
    } catch (const Json::exception& e) {
        throw ProviderUnavailable("POST " + url + ": malformed JSON reply: " + e.what());
    }
}

CompletionResponse HttpProvider::complete(const CompletionRequest& request) {
    Json body{{"model", config_.model},
              {"prompt", request.prompt},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature},
              {"stop", request.stop}};
    const Json reply = post(config_.completion_url, body);
    CompletionResponse r;
    try {
        r.text = reply.at("text").get<std::string>();
        r.prompt_tokens = reply.value("prompt_tokens", std::size_t{0});
        r.completion_tokens = reply.value("completion_tokens", std::size_t{0});
    } catch (const Json::exception& e) {
        throw ProviderUnavailable(std::string("completion reply missing fields: ") + e.what());
    }
    r.provider = id();
    r.model = config_.model;
    return r;
}

std::vector<double> HttpProvider::embed(std::string_view text) {
    if (config_.embedding_url.empty()) throw ProviderUnavailable("http provider has no embedding_url");
    const Json reply = post(config_.embedding_url, Json{{"model", config_.model}, {"input", std::string(text)}});
    try {
        return reply.at("embedding").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw ProviderUnavailable(std::string("embedding reply missing fields: ") + e.what());
    }
}

RemoteTitleClassifier::RemoteTitleClassifier(std::string url, std::string api_key, std::chrono::seconds timeout)
    : url_(std::move(url)), api_key_(std::move(api_key)), timeout_(timeout) {
    split_target(url_);
}

double RemoteTitleClassifier::score(std::string_view title) {
    const Target t = split_target(url_);
    auto cli = make_client(t.origin, timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(t.path, headers, Json{{"title", std::string(title)}}.dump(), "application/json");
    if (!res) throw ProviderUnavailable("title classifier: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProviderUnavailable("title classifier: HTTP " + std::to_string(res->status));
    try {
        const double s = Json::parse(res->body).at("score").get<double>();
        if (!std::isfinite(s) || s < 0.0 || s > 1.0) throw ProviderUnavailable("title classifier score outside [0, 1]");
        return s;
    } catch (const Json::exception& e) {
        throw ProviderUnavailable(std::string("title classifier: malformed reply: ") + e.what());
    }
}

}  // namespace catalog
