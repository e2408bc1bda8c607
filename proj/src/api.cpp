#include "catalog/api.hpp"

#include "catalog/aspect.hpp"
#include "catalog/error.hpp"
#include "catalog/imports.hpp"
#include "catalog/text.hpp"

#include <httplib.h>
#include <openssl/crypto.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <functional>

namespace catalog {

void to_json(Json& j, const ApiError& e) {
    j = e.extra.is_object() ? e.extra : Json::object();
    j["code"] = e.code;
    j["message"] = e.message;
}

ApiError api_error_from(const Error& e) {
    static const std::map<std::string, int> status_of{
        {"invalid_value", 400},        {"unknown_aspect", 400},       {"malformed_url", 400},
        {"malformed_csv", 400},        {"empty_title", 400},          {"unknown_card", 404},
        {"unknown_import", 404},       {"missing_article", 404},      {"invalid_transition", 409},
        {"job_running", 409},          {"pipeline_rejected", 422},    {"fetch_error", 502},
        {"no_content", 422},           {"no_title", 422},             {"provider_unavailable", 503},
        {"budget_exceeded", 503},      {"import_timeout", 504},
    };
    ApiError out;
    out.code = e.code();
    out.message = e.what();
    const auto it = status_of.find(e.code());
    out.status = it == status_of.end() ? 500 : it->second;
    if (const auto* rejected = dynamic_cast<const PipelineRejected*>(&e)) out.extra["stage"] = rejected->stage();
    return out;
}

Json card_view(const ConsequenceCard& card, const Store& store) {
    Json j = card;
    j["aspect_color"] = std::string(aspect_color(card.aspect));
    if (auto a = store.get_article(card.article_id)) {
        j["article"] = Json{{"title", a->title},
                            {"url", a->canonical_url},
                            {"source", a->source},
                            {"published_at", a->published_at ? Json(format_date(*a->published_at)) : Json(nullptr)}};
    }
    return j;
}

namespace {

using httplib::Request;
using httplib::Response;

ApiError api_error(int status, std::string code, std::string message) {
    return ApiError{status, std::move(code), std::move(message), Json::object()};
}

void send_json(Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, const ApiError& e) { send_json(res, e.status, Json(e)); }

std::uint64_t parse_uint(const std::string& name, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc{} || ptr != end) {
        throw api_error(400, "invalid_value", name + " must be a non-negative integer");
    }
    return out;
}

std::vector<std::string> list_param(const Request& req, const char* name) {
    std::vector<std::string> out;
    const auto n = req.get_param_value_count(name);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string v = req.get_param_value(name, i);
        std::size_t start = 0;
        while (start <= v.size()) {
            auto end = v.find(',', start);
            if (end == std::string::npos) end = v.size();
            const auto item = text::trim(std::string_view(v).substr(start, end - start));
            if (!item.empty()) out.emplace_back(item);
            start = end + 1;
        }
    }
    return out;
}

Json parse_body(const Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        return Json::parse(req.body);
    } catch (const Json::exception&) {
        throw api_error(400, "invalid_json", "request body is not valid JSON");
    }
}

std::string string_field(const Json& body, const char* name, bool required) {
    if (!body.is_object() || !body.contains(name) || body.at(name).is_null()) {
        if (required) throw api_error(400, "invalid_value", std::string("missing field '") + name + "'");
        return {};
    }
    if (!body.at(name).is_string()) throw api_error(400, "invalid_value", std::string("'") + name + "' must be a string");
    return body.at(name).get<std::string>();
}

}  // namespace

struct ApiServer::Impl {
    Services& sv;
    JobManager& jobs;
    httplib::Server server;
    std::thread thread;

    // user imports still running after their response timed out
    std::mutex inflight_mu;
    std::condition_variable inflight_cv;
    std::size_t inflight = 0;

    Impl(Services& s, JobManager& j) : sv(s), jobs(j) { routes(); }

    ~Impl() {
        std::unique_lock lock(inflight_mu);
        inflight_cv.wait(lock, [&] { return inflight == 0; });
    }

    using Handler = std::function<void(const Request&, Response&, const std::string& client)>;

    // Token on every response; ApiError for every failure.
    httplib::Server::Handler wrap(Handler h) {
        return [this, h = std::move(h)](const Request& req, Response& res) {
            std::string client = req.get_header_value(kClientTokenHeader);
            if (!is_client_token(client)) client = new_client_token();
            res.set_header(kClientTokenHeader, client);
            try {
                h(req, res, client);
            } catch (const ApiError& e) {
                send_error(res, e);
            } catch (const Error& e) {
                const ApiError api = api_error_from(e);
                if (api.status >= 500) spdlog::warn("{} {}: {}", req.method, req.path, e.what());
                send_error(res, api);
            } catch (const std::exception& e) {
                spdlog::error("{} {}: {}", req.method, req.path, e.what());
                send_error(res, api_error(500, "internal", "internal error"));
            }
        };
    }

    httplib::Server::Handler admin(Handler h) {
        return wrap([this, h = std::move(h)](const Request& req, Response& res, const std::string& client) {
            const std::string& token = sv.config.admin_token;
            const std::string header = req.get_header_value("Authorization");
            const std::string expected = "Bearer " + token;
            const bool ok = !token.empty() && header.size() == expected.size() &&
                            CRYPTO_memcmp(header.data(), expected.data(), expected.size()) == 0;
            if (!ok) throw api_error(401, "unauthorized", "admin credential required");
            h(req, res, client);
        });
    }

    CardFilter filter_from(const Request& req, const std::string& client) const {
        CardFilter f;
        for (auto& d : list_param(req, "domains")) f.domains.insert(std::move(d));
        for (const auto& a : list_param(req, "aspects")) f.aspects.insert(parse_aspect(a));
        if (req.has_param("q")) f.query = std::string(text::trim(req.get_param_value("q")));
        f.exclude_for = client;
        return f;
    }

    std::size_t limit_param(const Request& req, const char* name, std::size_t fallback) const {
        if (!req.has_param(name)) return fallback;
        const auto v = parse_uint(name, req.get_param_value(name));
        if (v > kMaxPageSize) {
            throw api_error(400, "limit_exceeded",
                            std::string(name) + " must be at most " + std::to_string(kMaxPageSize));
        }
        if (v == 0) throw api_error(400, "invalid_value", std::string(name) + " must be at least 1");
        return static_cast<std::size_t>(v);
    }

    Json card_list(const std::vector<ConsequenceCard>& cards) const {
        Json out = Json::array();
        for (const auto& c : cards) out.push_back(card_view(c, sv.store));
        return out;
    }

    void require_card(const std::string& id) const {
        if (!sv.store.get_card(id)) throw UnknownCard("no card " + id);
    }

    Json bookmark_ids(const std::string& client) const {
        Json ids = Json::array();
        for (const auto& c : sv.store.list_bookmarks(client)) ids.push_back(c.id);
        return ids;
    }

    PendingImport submit_with_budget(const std::string& client, const std::string& url, const std::string& domain) {
        struct Call {
            std::mutex mu;
            std::condition_variable cv;
            bool done = false;
            std::optional<PendingImport> result;
            std::exception_ptr error;
        };
        auto call = std::make_shared<Call>();
        {
            std::lock_guard lock(inflight_mu);
            ++inflight;
        }
        std::thread([this, call, client, url, domain] {
            try {
                ImportContext ctx{sv.store, sv.fetcher, sv.gateway, sv.clock, sv.config.sources,
                                  sv.config.pipeline_options(), sv.config.min_words};
                auto item = submit_import(ctx, client, url, domain);
                std::lock_guard lock(call->mu);
                call->result = std::move(item);
            } catch (...) {
                std::lock_guard lock(call->mu);
                call->error = std::current_exception();
            }
            {
                std::lock_guard lock(call->mu);
                call->done = true;
            }
            call->cv.notify_all();
            std::lock_guard lock(inflight_mu);
            --inflight;
            inflight_cv.notify_all();
        }).detach();

        std::unique_lock lock(call->mu);
        if (!call->cv.wait_for(lock, std::chrono::seconds{sv.config.import_timeout_seconds}, [&] { return call->done; })) {
            throw ImportTimeout("import did not finish within " + std::to_string(sv.config.import_timeout_seconds) +
                                "s; it keeps running and will appear in the review queue");
        }
        if (call->error) std::rethrow_exception(call->error);
        return *call->result;
    }

    BulkRequest bulk_request(const Request& req) const {
        BulkRequest br;
        const std::string type = req.get_header_value("Content-Type");
        if (text::starts_with(text::to_lower(type), "text/csv")) {
            br.urls = parse_url_list(req.body);
            if (req.has_param("domain")) br.domain = req.get_param_value("domain");
            br.keywords = list_param(req, "keywords");
        } else {
            const Json body = parse_body(req);
            br.domain = string_field(body, "domain", false);
            try {
                if (body.contains("keywords")) br.keywords = body.at("keywords").get<std::vector<std::string>>();
                if (body.contains("sources")) br.sources = body.at("sources").get<std::vector<std::string>>();
                if (body.contains("limit_per_keyword")) br.limit_per_keyword = body.at("limit_per_keyword").get<std::size_t>();
            } catch (const Json::exception&) {
                throw api_error(400, "invalid_value", "keywords and sources must be string arrays");
            }
            const std::string csv = string_field(body, "csv", false);
            if (!csv.empty()) br.urls = parse_url_list(csv);
            if (br.urls.empty() && br.keywords.empty() && br.domain.empty()) {
                throw api_error(400, "invalid_value", "give csv rows or a domain with keywords");
            }
        }
        if (!req.has_param("domain") && br.domain.empty()) {
            for (const auto& row : br.urls) {
                if (!row.domain) throw api_error(400, "invalid_value", "rows without a domain need a default domain");
            }
        }
        if (br.urls.empty() && br.domain.empty()) throw api_error(400, "invalid_value", "nothing to import");
        return br;
    }

    void routes() {
        server.Options(R"(.*)", [](const Request&, Response& res) { res.status = 204; });
        server.set_post_routing_handler([](const Request&, Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization, X-Client-Token");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Expose-Headers", "X-Client-Token");
        });
        server.set_error_handler([](const Request& req, Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                send_error(res, api_error(404, "not_found", "no route for " + req.method + " " + req.path));
            } else {
                send_error(res, api_error(res.status, "http_error", httplib::status_message(res.status)));
            }
        });

        server.Get("/health", wrap([this](const Request&, Response& res, const std::string&) {
            send_json(res, 200, {{"status", "ok"}, {"cards", sv.store.card_count()}, {"provider", sv.gateway.provider_id()}});
        }));

        server.Get("/meta/aspects", wrap([](const Request&, Response& res, const std::string&) {
            Json list = Json::array();
            for (Aspect a : kAllAspects) {
                list.push_back({{"name", std::string(canonical_name(a))}, {"color", std::string(aspect_color(a))}});
            }
            send_json(res, 200, {{"aspects", list}});
        }));

        server.Get("/meta/domains", wrap([this](const Request&, Response& res, const std::string&) {
            Json list = Json::array();
            for (const auto& d : sv.store.list_domains()) {
                if (d.approved) list.push_back(d);
            }
            send_json(res, 200, {{"domains", list}});
        }));

        server.Get("/cards", wrap([this](const Request& req, Response& res, const std::string& client) {
            const CardFilter filter = filter_from(req, client);
            CardOrder order = CardOrder::Shuffled;
            if (req.has_param("order")) {
                const auto o = req.get_param_value("order");
                if (o == "newest") {
                    order = CardOrder::Newest;
                } else if (o != "shuffled") {
                    throw api_error(400, "invalid_value", "order must be 'shuffled' or 'newest'");
                }
            }
            const std::uint64_t seed = req.has_param("seed") ? parse_uint("seed", req.get_param_value("seed")) : 0;
            const std::size_t offset =
                req.has_param("offset") ? static_cast<std::size_t>(parse_uint("offset", req.get_param_value("offset"))) : 0;
            const std::size_t limit = limit_param(req, "limit", 50);
            const auto page = sv.store.list_cards(filter, order, seed, offset, limit);
            send_json(res, 200,
                      {{"cards", card_list(page.cards)},
                       {"total", page.total},
                       {"offset", offset},
                       {"limit", limit},
                       {"order", order == CardOrder::Newest ? "newest" : "shuffled"},
                       {"seed", seed}});
        }));

        server.Get("/cards/search", wrap([this](const Request& req, Response& res, const std::string& client) {
            CardFilter filter = filter_from(req, client);
            const std::string q = filter.query;
            filter.query.clear();
            if (q.empty()) throw api_error(400, "invalid_value", "q is required");
            const std::size_t k = limit_param(req, "k", 10);
            Json results = Json::array();
            for (const auto& hit : sv.store.semantic_search(q, k, filter)) {
                results.push_back({{"card", card_view(hit.card, sv.store)}, {"score", hit.score}});
            }
            send_json(res, 200, {{"results", results}, {"k", k}});
        }));

        server.Get(R"(/cards/([A-Za-z0-9_]+))", wrap([this](const Request& req, Response& res, const std::string&) {
            const auto card = sv.store.get_card(req.matches[1].str());
            if (!card) throw UnknownCard("no card " + req.matches[1].str());
            send_json(res, 200, card_view(*card, sv.store));
        }));

        server.Get("/bookmarks", wrap([this](const Request&, Response& res, const std::string& client) {
            send_json(res, 200, {{"cards", card_list(sv.store.list_bookmarks(client))}});
        }));

        server.Post(R"(/bookmarks/([A-Za-z0-9_]+))", wrap([this](const Request& req, Response& res, const std::string& client) {
            sv.store.bookmark(client, req.matches[1].str());
            send_json(res, 200, {{"bookmarks", bookmark_ids(client)}});
        }));

        server.Delete(R"(/bookmarks/([A-Za-z0-9_]+))", wrap([this](const Request& req, Response& res, const std::string& client) {
            require_card(req.matches[1].str());
            sv.store.unbookmark(client, req.matches[1].str());
            send_json(res, 200, {{"bookmarks", bookmark_ids(client)}});
        }));

        server.Post(R"(/dismissals/([A-Za-z0-9_]+))", wrap([this](const Request& req, Response& res, const std::string& client) {
            sv.store.dismiss(client, req.matches[1].str());
            send_json(res, 200, {{"dismissed", req.matches[1].str()}});
        }));

        server.Post("/imports", wrap([this](const Request& req, Response& res, const std::string& client) {
            const Json body = parse_body(req);
            const std::string url = string_field(body, "url", true);
            const std::string domain = string_field(body, "domain", true);
            send_json(res, 200, submit_with_budget(client, url, domain));
        }));

        server.Get("/imports", admin([this](const Request& req, Response& res, const std::string&) {
            std::optional<ImportState> state;
            if (req.has_param("state")) state = parse_import_state(req.get_param_value("state"));
            send_json(res, 200, {{"imports", sv.store.list_imports(state)}});
        }));

        server.Post(R"(/imports/([A-Za-z0-9_-]+)/approve)", admin([this](const Request& req, Response& res, const std::string&) {
            const auto card = sv.store.approve_import(req.matches[1].str(), sv.clock.now_seconds());
            send_json(res, 200, {{"import", *sv.store.get_import(req.matches[1].str())}, {"card", card_view(card, sv.store)}});
        }));

        server.Post(R"(/imports/([A-Za-z0-9_-]+)/reject)", admin([this](const Request& req, Response& res, const std::string&) {
            const std::string note = string_field(parse_body(req), "note", false);
            sv.store.reject_import(req.matches[1].str(), sv.clock.now_seconds(), note);
            send_json(res, 200, {{"import", *sv.store.get_import(req.matches[1].str())}});
        }));

        server.Post("/admin/bulk-import", admin([this](const Request& req, Response& res, const std::string&) {
            send_json(res, 202, {{"job", jobs.submit(bulk_request(req))}});
        }));

        server.Get("/admin/jobs", admin([this](const Request&, Response& res, const std::string&) {
            send_json(res, 200, {{"jobs", jobs.list()}});
        }));

        server.Get(R"(/admin/jobs/([A-Za-z0-9_-]+))", admin([this](const Request& req, Response& res, const std::string&) {
            const auto job = jobs.get(req.matches[1].str());
            if (!job) throw api_error(404, "unknown_job", "no job " + req.matches[1].str());
            send_json(res, 200, *job);
        }));

        server.Get("/admin/reports", admin([this](const Request&, Response& res, const std::string&) {
            Json list = Json::array();
            for (const auto& r : sv.store.list_reports()) {
                list.push_back({{"id", r.id}, {"kind", r.kind}, {"created_at", format_timestamp(r.created_at)}, {"report", r.report}});
            }
            send_json(res, 200, {{"reports", list}});
        }));

        server.Get("/admin/usage", admin([this](const Request&, Response& res, const std::string&) {
            send_json(res, 200,
                      {{"by_tag", sv.gateway.usage_by_tag()}, {"total", sv.gateway.total_usage()}, {"spend_usd", sv.gateway.spend_usd()}});
        }));

        server.Post("/admin/update", admin([this](const Request&, Response& res, const std::string&) {
            const auto outcome = run_weekly_update(sv);
            send_json(res, 200, {{"report", outcome.report}, {"cards_published", outcome.cards_published}});
        }));
    }
};

ApiServer::ApiServer(Services& services, JobManager& jobs) : impl_(std::make_unique<Impl>(services, jobs)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw InvalidValue("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiServer::run(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port)) throw InvalidValue("cannot bind " + host + ":" + std::to_string(port));
    spdlog::info("listening on {}:{}", host, port);
    impl_->server.listen_after_bind();
}

void ApiServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace catalog
