#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "catalog/api.hpp"
#include "catalog/config.hpp"
#include "catalog/evalkit.hpp"
#include "catalog/extract.hpp"
#include "catalog/pipeline.hpp"
#include "catalog/serialize.hpp"
#include "catalog/service.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace catalog;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidValue("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw InvalidValue("cannot write " + path);
}

// Command-line flags that mirror config keys. Unset flags leave the file
// (or default) value alone; env overrides sit between the two.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> host, db, admin_token, provider, mock_rules, provider_url, embedding_url, model;
    std::optional<std::string> classifier, classifier_path;
    std::optional<int> port, update_days;
    std::optional<std::size_t> parallelism, body_budget;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON config file");
        app->add_option("--host", host);
        app->add_option("--port", port);
        app->add_option("--db", db, "SQLite path or :memory:");
        app->add_option("--admin-token", admin_token);
        app->add_option("--provider", provider, "mock or http");
        app->add_option("--mock-rules", mock_rules, "rule table for the mock provider");
        app->add_option("--provider-url", provider_url, "completion endpoint");
        app->add_option("--embedding-url", embedding_url);
        app->add_option("--model", model);
        app->add_option("--title-classifier", classifier, "accept_all, stub, baseline or remote");
        app->add_option("--title-classifier-path", classifier_path);
        app->add_option("--update-days", update_days);
        app->add_option("-j,--parallelism", parallelism);
        app->add_option("--body-budget", body_budget, "characters of article body sent to the model");
    }

    ServiceConfig load() const {
        ServiceConfig c = config_path.empty() ? ServiceConfig{} : load_config(config_path);
        apply_env_overrides(c);
        if (host) c.host = *host;
        if (port) c.port = *port;
        if (db) c.db_path = *db;
        if (admin_token) c.admin_token = *admin_token;
        if (provider) c.provider.kind = *provider;
        if (mock_rules) c.provider.mock_rules = *mock_rules;
        if (provider_url) c.provider.completion_url = *provider_url;
        if (embedding_url) c.provider.embedding_url = *embedding_url;
        if (model) c.provider.model = *model;
        if (classifier) c.title_classifier.kind = *classifier;
        if (classifier_path) c.title_classifier.path = *classifier_path;
        if (update_days) c.update_interval_days = *update_days;
        if (parallelism) c.parallelism = *parallelism;
        if (body_budget) c.body_char_budget = *body_budget;
        if (c.parallelism == 0) throw InvalidValue("parallelism must be at least 1");
        return c;
    }
};

int cmd_serve(const ConfigFlags& flags) {
    Runtime runtime(flags.load());
    auto& sv = runtime.services();
    JobManager jobs(sv);
    std::optional<UpdateScheduler> scheduler;
    if (sv.config.update_enabled) {
        scheduler.emplace(sv.clock, std::chrono::days{sv.config.update_interval_days}, [&sv] { run_weekly_update(sv); });
        scheduler->start(std::chrono::seconds{sv.config.scheduler_check_seconds});
    }
    ApiServer api(sv, jobs);
    const int port = api.start(sv.config.host, sv.config.port);
    spdlog::info("listening on {}:{}", sv.config.host, port);
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    spdlog::info("shutting down");
    if (scheduler) scheduler->stop();
    api.stop();
    return 0;
}

// Articles from a JSONL dump, or from a manifest of saved HTML pages
// ({"domain": {...}, "articles": [{"file", "url", "source"}]}).
std::vector<Article> load_articles(const std::string& articles_path, const std::string& manifest_path,
                                   std::optional<TechDomain>& domain_out, Timestamp fetched_at) {
    std::vector<Article> out;
    if (!manifest_path.empty()) {
        const Json manifest = Json::parse(read_file(manifest_path));
        if (manifest.contains("domain")) domain_out = manifest.at("domain").get<TechDomain>();
        const fs::path base = fs::path(manifest_path).parent_path();
        for (const auto& e : manifest.at("articles")) {
            const auto html = read_file((base / e.at("file").get<std::string>()).string());
            out.push_back(extract_article(html, canonicalize_url(e.at("url").get<std::string>()),
                                          e.at("source").get<std::string>(), fetched_at));
        }
    }
    if (!articles_path.empty()) {
        std::istringstream lines(read_file(articles_path));
        std::string line;
        while (std::getline(lines, line)) {
            if (!text::trim(line).empty()) out.push_back(Json::parse(line).get<Article>());
        }
    }
    if (out.empty()) throw InvalidValue("no articles: pass --articles or --manifest");
    return out;
}

struct PipelineFlags {
    std::string articles, manifest, domain, created_at, out = "-", report, table;
    std::vector<std::string> keywords;
};

int cmd_pipeline_run(const ConfigFlags& flags, const PipelineFlags& pf) {
    auto config = flags.load();
    config.db_path = ":memory:";
    Runtime runtime(config);
    auto& sv = runtime.services();

    auto options = sv.config.pipeline_options();
    if (!pf.created_at.empty()) options.created_at = parse_timestamp(pf.created_at);
    std::optional<TechDomain> domain;
    const Timestamp fetched = options.created_at ? *options.created_at
                                                 : std::chrono::floor<std::chrono::seconds>(sv.clock.now());
    const auto articles = load_articles(pf.articles, pf.manifest, domain, fetched);
    if (!pf.domain.empty()) domain = TechDomain{pf.domain, pf.keywords.empty() ? std::vector{pf.domain} : pf.keywords, true};
    if (!domain) throw InvalidValue("no domain: pass --domain or a manifest with one");

    const auto result = run_pipeline(articles, *domain, sv.classifier, sv.gateway, options);
    write_file(pf.out, cards_to_jsonl(result.cards));
    if (!pf.report.empty()) write_file(pf.report, Json(result.report).dump(2) + "\n");
    if (!pf.table.empty()) write_file(pf.table, render_funnel_table(result.report));
    std::cerr << "retrieved " << result.report.totals.retrieved << ", title " << result.report.totals.after_title_filter
              << ", content " << result.report.totals.after_content_filter << ", cards "
              << result.report.totals.cards_emitted << "\n";
    return 0;
}

struct BulkFlags {
    std::string csv, domain, table;
    std::vector<std::string> keywords, sources;
    std::size_t limit = 50;
};

int cmd_bulk_import(const ConfigFlags& flags, const BulkFlags& bf) {
    Runtime runtime(flags.load());
    auto& sv = runtime.services();
    BulkRequest req;
    req.domain = bf.domain;
    req.keywords = bf.keywords;
    req.sources = bf.sources;
    req.limit_per_keyword = bf.limit;
    if (!bf.csv.empty()) req.urls = parse_url_list(read_file(bf.csv));
    else if (bf.keywords.empty()) throw InvalidValue("pass --csv or --keyword");
    const auto outcome = run_bulk_import(sv, req, [](std::size_t total, const FunnelCounts& c) {
        std::cerr << "\r" << c.retrieved << "/" << total << " articles" << std::flush;
    });
    std::cerr << "\n";
    std::cout << Json(outcome.report).dump(2) << "\n";
    if (!bf.table.empty()) write_file(bf.table, render_funnel_table(outcome.report));
    std::cerr << outcome.cards_published << " cards published\n";
    return 0;
}

struct EvalFlags {
    std::string data, model_out, annotations, report, cards, config_for_screen;
    std::size_t synthetic = 0;
    std::uint64_t seed = 42;
    double ratio = 0.8;
};

int cmd_eval_baseline(const EvalFlags& ef) {
    std::vector<LabeledTitle> items;
    if (!ef.data.empty()) items = read_labeled_titles(read_file(ef.data));
    else if (ef.synthetic > 0) items = synthetic_titles(ef.synthetic, ef.seed);
    else throw InvalidValue("pass --data or --synthetic");
    const auto ev = evaluate_title_baseline(items, ef.seed, ef.ratio);
    Json out = ev.metrics;
    out["train_size"] = ev.train_size;
    out["test_size"] = ev.test_size;
    out["seed"] = ef.seed;
    std::cout << out.dump(2) << "\n";
    if (!ef.model_out.empty()) write_file(ef.model_out, Json(ev.model).dump() + "\n");
    return 0;
}

int cmd_eval_agreement(const EvalFlags& ef) {
    const auto rows = read_annotations(read_file(ef.annotations));
    std::vector<std::string> a, b;
    for (const auto& r : rows) {
        a.push_back(r.label_a);
        b.push_back(r.label_b);
    }
    std::cout << Json{{"items", rows.size()}, {"raw_agreement", raw_agreement(a, b)}, {"kappa", cohen_kappa(a, b)}}.dump(2)
              << "\n";
    return 0;
}

int cmd_eval_funnel(const EvalFlags& ef) {
    const auto report = Json::parse(read_file(ef.report)).get<PipelineReport>();
    std::cout << render_funnel_table(report);
    return 0;
}

int cmd_eval_screen(const ConfigFlags& flags) {
    Runtime runtime(flags.load());
    auto& store = runtime.services().store;
    Json flagged = Json::array();
    std::size_t total = 0;
    for (std::size_t offset = 0;; offset += 200) {
        const auto page = store.list_cards({}, CardOrder::Newest, 0, offset, 200);
        for (const auto& card : page.cards) {
            ++total;
            const auto article = store.get_article(card.article_id);
            if (!article) continue;
            const auto flags_for = screen_summary(card.summary, *article);
            if (flags_for.empty()) continue;
            Json names = Json::array();
            for (auto f : flags_for) names.push_back(to_string(f));
            flagged.push_back({{"card", card.id}, {"flags", names}});
        }
        if (offset + 200 >= page.total) break;
    }
    std::cout << Json{{"cards", total}, {"flagged", flagged}}.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curate, store and serve consequence cards"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level)->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

    ConfigFlags flags;

    auto* serve = app.add_subcommand("serve", "Run the HTTP service and the weekly update");
    flags.attach(serve);

    auto* pipeline = app.add_subcommand("pipeline", "Offline curation");
    pipeline->require_subcommand(1);
    PipelineFlags pf;
    auto* prun = pipeline->add_subcommand("run", "Curate a batch of articles into cards (JSONL)");
    flags.attach(prun);
    prun->add_option("--articles", pf.articles, "JSONL of extracted articles");
    prun->add_option("--manifest", pf.manifest, "manifest of saved HTML pages");
    prun->add_option("--domain", pf.domain, "technology domain (overrides the manifest)");
    prun->add_option("--keyword", pf.keywords);
    prun->add_option("--created-at", pf.created_at, "batch timestamp, RFC 3339");
    prun->add_option("-o,--out", pf.out, "cards JSONL, - for stdout");
    prun->add_option("--report", pf.report, "funnel report JSON");
    prun->add_option("--table", pf.table, "funnel table CSV");

    BulkFlags bf;
    auto* bulk = app.add_subcommand("bulk-import", "Fetch, curate and publish a URL list or a keyword crawl");
    flags.attach(bulk);
    bulk->add_option("--csv", bf.csv, "CSV with a url column and optional domain column");
    bulk->add_option("--domain", bf.domain, "domain for rows without one")->required();
    bulk->add_option("--keyword", bf.keywords);
    bulk->add_option("--source", bf.sources, "restrict a keyword crawl to these sources");
    bulk->add_option("--limit", bf.limit, "results per keyword and source");
    bulk->add_option("--table", bf.table, "funnel table CSV");

    EvalFlags ef;
    auto* eval = app.add_subcommand("eval", "Evaluation helpers");
    eval->require_subcommand(1);
    auto* baseline = eval->add_subcommand("baseline", "Train and score the title baseline");
    baseline->add_option("--data", ef.data, "CSV with text,label columns");
    baseline->add_option("--synthetic", ef.synthetic, "use N generated titles instead");
    baseline->add_option("--seed", ef.seed);
    baseline->add_option("--ratio", ef.ratio, "train share");
    baseline->add_option("--model-out", ef.model_out);
    auto* agreement = eval->add_subcommand("agreement", "Raw agreement and Cohen's kappa of two annotators");
    agreement->add_option("--annotations", ef.annotations, "CSV with text,label_a,label_b")->required();
    auto* funnel = eval->add_subcommand("funnel", "Render a funnel report as the CSV table");
    funnel->add_option("--report", ef.report)->required();
    auto* screen = eval->add_subcommand("screen", "Flag stored summaries for manual review");
    flags.attach(screen);

    std::string export_dir, import_dir;
    auto* exp = app.add_subcommand("export", "Write cards.jsonl and sidecar.json");
    flags.attach(exp);
    exp->add_option("--out", export_dir)->required();
    auto* imp = app.add_subcommand("import", "Load an export into the store");
    flags.attach(imp);
    imp->add_option("--from", import_dir)->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*serve) return cmd_serve(flags);
        if (*prun) return cmd_pipeline_run(flags, pf);
        if (*bulk) return cmd_bulk_import(flags, bf);
        if (*baseline) return cmd_eval_baseline(ef);
        if (*agreement) return cmd_eval_agreement(ef);
        if (*funnel) return cmd_eval_funnel(ef);
        if (*screen) return cmd_eval_screen(flags);
        if (*exp) {
            Runtime runtime(flags.load());
            runtime.services().store.export_to(export_dir);
            std::cerr << runtime.services().store.card_count() << " cards exported\n";
            return 0;
        }
        if (*imp) {
            Runtime runtime(flags.load());
            runtime.services().store.import_from(import_dir);
            std::cerr << runtime.services().store.card_count() << " cards in store\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
