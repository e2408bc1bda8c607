#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catalog/config.hpp"
#include "catalog/evalkit.hpp"
#include "catalog/extract.hpp"
#include "catalog/gateway.hpp"
#include "catalog/pipeline.hpp"
#include "catalog/serialize.hpp"
#include "catalog/store.hpp"
#include "catalog/url.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace catalog;

namespace {

// JSON crosses the boundary as Python objects via the json module.
py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
Json from_py(const py::handle& o) {
    return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidValue("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GatewayLimits unpaced() {
    GatewayLimits l;
    l.requests_per_minute = 0;
    return l;
}

std::shared_ptr<Provider> mock_provider(const std::string& rules, std::uint64_t seed, std::size_t dimension) {
    if (!rules.empty()) return MockProvider::load(rules);
    return std::make_shared<MockProvider>(std::vector<MockRule>{}, seed, "", dimension);
}

CardFilter make_filter(const std::vector<std::string>& domains, const std::vector<std::string>& aspects,
                       const std::string& query, const std::string& client) {
    CardFilter f;
    f.domains.insert(domains.begin(), domains.end());
    for (const auto& a : aspects) f.aspects.insert(parse_aspect(a));
    f.query = query;
    f.exclude_for = client;
    return f;
}

// Store plus the mock embedder it needs.
class Catalog {
public:
    Catalog(const std::string& db, const std::string& mock_rules, std::uint64_t seed, std::size_t dimension)
        : gateway_(mock_provider(mock_rules, seed, dimension), clock_, {}, unpaced()), store_(db, gateway_) {}

    Store& store() { return store_; }
    Gateway& gateway() { return gateway_; }

private:
    SystemClock clock_;
    Gateway gateway_;
    Store store_;
};

py::list cards_py(const std::vector<ConsequenceCard>& cards) {
    py::list out;
    for (const auto& c : cards) out.append(to_py(Json(c)));
    return out;
}

py::dict run_pipeline_py(const std::string& manifest, const py::list& articles, std::optional<py::dict> domain,
                         const std::string& mock_rules, const std::string& title_labels, std::size_t parallelism,
                         const std::string& created_at) {
    FakeClock clock(created_at.empty() ? std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now())
                                       : parse_timestamp(created_at));
    Gateway gw(mock_provider(mock_rules, 7, 64), clock, {}, unpaced());
    std::shared_ptr<TitleClassifier> classifier =
        title_labels.empty() ? std::make_shared<StubTitleClassifier>(std::vector<LabeledTitle>{}, 1.0)
                             : std::shared_ptr<TitleClassifier>(StubTitleClassifier::load(title_labels));

    std::optional<TechDomain> d;
    std::vector<Article> input;
    const Timestamp stamp = std::chrono::floor<std::chrono::seconds>(clock.now());
    if (!manifest.empty()) {
        const Json m = Json::parse(read_file(manifest));
        if (m.contains("domain")) d = m.at("domain").get<TechDomain>();
        const auto base = std::filesystem::path(manifest).parent_path();
        for (const auto& e : m.at("articles")) {
            input.push_back(extract_article(read_file((base / e.at("file").get<std::string>()).string()),
                                            canonicalize_url(e.at("url").get<std::string>()),
                                            e.at("source").get<std::string>(), stamp));
        }
    }
    for (const auto& a : articles) input.push_back(from_py(a).get<Article>());
    if (domain) d = from_py(*domain).get<TechDomain>();
    if (!d) throw InvalidValue("no domain given");

    PipelineOptions o;
    o.parallelism = parallelism;
    o.created_at = stamp;
    PipelineResult r;
    {
        py::gil_scoped_release release;
        r = run_pipeline(input, *d, *classifier, gw, o);
    }
    py::dict out;
    out["cards"] = cards_py(r.cards);
    out["report"] = to_py(Json(r.report));
    out["jsonl"] = cards_to_jsonl(r.cards);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Consequence card curation, storage and evaluation";

    static py::exception<Error> catalog_error(m, "CatalogError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object cls = py::reinterpret_borrow<py::object>(catalog_error.ptr());
            py::object inst = cls(std::string(e.what()));
            inst.attr("code") = std::string(e.code());
            PyErr_SetObject(catalog_error.ptr(), inst.ptr());
        }
    });

    m.def("canonicalize_url", [](const std::string& u) { return canonicalize_url(u); });
    m.def("aspects", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (Aspect a : kAllAspects) out.emplace_back(canonical_name(a), aspect_color(a));
        return out;
    }, "(name, color) for each of the ten aspects, in canonical order");
    m.def("parse_aspect", [](const std::string& s) { return std::string(canonical_name(parse_aspect(s))); });
    m.def("default_prompts", [] { return to_py(Json(StagePromptSet::defaults())); });

    m.def("run_pipeline", &run_pipeline_py, py::arg("manifest") = "", py::arg("articles") = py::list(),
          py::arg("domain") = py::none(), py::arg("mock_rules") = "", py::arg("title_labels") = "",
          py::arg("parallelism") = 4, py::arg("created_at") = "",
          "Curate articles with the mock provider. Returns {cards, report, jsonl}.");
    m.def("render_funnel_table", [](const py::dict& report) {
        return render_funnel_table(from_py(report).get<PipelineReport>());
    });

    m.def("compute_metrics", [](const std::vector<bool>& p, const std::vector<bool>& l) {
        return to_py(Json(compute_metrics(p, l)));
    });
    m.def("cohen_kappa", &cohen_kappa);
    m.def("raw_agreement", &raw_agreement);
    m.def("synthetic_titles", [](std::size_t n, std::uint64_t seed) {
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& t : synthetic_titles(n, seed)) out.emplace_back(t.title, t.relevant);
        return out;
    });
    m.def("evaluate_title_baseline",
          [](const std::vector<std::pair<std::string, bool>>& items, std::uint64_t seed, double ratio) {
              std::vector<LabeledTitle> v;
              for (const auto& [t, r] : items) v.push_back({t, r});
              const auto ev = evaluate_title_baseline(v, seed, ratio);
              Json j = ev.metrics;
              j["train_size"] = ev.train_size;
              j["test_size"] = ev.test_size;
              return to_py(j);
          },
          py::arg("items"), py::arg("seed") = 42, py::arg("ratio") = 0.8);

    py::class_<Catalog>(m, "Catalog")
        .def(py::init<const std::string&, const std::string&, std::uint64_t, std::size_t>(), py::arg("db") = ":memory:",
             py::arg("mock_rules") = "", py::arg("seed") = 7, py::arg("dimension") = 64)
        .def("import_from", [](Catalog& c, const std::string& dir) { c.store().import_from(dir); })
        .def("export_to", [](Catalog& c, const std::string& dir) { c.store().export_to(dir); })
        .def("card_count", [](Catalog& c) { return c.store().card_count(); })
        .def("add_article", [](Catalog& c, const py::dict& a) { c.store().put_article(from_py(a).get<Article>()); })
        .def("add_card", [](Catalog& c, const py::dict& card) {
            return c.store().upsert_card(from_py(card).get<ConsequenceCard>());
        })
        .def("get_card", [](Catalog& c, const std::string& id) -> py::object {
            auto card = c.store().get_card(id);
            return card ? to_py(Json(*card)) : py::none();
        })
        .def("domains", [](Catalog& c) { return to_py(Json(c.store().list_domains())); })
        .def("list_cards",
             [](Catalog& c, const std::vector<std::string>& domains, const std::vector<std::string>& aspects,
                const std::string& query, const std::string& order, std::uint64_t seed, std::size_t offset,
                std::size_t limit, const std::string& client) {
                 if (order != "shuffled" && order != "newest") throw InvalidValue("order must be shuffled or newest");
                 const auto page = c.store().list_cards(make_filter(domains, aspects, query, client),
                                                        order == "newest" ? CardOrder::Newest : CardOrder::Shuffled,
                                                        seed, offset, limit);
                 py::dict out;
                 out["cards"] = cards_py(page.cards);
                 out["total"] = page.total;
                 return out;
             },
             py::arg("domains") = std::vector<std::string>{}, py::arg("aspects") = std::vector<std::string>{},
             py::arg("query") = "", py::arg("order") = "shuffled", py::arg("seed") = 0, py::arg("offset") = 0,
             py::arg("limit") = 50, py::arg("client") = "")
        .def("semantic_search",
             [](Catalog& c, const std::string& q, std::size_t k) {
                 std::vector<std::pair<std::string, double>> out;
                 for (const auto& hit : c.store().semantic_search(q, k)) out.emplace_back(hit.card.id, hit.score);
                 return out;
             },
             py::arg("query"), py::arg("k") = 10)
        .def("bookmark", [](Catalog& c, const std::string& client, const std::string& id) { c.store().bookmark(client, id); })
        .def("unbookmark",
             [](Catalog& c, const std::string& client, const std::string& id) { c.store().unbookmark(client, id); })
        .def("bookmarks",
             [](Catalog& c, const std::string& client) {
                 std::vector<std::string> ids;
                 for (const auto& card : c.store().list_bookmarks(client)) ids.push_back(card.id);
                 return ids;
             })
        .def("dismiss", [](Catalog& c, const std::string& client, const std::string& id) { c.store().dismiss(client, id); })
        .def_static("new_client_token", &new_client_token);
}
