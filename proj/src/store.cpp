#include "catalog/store.hpp"

#include "catalog/error.hpp"
#include "catalog/serialize.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

#include <openssl/rand.h>
#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace catalog {

std::string new_client_token() {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) throw StorageError("system random generator failed");
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    std::string out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (unsigned char b : bytes) {
        acc = (acc << 8) | b;
        bits += 8;
        while (bits >= 6) {
            bits -= 6;
            out += kAlphabet[(acc >> bits) & 0x3F];
        }
    }
    if (bits > 0) out += kAlphabet[(acc << (6 - bits)) & 0x3F];
    return out;
}

bool is_client_token(std::string_view s) {
    if (s.size() != 22) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

std::string_view to_string(ImportState s) noexcept {
    switch (s) {
        case ImportState::Pending: return "pending";
        case ImportState::Approved: return "approved";
        case ImportState::Rejected: return "rejected";
    }
    return "pending";
}

ImportState parse_import_state(std::string_view s) {
    if (s == "pending") return ImportState::Pending;
    if (s == "approved") return ImportState::Approved;
    if (s == "rejected") return ImportState::Rejected;
    throw InvalidValue("unknown import state: " + std::string(s));
}

void to_json(Json& j, const PendingImport& p) {
    j = Json{{"id", p.id},
             {"submitted_by", p.submitted_by},
             {"url", p.url},
             {"proposed_domain", p.proposed_domain},
             {"state", to_string(p.state)},
             {"submitted_at", format_timestamp(p.submitted_at)},
             {"rejected_stage", p.rejected_stage},
             {"note", p.note}};
    j["article"] = p.article ? Json(*p.article) : Json(nullptr);
    j["extracted_card"] = p.extracted_card ? Json(*p.extracted_card) : Json(nullptr);
    j["decided_at"] = p.decided_at ? Json(format_timestamp(*p.decided_at)) : Json(nullptr);
}

void from_json(const Json& j, PendingImport& p) {
    j.at("id").get_to(p.id);
    j.at("submitted_by").get_to(p.submitted_by);
    j.at("url").get_to(p.url);
    j.at("proposed_domain").get_to(p.proposed_domain);
    p.state = parse_import_state(j.at("state").get<std::string>());
    p.submitted_at = parse_timestamp(j.at("submitted_at").get<std::string>());
    p.rejected_stage = j.value("rejected_stage", "");
    p.note = j.value("note", "");
    p.article.reset();
    p.extracted_card.reset();
    p.decided_at.reset();
    if (j.contains("article") && !j["article"].is_null()) p.article = j["article"].get<Article>();
    if (j.contains("extracted_card") && !j["extracted_card"].is_null()) {
        p.extracted_card = j["extracted_card"].get<ConsequenceCard>();
    }
    if (j.contains("decided_at") && !j["decided_at"].is_null()) {
        p.decided_at = parse_timestamp(j["decided_at"].get<std::string>());
    }
}

std::uint64_t shuffle_key(std::uint64_t seed, std::string_view card_id) noexcept {
    return text::mix64(seed ^ text::fnv1a64(card_id));
}

namespace {

class Statement {
public:
    Statement(sqlite3* db, std::string_view sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) != SQLITE_OK) {
            throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, std::string_view v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind_blob(int i, const void* data, std::size_t n) {
        check(sqlite3_bind_blob(stmt_, i, data, static_cast<int>(n), SQLITE_TRANSIENT));
        return *this;
    }

    // true while rows are available
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StorageError(std::string("step failed: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }

    std::string text(int col) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::vector<double> doubles(int col) const {
        const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col));
        std::vector<double> v(n / sizeof(double));
        if (!v.empty()) std::memcpy(v.data(), sqlite3_column_blob(stmt_, col), v.size() * sizeof(double));
        return v;
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StorageError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS domains (name TEXT PRIMARY KEY, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS articles (
  id TEXT PRIMARY KEY, canonical_url TEXT NOT NULL UNIQUE, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS cards (
  id TEXT PRIMARY KEY, article_id TEXT NOT NULL REFERENCES articles(id), domain TEXT NOT NULL,
  json TEXT NOT NULL, embedding BLOB NOT NULL, UNIQUE (article_id, domain));
CREATE TABLE IF NOT EXISTS bookmarks (
  client TEXT NOT NULL, card_id TEXT NOT NULL, seq INTEGER NOT NULL, PRIMARY KEY (client, card_id));
CREATE TABLE IF NOT EXISTS dismissals (
  client TEXT NOT NULL, card_id TEXT NOT NULL, PRIMARY KEY (client, card_id));
CREATE TABLE IF NOT EXISTS imports (id TEXT PRIMARY KEY, state TEXT NOT NULL, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS reports (
  id INTEGER PRIMARY KEY AUTOINCREMENT, kind TEXT NOT NULL, created_at TEXT NOT NULL, json TEXT NOT NULL);
INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', '1');
)sql";

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
}

}  // namespace

struct Store::Impl {
    Embedder& embedder;
    sqlite3* db = nullptr;
    std::mutex write_mu;              // serializes writers (database + mirror)
    mutable std::shared_mutex mu;     // guards the mirror

    std::map<std::string, TechDomain, std::less<>> domains;
    std::map<std::string, Article, std::less<>> articles;
    std::unordered_map<std::string, std::string> article_by_url;
    std::map<std::string, ConsequenceCard, std::less<>> cards;
    std::map<std::string, std::vector<double>, std::less<>> vectors;
    std::map<std::string, std::vector<std::string>, std::less<>> bookmarks;
    std::map<std::string, std::set<std::string, std::less<>>, std::less<>> dismissals;
    std::map<std::string, PendingImport, std::less<>> imports;
    std::vector<StoredReport> reports;

    explicit Impl(Embedder& e) : embedder(e) {}

    void exec(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw StorageError(msg);
        }
    }

    // Runs `fn` inside one transaction; rolls back if it throws.
    template <typename Fn>
    void transaction(Fn&& fn) {
        exec("BEGIN IMMEDIATE");
        try {
            fn();
            exec("COMMIT");
        } catch (...) {
            sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
            throw;
        }
    }

    void write_domain(const TechDomain& d) {
        Statement(db, "INSERT OR REPLACE INTO domains (name, json) VALUES (?, ?)")
            .bind(1, d.name)
            .bind(2, canonical_json(Json(d)))
            .run();
    }

    void write_article(const Article& a) {
        Statement(db, "INSERT OR REPLACE INTO articles (id, canonical_url, json) VALUES (?, ?, ?)")
            .bind(1, a.id)
            .bind(2, a.canonical_url)
            .bind(3, canonical_json(Json(a)))
            .run();
    }

    void write_card(const ConsequenceCard& c, const std::vector<double>& v) {
        Statement(db, "DELETE FROM cards WHERE article_id = ? AND domain = ? AND id <> ?")
            .bind(1, c.article_id)
            .bind(2, c.domain)
            .bind(3, c.id)
            .run();
        Statement(db, "INSERT OR REPLACE INTO cards (id, article_id, domain, json, embedding) VALUES (?, ?, ?, ?, ?)")
            .bind(1, c.id)
            .bind(2, c.article_id)
            .bind(3, c.domain)
            .bind(4, canonical_card_json(c))
            .bind_blob(5, v.data(), v.size() * sizeof(double))
            .run();
    }

    void write_import(const PendingImport& p) {
        Statement(db, "INSERT OR REPLACE INTO imports (id, state, json) VALUES (?, ?, ?)")
            .bind(1, p.id)
            .bind(2, to_string(p.state))
            .bind(3, canonical_json(Json(p)))
            .run();
    }

    // mirror updates; caller holds the exclusive lock
    void mirror_article(const Article& a) {
        if (auto it = articles.find(a.id); it != articles.end()) article_by_url.erase(it->second.canonical_url);
        articles[a.id] = a;
        article_by_url[a.canonical_url] = a.id;
    }

    void mirror_card(const ConsequenceCard& c, std::vector<double> v) {
        for (auto it = cards.begin(); it != cards.end();) {
            if (it->first != c.id && it->second.article_id == c.article_id && it->second.domain == c.domain) {
                vectors.erase(it->first);
                it = cards.erase(it);
            } else {
                ++it;
            }
        }
        cards[c.id] = c;
        vectors[c.id] = std::move(v);
    }

    std::vector<double> embed_summary(const std::string& summary) {
        auto v = embedder.embed(summary);
        if (v.size() != embedder.dimension()) throw StorageError("embedder returned a vector of the wrong size");
        normalize(v);
        return v;
    }

    void load() {
        {
            Statement s(db, "SELECT json FROM domains");
            while (s.step()) {
                auto d = Json::parse(s.text(0)).get<TechDomain>();
                domains[d.name] = std::move(d);
            }
        }
        {
            Statement s(db, "SELECT json FROM articles");
            while (s.step()) mirror_article(Json::parse(s.text(0)).get<Article>());
        }
        std::vector<std::string> stale;
        {
            Statement s(db, "SELECT json, embedding FROM cards");
            while (s.step()) {
                auto c = parse_card_json(s.text(0));
                auto v = s.doubles(1);
                if (v.size() != embedder.dimension()) stale.push_back(c.id);
                vectors[c.id] = std::move(v);
                cards[c.id] = std::move(c);
            }
        }
        if (!stale.empty()) {
            // embedding model changed since the vectors were written
            transaction([&] {
                for (const auto& id : stale) {
                    auto v = embed_summary(cards[id].summary);
                    Statement(db, "UPDATE cards SET embedding = ? WHERE id = ?")
                        .bind_blob(1, v.data(), v.size() * sizeof(double))
                        .bind(2, id)
                        .run();
                    vectors[id] = std::move(v);
                }
            });
        }
        {
            Statement s(db, "SELECT client, card_id FROM bookmarks ORDER BY client, seq");
            while (s.step()) bookmarks[s.text(0)].push_back(s.text(1));
        }
        {
            Statement s(db, "SELECT client, card_id FROM dismissals");
            while (s.step()) dismissals[s.text(0)].insert(s.text(1));
        }
        {
            Statement s(db, "SELECT json FROM imports");
            while (s.step()) {
                auto p = Json::parse(s.text(0)).get<PendingImport>();
                imports[p.id] = std::move(p);
            }
        }
        {
            Statement s(db, "SELECT id, kind, created_at, json FROM reports ORDER BY id");
            while (s.step()) {
                reports.push_back({s.integer(0), s.text(1), parse_timestamp(s.text(2)),
                                   Json::parse(s.text(3)).get<PipelineReport>()});
            }
        }
    }

    bool matches(const ConsequenceCard& c, const CardFilter& f,
                 const std::set<std::string, std::less<>>* dismissed) const {
        if (!f.domains.empty() && !f.domains.count(c.domain)) return false;
        if (!f.aspects.empty() && !f.aspects.count(c.aspect)) return false;
        if (dismissed && dismissed->count(c.id)) return false;
        if (!f.query.empty()) {
            if (text::contains_ci(c.summary, f.query)) return true;
            auto it = articles.find(c.article_id);
            return it != articles.end() && text::contains_ci(it->second.title, f.query);
        }
        return true;
    }

    const std::set<std::string, std::less<>>* dismissed_for(const std::string& client) const {
        if (client.empty()) return nullptr;
        auto it = dismissals.find(client);
        return it == dismissals.end() ? nullptr : &it->second;
    }

    void require_card(std::string_view id) const {
        if (!cards.count(id)) throw UnknownCard("no card with id " + std::string(id));
    }
};

Store::Store(const std::string& path, Embedder& embedder) : impl_(std::make_unique<Impl>(embedder)) {
    if (sqlite3_open_v2(path.c_str(), &impl_->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = impl_->db ? sqlite3_errmsg(impl_->db) : "out of memory";
        sqlite3_close(impl_->db);
        throw StorageError("cannot open " + path + ": " + msg);
    }
    try {
        sqlite3_busy_timeout(impl_->db, 5000);
        impl_->exec("PRAGMA foreign_keys = ON");
        if (path != ":memory:") impl_->exec("PRAGMA journal_mode = WAL");
        impl_->exec("PRAGMA synchronous = FULL");
        impl_->exec(kSchema);
        impl_->load();
    } catch (...) {
        sqlite3_close(impl_->db);
        throw;
    }
}

Store::~Store() {
    if (impl_ && impl_->db) sqlite3_close(impl_->db);
}

void Store::upsert_domain(const TechDomain& domain) {
    domain.validate();
    std::lock_guard w(impl_->write_mu);
    impl_->transaction([&] { impl_->write_domain(domain); });
    std::unique_lock lock(impl_->mu);
    impl_->domains[domain.name] = domain;
}

std::optional<TechDomain> Store::get_domain(std::string_view name) const {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->domains.find(name);
    if (it == impl_->domains.end()) return std::nullopt;
    return it->second;
}

std::vector<TechDomain> Store::list_domains() const {
    std::shared_lock lock(impl_->mu);
    std::vector<TechDomain> out;
    for (const auto& [name, d] : impl_->domains) out.push_back(d);
    return out;
}

bool Store::has_article(std::string_view canonical_url) const {
    std::shared_lock lock(impl_->mu);
    return impl_->article_by_url.count(std::string(canonical_url)) > 0;
}

void Store::put_article(const Article& article) {
    if (article.id != article_id_for(article.canonical_url)) {
        throw InvalidValue("article id does not match its canonical url");
    }
    std::lock_guard w(impl_->write_mu);
    impl_->transaction([&] { impl_->write_article(article); });
    std::unique_lock lock(impl_->mu);
    impl_->mirror_article(article);
}

std::optional<Article> Store::get_article(std::string_view id) const {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->articles.find(id);
    if (it == impl_->articles.end()) return std::nullopt;
    return it->second;
}

std::size_t Store::article_count() const {
    std::shared_lock lock(impl_->mu);
    return impl_->articles.size();
}

std::string Store::upsert_card(const ConsequenceCard& card) {
    card.validate();
    if (!get_article(card.article_id)) {
        throw MissingArticle("card " + card.id + " references unknown article " + card.article_id);
    }
    auto v = impl_->embed_summary(card.summary);
    std::lock_guard w(impl_->write_mu);
    {
        std::shared_lock lock(impl_->mu);
        if (!impl_->articles.count(card.article_id)) {
            throw MissingArticle("card " + card.id + " references unknown article " + card.article_id);
        }
    }
    impl_->transaction([&] { impl_->write_card(card, v); });
    std::unique_lock lock(impl_->mu);
    impl_->mirror_card(card, std::move(v));
    return card.id;
}

std::optional<ConsequenceCard> Store::get_card(std::string_view id) const {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->cards.find(id);
    if (it == impl_->cards.end()) return std::nullopt;
    return it->second;
}

std::size_t Store::card_count() const {
    std::shared_lock lock(impl_->mu);
    return impl_->cards.size();
}

std::size_t Store::vector_count() const {
    std::shared_lock lock(impl_->mu);
    return impl_->vectors.size();
}

std::vector<double> Store::card_vector(std::string_view id) const {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->vectors.find(id);
    if (it == impl_->vectors.end()) throw UnknownCard("no card with id " + std::string(id));
    return it->second;
}

CardPage Store::list_cards(const CardFilter& filter, CardOrder order, std::uint64_t seed, std::size_t offset,
                           std::size_t limit) const {
    if (limit == 0 || limit > kMaxPageSize) {
        throw InvalidValue("limit must be between 1 and " + std::to_string(kMaxPageSize));
    }
    std::shared_lock lock(impl_->mu);
    const auto* dismissed = impl_->dismissed_for(filter.exclude_for);
    std::vector<const ConsequenceCard*> hits;
    for (const auto& [id, c] : impl_->cards) {
        if (impl_->matches(c, filter, dismissed)) hits.push_back(&c);
    }
    if (order == CardOrder::Shuffled) {
        std::vector<std::pair<std::uint64_t, const ConsequenceCard*>> keyed;
        keyed.reserve(hits.size());
        for (const auto* c : hits) keyed.emplace_back(shuffle_key(seed, c->id), c);
        std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
        });
        for (std::size_t i = 0; i < keyed.size(); ++i) hits[i] = keyed[i].second;
    } else {
        std::sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
            return a->created_at != b->created_at ? a->created_at > b->created_at : a->id < b->id;
        });
    }
    CardPage page;
    page.total = hits.size();
    for (std::size_t i = offset; i < hits.size() && page.cards.size() < limit; ++i) page.cards.push_back(*hits[i]);
    return page;
}

std::vector<ScoredCard> Store::nearest(const std::vector<double>& query_vector, std::size_t k,
                                       const CardFilter& filter) const {
    if (k == 0) throw InvalidValue("k must be >= 1");
    std::vector<double> q = query_vector;
    normalize(q);
    std::shared_lock lock(impl_->mu);
    const auto* dismissed = impl_->dismissed_for(filter.exclude_for);
    std::vector<std::pair<double, const ConsequenceCard*>> scored;
    for (const auto& [id, c] : impl_->cards) {
        if (!impl_->matches(c, filter, dismissed)) continue;
        const auto& v = impl_->vectors.at(id);
        if (v.size() != q.size()) throw InvalidValue("query vector has the wrong dimension");
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * q[i];
        scored.emplace_back(s, &c);
    }
    // scores equal up to rounding noise count as ties so the id decides
    const auto bucket = [](double s) { return std::llround(s * 1e9); };
    const auto better = [&](const auto& a, const auto& b) {
        const auto ba = bucket(a.first), bb = bucket(b.first);
        return ba != bb ? ba > bb : a.second->id < b.second->id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    std::vector<ScoredCard> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({*scored[i].second, scored[i].first});
    return out;
}

std::vector<ScoredCard> Store::semantic_search(std::string_view query, std::size_t k, const CardFilter& filter) const {
    if (k == 0) throw InvalidValue("k must be >= 1");
    return nearest(impl_->embedder.embed(query), k, filter);
}

void Store::bookmark(std::string_view client, std::string_view card_id) {
    if (client.empty()) throw InvalidValue("client token is empty");
    std::lock_guard w(impl_->write_mu);
    {
        std::shared_lock lock(impl_->mu);
        impl_->require_card(card_id);
        auto it = impl_->bookmarks.find(client);
        if (it != impl_->bookmarks.end() &&
            std::find(it->second.begin(), it->second.end(), card_id) != it->second.end()) {
            return;
        }
    }
    impl_->transaction([&] {
        Statement(impl_->db,
                  "INSERT OR IGNORE INTO bookmarks (client, card_id, seq) "
                  "SELECT ?1, ?2, COALESCE(MAX(seq), 0) + 1 FROM bookmarks WHERE client = ?1")
            .bind(1, client)
            .bind(2, card_id)
            .run();
    });
    std::unique_lock lock(impl_->mu);
    impl_->bookmarks[std::string(client)].emplace_back(card_id);
}

void Store::unbookmark(std::string_view client, std::string_view card_id) {
    std::lock_guard w(impl_->write_mu);
    impl_->transaction([&] {
        Statement(impl_->db, "DELETE FROM bookmarks WHERE client = ? AND card_id = ?").bind(1, client).bind(2, card_id).run();
    });
    std::unique_lock lock(impl_->mu);
    if (auto it = impl_->bookmarks.find(client); it != impl_->bookmarks.end()) {
        std::erase(it->second, std::string(card_id));
    }
}

std::vector<ConsequenceCard> Store::list_bookmarks(std::string_view client) const {
    std::shared_lock lock(impl_->mu);
    std::vector<ConsequenceCard> out;
    auto it = impl_->bookmarks.find(client);
    if (it == impl_->bookmarks.end()) return out;
    for (const auto& id : it->second) {
        if (auto c = impl_->cards.find(id); c != impl_->cards.end()) out.push_back(c->second);
    }
    return out;
}

void Store::dismiss(std::string_view client, std::string_view card_id) {
    if (client.empty()) throw InvalidValue("client token is empty");
    std::lock_guard w(impl_->write_mu);
    {
        std::shared_lock lock(impl_->mu);
        impl_->require_card(card_id);
    }
    impl_->transaction([&] {
        Statement(impl_->db, "INSERT OR IGNORE INTO dismissals (client, card_id) VALUES (?, ?)")
            .bind(1, client)
            .bind(2, card_id)
            .run();
    });
    std::unique_lock lock(impl_->mu);
    impl_->dismissals[std::string(client)].insert(std::string(card_id));
}

bool Store::is_dismissed(std::string_view client, std::string_view card_id) const {
    std::shared_lock lock(impl_->mu);
    const auto* d = impl_->dismissed_for(std::string(client));
    return d && d->count(card_id);
}

void Store::save_import(const PendingImport& item) {
    if (item.id.empty()) throw InvalidValue("import id is empty");
    if (item.state == ImportState::Approved && !item.extracted_card) {
        throw InvalidValue("an approved import must carry its card");
    }
    std::lock_guard w(impl_->write_mu);
    impl_->transaction([&] { impl_->write_import(item); });
    std::unique_lock lock(impl_->mu);
    impl_->imports[item.id] = item;
}

std::optional<PendingImport> Store::get_import(std::string_view id) const {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->imports.find(id);
    if (it == impl_->imports.end()) return std::nullopt;
    return it->second;
}

std::vector<PendingImport> Store::list_imports(std::optional<ImportState> state) const {
    std::shared_lock lock(impl_->mu);
    std::vector<PendingImport> out;
    for (const auto& [id, p] : impl_->imports) {
        if (!state || p.state == *state) out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.submitted_at != b.submitted_at ? a.submitted_at < b.submitted_at : a.id < b.id;
    });
    return out;
}

ConsequenceCard Store::approve_import(std::string_view id, Timestamp when) {
    std::optional<PendingImport> item = get_import(id);
    if (!item) throw UnknownImport("no import with id " + std::string(id));
    if (item->state != ImportState::Pending) {
        throw InvalidTransition("import " + item->id + " is already " + std::string(to_string(item->state)));
    }
    if (!item->extracted_card || !item->article) {
        throw InvalidTransition("import " + item->id + " has no extracted card to publish");
    }
    auto v = impl_->embed_summary(item->extracted_card->summary);

    std::lock_guard w(impl_->write_mu);
    // re-check under the writer lock; another approval may have won the race
    item = impl_->imports.at(std::string(id));
    if (item->state != ImportState::Pending) {
        throw InvalidTransition("import " + item->id + " is already " + std::string(to_string(item->state)));
    }
    TechDomain domain{item->proposed_domain, {item->proposed_domain}, true};
    {
        std::shared_lock lock(impl_->mu);
        if (auto it = impl_->domains.find(item->proposed_domain); it != impl_->domains.end()) {
            domain = it->second;
            domain.approved = true;
        }
    }
    item->state = ImportState::Approved;
    item->decided_at = when;
    impl_->transaction([&] {
        impl_->write_domain(domain);
        impl_->write_article(*item->article);
        impl_->write_card(*item->extracted_card, v);
        impl_->write_import(*item);
    });
    std::unique_lock lock(impl_->mu);
    impl_->domains[domain.name] = domain;
    impl_->mirror_article(*item->article);
    impl_->mirror_card(*item->extracted_card, std::move(v));
    impl_->imports[item->id] = *item;
    return *item->extracted_card;
}

void Store::reject_import(std::string_view id, Timestamp when, std::string note) {
    std::lock_guard w(impl_->write_mu);
    PendingImport item;
    {
        std::shared_lock lock(impl_->mu);
        auto it = impl_->imports.find(id);
        if (it == impl_->imports.end()) throw UnknownImport("no import with id " + std::string(id));
        item = it->second;
    }
    if (item.state != ImportState::Pending) {
        throw InvalidTransition("import " + item.id + " is already " + std::string(to_string(item.state)));
    }
    item.state = ImportState::Rejected;
    item.decided_at = when;
    if (!note.empty()) item.note = std::move(note);
    impl_->transaction([&] { impl_->write_import(item); });
    std::unique_lock lock(impl_->mu);
    impl_->imports[item.id] = item;
}

std::int64_t Store::save_report(const std::string& kind, Timestamp created_at, const PipelineReport& report) {
    std::lock_guard w(impl_->write_mu);
    std::int64_t id = 0;
    impl_->transaction([&] {
        Statement(impl_->db, "INSERT INTO reports (kind, created_at, json) VALUES (?, ?, ?)")
            .bind(1, kind)
            .bind(2, format_timestamp(created_at))
            .bind(3, canonical_json(Json(report)))
            .run();
        id = sqlite3_last_insert_rowid(impl_->db);
    });
    std::unique_lock lock(impl_->mu);
    impl_->reports.push_back({id, kind, created_at, report});
    return id;
}

std::vector<StoredReport> Store::list_reports() const {
    std::shared_lock lock(impl_->mu);
    return impl_->reports;
}

void Store::export_to(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::shared_lock lock(impl_->mu);
    {
        std::ofstream out(fs::path(dir) / "cards.jsonl", std::ios::binary);
        for (const auto& [id, c] : impl_->cards) out << canonical_card_json(c) << '\n';
        if (!out) throw StorageError("cannot write " + dir + "/cards.jsonl");
    }
    Json sidecar{{"domains", Json::array()}, {"articles", Json::array()}, {"imports", Json::array()}};
    for (const auto& [name, d] : impl_->domains) sidecar["domains"].push_back(d);
    for (const auto& [id, a] : impl_->articles) sidecar["articles"].push_back(a);
    for (const auto& [id, p] : impl_->imports) sidecar["imports"].push_back(p);
    std::ofstream out(fs::path(dir) / "sidecar.json", std::ios::binary);
    out << sidecar.dump(2, ' ', false, Json::error_handler_t::strict) << '\n';
    if (!out) throw StorageError("cannot write " + dir + "/sidecar.json");
}

void Store::import_from(const std::string& dir) {
    namespace fs = std::filesystem;
    auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw StorageError("cannot read " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    Json sidecar;
    try {
        sidecar = Json::parse(read(fs::path(dir) / "sidecar.json"));
    } catch (const Json::exception& e) {
        throw StorageError(std::string("bad sidecar.json: ") + e.what());
    }
    std::vector<TechDomain> domains;
    std::vector<Article> articles;
    std::vector<PendingImport> imports;
    std::vector<std::pair<ConsequenceCard, std::vector<double>>> cards;
    try {
        for (const auto& d : sidecar.value("domains", Json::array())) domains.push_back(d.get<TechDomain>());
        for (const auto& a : sidecar.value("articles", Json::array())) articles.push_back(a.get<Article>());
        for (const auto& p : sidecar.value("imports", Json::array())) imports.push_back(p.get<PendingImport>());
    } catch (const Json::exception& e) {
        throw StorageError(std::string("bad sidecar.json: ") + e.what());
    }
    std::set<std::string> known_articles;
    for (const auto& a : articles) known_articles.insert(a.id);

    std::istringstream lines(read(fs::path(dir) / "cards.jsonl"));
    std::string line;
    while (std::getline(lines, line)) {
        if (text::trim(line).empty()) continue;
        auto c = parse_card_json(line);
        c.validate();
        if (!known_articles.count(c.article_id) && !get_article(c.article_id)) {
            throw MissingArticle("card " + c.id + " references unknown article " + c.article_id);
        }
        auto v = impl_->embed_summary(c.summary);
        cards.emplace_back(std::move(c), std::move(v));
    }

    std::lock_guard w(impl_->write_mu);
    impl_->transaction([&] {
        for (const auto& d : domains) impl_->write_domain(d);
        for (const auto& a : articles) impl_->write_article(a);
        for (const auto& [c, v] : cards) impl_->write_card(c, v);
        for (const auto& p : imports) impl_->write_import(p);
    });
    std::unique_lock lock(impl_->mu);
    for (const auto& d : domains) impl_->domains[d.name] = d;
    for (const auto& a : articles) impl_->mirror_article(a);
    for (auto& [c, v] : cards) impl_->mirror_card(c, std::move(v));
    for (const auto& p : imports) impl_->imports[p.id] = p;
}

}  // namespace catalog
