#pragma once

#include "catalog/gateway.hpp"
#include "catalog/source.hpp"
#include "catalog/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;

namespace catalog {

// 128 random bits, base64url without padding (22 characters).
std::string new_client_token();
bool is_client_token(std::string_view s);

enum class ImportState { Pending, Approved, Rejected };
std::string_view to_string(ImportState s) noexcept;
ImportState parse_import_state(std::string_view s);

// A user-submitted article waiting for an administrator. The article and
// card live only here until approval publishes them.
struct PendingImport {
    std::string id;
    std::string submitted_by;
    std::string url;
    std::string proposed_domain;
    std::optional<Article> article;
    std::optional<ConsequenceCard> extracted_card;
    ImportState state = ImportState::Pending;
    Timestamp submitted_at{};
    std::optional<Timestamp> decided_at;
    std::string rejected_stage;  // pipeline stage that turned it down, if any
    std::string note;

    bool operator==(const PendingImport&) const = default;
};

void to_json(Json& j, const PendingImport& p);
void from_json(const Json& j, PendingImport& p);

struct CardFilter {
    std::set<std::string> domains;
    std::set<Aspect> aspects;
    std::string query;        // case-insensitive substring of summary or article title
    std::string exclude_for;  // client token whose dismissals are hidden
};

enum class CardOrder { Shuffled, Newest };

inline constexpr std::size_t kMaxPageSize = 200;

struct CardPage {
    std::vector<ConsequenceCard> cards;
    std::size_t total = 0;  // matches before paging
};

struct ScoredCard {
    ConsequenceCard card;
    double score = 0.0;
};

struct StoredReport {
    std::int64_t id = 0;
    std::string kind;  // "pipeline", "weekly", ...
    Timestamp created_at{};
    PipelineReport report;
};

// Position of a card in the shuffled order for `seed`.
std::uint64_t shuffle_key(std::uint64_t seed, std::string_view card_id) noexcept;

// SQLite-backed catalog. All state is mirrored in memory, so reads take a
// shared lock and never touch the database; writes commit a transaction and
// then update the mirror under an exclusive lock.
class Store final : public ArticleLedger {
public:
    // `path` may be ":memory:". Throws StorageError.
    Store(const std::string& path, Embedder& embedder);
    ~Store() override;
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // domains
    void upsert_domain(const TechDomain& domain);
    std::optional<TechDomain> get_domain(std::string_view name) const;
    std::vector<TechDomain> list_domains() const;

    // articles (ArticleLedger)
    bool has_article(std::string_view canonical_url) const override;
    void put_article(const Article& article) override;
    std::optional<Article> get_article(std::string_view id) const;
    std::size_t article_count() const;

    // cards. Throws MissingArticle, InvalidValue.
    std::string upsert_card(const ConsequenceCard& card);
    std::optional<ConsequenceCard> get_card(std::string_view id) const;
    std::size_t card_count() const;
    std::size_t vector_count() const;
    std::vector<double> card_vector(std::string_view id) const;

    // Throws InvalidValue when limit is 0 or above kMaxPageSize.
    CardPage list_cards(const CardFilter& filter, CardOrder order = CardOrder::Shuffled, std::uint64_t seed = 0,
                        std::size_t offset = 0, std::size_t limit = 50) const;

    // Exact top-k by cosine similarity, ties by id. Throws InvalidValue for k == 0.
    std::vector<ScoredCard> semantic_search(std::string_view query, std::size_t k, const CardFilter& filter = {}) const;
    std::vector<ScoredCard> nearest(const std::vector<double>& query_vector, std::size_t k,
                                    const CardFilter& filter = {}) const;

    // per-client state. Throws UnknownCard.
    void bookmark(std::string_view client, std::string_view card_id);
    void unbookmark(std::string_view client, std::string_view card_id);
    std::vector<ConsequenceCard> list_bookmarks(std::string_view client) const;
    void dismiss(std::string_view client, std::string_view card_id);
    bool is_dismissed(std::string_view client, std::string_view card_id) const;

    // imports
    void save_import(const PendingImport& item);
    std::optional<PendingImport> get_import(std::string_view id) const;
    std::vector<PendingImport> list_imports(std::optional<ImportState> state = std::nullopt) const;
    // Publishes the card (creating the proposed domain if new). Throws
    // UnknownImport, InvalidTransition.
    ConsequenceCard approve_import(std::string_view id, Timestamp when);
    void reject_import(std::string_view id, Timestamp when, std::string note = {});

    // reports
    std::int64_t save_report(const std::string& kind, Timestamp created_at, const PipelineReport& report);
    std::vector<StoredReport> list_reports() const;

    // Canonical export: <dir>/cards.jsonl plus <dir>/sidecar.json holding
    // domains, articles and imports.
    void export_to(const std::string& dir) const;
    // Merges an export into this store; card embeddings are recomputed.
    void import_from(const std::string& dir);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace catalog
