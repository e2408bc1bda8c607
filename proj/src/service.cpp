#include "catalog/service.hpp"

#include "catalog/error.hpp"
#include "catalog/url.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace catalog {

Runtime::Runtime(ServiceConfig config) {
    provider_ = make_provider(config.provider);
    gateway_ = std::make_unique<Gateway>(provider_, clock_, RetryPolicy{}, gateway_limits(config.provider));
    store_ = std::make_unique<Store>(config.db_path, *gateway_);
    fetcher_ = std::make_unique<HttpFetcher>();
    classifier_ = make_classifier(config.title_classifier);
    for (const auto& d : config.domains) {
        if (!store_->get_domain(d.name)) store_->upsert_domain(d);
    }
    services_ = std::unique_ptr<Services>(
        new Services{std::move(config), clock_, *gateway_, *store_, *fetcher_, *classifier_});
}

std::string_view to_string(JobState s) noexcept {
    switch (s) {
        case JobState::Queued: return "queued";
        case JobState::Running: return "running";
        case JobState::Succeeded: return "succeeded";
        case JobState::Failed: return "failed";
    }
    return "unknown";
}

void to_json(Json& j, const JobStatus& s) {
    j = Json{{"id", s.id},
             {"kind", s.kind},
             {"state", to_string(s.state)},
             {"created_at", format_timestamp(s.created_at)},
             {"finished_at", s.finished_at ? Json(format_timestamp(*s.finished_at)) : Json(nullptr)},
             {"articles_total", s.articles_total},
             {"progress", s.progress},
             {"report", s.report ? Json(*s.report) : Json(nullptr)},
             {"error", s.error}};
}

namespace {

TechDomain domain_for(Services& sv, const std::string& name, const std::vector<std::string>& keywords) {
    if (auto d = sv.store.get_domain(name)) {
        if (!keywords.empty() && d->keywords != keywords) {
            d->keywords = keywords;
            sv.store.upsert_domain(*d);
        }
        return *d;
    }
    TechDomain d{name, keywords.empty() ? std::vector<std::string>{name} : keywords, true};
    d.validate();
    sv.store.upsert_domain(d);
    return d;
}

// Curates each domain's articles and publishes the cards.
BulkOutcome curate_and_publish(Services& sv, const std::vector<std::pair<TechDomain, std::vector<Article>>>& batches,
                               const std::function<void(const FunnelCounts&)>& on_article) {
    BulkOutcome out;
    for (const auto& [domain, articles] : batches) {
        PipelineOptions options = sv.config.pipeline_options();
        options.created_at = sv.clock.now_seconds();
        options.on_article_done = on_article;
        auto result = run_pipeline(articles, domain, sv.classifier, sv.gateway, options);
        for (const auto& card : result.cards) {
            try {
                sv.store.upsert_card(card);
                ++out.cards_published;
            } catch (const Error& e) {
                result.report.errors.push_back(card.article_id + ": publish: " + e.what());
            }
        }
        out.report.merge(result.report);
    }
    if (batches.size() == 1) out.report.domain = batches.front().first.name;
    return out;
}

}  // namespace

BulkOutcome run_bulk_import(Services& sv, const BulkRequest& request,
                            const std::function<void(std::size_t, const FunnelCounts&)>& on_progress) {
    std::vector<std::pair<TechDomain, std::vector<Article>>> batches;
    std::vector<std::string> errors;

    if (!request.urls.empty()) {
        std::map<std::string, std::size_t> batch_of;
        for (const auto& row : request.urls) {
            const std::string name = row.domain.value_or(request.domain);
            if (name.empty()) {
                errors.push_back(row.url + ": no domain given");
                continue;
            }
            if (!batch_of.count(name)) {
                batch_of[name] = batches.size();
                batches.emplace_back(domain_for(sv, name, name == request.domain ? request.keywords
                                                                                   : std::vector<std::string>{}),
                                     std::vector<Article>{});
            }
            try {
                const std::string url = canonicalize_url(row.url);
                Article article;
                if (auto existing = sv.store.get_article(article_id_for(url))) {
                    article = *existing;
                } else {
                    article = fetch_article(url, source_for_url(url, sv.config.sources), sv.fetcher, sv.clock,
                                            sv.config.min_words);
                    sv.store.put_article(article);
                }
                batches[batch_of[name]].second.push_back(std::move(article));
            } catch (const Error& e) {
                errors.push_back(row.url + ": " + e.what());
            }
        }
    } else {
        if (request.domain.empty()) throw InvalidValue("bulk import needs a domain");
        const TechDomain domain = domain_for(sv, request.domain, request.keywords);
        std::vector<SourceConfig> sources;
        for (const auto& s : sv.config.sources) {
            if (request.sources.empty() ||
                std::find(request.sources.begin(), request.sources.end(), s.name) != request.sources.end()) {
                sources.push_back(s);
            }
        }
        if (sources.empty()) throw InvalidValue("no configured source matches the request");
        PollOptions po;
        po.results_per_keyword = request.limit_per_keyword;
        po.min_words = sv.config.min_words;
        Poller poller(sources, sv.fetcher, sv.clock, po);
        auto polled = poller.poll_updates({domain}, std::nullopt, sv.store);
        for (const auto& e : polled.errors) errors.push_back(e.source + ": " + e.message);
        for (const auto& s : polled.skipped) errors.push_back(s.url + ": " + s.reason);
        batches.emplace_back(domain, std::move(polled.articles));
    }

    std::size_t total = 0;
    for (const auto& b : batches) total += b.second.size();
    std::mutex progress_mu;
    FunnelCounts running;
    if (on_progress) on_progress(total, running);
    auto outcome = curate_and_publish(sv, batches, [&](const FunnelCounts& c) {
        std::lock_guard lock(progress_mu);
        running += c;
        if (on_progress) on_progress(total, running);
    });
    outcome.report.errors.insert(outcome.report.errors.end(), errors.begin(), errors.end());
    sv.store.save_report("bulk", sv.clock.now_seconds(), outcome.report);
    return outcome;
}

BulkOutcome run_weekly_update(Services& sv) {
    const Timestamp now = sv.clock.now_seconds();
    std::vector<TechDomain> domains;
    for (auto& d : sv.store.list_domains()) {
        if (d.approved) domains.push_back(std::move(d));
    }
    BulkOutcome outcome;
    std::vector<std::string> errors;
    if (!domains.empty() && !sv.config.sources.empty()) {
        PollOptions po;
        po.results_per_keyword = sv.config.results_per_keyword;
        po.min_words = sv.config.min_words;
        Poller poller(sv.config.sources, sv.fetcher, sv.clock, po);
        const Timestamp since = now - std::chrono::days{sv.config.update_interval_days};
        auto polled = poller.poll_updates(domains, since, sv.store);
        for (const auto& e : polled.errors) errors.push_back(e.source + ": " + e.message);
        for (const auto& s : polled.skipped) errors.push_back(s.url + ": " + s.reason);

        std::vector<std::pair<TechDomain, std::vector<Article>>> batches;
        for (const auto& d : domains) {
            std::vector<Article> mine;
            for (const auto& a : polled.articles) {
                const auto it = polled.domains.find(a.id);
                if (it != polled.domains.end() && std::find(it->second.begin(), it->second.end(), d.name) != it->second.end()) {
                    mine.push_back(a);
                }
            }
            if (!mine.empty()) batches.emplace_back(d, std::move(mine));
        }
        outcome = curate_and_publish(sv, batches, {});
        outcome.report.domain.clear();
    }
    outcome.report.errors.insert(outcome.report.errors.end(), errors.begin(), errors.end());
    sv.store.save_report("weekly", now, outcome.report);
    spdlog::info("weekly update: {} retrieved, {} cards published, {} errors", outcome.report.totals.retrieved,
                 outcome.cards_published, outcome.report.errors.size());
    return outcome;
}

JobManager::JobManager(Services& services) : services_(services) {}

JobManager::~JobManager() {
    if (worker_.joinable()) worker_.join();
}

JobStatus JobManager::submit(BulkRequest request) {
    std::unique_lock lock(mu_);
    if (busy_) throw JobConflict("a bulk import job is already running");
    if (worker_.joinable()) worker_.join();
    JobStatus st;
    st.id = "j_" + new_client_token().substr(0, 12);
    st.kind = request.urls.empty() ? "keywords" : "csv";
    st.created_at = services_.clock.now_seconds();
    jobs_[st.id] = st;
    busy_ = true;
    worker_ = std::thread(&JobManager::run, this, st.id, std::move(request));
    return st;
}

void JobManager::run(std::string id, BulkRequest request) {
    {
        std::lock_guard lock(mu_);
        jobs_[id].state = JobState::Running;
    }
    try {
        auto outcome = run_bulk_import(services_, request, [&](std::size_t total, const FunnelCounts& c) {
            std::lock_guard lock(mu_);
            jobs_[id].articles_total = total;
            jobs_[id].progress = c;
        });
        std::lock_guard lock(mu_);
        auto& st = jobs_[id];
        st.progress = outcome.report.totals;
        st.report = std::move(outcome.report);
        st.state = JobState::Succeeded;
    } catch (const std::exception& e) {
        spdlog::error("bulk job {} failed: {}", id, e.what());
        std::lock_guard lock(mu_);
        jobs_[id].state = JobState::Failed;
        jobs_[id].error = e.what();
    }
    std::lock_guard lock(mu_);
    jobs_[id].finished_at = services_.clock.now_seconds();
    busy_ = false;
    cv_.notify_all();
}

std::optional<JobStatus> JobManager::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

std::vector<JobStatus> JobManager::list() const {
    std::lock_guard lock(mu_);
    std::vector<JobStatus> out;
    for (const auto& [id, st] : jobs_) out.push_back(st);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
    });
    return out;
}

bool JobManager::busy() const {
    std::lock_guard lock(mu_);
    return busy_;
}

JobStatus JobManager::wait(const std::string& id) const {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
        auto it = jobs_.find(id);
        return it == jobs_.end() || (it->second.state != JobState::Queued && it->second.state != JobState::Running);
    });
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw InvalidValue("unknown job " + id);
    return it->second;
}

UpdateScheduler::UpdateScheduler(Clock& clock, Millis interval, std::function<void()> task)
    : clock_(clock), interval_(interval), task_(std::move(task)), next_due_(clock.now() + interval) {
    if (interval_ <= Millis::zero()) throw InvalidValue("update interval must be positive");
}

UpdateScheduler::~UpdateScheduler() { stop(); }

bool UpdateScheduler::tick() {
    std::unique_lock lock(mu_);
    const TimePoint now = clock_.now();
    if (now < next_due_) return false;
    next_due_ = now + interval_;
    ++runs_;
    lock.unlock();
    try {
        task_();
    } catch (const std::exception& e) {
        spdlog::error("scheduled update failed: {}", e.what());
    }
    return true;
}

TimePoint UpdateScheduler::next_due() const {
    std::lock_guard lock(mu_);
    return next_due_;
}

std::size_t UpdateScheduler::runs() const {
    std::lock_guard lock(mu_);
    return runs_;
}

void UpdateScheduler::start(std::chrono::milliseconds check_every) {
    stop();
    {
        std::lock_guard lock(loop_mu_);
        stopping_ = false;
    }
    loop_ = std::thread([this, check_every] {
        std::unique_lock lock(loop_mu_);
        while (!loop_cv_.wait_for(lock, check_every, [this] { return stopping_; })) {
            lock.unlock();
            tick();
            lock.lock();
        }
    });
}

void UpdateScheduler::stop() {
    {
        std::lock_guard lock(loop_mu_);
        stopping_ = true;
    }
    loop_cv_.notify_all();
    if (loop_.joinable()) loop_.join();
}

}  // namespace catalog
