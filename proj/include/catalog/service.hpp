#pragma once

#include "catalog/clock.hpp"
#include "catalog/config.hpp"
#include "catalog/gateway.hpp"
#include "catalog/pipeline.hpp"
#include "catalog/source.hpp"
#include "catalog/store.hpp"
#include "catalog/title_classifier.hpp"

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace catalog {

// Everything a request handler or background task needs. Not owning.
struct Services {
    ServiceConfig config;
    Clock& clock;
    Gateway& gateway;
    Store& store;
    Fetcher& fetcher;
    TitleClassifier& classifier;
};

// Owns the concrete components described by a config.
class Runtime {
public:
    explicit Runtime(ServiceConfig config);
    Services& services() noexcept { return *services_; }

private:
    SystemClock clock_;
    std::shared_ptr<Provider> provider_;
    std::unique_ptr<Gateway> gateway_;
    std::unique_ptr<Store> store_;
    std::unique_ptr<HttpFetcher> fetcher_;
    std::shared_ptr<TitleClassifier> classifier_;
    std::unique_ptr<Services> services_;
};

// Fetches, extracts and curates the given URLs (grouped by domain) and
// publishes the cards. URLs that cannot be fetched or extracted are listed
// in report.errors and not counted as retrieved.
struct BulkRequest {
    std::string domain;                  // default domain for rows without one
    std::vector<std::string> keywords;   // used when the domain is new or for keyword crawls
    std::vector<UrlRow> urls;            // CSV mode
    std::vector<std::string> sources;    // keyword mode: source names (empty = all configured)
    std::size_t limit_per_keyword = 50;  // keyword mode
};

enum class JobState { Queued, Running, Succeeded, Failed };
std::string_view to_string(JobState s) noexcept;

struct JobStatus {
    std::string id;
    std::string kind;
    JobState state = JobState::Queued;
    Timestamp created_at{};
    std::optional<Timestamp> finished_at;
    std::size_t articles_total = 0;
    FunnelCounts progress;
    std::optional<PipelineReport> report;
    std::string error;
};

void to_json(Json& j, const JobStatus& s);

struct BulkOutcome {
    PipelineReport report;
    std::size_t cards_published = 0;
};

// Runs a bulk request to completion on the calling thread. `on_progress`
// receives the running funnel after each article.
BulkOutcome run_bulk_import(Services& services, const BulkRequest& request,
                            const std::function<void(std::size_t total, const FunnelCounts&)>& on_progress = {});

// Polls every approved domain, curates the new articles and publishes the
// cards directly. Source failures are recorded in the report. The report is
// saved with kind "weekly".
BulkOutcome run_weekly_update(Services& services);

// Single background worker: at most one job runs at a time.
class JobManager {
public:
    explicit JobManager(Services& services);
    ~JobManager();

    // Throws JobConflict when a job is queued or running.
    JobStatus submit(BulkRequest request);
    std::optional<JobStatus> get(const std::string& id) const;
    std::vector<JobStatus> list() const;
    bool busy() const;
    // Blocks until the job leaves Queued/Running (tests, CLI).
    JobStatus wait(const std::string& id) const;

private:
    void run(std::string id, BulkRequest request);

    Services& services_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, JobStatus> jobs_;
    std::thread worker_;
    bool busy_ = false;
};

// Fires `task` when the clock reaches the next due time, then schedules the
// following run one interval after the actual run, so a clock that jumps
// past several due times produces a single catch-up run.
class UpdateScheduler {
public:
    UpdateScheduler(Clock& clock, Millis interval, std::function<void()> task);
    ~UpdateScheduler();

    // Runs the task if due. Returns whether it ran. Task exceptions are
    // logged and swallowed.
    bool tick();
    TimePoint next_due() const;
    std::size_t runs() const;

    // Background thread calling tick() every `check_every` of real time.
    void start(std::chrono::milliseconds check_every);
    void stop();

private:
    Clock& clock_;
    Millis interval_;
    std::function<void()> task_;
    mutable std::mutex mu_;
    TimePoint next_due_;
    std::size_t runs_ = 0;

    std::mutex loop_mu_;
    std::condition_variable loop_cv_;
    bool stopping_ = false;
    std::thread loop_;
};

}  // namespace catalog
