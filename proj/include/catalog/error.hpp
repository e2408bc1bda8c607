#pragma once

#include <stdexcept>
#include <string>

namespace catalog {

// Base for every failure the library reports. `code()` is a stable
// machine-readable identifier (snake_case) that the HTTP layer surfaces
// verbatim in ApiError bodies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define CATALOG_DEFINE_ERROR(Name, code_str)                                 \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(code_str, message) {} \
    }

// core-model
CATALOG_DEFINE_ERROR(UnknownAspect, "unknown_aspect");
CATALOG_DEFINE_ERROR(InvalidValue, "invalid_value");

// ingestion
CATALOG_DEFINE_ERROR(MalformedUrl, "malformed_url");
CATALOG_DEFINE_ERROR(NoContent, "no_content");
CATALOG_DEFINE_ERROR(NoTitle, "no_title");
CATALOG_DEFINE_ERROR(FetchError, "fetch_error");
CATALOG_DEFINE_ERROR(PreconditionViolation, "precondition_violation");
CATALOG_DEFINE_ERROR(MalformedCsv, "malformed_csv");

// model-gateway
CATALOG_DEFINE_ERROR(ProviderUnavailable, "provider_unavailable");
CATALOG_DEFINE_ERROR(BudgetExceeded, "budget_exceeded");
CATALOG_DEFINE_ERROR(DegenerateDataset, "degenerate_dataset");

// curation-pipeline
CATALOG_DEFINE_ERROR(EmptyTitle, "empty_title");
CATALOG_DEFINE_ERROR(UncategorizableCard, "uncategorizable_card");

// index-store
CATALOG_DEFINE_ERROR(MissingArticle, "missing_article");
CATALOG_DEFINE_ERROR(UnknownCard, "unknown_card");
CATALOG_DEFINE_ERROR(UnknownImport, "unknown_import");
CATALOG_DEFINE_ERROR(InvalidTransition, "invalid_transition");
CATALOG_DEFINE_ERROR(StorageError, "storage_error");

// evalkit
CATALOG_DEFINE_ERROR(TooFewItems, "too_few_items");
CATALOG_DEFINE_ERROR(LengthMismatch, "length_mismatch");

// api-service
CATALOG_DEFINE_ERROR(JobConflict, "job_running");
CATALOG_DEFINE_ERROR(ImportTimeout, "import_timeout");

#undef CATALOG_DEFINE_ERROR

// Raised by a provider for failures worth retrying (timeouts, 429, 5xx).
class TransientProviderError : public Error {
public:
    explicit TransientProviderError(const std::string& message)
        : Error("provider_transient", message) {}
};

// A generated summary failed validation; `rule()` names the failing check.
class InvalidSummary : public Error {
public:
    InvalidSummary(std::string rule, const std::string& message)
        : Error("invalid_summary", message), rule_(std::move(rule)) {}
    const std::string& rule() const noexcept { return rule_; }

private:
    std::string rule_;
};

// Single-URL import rejected by a pipeline stage ("title", "content",
// "summary", "aspect", "extraction").
class PipelineRejected : public Error {
public:
    PipelineRejected(std::string stage, const std::string& message)
        : Error("pipeline_rejected", message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace catalog
