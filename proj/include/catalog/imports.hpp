#pragma once

#include "catalog/pipeline.hpp"
#include "catalog/source.hpp"
#include "catalog/store.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace catalog {

struct ImportContext {
    Store& store;
    Fetcher& fetcher;
    Gateway& gateway;
    Clock& clock;
    std::vector<SourceConfig> sources;
    PipelineOptions pipeline;
    std::size_t min_words = 50;
};

// Fetches one user-submitted URL, runs it through the content, summary and
// aspect stages and records the outcome as a PendingImport. The title stage
// is skipped because a person picked the article. When a stage (or page
// extraction) turns the article down, the item is saved as rejected with
// that stage and PipelineRejected is thrown. Throws MalformedUrl before
// anything is recorded; gateway failures propagate without a record.
PendingImport submit_import(ImportContext& ctx, std::string_view client, std::string_view url,
                            std::string_view proposed_domain);

}  // namespace catalog
