#include "catalog/imports.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

namespace catalog {

PendingImport submit_import(ImportContext& ctx, std::string_view client, std::string_view url,
                            std::string_view proposed_domain) {
    const std::string canonical = canonicalize_url(url);
    const std::string domain_name(text::trim(proposed_domain));
    if (domain_name.empty()) throw InvalidValue("proposed domain is empty");
    const TechDomain domain = ctx.store.get_domain(domain_name).value_or(TechDomain{domain_name, {domain_name}, false});

    PendingImport item;
    item.id = "i_" + new_client_token();
    item.submitted_by = std::string(client);
    item.url = canonical;
    item.proposed_domain = domain_name;
    item.submitted_at = ctx.clock.now_seconds();

    auto reject = [&](const std::string& stage, const std::string& why) {
        item.state = ImportState::Rejected;
        item.rejected_stage = stage;
        item.note = why;
        item.decided_at = item.submitted_at;
        ctx.store.save_import(item);
        throw PipelineRejected(stage, why);
    };

    try {
        item.article = fetch_article(canonical, source_for_url(canonical, ctx.sources), ctx.fetcher, ctx.clock,
                                     ctx.min_words);
    } catch (const FetchError& e) {
        reject("extraction", e.what());
    } catch (const NoTitle& e) {
        reject("extraction", e.what());
    } catch (const NoContent& e) {
        reject("extraction", e.what());
    }

    PipelineOptions options = ctx.pipeline;
    options.created_at = item.submitted_at;
    try {
        item.extracted_card = curate_article(*item.article, domain, ctx.gateway, nullptr, options);
    } catch (const PipelineRejected& e) {
        reject(e.stage(), e.what());
    }
    ctx.store.save_import(item);
    return item;
}

}  // namespace catalog
