#pragma once

#include "catalog/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace catalog {

inline constexpr std::size_t kMinArticleWords = 50;

// Builds an Article from a downloaded page.
//
// Title: og:title meta, then <title>, then the first <h1>.
// Body: the text of the <p> children of whichever element holds the most
// paragraph text, each paragraph whitespace-collapsed, joined by blank lines.
// Date: article:published_time / date / pubdate / datePublished metadata or
// the first <time datetime>.
//
// Throws NoTitle, or NoContent when the body has fewer than `min_words` words.
Article extract_article(std::string_view html, std::string_view canonical_url, std::string_view source,
                        Timestamp fetched_at = {}, std::size_t min_words = kMinArticleWords);

// Result links on a search page, resolved against `page_url`, in document
// order (not deduplicated or canonicalized). Anchors carrying a
// `data-result` attribute or a `result` class token are the results; when a
// page has none, every link on the page's own host is taken.
std::vector<std::string> extract_result_links(std::string_view html, std::string_view page_url);

}  // namespace catalog
