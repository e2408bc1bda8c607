#include "catalog/extract.hpp"

#include "catalog/error.hpp"
#include "catalog/html.hpp"
#include "catalog/text.hpp"
#include "catalog/url.hpp"

#include <array>

namespace catalog {

namespace {

using html::Node;

std::string clean(std::string_view s) {
    return text::collapse_whitespace(text::replace_all(std::string(s), "\xC2\xA0", " "));
}

const Node* find_first(const Node& root, std::string_view tag) {
    const Node* found = nullptr;
    html::walk(root, [&](const Node& n) {
        if (found) return false;
        if (n.is_element(tag)) {
            found = &n;
            return false;
        }
        return true;
    });
    return found;
}

std::string meta_content(const Node& root, std::initializer_list<std::string_view> keys) {
    std::string out;
    html::walk(root, [&](const Node& n) {
        if (!out.empty()) return false;
        if (!n.is_element("meta")) return true;
        auto content = n.attr("content");
        if (!content) return true;
        for (const char* attr : {"property", "name", "itemprop"}) {
            auto v = n.attr(attr);
            if (!v) continue;
            auto lv = text::to_lower(*v);
            for (auto k : keys) {
                if (lv == k && !clean(*content).empty()) {
                    out = clean(*content);
                    return false;
                }
            }
        }
        return true;
    });
    return out;
}

std::optional<Date> published_date(const Node& root) {
    auto meta = meta_content(root, {"article:published_time", "datepublished", "date", "pubdate",
                                    "publish-date", "dc.date", "parsely-pub-date"});
    if (auto d = parse_date_prefix(meta)) return d;
    std::optional<Date> out;
    html::walk(root, [&](const Node& n) {
        if (out) return false;
        if (n.is_element("time")) {
            if (auto dt = n.attr("datetime")) out = parse_date_prefix(*dt);
        }
        return true;
    });
    return out;
}

// Readability-style container choice: the element whose direct <p>
// children carry the most text. Ties go to the first in document order.
std::vector<std::string> main_paragraphs(const Node& root) {
    const Node* best = nullptr;
    std::size_t best_score = 0;
    html::walk(root, [&](const Node& n) {
        if (n.kind == Node::Kind::Element &&
            (n.tag == "script" || n.tag == "style" || n.tag == "nav" || n.tag == "footer")) {
            return false;
        }
        std::size_t score = 0;
        for (const auto& c : n.children) {
            if (c.is_element("p")) score += clean(html::text_content(c)).size();
        }
        if (score > best_score) {
            best_score = score;
            best = &n;
        }
        return true;
    });
    std::vector<std::string> out;
    if (!best) return out;
    for (const auto& c : best->children) {
        if (!c.is_element("p")) continue;
        auto t = clean(html::text_content(c));
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

bool has_class_token(const Node& n, std::string_view token) {
    auto cls = n.attr("class");
    if (!cls) return false;
    for (auto t : text::split_whitespace(*cls)) {
        if (t == token) return true;
    }
    return false;
}

}  // namespace

Article extract_article(std::string_view page, std::string_view canonical_url, std::string_view source,
                        Timestamp fetched_at, std::size_t min_words) {
    const std::string decoded = text::sanitize_utf8(page);
    const Node root = html::parse(decoded);

    std::string title = meta_content(root, {"og:title"});
    if (title.empty()) {
        if (const Node* t = find_first(root, "title")) title = clean(html::text_content(*t));
    }
    if (title.empty()) {
        if (const Node* h = find_first(root, "h1")) title = clean(html::text_content(*h));
    }
    if (title.empty()) throw NoTitle("no title found for " + std::string(canonical_url));

    std::string body;
    for (const auto& p : main_paragraphs(root)) {
        if (!body.empty()) body += "\n\n";
        body += p;
    }
    const auto words = text::word_count(body);
    if (words < min_words) {
        throw NoContent("extracted body of " + std::string(canonical_url) + " has " + std::to_string(words) +
                        " words (minimum " + std::to_string(min_words) + ")");
    }

    Article a;
    a.canonical_url = std::string(canonical_url);
    a.id = article_id_for(a.canonical_url);
    a.source = std::string(source);
    a.title = std::move(title);
    a.body = std::move(body);
    a.word_count = words;
    a.published_at = published_date(root);
    a.fetched_at = fetched_at;
    return a;
}

std::vector<std::string> extract_result_links(std::string_view page, std::string_view page_url) {
    const Node root = html::parse(text::sanitize_utf8(page));
    std::vector<const Node*> marked;
    std::vector<const Node*> all;
    html::walk(root, [&](const Node& n) {
        if (n.is_element("a") && n.attr("href")) {
            all.push_back(&n);
            if (n.attr("data-result") || has_class_token(n, "result")) marked.push_back(&n);
        }
        return true;
    });

    std::vector<std::string> out;
    const std::string host = parse_url(page_url).host;
    auto add = [&](const Node& a, bool same_host_only) {
        auto href = text::trim(*a.attr("href"));
        if (href.empty() || href[0] == '#' || text::starts_with(href, "javascript:") ||
            text::starts_with(href, "mailto:")) {
            return;
        }
        try {
            auto abs = resolve_url(page_url, href);
            if (same_host_only && parse_url(abs).host != host) return;
            out.push_back(std::move(abs));
        } catch (const MalformedUrl&) {
        }
    };
    if (!marked.empty()) {
        for (const Node* a : marked) add(*a, false);
    } else {
        for (const Node* a : all) add(*a, true);
    }
    return out;
}

}  // namespace catalog
