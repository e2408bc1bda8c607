#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace catalog {

struct UrlParts {
    std::string scheme;
    std::string userinfo;
    std::string host;
    std::optional<int> port;
    std::string path;   // starts with '/' or is empty
    std::string query;  // without '?'
    std::string fragment;
};

// Splits an absolute URL. Throws MalformedUrl when the scheme or host is
// missing, the port is not numeric, or the string contains whitespace.
UrlParts parse_url(std::string_view url);

// Normal form used as the dedup key for articles:
//   - scheme and host lowercased, default ports (80/443) dropped
//   - fragment dropped
//   - tracking parameters dropped: keys starting with "utm_", "fbclid", "gclid"
//   - remaining query parameters stably sorted by key
//   - trailing slash removed from non-root paths; an empty path becomes "/"
// Idempotent. Throws MalformedUrl.
std::string canonicalize_url(std::string_view url);

// Resolves `ref` (absolute, scheme-relative, root-relative or relative)
// against the absolute URL `base`.
std::string resolve_url(std::string_view base, std::string_view ref);

}  // namespace catalog
