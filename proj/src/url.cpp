#include "catalog/url.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

namespace catalog {

namespace {

bool valid_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
    });
}

bool is_tracking_key(std::string_view key) {
    return text::starts_with(key, "utm_") || key == "fbclid" || key == "gclid";
}

std::string build(const UrlParts& u) {
    std::string out = u.scheme + "://";
    if (!u.userinfo.empty()) out += u.userinfo + "@";
    out += u.host;
    if (u.port) out += ":" + std::to_string(*u.port);
    out += u.path.empty() ? "/" : u.path;
    if (!u.query.empty()) out += "?" + u.query;
    if (!u.fragment.empty()) out += "#" + u.fragment;
    return out;
}

// Collapses "." and ".." segments.
std::string remove_dot_segments(std::string_view path) {
    std::vector<std::string_view> out;
    bool trailing = false;
    std::size_t i = 0;
    while (i <= path.size()) {
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        const auto seg = path.substr(i, j - i);
        const bool last = j == path.size();
        if (seg == "..") {
            if (!out.empty()) out.pop_back();
            trailing = last;
        } else if (seg == ".") {
            trailing = last;
        } else if (!seg.empty()) {
            out.push_back(seg);
            trailing = false;
        } else if (last) {
            trailing = true;
        }
        i = j + 1;
    }
    std::string res;
    for (auto s : out) {
        res += '/';
        res += s;
    }
    if (res.empty() || trailing) res += '/';
    return res;
}

}  // namespace

UrlParts parse_url(std::string_view url) {
    url = text::trim(url);
    auto fail = [&](const char* why) {
        return MalformedUrl(std::string(why) + ": \"" + std::string(url) + "\"");
    };
    if (url.empty()) throw fail("empty url");
    if (std::any_of(url.begin(), url.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
        throw fail("whitespace in url");
    }
    auto sep = url.find("://");
    if (sep == std::string_view::npos || !valid_scheme(url.substr(0, sep))) throw fail("missing scheme");

    UrlParts u;
    u.scheme = text::to_lower(url.substr(0, sep));
    auto rest = url.substr(sep + 3);

    if (auto hash = rest.find('#'); hash != std::string_view::npos) {
        u.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    if (auto q = rest.find('?'); q != std::string_view::npos) {
        u.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    if (slash != std::string_view::npos) u.path = std::string(rest.substr(slash));

    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        u.userinfo = std::string(authority.substr(0, at));
        authority = authority.substr(at + 1);
    }
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        auto port_str = authority.substr(colon + 1);
        int port = 0;
        if (!port_str.empty()) {
            auto [p, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
            if (ec != std::errc{} || p != port_str.data() + port_str.size() || port < 0 || port > 65535) {
                throw fail("bad port");
            }
            u.port = port;
        }
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) throw fail("missing host");
    u.host = text::to_lower(authority);
    return u;
}

std::string canonicalize_url(std::string_view url) {
    UrlParts u = parse_url(url);
    u.fragment.clear();
    if (u.port && ((u.scheme == "http" && *u.port == 80) || (u.scheme == "https" && *u.port == 443))) {
        u.port.reset();
    }

    if (!u.query.empty()) {
        std::vector<std::string> params;
        std::size_t i = 0;
        while (i <= u.query.size()) {
            auto j = u.query.find('&', i);
            if (j == std::string::npos) j = u.query.size();
            auto p = u.query.substr(i, j - i);
            auto key = p.substr(0, p.find('='));
            if (!p.empty() && !is_tracking_key(key)) params.push_back(p);
            i = j + 1;
        }
        std::stable_sort(params.begin(), params.end(), [](const std::string& a, const std::string& b) {
            return a.substr(0, a.find('=')) < b.substr(0, b.find('='));
        });
        u.query.clear();
        for (const auto& p : params) {
            if (!u.query.empty()) u.query += '&';
            u.query += p;
        }
    }

    while (u.path.size() > 1 && u.path.back() == '/') u.path.pop_back();
    if (u.path.empty()) u.path = "/";
    return build(u);
}

std::string resolve_url(std::string_view base, std::string_view ref) {
    ref = text::trim(ref);
    auto sep = ref.find("://");
    if (sep != std::string_view::npos && valid_scheme(ref.substr(0, sep))) return std::string(ref);

    UrlParts b = parse_url(base);
    b.fragment.clear();
    if (text::starts_with(ref, "//")) return b.scheme + ":" + std::string(ref);
    if (ref.empty()) return build(b);
    if (ref[0] == '#') {
        b.fragment = std::string(ref.substr(1));
        return build(b);
    }

    std::string_view path_part = ref;
    std::string query;
    std::string fragment;
    if (auto h = path_part.find('#'); h != std::string_view::npos) {
        fragment = std::string(path_part.substr(h + 1));
        path_part = path_part.substr(0, h);
    }
    if (auto q = path_part.find('?'); q != std::string_view::npos) {
        query = std::string(path_part.substr(q + 1));
        path_part = path_part.substr(0, q);
    }
    if (path_part.empty()) {
        b.query = query;
    } else if (path_part[0] == '/') {
        b.path = remove_dot_segments(path_part);
        b.query = query;
    } else {
        std::string dir = b.path.empty() ? "/" : b.path.substr(0, b.path.rfind('/') + 1);
        b.path = remove_dot_segments(dir + std::string(path_part));
        b.query = query;
    }
    b.fragment = fragment;
    return build(b);
}

}  // namespace catalog
