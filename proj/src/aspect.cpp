#include "catalog/aspect.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

#include <string>

namespace catalog {

namespace {

struct AspectInfo {
    std::string_view name;
    std::string_view color;
};

constexpr std::array<AspectInfo, kAspectCount> kInfo = {{
    {"Economy", "#e6a700"},
    {"Environment & Sustainability", "#2e8b57"},
    {"Equality & Justice", "#d7263d"},
    {"Information & Discourse", "#1b98e0"},
    {"Health & Well-being", "#f46036"},
    {"Politics", "#5c4d7d"},
    {"Power", "#2e294e"},
    {"Security & Privacy", "#00a6a6"},
    {"User Experience & Entertainment", "#c44bb0"},
    {"Social Norms & Relationships", "#8c6d46"},
}};

// Lowercase, "&" -> "and", single spaces, trailing period dropped.
std::string normalize_label(std::string_view raw) {
    std::string s = text::to_lower(text::trim(raw));
    while (!s.empty() && s.back() == '.') s.pop_back();
    std::string spaced;
    for (char c : s) {
        if (c == '&') {
            spaced += " and ";
        } else {
            spaced.push_back(c);
        }
    }
    return text::collapse_whitespace(spaced);
}

}  // namespace

std::string_view canonical_name(Aspect aspect) noexcept {
    return kInfo[static_cast<std::size_t>(aspect)].name;
}

std::string_view aspect_color(Aspect aspect) noexcept {
    return kInfo[static_cast<std::size_t>(aspect)].color;
}

Aspect parse_aspect(std::string_view text) {
    const std::string key = normalize_label(text);
    for (Aspect a : kAllAspects) {
        if (normalize_label(canonical_name(a)) == key) return a;
    }
    throw UnknownAspect("not an aspect of life: \"" + std::string(text) + "\"");
}

}  // namespace catalog
