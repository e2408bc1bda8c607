#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace catalog {

// The fixed ten-member taxonomy of aspects of life a consequence can affect.
// Declaration order is the order used in the categorization prompt.
enum class Aspect : std::uint8_t {
    Economy,
    EnvironmentSustainability,
    EqualityJustice,
    InformationDiscourse,
    HealthWellBeing,
    Politics,
    Power,
    SecurityPrivacy,
    UserExperienceEntertainment,
    SocialNormsRelationships,
};

inline constexpr std::size_t kAspectCount = 10;

inline constexpr std::array<Aspect, kAspectCount> kAllAspects = {
    Aspect::Economy,         Aspect::EnvironmentSustainability, Aspect::EqualityJustice,
    Aspect::InformationDiscourse, Aspect::HealthWellBeing,      Aspect::Politics,
    Aspect::Power,           Aspect::SecurityPrivacy,           Aspect::UserExperienceEntertainment,
    Aspect::SocialNormsRelationships,
};

// Canonical display name, e.g. "Security & Privacy".
std::string_view canonical_name(Aspect aspect) noexcept;

// Header color used by card renderers ("#rrggbb"); one distinct color per aspect.
std::string_view aspect_color(Aspect aspect) noexcept;

// Maps a raw model label onto the taxonomy. Matching ignores case, leading
// and trailing whitespace, runs of internal whitespace, a trailing period,
// and treats "&" and "and" as the same word. Throws UnknownAspect.
Aspect parse_aspect(std::string_view text);

}  // namespace catalog
