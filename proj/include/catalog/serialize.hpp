#pragma once

#include "catalog/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace catalog {

using Json = nlohmann::json;

void to_json(Json& j, const TechDomain& d);
void from_json(const Json& j, TechDomain& d);
void to_json(Json& j, const Article& a);
void from_json(const Json& j, Article& a);
void to_json(Json& j, const FilterDecision& d);
void from_json(const Json& j, FilterDecision& d);
void to_json(Json& j, const Provenance& p);
void from_json(const Json& j, Provenance& p);
void to_json(Json& j, const ConsequenceCard& c);
void from_json(const Json& j, ConsequenceCard& c);
void to_json(Json& j, const FunnelCounts& c);
void from_json(const Json& j, FunnelCounts& c);
void to_json(Json& j, const PipelineReport& r);
void from_json(const Json& j, PipelineReport& r);

// Compact UTF-8 JSON with object keys in byte-lexicographic order at every
// level. Identical cards always serialize to identical bytes.
std::string canonical_json(const Json& j);
std::string canonical_card_json(const ConsequenceCard& card);
ConsequenceCard parse_card_json(std::string_view bytes);

}  // namespace catalog
