#pragma once

#include "catalog/types.hpp"

#include <array>

namespace testsupport {

// Published collection funnel: retrieved / title filter / content filter per
// news source, plus the published total row. The total is taken as printed;
// it is not the column sum of the source rows.
struct ReferenceRow {
    const char* source;
    std::size_t retrieved;
    std::size_t title;
    std::size_t content;
    int title_pct;
    int content_pct;
};

inline constexpr std::array<ReferenceRow, 4> kReferenceRows{{
    {"MIT Technology Review", 3433, 1957, 519, 57, 15},
    {"TechCrunch", 3975, 1330, 390, 33, 10},
    {"The Verge", 720, 236, 175, 33, 24},
    {"WIRED", 34000, 22940, 1489, 67, 4},
}};

inline constexpr ReferenceRow kReferenceTotal{"Total", 42405, 26628, 2616, 63, 6};

inline catalog::FunnelCounts reference_counts(const ReferenceRow& row) {
    return {row.retrieved, row.title, row.content, row.content};
}

inline catalog::PipelineReport reference_report() {
    catalog::PipelineReport r;
    for (const auto& row : kReferenceRows) r.source_row(row.source) = reference_counts(row);
    r.totals = reference_counts(kReferenceTotal);
    return r;
}

}  // namespace testsupport
