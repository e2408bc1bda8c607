#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catalog::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line endings.
// Blank lines are skipped. Throws MalformedCsv on an unterminated quote.
std::vector<Row> parse(std::string_view data);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

// A parsed file whose first row is the header.
struct Table {
    Row header;
    std::vector<Row> rows;

    // Index of a header column matched case-insensitively after trimming.
    std::optional<std::size_t> column(std::string_view name) const;
};

// Throws MalformedCsv when the data has no header row or a row's width
// differs from the header's.
Table parse_table(std::string_view data);

}  // namespace catalog::csv
