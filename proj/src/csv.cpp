#include "catalog/csv.hpp"

#include "catalog/error.hpp"
#include "catalog/text.hpp"

namespace catalog::csv {

std::vector<Row> parse(std::string_view data) {
    // tolerate a UTF-8 byte order mark from spreadsheet exports
    if (text::starts_with(data, "\xEF\xBB\xBF")) data.remove_prefix(3);

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    auto end_row = [&] {
        if (field_started || !row.empty()) {
            row.push_back(std::move(field));
            rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        field_started = false;
    };
    for (std::size_t i = 0; i < data.size(); ++i) {
        char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw MalformedCsv("unterminated quoted field");
    end_row();
    return rows;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(row[i]);
    }
    out += "\r\n";
    return out;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    const auto want = text::to_lower(text::trim(name));
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (text::to_lower(text::trim(header[i])) == want) return i;
    }
    return std::nullopt;
}

Table parse_table(std::string_view data) {
    auto rows = parse(data);
    if (rows.empty()) throw MalformedCsv("missing header row");
    Table t;
    t.header = std::move(rows.front());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != t.header.size()) {
            throw MalformedCsv("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                               " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(rows[i]));
    }
    return t;
}

}  // namespace catalog::csv
