#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared across modules. All functions operate on UTF-8
// and treat only ASCII characters as letters for case folding.
namespace catalog::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Collapses every run of ASCII whitespace into a single space and trims.
std::string collapse_whitespace(std::string_view s);

// Whitespace-delimited tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

// Number of code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s);

// Lowercased runs of ASCII alphanumerics (apostrophes inside a word are
// dropped, so "won't" -> "wont"). Non-ASCII bytes act as separators.
std::vector<std::string> word_tokens(std::string_view s);

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

bool contains_ci(std::string_view haystack, std::string_view needle);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Stable 64-bit FNV-1a hash; used where a portable, seedable hash is needed.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

std::string url_encode(std::string_view s);

}  // namespace catalog::text
