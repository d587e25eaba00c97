#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace inboxaudit::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;
bool icontains(std::string_view haystack, std::string_view needle) noexcept;
bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;
std::vector<std::string> split(std::string_view s, char delim, bool trim_fields = true);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// One data row of a delimited file, with its 1-based line number.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Index of a header column (case-insensitive), or npos.
    std::size_t column(std::string_view name) const noexcept;
};

/// Reads comma- or tab-delimited text (delimiter sniffed from the first
/// non-comment line). Double-quoted fields may contain delimiters and
/// doubled quotes. Blank lines and lines starting with '#' are skipped.
/// When `has_header` is false every line is a data row.
Table parse_delimited(std::string_view contents, bool has_header = true);
Table read_delimited(const std::filesystem::path& path, bool has_header = true);

/// Quotes a field for CSV output when needed.
std::string csv_escape(std::string_view field);

/// Shortest round-trip decimal representation, so repeated runs emit
/// byte-identical numbers.
std::string format_double(double v);

} // namespace inboxaudit::text
