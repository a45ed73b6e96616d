#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pricing::csv {

// Minimal comma-separated table: no quoting, first line is the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a named column; throws ParseError when absent.
    std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source_name);

// Requires the header to start with exactly these columns, in order.
void require_header(const Table& t, const std::vector<std::string_view>& expected, const std::string& source_name);

double to_double(std::string_view field, const std::string& context);

// Shortest text that round-trips the double exactly.
std::string format_number(double value);

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

} // namespace pricing::csv
