#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cmpairs::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row, for error messages.
    std::vector<std::size_t> lines;

    /// Index of a header column, or npos.
    std::size_t column(std::string_view name) const noexcept;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Reads comma-delimited UTF-8 text with a header row. Fields may be wrapped
/// in double quotes ("" escapes a quote). Blank lines are skipped and a
/// trailing CR is dropped. Throws Error(parse_error) on an unterminated quote
/// or an empty input.
Table read(std::istream& in);

double parse_double(std::string_view field, std::string_view what, std::size_t line);
long long parse_integer(std::string_view field, std::string_view what, std::size_t line);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace cmpairs::csv
