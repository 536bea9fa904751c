#include "cmpairs/csv.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <system_error>

#include "cmpairs/error.hpp"

namespace cmpairs::csv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::string location(std::size_t line) {
    return "line " + std::to_string(line);
}

}  // namespace

std::size_t Table::column(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    return npos;
}

Table read(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t start_line = line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }

        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        std::size_t i = 0;
        while (true) {
            if (i == line.size()) {
                if (quoted) {
                    // Quoted field spans a newline.
                    std::string next;
                    if (!std::getline(in, next)) {
                        throw Error(Errc::parse_error, "unterminated quote at " + location(start_line));
                    }
                    ++line_no;
                    if (!next.empty() && next.back() == '\r') {
                        next.pop_back();
                    }
                    field.push_back('\n');
                    line = std::move(next);
                    i = 0;
                    continue;
                }
                break;
            }
            const char ch = line[i];
            if (quoted) {
                if (ch == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field.push_back('"');
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(ch);
                }
            } else if (ch == '"') {
                quoted = true;
                was_quoted = true;
            } else if (ch == ',') {
                fields.push_back(was_quoted ? field : trim(field));
                field.clear();
                was_quoted = false;
            } else {
                field.push_back(ch);
            }
            ++i;
        }
        fields.push_back(was_quoted ? field : trim(field));

        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
        } else {
            table.rows.push_back(std::move(fields));
            table.lines.push_back(start_line);
        }
    }
    if (!have_header) {
        throw Error(Errc::parse_error, "empty CSV input (no header row)");
    }
    return table;
}

double parse_double(std::string_view field, std::string_view what, std::size_t line) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw Error(Errc::parse_error, "cannot parse " + std::string(what) + " '" +
                                           std::string(field) + "' at " + location(line));
    }
    return value;
}

long long parse_integer(std::string_view field, std::string_view what, std::size_t line) {
    long long value = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw Error(Errc::parse_error, "cannot parse " + std::string(what) + " '" +
                                           std::string(field) + "' as an integer at " +
                                           location(line));
    }
    return value;
}

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') {
            out.push_back('"');
        }
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

}  // namespace cmpairs::csv
