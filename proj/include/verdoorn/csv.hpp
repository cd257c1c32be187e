#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "verdoorn/errors.hpp"

namespace verdoorn::csv {

/// One parsed row; line is the 1-based position in the stream.
struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

inline std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == delim) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

/// Reads a delimited table with a header row. The delimiter is comma unless
/// the header contains tabs, in which case tab is used. Blank lines are
/// skipped. A UTF-8 BOM on the first line is stripped.
struct Table {
    std::vector<std::string> header;  // lower-cased
    std::vector<Row> rows;
    char delim = ',';

    std::optional<std::size_t> column(const std::string& name) const {
        const std::string needle = lower(trim(name));
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == needle) return i;
        }
        return std::nullopt;
    }
};

inline Table read_table(std::istream& in, const std::string& what) {
    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (!have_header) {
            table.delim = line.find('\t') != std::string::npos ? '\t' : ',';
            for (auto& f : split(line, table.delim)) table.header.push_back(lower(f));
            have_header = true;
            continue;
        }
        Row row;
        row.fields = split(line, table.delim);
        row.line = lineno;
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw SchemaError(what + ": empty input, expected a header row");
    return table;
}

inline double parse_double(const std::string& s, const std::string& what, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw SchemaError(what + ": cannot parse number '" + s + "' at line " +
                          std::to_string(line));
    }
}

inline int parse_int(const std::string& s, const std::string& what, std::size_t line) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw SchemaError(what + ": cannot parse integer '" + s + "' at line " +
                          std::to_string(line));
    }
}

}  // namespace verdoorn::csv
