#pragma once

#include <initializer_list>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "debtcycle/quarter.hpp"

namespace debtcycle {

/// Minimal RFC-4180 style reader: comma separated, optional double-quoted fields, blank lines skipped.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

    std::optional<std::vector<std::string>> next_row() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            return split(line);
        }
        return std::nullopt;
    }

    /// "name:line" of the most recently returned row.
    [[nodiscard]] std::string context() const { return name_ + ":" + std::to_string(line_no_); }

private:
    std::vector<std::string> split(const std::string& line) const {
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        cur.push_back('"');
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    cur.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(trim(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (quoted) throw ParseError(context() + ": unterminated quoted field");
        fields.push_back(trim(cur));
        return fields;
    }

    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return {};
        auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    std::istream& in_;
    std::string name_;
    std::size_t line_no_ = 0;
};

inline void require_header(const std::vector<std::string>& header, std::initializer_list<std::string_view> expected,
                           const std::string& where) {
    bool ok = header.size() == expected.size();
    std::size_t i = 0;
    for (auto name : expected) {
        if (!ok) break;
        ok = header[i++] == name;
    }
    if (!ok) {
        std::string want;
        for (auto name : expected) want += (want.empty() ? "" : ",") + std::string(name);
        throw ParseError(where + ": expected header '" + want + "'");
    }
}

/// Quotes a field only when it contains a separator, quote or newline.
[[nodiscard]] inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_field(fields[i]);
    }
    out << '\n';
}

}  // namespace debtcycle
