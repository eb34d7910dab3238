#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "debtcycle/csv.hpp"
#include "debtcycle/quarter.hpp"

namespace debtcycle {

/// Raised when panel input is structurally invalid (gaps, duplicates, unmapped countries).
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One country's quarterly observations of one variable on a contiguous quarter grid.
class QuarterlySeries {
public:
    QuarterlySeries(std::string country, std::string variable, QuarterIndex start, std::vector<double> values)
        : country_(std::move(country)), variable_(std::move(variable)), start_(start), values_(std::move(values)) {
        if (values_.empty()) throw std::invalid_argument("series " + country_ + "/" + variable_ + " is empty");
    }

    [[nodiscard]] const std::string& country() const { return country_; }
    [[nodiscard]] const std::string& variable() const { return variable_; }
    [[nodiscard]] QuarterIndex start() const { return start_; }
    [[nodiscard]] QuarterIndex end() const { return start_ + static_cast<std::int64_t>(values_.size() - 1); }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] bool contains(QuarterIndex q) const { return q >= start_ && q <= end(); }

    /// Offset of `q` from the series start. Requires contains(q).
    [[nodiscard]] std::size_t offset(QuarterIndex q) const {
        if (!contains(q)) throw std::out_of_range(format_quarter(q) + " outside series " + country_ + "/" + variable_);
        return static_cast<std::size_t>(q - start_);
    }
    [[nodiscard]] QuarterIndex quarter_at(std::size_t offset) const {
        return start_ + static_cast<std::int64_t>(offset);
    }
    [[nodiscard]] double at(QuarterIndex q) const { return values_[offset(q)]; }

    friend bool operator==(const QuarterlySeries&, const QuarterlySeries&) = default;

private:
    std::string country_;
    std::string variable_;
    QuarterIndex start_;
    std::vector<double> values_;
};

/// A collection of series keyed by (country, variable) plus a country -> group mapping.
class Panel {
public:
    using Key = std::pair<std::string, std::string>;

    void add(QuarterlySeries s) {
        Key key{s.country(), s.variable()};
        if (series_.contains(key)) throw IngestError("duplicate series " + key.first + "/" + key.second);
        series_.emplace(std::move(key), std::move(s));
    }
    void set_group(const std::string& country, std::string group) { groups_[country] = std::move(group); }

    [[nodiscard]] const QuarterlySeries* find(const std::string& country, const std::string& variable) const {
        auto it = series_.find({country, variable});
        return it == series_.end() ? nullptr : &it->second;
    }
    [[nodiscard]] const QuarterlySeries& get(const std::string& country, const std::string& variable) const {
        if (const auto* s = find(country, variable)) return *s;
        throw std::out_of_range("no series " + country + "/" + variable);
    }

    [[nodiscard]] const std::map<Key, QuarterlySeries>& series() const { return series_; }
    [[nodiscard]] const std::map<std::string, std::string>& groups() const { return groups_; }

    [[nodiscard]] const std::string& group_of(const std::string& country) const {
        auto it = groups_.find(country);
        if (it == groups_.end()) throw std::out_of_range("country '" + country + "' has no group");
        return it->second;
    }

    /// Countries that have at least one series, sorted.
    [[nodiscard]] std::vector<std::string> countries() const {
        std::set<std::string> out;
        for (const auto& [key, s] : series_) out.insert(key.first);
        return {out.begin(), out.end()};
    }

    [[nodiscard]] bool empty() const { return series_.empty(); }

    friend bool operator==(const Panel&, const Panel&) = default;

private:
    std::map<Key, QuarterlySeries> series_;
    std::map<std::string, std::string> groups_;
};

namespace detail {

inline std::optional<double> parse_value(const std::string& cell, const std::string& where) {
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".") return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": invalid numeric value '" + cell + "'");
    }
}

}  // namespace detail

/// Reads a long-format panel (`country,quarter,variable,value`) and a `country,group` map.
///
/// Rows may appear in any order. Empty/NA values at either end of a series are trimmed;
/// a missing value or absent quarter strictly inside the observed range is an IngestError
/// naming the first missing quarter. Every country that has data must appear in the group map.
[[nodiscard]] inline Panel load_panel(std::istream& panel_csv, std::istream& group_csv,
                                      const std::string& panel_name = "panel",
                                      const std::string& group_name = "groups") {
    Panel panel;

    std::map<std::string, std::string> groups;
    {
        CsvReader reader(group_csv, group_name);
        if (auto header = reader.next_row()) {
            require_header(*header, {"country", "group"}, reader.context());
            while (auto row = reader.next_row()) {
                if (row->size() != 2) throw IngestError(reader.context() + ": expected 2 fields");
                const auto& country = (*row)[0];
                const auto& group = (*row)[1];
                if (group.empty()) throw IngestError(reader.context() + ": empty group label for " + country);
                auto [it, inserted] = groups.emplace(country, group);
                if (!inserted && it->second != group)
                    throw IngestError(reader.context() + ": conflicting group for " + country);
            }
        }
    }

    using Obs = std::map<QuarterIndex, std::optional<double>>;
    std::map<Panel::Key, Obs> raw;
    {
        CsvReader reader(panel_csv, panel_name);
        if (auto header = reader.next_row()) {
            require_header(*header, {"country", "quarter", "variable", "value"}, reader.context());
            while (auto row = reader.next_row()) {
                if (row->size() != 4) throw IngestError(reader.context() + ": expected 4 fields");
                const auto where = reader.context();
                QuarterIndex q;
                try {
                    q = parse_quarter((*row)[1]);
                } catch (const ParseError& e) {
                    throw ParseError(where + ": " + e.what());
                }
                auto& obs = raw[{(*row)[0], (*row)[2]}];
                if (!obs.emplace(q, detail::parse_value((*row)[3], where)).second)
                    throw IngestError(where + ": duplicate observation " + (*row)[0] + "/" + (*row)[2] + " " +
                                      format_quarter(q));
            }
        }
    }

    for (auto& [key, obs] : raw) {
        auto first = std::find_if(obs.begin(), obs.end(), [](const auto& kv) { return kv.second.has_value(); });
        if (first == obs.end()) continue;
        auto last = std::find_if(obs.rbegin(), obs.rend(), [](const auto& kv) { return kv.second.has_value(); });
        const QuarterIndex start = first->first;
        const QuarterIndex stop = last->first;
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(stop - start + 1));
        for (QuarterIndex q = start; q <= stop; q = q.next()) {
            auto it = obs.find(q);
            if (it == obs.end() || !it->second)
                throw IngestError(panel_name + ": gap at " + format_quarter(q) + " in series " + key.first + "/" +
                                  key.second);
            values.push_back(*it->second);
        }
        if (!groups.contains(key.first))
            throw IngestError(group_name + ": unknown group for country '" + key.first + "'");
        panel.add(QuarterlySeries(key.first, key.second, start, std::move(values)));
    }
    for (auto& [country, group] : groups) panel.set_group(country, group);
    return panel;
}

[[nodiscard]] inline Panel load_panel_files(const std::string& panel_path, const std::string& group_path) {
    std::ifstream panel_in(panel_path);
    if (!panel_in) throw IngestError("cannot open " + panel_path);
    std::ifstream group_in(group_path);
    if (!group_in) throw IngestError("cannot open " + group_path);
    return load_panel(panel_in, group_in, panel_path, group_path);
}

/// Quarter-on-quarter percentage change: 100 (s_t - s_{t-1}) / s_{t-1}, starting one quarter later.
[[nodiscard]] inline QuarterlySeries pct_change(const QuarterlySeries& s) {
    if (s.size() < 2) throw std::invalid_argument("pct_change needs at least 2 observations");
    std::vector<double> out(s.size() - 1);
    for (std::size_t t = 1; t < s.size(); ++t) {
        if (s[t - 1] == 0.0)
            throw std::domain_error("pct_change: zero value at " + format_quarter(s.quarter_at(t - 1)) + " in " +
                                    s.country() + "/" + s.variable());
        out[t - 1] = 100.0 * (s[t] - s[t - 1]) / s[t - 1];
    }
    return QuarterlySeries(s.country(), s.variable(), s.start().next(), std::move(out));
}

}  // namespace debtcycle
