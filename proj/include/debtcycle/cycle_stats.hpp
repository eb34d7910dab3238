#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "debtcycle/dating.hpp"
#include "debtcycle/panel.hpp"
#include "debtcycle/spell.hpp"

namespace debtcycle {

/// Duration in quarters, amplitude in percent of the starting value, slope = amplitude / duration.
struct PhaseMetrics {
    int duration = 0;
    double amplitude = 0.0;
    double slope = 0.0;
};

[[nodiscard]] inline PhaseMetrics phase_metrics(const QuarterlySeries& s, const Phase& ph) {
    const double v0 = s.at(ph.start.time);
    const double v1 = s.at(ph.end.time);
    if (v0 == 0.0)
        throw std::domain_error("amplitude undefined: zero value at " + format_quarter(ph.start.time) + " in " +
                                s.country() + "/" + s.variable());
    const auto dur = ph.end.time - ph.start.time;
    if (dur <= 0) throw std::invalid_argument("phase must end after it starts");
    PhaseMetrics m;
    m.duration = static_cast<int>(dur);
    m.amplitude = 100.0 * (v1 - v0) / v0;
    m.slope = m.amplitude / m.duration;
    return m;
}

/// Sample mean with sample standard deviation (n-1) and standard error of the mean.
/// `sd`/`se` are absent when n < 2.
struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> sd;
    std::optional<double> se;
};

[[nodiscard]] inline std::optional<Moments> moments(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    Moments m;
    m.n = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(m.n);
    if (m.n >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
        m.se = *m.sd / std::sqrt(static_cast<double>(m.n));
    }
    return m;
}

/// A dated phase tagged for summary tables.
struct PhaseRecord {
    std::string country;
    PhaseKind kind = PhaseKind::Expansion;
    Horizon horizon = Horizon::Short;
    PhaseMetrics metrics;
    AssociationFlags flags;
};

struct GroupSummary {
    std::string group;
    PhaseKind kind = PhaseKind::Expansion;
    Horizon horizon = Horizon::Short;
    std::size_t n_events = 0;
    std::optional<Moments> duration;
    std::optional<Moments> amplitude;
    std::optional<Moments> slope;
    std::size_t credit_associations = 0;
    std::size_t house_associations = 0;
    std::size_t equity_associations = 0;
};

inline constexpr const char* kTotalGroup = "Total";

/// One summary per (group, kind, horizon), groups in label order followed by "Total" when requested.
/// The slope moments are taken over per-phase slopes.
[[nodiscard]] inline std::vector<GroupSummary> summarize(const std::vector<PhaseRecord>& phases,
                                                         const std::map<std::string, std::string>& grouping,
                                                         const std::vector<Horizon>& horizons = {Horizon::Short,
                                                                                                 Horizon::Medium},
                                                         bool include_total = true) {
    std::vector<std::string> labels;
    for (const auto& [country, g] : grouping)
        if (std::find(labels.begin(), labels.end(), g) == labels.end()) labels.push_back(g);
    std::sort(labels.begin(), labels.end());
    if (include_total) labels.emplace_back(kTotalGroup);

    for (const auto& p : phases)
        if (!grouping.contains(p.country)) throw std::invalid_argument("phase country '" + p.country + "' has no group");

    std::vector<GroupSummary> out;
    for (Horizon h : horizons) {
        for (PhaseKind k : {PhaseKind::Expansion, PhaseKind::Contraction}) {
            for (const auto& label : labels) {
                GroupSummary gs;
                gs.group = label;
                gs.kind = k;
                gs.horizon = h;
                std::vector<double> d, a, s;
                for (const auto& p : phases) {
                    if (p.kind != k || p.horizon != h) continue;
                    if (label != kTotalGroup && grouping.at(p.country) != label) continue;
                    d.push_back(p.metrics.duration);
                    a.push_back(p.metrics.amplitude);
                    s.push_back(p.metrics.slope);
                    gs.credit_associations += p.flags.credit;
                    gs.house_associations += p.flags.house;
                    gs.equity_associations += p.flags.equity;
                }
                gs.n_events = d.size();
                gs.duration = moments(d);
                gs.amplitude = moments(a);
                gs.slope = moments(s);
                out.push_back(std::move(gs));
            }
        }
    }
    return out;
}

struct ConditionalMean {
    std::string pattern;  ///< "none" or a financial type name
    std::size_t n = 0;
    double mean_duration = 0.0;
};

/// Mean duration for spells with no association, then one row per financial type whose dummy is 1.
/// A spell flagged for several types counts in each of those rows. Empty rows are omitted.
[[nodiscard]] inline std::vector<ConditionalMean> conditional_duration_means(const std::vector<SpellRecord>& spells) {
    std::vector<ConditionalMean> out;
    auto add = [&](std::string pattern, auto&& pred) {
        ConditionalMean row{std::move(pattern), 0, 0.0};
        double sum = 0.0;
        for (const auto& s : spells)
            if (pred(s)) {
                ++row.n;
                sum += s.duration;
            }
        if (row.n > 0) {
            row.mean_duration = sum / static_cast<double>(row.n);
            out.push_back(std::move(row));
        }
    };
    add("none", [](const SpellRecord& s) { return s.flags.none(); });
    for (auto type : kFinancialTypes)
        add(std::string(type), [type](const SpellRecord& s) { return flag_of(s.flags, type); });
    return out;
}

}  // namespace debtcycle
