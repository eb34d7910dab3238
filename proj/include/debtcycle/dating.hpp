#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "debtcycle/panel.hpp"
#include "debtcycle/quarter.hpp"

namespace debtcycle {

/// How the local-extremum window compares neighbours.
enum class WindowMode {
    AllOffsets,  ///< Y_t compared against every Y_{t+-k}, k = 1..window (default)
    OuterOnly,   ///< Y_t compared only against Y_{t+-window}
};

/// Turning-point censoring rules. Short-term cycles use 2/5 quarters, medium-term 4/9.
struct CensoringRules {
    int window = 2;
    int min_phase = 2;
    int min_cycle = 5;
    WindowMode mode = WindowMode::AllOffsets;

    [[nodiscard]] static CensoringRules short_term() { return {2, 2, 5, WindowMode::AllOffsets}; }
    [[nodiscard]] static CensoringRules medium_term() { return {2, 4, 9, WindowMode::AllOffsets}; }

    void validate() const {
        if (window < 1) throw std::invalid_argument("censoring window must be >= 1");
        if (min_phase < 1) throw std::invalid_argument("min_phase must be >= 1");
        if (min_cycle < 2 * min_phase + 1)
            throw std::invalid_argument("min_cycle must be >= 2*min_phase+1 (got " + std::to_string(min_cycle) + ")");
    }

    friend bool operator==(const CensoringRules&, const CensoringRules&) = default;
};

enum class TurningKind { Peak, Trough };
enum class PhaseKind { Expansion, Contraction };

[[nodiscard]] inline const char* to_string(TurningKind k) { return k == TurningKind::Peak ? "peak" : "trough"; }
[[nodiscard]] inline const char* to_string(PhaseKind k) {
    return k == PhaseKind::Expansion ? "expansion" : "contraction";
}

struct TurningPoint {
    TurningKind kind;
    QuarterIndex time;
    double value;

    friend bool operator==(const TurningPoint&, const TurningPoint&) = default;
};

/// Trough->peak (expansion) or peak->trough (contraction) between consecutive turning points.
struct Phase {
    PhaseKind kind;
    TurningPoint start;
    TurningPoint end;
    int duration;

    friend bool operator==(const Phase&, const Phase&) = default;
};

/// Local extrema: offsets t with window <= t <= n-1-window where Y_t is strictly above (peak)
/// or below (trough) each compared neighbour. Plateaus produce no candidate.
[[nodiscard]] inline std::vector<TurningPoint> find_candidate_extrema(const QuarterlySeries& s,
                                                                      const CensoringRules& rules) {
    rules.validate();
    const auto w = static_cast<std::size_t>(rules.window);
    const std::size_t n = s.size();
    if (n < 2 * w + 1)
        throw std::invalid_argument("series " + s.country() + "/" + s.variable() + " has " + std::to_string(n) +
                                    " observations; dating needs at least " + std::to_string(2 * w + 1));
    std::vector<TurningPoint> out;
    const std::size_t k_lo = rules.mode == WindowMode::AllOffsets ? 1 : w;
    for (std::size_t t = w; t + w < n; ++t) {
        bool peak = true;
        bool trough = true;
        for (std::size_t k = k_lo; k <= w; ++k) {
            const double lo = s[t] - s[t - k];
            const double hi = s[t] - s[t + k];
            peak = peak && lo > 0 && hi > 0;
            trough = trough && lo < 0 && hi < 0;
        }
        if (peak) out.push_back({TurningKind::Peak, s.quarter_at(t), s[t]});
        if (trough) out.push_back({TurningKind::Trough, s.quarter_at(t), s[t]});
    }
    return out;
}

namespace detail {

inline bool more_extreme(const TurningPoint& a, const TurningPoint& b) {
    return a.kind == TurningKind::Peak ? a.value > b.value : a.value < b.value;
}

/// Alternation: collapse each run of same-kind points to its most extreme member (earliest on ties).
inline std::vector<TurningPoint> collapse_runs(const std::vector<TurningPoint>& pts) {
    std::vector<TurningPoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        if (!out.empty() && out.back().kind == p.kind) {
            if (more_extreme(p, out.back())) out.back() = p;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

inline double total_excursion(const std::vector<TurningPoint>& pts) {
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) sum += std::abs(pts[i].value - pts[i - 1].value);
    return sum;
}

inline std::vector<TurningPoint> without(const std::vector<TurningPoint>& pts, std::size_t idx) {
    std::vector<TurningPoint> out;
    out.reserve(pts.size() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != idx) out.push_back(pts[i]);
    return out;
}

/// Among the flagged indices, removes the point whose deletion (followed by run collapse) keeps the
/// largest total excursion; ties go to the earliest index.
inline std::vector<TurningPoint> delete_least_costly(const std::vector<TurningPoint>& pts,
                                                     const std::vector<bool>& eligible) {
    std::vector<TurningPoint> best;
    double best_exc = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!eligible[i]) continue;
        auto trial = collapse_runs(without(pts, i));
        const double exc = total_excursion(trial);
        if (exc > best_exc) {
            best_exc = exc;
            best = std::move(trial);
        }
    }
    return best;
}

}  // namespace detail

/// Applies the censoring rules to time-sorted candidates until nothing changes:
///   1. alternation (keep the highest of consecutive peaks / lowest of consecutive troughs);
///   2. ordering (a peak must exceed the preceding trough and vice versa);
///   3. minimum phase length;
///   4. minimum cycle length between consecutive same-kind points.
/// Steps 2-4 delete one point per pass, chosen among the members of violating pairs (the
/// intervening point for step 4) as the deletion that least reduces total excursion.
[[nodiscard]] inline std::vector<TurningPoint> censor_turning_points(std::vector<TurningPoint> candidates,
                                                                     const QuarterlySeries& s,
                                                                     const CensoringRules& rules) {
    rules.validate();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0 && !(candidates[i - 1].time < candidates[i].time))
            throw std::invalid_argument("candidates must be strictly time-sorted");
        if (!s.contains(candidates[i].time)) throw std::invalid_argument("candidate outside series");
    }

    auto pts = detail::collapse_runs(candidates);
    for (;;) {
        const std::size_t m = pts.size();
        std::vector<bool> flagged(m, false);
        bool any = false;

        for (std::size_t i = 1; i < m; ++i) {
            const auto& a = pts[i - 1];
            const auto& b = pts[i];
            const bool ordered = a.kind == TurningKind::Trough ? b.value > a.value : b.value < a.value;
            if (!ordered) flagged[i - 1] = flagged[i] = any = true;
        }
        if (!any) {
            for (std::size_t i = 1; i < m; ++i) {
                if (pts[i].time - pts[i - 1].time < rules.min_phase) flagged[i - 1] = flagged[i] = any = true;
            }
        }
        if (!any) {
            for (std::size_t i = 2; i < m; ++i) {
                if (pts[i].time - pts[i - 2].time < rules.min_cycle) flagged[i - 1] = any = true;
            }
        }
        if (!any) break;
        pts = detail::delete_least_costly(pts, flagged);
    }
    return pts;
}

/// One phase per adjacent pair of censored turning points. Segments before the first and after the
/// last turning point are incomplete and not returned.
[[nodiscard]] inline std::vector<Phase> extract_phases(const std::vector<TurningPoint>& points,
                                                       const CensoringRules& rules) {
    std::vector<Phase> out;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (a.kind == b.kind) throw std::invalid_argument("turning points do not alternate");
        const auto dur = b.time - a.time;
        if (dur < rules.min_phase) throw std::invalid_argument("phase shorter than min_phase");
        const PhaseKind kind = a.kind == TurningKind::Trough ? PhaseKind::Expansion : PhaseKind::Contraction;
        const bool ordered = kind == PhaseKind::Expansion ? b.value > a.value : b.value < a.value;
        if (!ordered) throw std::invalid_argument("turning points violate peak/trough ordering");
        out.push_back({kind, a, b, static_cast<int>(dur)});
    }
    return out;
}

struct DatedCycles {
    std::vector<TurningPoint> points;
    std::vector<Phase> phases;
};

/// Candidate extraction, censoring and phase extraction in one call.
[[nodiscard]] inline DatedCycles date_cycles(const QuarterlySeries& s, const CensoringRules& rules) {
    DatedCycles out;
    out.points = censor_turning_points(find_candidate_extrema(s, rules), s, rules);
    out.phases = extract_phases(out.points, rules);
    return out;
}

}  // namespace debtcycle
