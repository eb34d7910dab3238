#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "debtcycle/csv.hpp"
#include "debtcycle/dating.hpp"
#include "debtcycle/panel.hpp"
#include "debtcycle/random.hpp"
#include "debtcycle/survival.hpp"

namespace debtcycle {

/// Distribution of one simulated covariate column.
struct CovariateLaw {
    enum class Kind { Normal, Bernoulli };
    std::string name;
    Kind kind = Kind::Normal;
    double rate = 0.5;  ///< success probability for Bernoulli
};

struct SimConfig {
    std::uint64_t seed = 1;
    int groups = 100;
    int spells_min = 4;
    int spells_max = 4;
    Eigen::VectorXd beta_aft;  ///< intercept first
    double p = 1.0;
    double theta = 0.0;
    std::vector<CovariateLaw> covariates;  ///< one per non-intercept coefficient

    void validate() const {
        if (!(p > 0)) throw std::invalid_argument("sim config: p must be > 0");
        if (!(theta >= 0)) throw std::invalid_argument("sim config: theta must be >= 0");
        if (groups < 1 || spells_min < 1 || spells_max < spells_min)
            throw std::invalid_argument("sim config: invalid group/spell counts");
        if (beta_aft.size() != static_cast<Eigen::Index>(covariates.size()) + 1)
            throw std::invalid_argument("sim config: need one covariate law per non-intercept coefficient");
    }
};

struct SimulatedSurvival {
    SurvivalData data;
    FrailtyParams truth;
    std::vector<double> frailties;  ///< one per group
};

/// Draws alpha_i ~ IG(mean 1, var theta) per group, then t = [-ln U / (alpha_i exp(x'b))]^(1/p) with
/// b = -p beta_aft. Group g uses the sub-stream derive_seed(seed, g).
[[nodiscard]] inline SimulatedSurvival simulate_frailty_durations(const SimConfig& cfg) {
    cfg.validate();
    const auto k = cfg.beta_aft.size();
    std::vector<int> group;
    std::vector<double> duration;
    std::vector<std::vector<double>> rows;
    std::vector<double> frailties;
    const Eigen::VectorXd b = -cfg.p * cfg.beta_aft;
    for (int g = 0; g < cfg.groups; ++g) {
        SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(g)));
        const double alpha = frailty_draw(rng, cfg.theta);
        frailties.push_back(alpha);
        const int span = cfg.spells_max - cfg.spells_min + 1;
        const int n = cfg.spells_min + static_cast<int>(rng.next() % static_cast<std::uint64_t>(span));
        for (int j = 0; j < n; ++j) {
            std::vector<double> x(static_cast<std::size_t>(k));
            x[0] = 1.0;
            for (std::size_t c = 0; c < cfg.covariates.size(); ++c) {
                const auto& law = cfg.covariates[c];
                x[c + 1] = law.kind == CovariateLaw::Kind::Normal ? standard_normal(rng)
                                                                   : (uniform_open(rng) < law.rate ? 1.0 : 0.0);
            }
            double eta = 0.0;
            for (Eigen::Index c = 0; c < k; ++c) eta += x[static_cast<std::size_t>(c)] * b(c);
            const double u = uniform_open(rng);
            const double t = std::pow(-std::log(u) / (alpha * std::exp(eta)), 1.0 / cfg.p);
            group.push_back(g);
            duration.push_back(t);
            rows.push_back(std::move(x));
        }
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Eigen::Index c = 0; c < k; ++c) X(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    std::vector<std::string> names{kConstantName};
    for (const auto& law : cfg.covariates) names.push_back(law.name);
    return {SurvivalData(std::move(group), std::move(duration), std::move(X), std::move(names)),
            {cfg.beta_aft, std::log(cfg.p), cfg.theta > 0 ? std::log(cfg.theta) : -INFINITY},
            std::move(frailties)};
}

struct Knot {
    QuarterIndex time;
    double value;
};

/// Knots of a piecewise-linear path plus Gaussian noise on every quarter.
struct TurningSchedule {
    std::vector<Knot> knots;
    double noise_sd = 0.0;
    std::string country = "SIM";
    std::string variable = "debt";
};

struct SimulatedSeries {
    QuarterlySeries series;
    std::vector<TurningPoint> points;  ///< the knots, as turning points
    std::vector<Phase> phases;         ///< one per adjacent knot pair
};

/// Interpolates the knots linearly and mirrors the path for `rules.window` quarters beyond the first
/// and last knot, so every knot is a strict local extremum of the noiseless path. Knots must alternate
/// up/down, be spaced at least `min_phase` apart, and same-kind knots at least `min_cycle` apart.
[[nodiscard]] inline SimulatedSeries simulate_turning_series(const TurningSchedule& sched, std::uint64_t seed,
                                                             const CensoringRules& rules = CensoringRules::short_term()) {
    rules.validate();
    const auto& k = sched.knots;
    if (k.size() < 2) throw std::invalid_argument("turning schedule needs at least 2 knots");
    if (sched.noise_sd < 0) throw std::invalid_argument("turning schedule: negative noise");
    for (std::size_t i = 1; i < k.size(); ++i) {
        if (k[i].time - k[i - 1].time < rules.min_phase)
            throw std::invalid_argument("turning schedule: knots " + format_quarter(k[i - 1].time) + " and " +
                                        format_quarter(k[i].time) + " closer than min_phase");
        if (k[i].value == k[i - 1].value) throw std::invalid_argument("turning schedule: equal adjacent knot values");
        if (i >= 2) {
            const bool up1 = k[i - 1].value > k[i - 2].value;
            const bool up2 = k[i].value > k[i - 1].value;
            if (up1 == up2) throw std::invalid_argument("turning schedule: knot values do not alternate");
            if (k[i].time - k[i - 2].time < rules.min_cycle)
                throw std::invalid_argument("turning schedule: cycle shorter than min_cycle");
        }
    }

    const int pad = rules.window;
    const auto span = static_cast<int>(k.back().time - k.front().time);
    auto path = [&](int off) {  // off relative to the first knot
        if (off < 0) off = -off;
        if (off > span) off = 2 * span - off;
        const QuarterIndex q = k.front().time + off;
        for (std::size_t i = 1; i < k.size(); ++i) {
            if (q <= k[i].time) {
                const double w = static_cast<double>(q - k[i - 1].time) / static_cast<double>(k[i].time - k[i - 1].time);
                return k[i - 1].value + w * (k[i].value - k[i - 1].value);
            }
        }
        return k.back().value;
    };

    SplitMix64 rng(seed);
    std::vector<double> values;
    for (int off = -pad; off <= span + pad; ++off) {
        double v = path(off);
        if (sched.noise_sd > 0) v += sched.noise_sd * standard_normal(rng);
        values.push_back(v);
    }

    SimulatedSeries out{QuarterlySeries(sched.country, sched.variable, k.front().time - pad, std::move(values)), {}, {}};
    for (std::size_t i = 0; i < k.size(); ++i) {
        const bool peak = i + 1 < k.size() ? k[i].value > k[i + 1].value : k[i].value > k[i - 1].value;
        out.points.push_back({peak ? TurningKind::Peak : TurningKind::Trough, k[i].time, k[i].value});
    }
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const auto& a = out.points[i - 1];
        const auto& b = out.points[i];
        out.phases.push_back({a.kind == TurningKind::Trough ? PhaseKind::Expansion : PhaseKind::Contraction, a, b,
                              static_cast<int>(b.time - a.time)});
    }
    return out;
}

/// Settings for a synthetic country panel with every variable the pipeline reads.
struct PanelSimConfig {
    std::uint64_t seed = 7;
    int n_ae = 8;
    int n_em = 8;
    QuarterIndex ae_start{1990, 1};
    QuarterIndex em_start{1998, 1};
    QuarterIndex end{2022, 4};
    double noise = 0.15;  ///< percent of level
};

struct SimulatedPanel {
    Panel panel;
    std::vector<std::string> countries;
};

namespace detail {

/// Alternating random cycle knots over [0, n): durations in [dmin, dmax], moves in percent.
inline std::vector<std::pair<int, double>> random_cycle(SplitMix64& rng, int n, double level, int dmin, int dmax,
                                                        double up_lo, double up_hi, double dn_lo, double dn_hi) {
    std::vector<std::pair<int, double>> knots{{0, level}};
    bool up = uniform_open(rng) < 0.6;
    int t = 0;
    while (t < n - 1) {
        t += dmin + static_cast<int>(rng.next() % static_cast<std::uint64_t>(dmax - dmin + 1));
        t = std::min(t, n - 1);
        const double move = up ? up_lo + (up_hi - up_lo) * uniform_open(rng) : -(dn_lo + (dn_hi - dn_lo) * uniform_open(rng));
        level *= 1.0 + move / 100.0;
        knots.emplace_back(t, level);
        up = !up;
    }
    return knots;
}

inline std::vector<double> interpolate(const std::vector<std::pair<int, double>>& knots, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    std::size_t seg = 1;
    for (int t = 0; t < n; ++t) {
        while (seg + 1 < knots.size() && t > knots[seg].first) ++seg;
        const auto& [t0, v0] = knots[seg - 1];
        const auto& [t1, v1] = knots[seg];
        const double w = t1 == t0 ? 0.0 : static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        out[static_cast<std::size_t>(t)] = v0 + std::clamp(w, 0.0, 1.0) * (v1 - v0);
    }
    return out;
}

inline std::vector<double> compound(SplitMix64& rng, int n, double level, double mean_pct, double sd_pct) {
    std::vector<double> out;
    for (int t = 0; t < n; ++t) {
        out.push_back(level);
        level *= 1.0 + (mean_pct + sd_pct * standard_normal(rng)) / 100.0;
    }
    return out;
}

}  // namespace detail

/// Synthetic panel: financial cycles (credit, house, equity) are drawn first; public-debt expansions
/// that start within one quarter of a financial peak are lengthened, so the association dummies carry
/// signal. Macro controls (gdp, money, cpi, reer, balance, oil) are random walks; oil is common to
/// all countries. Country c uses the sub-stream derive_seed(seed, c).
[[nodiscard]] inline SimulatedPanel simulate_panel(const PanelSimConfig& cfg) {
    SimulatedPanel out;
    SplitMix64 oil_rng(derive_seed(cfg.seed, 0xffffULL));
    const int n_total = static_cast<int>(cfg.end - cfg.ae_start) + 1;
    const auto oil = detail::compound(oil_rng, n_total, 60.0, 0.4, 8.0);

    const int n_countries = cfg.n_ae + cfg.n_em;
    for (int c = 0; c < n_countries; ++c) {
        const bool ae = c < cfg.n_ae;
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s%02d", ae ? "AE" : "EM", ae ? c + 1 : c - cfg.n_ae + 1);
        const std::string country = buf;
        out.countries.push_back(country);
        out.panel.set_group(country, ae ? "AE" : "EM");

        SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c) + 1));
        const QuarterIndex start = ae ? cfg.ae_start : cfg.em_start;
        const int n = static_cast<int>(cfg.end - start) + 1;
        auto noisy = [&](std::vector<double> v) {
            for (double& x : v) x *= 1.0 + cfg.noise / 100.0 * standard_normal(rng);
            return v;
        };
        auto add = [&](const char* var, std::vector<double> v) {
            out.panel.add(QuarterlySeries(country, var, start, std::move(v)));
        };

        const auto credit = detail::random_cycle(rng, n, 80 + 60 * uniform_open(rng), 3, 12, 4, 15, 3, 10);
        const auto house = detail::random_cycle(rng, n, 100, 3, 12, 5, 20, 4, 14);
        const auto equity = detail::random_cycle(rng, n, 100, 2, 8, 10, 40, 8, 30);

        auto fin_peak_near = [&](int t) {
            int hits = 0;
            for (const auto* ks : {&credit, &house, &equity})
                for (std::size_t i = 1; i + 1 < ks->size(); ++i) {
                    const bool peak = (*ks)[i].second > (*ks)[i - 1].second && (*ks)[i].second > (*ks)[i + 1].second;
                    if (peak && std::abs((*ks)[i].first - t) <= 1) ++hits;
                }
            return hits;
        };

        std::vector<std::pair<int, double>> debt{{0, (ae ? 40.0 : 25.0) + 30.0 * uniform_open(rng)}};
        bool up = uniform_open(rng) < 0.5;
        int t = 0;
        while (t < n - 1) {
            double level = debt.back().second;
            int dur;
            double move;
            if (up) {
                const int hits = fin_peak_near(t);
                dur = 3 + static_cast<int>(rng.next() % 7);
                dur = static_cast<int>(std::lround(dur * (1.0 + 0.5 * hits)));
                move = (4.0 + 20.0 * uniform_open(rng)) * (1.0 + 0.3 * hits) * (ae ? 1.0 : 1.4);
            } else {
                dur = 2 + static_cast<int>(rng.next() % 6);
                move = -(3.0 + 9.0 * uniform_open(rng));
            }
            t = std::min(t + dur, n - 1);
            level *= 1.0 + move / 100.0;
            debt.emplace_back(t, level);
            up = !up;
        }

        add("debt", noisy(detail::interpolate(debt, n)));
        add("credit", noisy(detail::interpolate(credit, n)));
        add("house", noisy(detail::interpolate(house, n)));
        add("equity", noisy(detail::interpolate(equity, n)));
        add("gdp", detail::compound(rng, n, 100, ae ? 0.5 : 1.0, 0.8));
        add("money", detail::compound(rng, n, 100, 1.5, 1.0));
        add("cpi", detail::compound(rng, n, 100, ae ? 0.5 : 1.2, 0.4));
        add("reer", detail::compound(rng, n, 100, 0.0, 2.0));
        std::vector<double> balance;
        double b = -1.0 + 2.0 * standard_normal(rng);
        for (int q = 0; q < n; ++q) {
            balance.push_back(b);
            b = 0.8 * b + 0.2 * (ae ? 0.5 : -1.5) + 1.0 * standard_normal(rng);
        }
        add("balance", std::move(balance));
        const auto offset = static_cast<std::size_t>(start - cfg.ae_start);
        add("oil", std::vector<double>(oil.begin() + static_cast<std::ptrdiff_t>(offset),
                                       oil.begin() + static_cast<std::ptrdiff_t>(offset) + n));
    }
    return out;
}

/// Writes a panel in the long CSV format read by load_panel.
inline void write_panel_csv(std::ostream& out, const Panel& panel) {
    out << "country,quarter,variable,value\n";
    char buf[64];
    for (const auto& [key, s] : panel.series()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g", s[i]);
            write_csv_row(out, {s.country(), format_quarter(s.quarter_at(i)), s.variable(), buf});
        }
    }
}

inline void write_groups_csv(std::ostream& out, const Panel& panel) {
    out << "country,group\n";
    for (const auto& [country, group] : panel.groups()) write_csv_row(out, {country, group});
}

}  // namespace debtcycle
