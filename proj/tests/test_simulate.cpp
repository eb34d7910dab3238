#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "debtcycle/simulate.hpp"

using namespace debtcycle;

namespace {

SimConfig intercept_only(std::uint64_t seed, int n, double p, double theta, double b0 = 0.0) {
    SimConfig c;
    c.seed = seed;
    c.groups = n;
    c.spells_min = c.spells_max = 1;
    c.beta_aft = Eigen::VectorXd::Constant(1, b0);
    c.p = p;
    c.theta = theta;
    return c;
}

void expect_mean_within_3_sigma(const std::vector<double>& t, double mean, double sd) {
    double s = 0.0;
    for (double v : t) s += v;
    const double m = s / static_cast<double>(t.size());
    EXPECT_LT(std::abs(m - mean), 3.0 * sd / std::sqrt(static_cast<double>(t.size()))) << "sample mean " << m;
}

}  // namespace

TEST(SimulateDurations, ExponentialMean) {
    const auto sim = simulate_frailty_durations(intercept_only(1, 100000, 1.0, 0.0));
    expect_mean_within_3_sigma(sim.data.durations(), 1.0, 1.0);
}

TEST(SimulateDurations, WeibullShapeTwoMean) {
    const auto sim = simulate_frailty_durations(intercept_only(2, 100000, 2.0, 0.0));
    const double mean = std::tgamma(1.5);
    const double sd = std::sqrt(std::tgamma(2.0) - mean * mean);
    EXPECT_NEAR(mean, 0.8862, 1e-4);
    expect_mean_within_3_sigma(sim.data.durations(), mean, sd);
}

TEST(SimulateDurations, SameSeedSameData) {
    SimConfig c = intercept_only(99, 50, 1.5, 0.5, 0.3);
    c.spells_min = 2;
    c.spells_max = 6;
    c.beta_aft = Eigen::Vector2d(0.3, -0.4);
    c.covariates = {{"d", CovariateLaw::Kind::Bernoulli, 0.3}};
    const auto a = simulate_frailty_durations(c);
    const auto b = simulate_frailty_durations(c);
    EXPECT_EQ(a.data.durations(), b.data.durations());
    EXPECT_EQ(a.data.design(), b.data.design());
    EXPECT_EQ(a.frailties, b.frailties);
    c.seed = 100;
    EXPECT_NE(simulate_frailty_durations(c).data.durations(), a.data.durations());
}

TEST(SimulateDurations, MarginalSurvivorWithinDkwBand) {
    // One spell per group: S(t) = L(t^p exp(-p b0)) for the inverse-Gaussian Laplace transform L.
    const double p = 1.5, theta = 0.5, b0 = 0.4;
    const int n = 20000;
    const auto sim = simulate_frailty_durations(intercept_only(5, n, p, theta, b0));
    auto t = sim.data.durations();
    std::sort(t.begin(), t.end());
    const double eps = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * n));
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double s = std::pow(t[static_cast<std::size_t>(i)], p) * std::exp(-p * b0);
        const double F = 1.0 - std::exp(ig_laplace_log_derivative(s, theta, 0));
        worst = std::max({worst, std::abs(F - (i + 1.0) / n), std::abs(F - static_cast<double>(i) / n)});
    }
    EXPECT_LT(worst, eps);
}

TEST(RandomStreams, InverseGaussianMoments) {
    SplitMix64 rng(42);
    const int n = 200000;
    const double theta = 0.5;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = frailty_draw(rng, theta);
        s += a;
        ss += a * a;
    }
    const double mean = s / n;
    const double var = ss / n - mean * mean;
    EXPECT_LT(std::abs(mean - 1.0), 3.0 * std::sqrt(theta / n));
    EXPECT_NEAR(var, theta, 0.02);
    EXPECT_EQ(frailty_draw(rng, 0.0), 1.0);
}

TEST(RandomStreams, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(1, 5), derive_seed(1, 5));
}

TEST(SimulateSeries, NoiselessTriangleIsDatedExactly) {
    TurningSchedule sched;
    sched.knots = {{QuarterIndex(2000, 1), 0.0}, {QuarterIndex(2002, 1), 10.0}, {QuarterIndex(2004, 1), 0.0}};
    for (const auto& rules : {CensoringRules::short_term(), CensoringRules::medium_term()}) {
        const auto sim = simulate_turning_series(sched, 1, rules);
        const auto dated = date_cycles(sim.series, rules);
        EXPECT_EQ(dated.points, sim.points);
        ASSERT_EQ(dated.phases.size(), 2u);
        EXPECT_EQ(dated.phases[0].kind, PhaseKind::Expansion);
        EXPECT_EQ(dated.phases[1].kind, PhaseKind::Contraction);
        EXPECT_EQ(dated.phases, sim.phases);
    }
}

TEST(SimulateSeries, NoiselessMultiCycleRecovery) {
    TurningSchedule sched;
    QuarterIndex t{1995, 2};
    double v = 50;
    for (int i = 0; i < 8; ++i) {
        sched.knots.push_back({t, v});
        t = t + (5 + i % 3);
        v += (i % 2 == 0) ? 12.0 + i : -(6.0 + i % 4);
    }
    const auto rules = CensoringRules::medium_term();
    const auto sim = simulate_turning_series(sched, 3, rules);
    EXPECT_EQ(date_cycles(sim.series, rules).points, sim.points);
}

TEST(SimulateSeries, HeavyNoiseKeepsInvariants) {
    TurningSchedule sched;
    sched.knots = {{QuarterIndex(2000, 1), 0.0}, {QuarterIndex(2002, 1), 10.0}, {QuarterIndex(2004, 1), 0.0}};
    sched.noise_sd = 10.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto d = date_cycles(simulate_turning_series(sched, seed).series, CensoringRules::short_term());
        for (std::size_t i = 1; i < d.points.size(); ++i) EXPECT_NE(d.points[i].kind, d.points[i - 1].kind);
    }
}

TEST(SimulateSeries, SpacingViolationsThrow) {
    TurningSchedule sched;
    sched.knots = {{QuarterIndex(2000, 1), 0.0}, {QuarterIndex(2000, 2), 10.0}, {QuarterIndex(2002, 1), 0.0}};
    EXPECT_THROW((void)simulate_turning_series(sched, 1), std::invalid_argument);
    sched.knots = {{QuarterIndex(2000, 1), 0.0}, {QuarterIndex(2000, 3), 10.0}, {QuarterIndex(2001, 1), 0.0}};
    EXPECT_THROW((void)simulate_turning_series(sched, 1), std::invalid_argument);
    sched.knots = {{QuarterIndex(2000, 1), 0.0}, {QuarterIndex(2001, 1), 10.0}, {QuarterIndex(2002, 1), 20.0}};
    EXPECT_THROW((void)simulate_turning_series(sched, 1), std::invalid_argument);
}

TEST(SimulatePanel, DeterministicAndLoadable) {
    PanelSimConfig cfg;
    cfg.n_ae = 2;
    cfg.n_em = 2;
    const auto a = simulate_panel(cfg);
    const auto b = simulate_panel(cfg);
    EXPECT_EQ(a.panel, b.panel);
    std::ostringstream p, g;
    write_panel_csv(p, a.panel);
    write_groups_csv(g, a.panel);
    std::istringstream pi(p.str()), gi(g.str());
    const auto loaded = load_panel(pi, gi);
    std::ostringstream p2;
    write_panel_csv(p2, loaded);
    EXPECT_EQ(p2.str(), p.str());
    for (const auto& [key, s] : a.panel.series()) {
        const auto& back = loaded.get(s.country(), s.variable());
        ASSERT_EQ(back.size(), s.size());
        EXPECT_EQ(back.start(), s.start());
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(back[i], s[i], 1e-8 * std::max(1.0, std::abs(s[i])));
    }
    for (const auto& c : a.countries)
        for (const char* v : {"debt", "credit", "house", "equity", "gdp", "money", "cpi", "reer", "balance", "oil"})
            EXPECT_NE(a.panel.find(c, v), nullptr) << c << "/" << v;
}
