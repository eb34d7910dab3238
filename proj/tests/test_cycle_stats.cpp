#include <cmath>

#include <gtest/gtest.h>

#include "debtcycle/cycle_stats.hpp"

using namespace debtcycle;

namespace {

Phase make_phase(PhaseKind kind, QuarterIndex t0, double v0, QuarterIndex t1, double v1) {
    const auto k0 = kind == PhaseKind::Expansion ? TurningKind::Trough : TurningKind::Peak;
    const auto k1 = kind == PhaseKind::Expansion ? TurningKind::Peak : TurningKind::Trough;
    return {kind, {k0, t0, v0}, {k1, t1, v1}, static_cast<int>(t1 - t0)};
}

PhaseRecord record(const std::string& country, PhaseKind kind, int duration, double amplitude,
                   AssociationFlags flags = {}) {
    return {country, kind, Horizon::Short, {duration, amplitude, amplitude / duration}, flags};
}

SpellRecord spell(int duration, AssociationFlags flags) {
    SpellRecord s;
    s.country = "X";
    s.duration = duration;
    s.flags = flags;
    return s;
}

}  // namespace

TEST(PhaseMetrics, ExpansionFormula) {
    std::vector<double> v(9);
    for (int i = 0; i <= 8; ++i) v[i] = 50.0 + 50.0 * i / 8.0;
    QuarterlySeries s("X", "debt", {2000, 1}, v);
    auto m = phase_metrics(s, make_phase(PhaseKind::Expansion, {2000, 1}, 50, {2002, 1}, 100));
    EXPECT_EQ(m.duration, 8);
    EXPECT_DOUBLE_EQ(m.amplitude, 100.0);
    EXPECT_DOUBLE_EQ(m.slope, 12.5);
}

TEST(PhaseMetrics, ContractionFormula) {
    QuarterlySeries s("X", "debt", {2000, 1}, {100, 98, 96, 94, 92, 90});
    auto m = phase_metrics(s, make_phase(PhaseKind::Contraction, {2000, 1}, 100, {2001, 2}, 90));
    EXPECT_EQ(m.duration, 5);
    EXPECT_DOUBLE_EQ(m.amplitude, -10.0);
    EXPECT_DOUBLE_EQ(m.slope, -2.0);
}

TEST(PhaseMetrics, ZeroStartIsAnError) {
    QuarterlySeries s("X", "debt", {2000, 1}, {0, 1, 2, 3});
    EXPECT_THROW((void)phase_metrics(s, make_phase(PhaseKind::Expansion, {2000, 1}, 0, {2000, 4}, 3)),
                 std::domain_error);
}

TEST(Summarize, MeansAndSampleSd) {
    std::map<std::string, std::string> grouping{{"A", "AE"}, {"B", "EM"}};
    std::vector<PhaseRecord> phases{record("A", PhaseKind::Expansion, 4, 10),
                                    record("A", PhaseKind::Expansion, 6, 20),
                                    record("A", PhaseKind::Expansion, 5, 30)};
    phases[0].metrics.duration = 4;
    auto out = summarize({phases[0], phases[1]}, grouping, {Horizon::Short});
    const auto& ae = out[0];
    ASSERT_EQ(ae.group, "AE");
    EXPECT_EQ(ae.n_events, 2u);
    EXPECT_DOUBLE_EQ(ae.duration->mean, 5.0);
    EXPECT_NEAR(*ae.duration->sd, std::sqrt(2.0), 1e-15);

    auto three = summarize(phases, grouping, {Horizon::Short});
    EXPECT_DOUBLE_EQ(three[0].amplitude->mean, 20.0);
    EXPECT_DOUBLE_EQ(*three[0].amplitude->sd, 10.0);
    EXPECT_DOUBLE_EQ(*three[0].amplitude->se, 10.0 / std::sqrt(3.0));
}

TEST(Summarize, SinglePhaseHasNoSd) {
    std::map<std::string, std::string> grouping{{"A", "AE"}};
    auto out = summarize({record("A", PhaseKind::Expansion, 4, 10)}, grouping, {Horizon::Short});
    EXPECT_EQ(out[0].n_events, 1u);
    EXPECT_FALSE(out[0].duration->sd.has_value());
}

TEST(Summarize, EmptyGroupReportsZeroEvents) {
    std::map<std::string, std::string> grouping{{"A", "AE"}, {"B", "EM"}};
    auto out = summarize({record("A", PhaseKind::Expansion, 4, 10)}, grouping, {Horizon::Short});
    // Expansion: AE, EM, Total; then Contraction: AE, EM, Total.
    ASSERT_EQ(out.size(), 6u);
    EXPECT_EQ(out[1].group, "EM");
    EXPECT_EQ(out[1].n_events, 0u);
    EXPECT_FALSE(out[1].duration.has_value());
    EXPECT_EQ(out[2].group, kTotalGroup);
    EXPECT_EQ(out[2].n_events, 1u);
    EXPECT_EQ(out[3].kind, PhaseKind::Contraction);
}

TEST(Summarize, SlopeMeanIsMeanOfPerPhaseSlopes) {
    std::map<std::string, std::string> grouping{{"A", "AE"}};
    auto out = summarize({record("A", PhaseKind::Expansion, 2, 10), record("A", PhaseKind::Expansion, 8, 10)},
                         grouping, {Horizon::Short});
    // slopes 5 and 1.25 -> mean 3.125; mean amplitude / mean duration = 10 / 5 = 2.
    EXPECT_DOUBLE_EQ(out[0].slope->mean, 3.125);
    EXPECT_NE(out[0].slope->mean, out[0].amplitude->mean / out[0].duration->mean);
}

TEST(Summarize, CountsAssociations) {
    std::map<std::string, std::string> grouping{{"A", "AE"}};
    auto out = summarize({record("A", PhaseKind::Expansion, 4, 10, {true, false, true}),
                          record("A", PhaseKind::Expansion, 4, 10, {true, true, false})},
                         grouping, {Horizon::Short}, false);
    EXPECT_EQ(out[0].credit_associations, 2u);
    EXPECT_EQ(out[0].house_associations, 1u);
    EXPECT_EQ(out[0].equity_associations, 1u);
}

TEST(ConditionalDurations, BaselineAndFlaggedRows) {
    auto rows = conditional_duration_means({spell(6, {false, false, true}), spell(8, {})});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].pattern, "none");
    EXPECT_DOUBLE_EQ(rows[0].mean_duration, 8.0);
    EXPECT_EQ(rows[1].pattern, "equity");
    EXPECT_DOUBLE_EQ(rows[1].mean_duration, 6.0);
}

TEST(ConditionalDurations, AllUnflaggedGivesOnlyBaseline) {
    auto rows = conditional_duration_means({spell(6, {}), spell(8, {})});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].pattern, "none");
    EXPECT_DOUBLE_EQ(rows[0].mean_duration, 7.0);
}

TEST(ConditionalDurations, OverlappingFlagsCountInEachRow) {
    auto rows = conditional_duration_means({spell(10, {true, false, true}), spell(4, {true, false, false}), spell(3, {})});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].pattern, "credit");
    EXPECT_EQ(rows[1].n, 2u);
    EXPECT_DOUBLE_EQ(rows[1].mean_duration, 7.0);
    EXPECT_EQ(rows[2].pattern, "equity");
    EXPECT_EQ(rows[2].n, 1u);
    EXPECT_DOUBLE_EQ(rows[2].mean_duration, 10.0);
}
