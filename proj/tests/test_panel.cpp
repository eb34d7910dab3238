#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "debtcycle/panel.hpp"

using namespace debtcycle;

TEST(ParseQuarter, AcceptsPublishedLiterals) {
    EXPECT_EQ(parse_quarter("1988Q2"), QuarterIndex(1988, 2));
    EXPECT_EQ(parse_quarter("2022Q4"), QuarterIndex(2022, 4));
}

TEST(ParseQuarter, RejectsMalformed) {
    EXPECT_THROW((void)parse_quarter("2022Q5"), ParseError);
    EXPECT_THROW((void)parse_quarter("2022Q0"), ParseError);
    EXPECT_THROW((void)parse_quarter("22Q1"), ParseError);
    EXPECT_THROW((void)parse_quarter("2022-1"), ParseError);
    EXPECT_THROW((void)parse_quarter(""), ParseError);
    try {
        (void)parse_quarter("1999X1");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("1999X1"), std::string::npos);
    }
}

TEST(ParseQuarter, RoundTripsFormat) {
    for (int y = 1900; y <= 2100; ++y)
        for (int q = 1; q <= 4; ++q) EXPECT_EQ(parse_quarter(format_quarter({y, q})), QuarterIndex(y, q));
}

TEST(QuarterIndex, OrderingAndSuccessor) {
    EXPECT_EQ(QuarterIndex(1999, 4).next(), QuarterIndex(2000, 1));
    EXPECT_LT(QuarterIndex(1999, 4), QuarterIndex(2000, 1));
    EXPECT_EQ(QuarterIndex(2000, 4) - QuarterIndex(1998, 4), 8);
    EXPECT_EQ(QuarterIndex(2000, 1) - 1, QuarterIndex(1999, 4));
    EXPECT_EQ(QuarterIndex::from_ordinal(QuarterIndex(-3, 2).ordinal()), QuarterIndex(-3, 2));
}

namespace {

Panel load(const std::string& panel, const std::string& groups) {
    std::istringstream p(panel), g(groups);
    return load_panel(p, g);
}

const std::string kGroups = "country,group\nAU,AE\nBR,EM\n";

}  // namespace

TEST(LoadPanel, BuildsContiguousSeries) {
    auto panel = load("country,quarter,variable,value\nAU,1999Q2,debt,3\nAU,1998Q4,debt,1\nAU,1999Q1,debt,2\n", kGroups);
    const auto& s = panel.get("AU", "debt");
    EXPECT_EQ(s.start(), QuarterIndex(1998, 4));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s[0], 1);
    EXPECT_DOUBLE_EQ(s[2], 3);
    EXPECT_EQ(panel.group_of("AU"), "AE");
}

TEST(LoadPanel, InteriorGapIsAnError) {
    try {
        (void)load("country,quarter,variable,value\nAU,1998Q4,debt,1\nAU,1999Q2,debt,3\n", kGroups);
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_NE(std::string(e.what()).find("gap at 1999Q1"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)load("country,quarter,variable,value\nAU,1998Q4,debt,1\nAU,1999Q1,debt,NA\nAU,1999Q2,debt,3\n",
                            kGroups),
                 IngestError);
}

TEST(LoadPanel, LeadingMissingValuesAreTrimmed) {
    auto panel = load("country,quarter,variable,value\nAU,1998Q3,debt,\nAU,1998Q4,debt,1\nAU,1999Q1,debt,2\n", kGroups);
    EXPECT_EQ(panel.get("AU", "debt").start(), QuarterIndex(1998, 4));
    EXPECT_EQ(panel.get("AU", "debt").size(), 2u);
}

TEST(LoadPanel, EmptyFileGivesEmptyPanel) {
    auto panel = load("", "");
    EXPECT_TRUE(panel.empty());
}

TEST(LoadPanel, UnknownGroupIsAnError) {
    EXPECT_THROW((void)load("country,quarter,variable,value\nXX,1998Q4,debt,1\n", kGroups), IngestError);
}

TEST(LoadPanel, BadHeaderAndValuesCarryLineContext) {
    EXPECT_THROW((void)load("a,b,c,d\n", kGroups), ParseError);
    try {
        (void)load("country,quarter,variable,value\nAU,1998Q4,debt,abc\n", kGroups);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("panel:2"), std::string::npos) << e.what();
    }
}

TEST(LoadPanel, DuplicateObservationIsAnError) {
    EXPECT_THROW((void)load("country,quarter,variable,value\nAU,1998Q4,debt,1\nAU,1998Q4,debt,2\n", kGroups),
                 IngestError);
}

TEST(LoadPanel, RowOrderDoesNotMatter) {
    std::vector<std::string> rows;
    for (int i = 0; i < 12; ++i) {
        const auto q = format_quarter(QuarterIndex(2000, 1) + i);
        rows.push_back("AU," + q + ",debt," + std::to_string(50 + i));
        rows.push_back("BR," + q + ",credit," + std::to_string(90 - i * 0.5));
    }
    auto render = [](const std::vector<std::string>& r) {
        std::string out = "country,quarter,variable,value\n";
        for (const auto& line : r) out += line + "\n";
        return out;
    };
    const auto reference = load(render(rows), kGroups);
    std::mt19937 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(rows.begin(), rows.end(), gen);
        EXPECT_EQ(load(render(rows), kGroups), reference);
    }
}

TEST(PctChange, Arithmetic) {
    auto a = pct_change(QuarterlySeries("X", "v", {2000, 1}, {100, 110}));
    ASSERT_EQ(a.size(), 1u);
    EXPECT_DOUBLE_EQ(a[0], 10.0);
    EXPECT_EQ(a.start(), QuarterIndex(2000, 2));

    auto b = pct_change(QuarterlySeries("X", "v", {2000, 1}, {50, 100, 50}));
    EXPECT_DOUBLE_EQ(b[0], 100.0);
    EXPECT_DOUBLE_EQ(b[1], -50.0);

    auto c = pct_change(QuarterlySeries("X", "v", {2000, 1}, std::vector<double>(6, 4.2)));
    for (double v : c.values()) EXPECT_EQ(v, 0.0);
}

TEST(PctChange, ZeroDenominatorNamesQuarter) {
    try {
        (void)pct_change(QuarterlySeries("X", "v", {2000, 1}, {1, 0, 2}));
        FAIL();
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("2000Q2"), std::string::npos);
    }
    EXPECT_THROW((void)pct_change(QuarterlySeries("X", "v", {2000, 1}, {1})), std::invalid_argument);
}

TEST(PctChange, GeometricSeriesIsConstant) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ratio(0.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const double r = ratio(gen);
        std::vector<double> v{1.0 + trial};
        for (int i = 0; i < 40; ++i) v.push_back(v.back() * r);
        auto pc = pct_change(QuarterlySeries("X", "v", {1990, 1}, v));
        const double expected = 100.0 * (r - 1.0);
        for (double x : pc.values()) EXPECT_LE(std::abs(x - expected), 1e-12 * std::max(1.0, std::abs(expected)));
    }
}
