#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DEBTCYCLE_CLI_PATH;
const fs::path kFixture = DEBTCYCLE_FIXTURE_DIR;

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    Result r;
    const std::string cmd = kCli + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("debtcycle_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string panel_args(const fs::path& dir) {
    return "--panel " + (dir / "panel.csv").string() + " --groups " + (dir / "groups.csv").string();
}

std::vector<std::string> csv_lines(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    ASSERT_EQ(fa, fb);
    for (const auto& f : fa) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

}  // namespace

TEST(DateCycles, TwoCountriesGiveTwoPhaseFilesAndSummary) {
    const auto out = scratch("two");
    const auto r = run("date-cycles " + panel_args(kFixture / "two_country") + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    int phase_files = 0;
    for (const auto& e : fs::directory_iterator(out / "cycles"))
        if (e.path().filename().string().ends_with("_phases.csv")) ++phase_files;
    EXPECT_EQ(phase_files, 2);
    EXPECT_TRUE(fs::exists(out / "cycles" / "summary.csv"));
    EXPECT_TRUE(fs::exists(out / "cycles" / "drops.csv"));
    EXPECT_EQ(csv_lines(out / "cycles" / "summary.csv").size(), 3u);
    fs::remove_all(out);
}

TEST(DateCycles, MediumHorizonPhasesAtLeastFourQuarters) {
    const auto out = scratch("medium");
    const auto r = run("date-cycles " + panel_args(kFixture) + " --horizon medium --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    int phases = 0;
    for (const auto& e : fs::directory_iterator(out / "cycles")) {
        if (!e.path().filename().string().ends_with("_phases.csv")) continue;
        const auto lines = csv_lines(e.path());
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::vector<std::string> f;
            std::stringstream ss(lines[i]);
            std::string cell;
            while (std::getline(ss, cell, ',')) f.push_back(cell);
            ASSERT_GE(f.size(), 6u);
            EXPECT_GE(std::stoi(f[5]), 4) << lines[i];
            ++phases;
        }
    }
    EXPECT_GT(phases, 0);
    fs::remove_all(out);
}

TEST(DateCycles, RerunIsByteIdentical) {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    ASSERT_EQ(run("date-cycles " + panel_args(kFixture) + " --variables debt,credit --out " + a.string()).code, 0);
    ASSERT_EQ(run("date-cycles " + panel_args(kFixture) + " --variables debt,credit --out " + b.string()).code, 0);
    expect_same_tree(a, b);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(RunAll, BundleHasEverySection) {
    const auto out = scratch("bundle");
    const auto r = run("run-all " + panel_args(kFixture) + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    for (const char* f : {"manifest.json", "results.json", "tables/phase_stats.csv", "figures/duration_by_bust_expansion.csv",
                          "figures/duration_by_boom_contraction.csv", "tables/survival_expansion_AE.csv",
                          "tables/survival_contraction_EM.csv", "tables/amplitude_expansion_EM.csv",
                          "tables/pca_expansion_AE.csv", "tables/robust_pca_survival_expansion_AE.csv",
                          "tables/robust_macro_survival_contraction_EM.csv", "tables/robust_orth_survival_expansion_AE.csv",
                          "tables/robust_orth_amplitude_contraction_AE.csv", "tables/interaction_credit_expansion.csv",
                          "spells/expansion.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto manifest = slurp(out / "manifest.json");
    for (const char* k : {"\"version\"", "\"seed\"", "\"rng\"", "\"config\""})
        EXPECT_NE(manifest.find(k), std::string::npos) << k;
    const auto lr = slurp(out / "tables/survival_expansion_AE.csv");
    EXPECT_NE(lr.find("LR chi-squared"), std::string::npos);
    fs::remove_all(out);
}

TEST(RunAll, ModelRestrictionKeepsOnlyThoseColumns) {
    const auto out = scratch("m1m5");
    const auto r = run("run-all " + panel_args(kFixture) + " --models M1,M5 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    for (const char* t : {"survival_expansion_AE", "survival_contraction_EM", "amplitude_expansion_AE"})
        EXPECT_EQ(csv_lines(out / "tables" / (std::string(t) + ".csv")).front(), "variable,M1,M5") << t;
    fs::remove_all(out);
}

TEST(RunAll, FormatsRender) {
    const auto md = scratch("md"), js = scratch("json");
    ASSERT_EQ(run("survival " + panel_args(kFixture) + " --format md --models M1,M2 --out " + md.string()).code, 0);
    ASSERT_EQ(run("survival " + panel_args(kFixture) + " --format json --models M1,M2 --out " + js.string()).code, 0);
    EXPECT_NE(slurp(md / "tables/survival_expansion_AE.md").find("| variable | M1 | M2 |"), std::string::npos);
    EXPECT_NE(slurp(js / "tables/survival_expansion_AE.json").find("\"columns\""), std::string::npos);
    fs::remove_all(md);
    fs::remove_all(js);
}

TEST(Errors, CollinearCovariatesNameColumnsInSurvivalStage) {
    const auto out = scratch("collinear");
    const auto r = run("run-all " + panel_args(kFixture) + " --config " + (kFixture / "collinear.conf").string() +
                       " --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage survival"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("credit_growth, credit_growth_copy"), std::string::npos) << r.output;
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out.string() + ".partial"));
}

TEST(Errors, FailedRunLeavesExistingOutputUntouched) {
    const auto out = scratch("keep");
    ASSERT_EQ(run("date-cycles " + panel_args(kFixture / "two_country") + " --out " + out.string()).code, 0);
    const auto before = slurp(out / "cycles/summary.csv");
    const auto r = run("run-all " + panel_args(kFixture) + " --config " + (kFixture / "collinear.conf").string() +
                       " --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(slurp(out / "cycles/summary.csv"), before);
    fs::remove_all(out);
}

TEST(Errors, StageTaggedMessages) {
    const auto out = scratch("errors");
    auto r = run("stats --panel /nonexistent/panel.csv --groups /nonexistent/groups.csv --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage ingest"), std::string::npos) << r.output;
    r = run("run-all " + panel_args(kFixture) + " --models M42 --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage config"), std::string::npos) << r.output;
    r = run("stats " + panel_args(kFixture) + " --group LIC --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage date-cycles"), std::string::npos) << r.output;
    r = run("date-cycles " + panel_args(kFixture) + " --min-phase 0 --out " + out.string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage config"), std::string::npos) << r.output;
    EXPECT_FALSE(fs::exists(out));
}

TEST(Errors, MalformedPanelReportsLine) {
    const auto dir = scratch("badpanel");
    fs::create_directories(dir);
    std::ofstream(dir / "panel.csv") << "country,quarter,variable,value\nA,2000Q1,debt,50\nA,2000Q5,debt,51\n";
    std::ofstream(dir / "groups.csv") << "country,group\nA,AE\n";
    const auto r = run("date-cycles " + panel_args(dir) + " --out " + (dir / "out").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("stage ingest"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find(":3"), std::string::npos) << r.output;
    fs::remove_all(dir);
}

TEST(Config, FlagsOverrideConfigFile) {
    const auto dir = scratch("conf");
    fs::create_directories(dir);
    std::ofstream(dir / "run.conf") << "horizon = medium\nmodels = M1, M2\nseed = 5\n";
    const auto r = run("survival " + panel_args(kFixture) + " --config " + (dir / "run.conf").string() +
                       " --horizon short --out " + (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto manifest = slurp(dir / "out/manifest.json");
    EXPECT_NE(manifest.find("\"horizon\": \"short\""), std::string::npos);
    EXPECT_NE(manifest.find("\"seed\": 5"), std::string::npos);
    EXPECT_EQ(csv_lines(dir / "out/tables/survival_expansion_AE.csv").front(), "variable,M1,M2");
    fs::remove_all(dir);
}

TEST(SpellsInput, SurvivalFromSpellFileMatchesPanelRun) {
    const auto a = scratch("spells_a"), b = scratch("spells_b");
    ASSERT_EQ(run("associate " + panel_args(kFixture) + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("survival " + panel_args(kFixture) + " --models M1,M2,M8 --out " + a.string() + "_fit").code, 0);
    const auto r = run("survival --spells " + (a / "spells/expansion.csv").string() +
                       " --kinds expansion --models M1,M2,M8 --out " + b.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(slurp(b / "tables/survival_expansion_AE.csv"), slurp(a.string() + "_fit/tables/survival_expansion_AE.csv"));
    fs::remove_all(a);
    fs::remove_all(a.string() + "_fit");
    fs::remove_all(b);
}

TEST(Simulate, PanelAndDurations) {
    const auto p = scratch("simpanel"), d = scratch("simdur");
    ASSERT_EQ(run("simulate panel --ae 1 --em 1 --seed 11 --out " + p.string()).code, 0);
    EXPECT_EQ(slurp(p / "panel.csv"), slurp(kFixture / "two_country/panel.csv"));
    EXPECT_EQ(slurp(p / "groups.csv"), slurp(kFixture / "two_country/groups.csv"));
    ASSERT_EQ(run("simulate durations --n-groups 5 --spells 3 --out " + d.string()).code, 0);
    EXPECT_EQ(csv_lines(d / "durations.csv").size(), 16u);
    fs::remove_all(p);
    fs::remove_all(d);
}
