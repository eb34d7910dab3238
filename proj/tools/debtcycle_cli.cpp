#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "debtcycle/pipeline.hpp"

using namespace debtcycle;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::string> panel, groups, spells, horizon, group, out, format, models, kinds;
    std::optional<int> window, min_phase, min_cycle;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app, bool with_spells) {
        app->add_option("--config", config, "flat key = value configuration file");
        app->add_option("--panel", panel, "long-format panel CSV (country,quarter,variable,value)");
        app->add_option("--groups", groups, "country group CSV (country,group)");
        if (with_spells) app->add_option("--spells", spells, "spell CSV used instead of a panel");
        app->add_option("--horizon", horizon, "short or medium")->check(CLI::IsMember({"short", "medium"}));
        app->add_option("--group", group, "group label or all");
        app->add_option("--window", window, "association window and candidate window override");
        app->add_option("--min-phase", min_phase, "minimum phase length in quarters");
        app->add_option("--min-cycle", min_cycle, "minimum cycle length in quarters");
        app->add_option("--out", out, "output directory");
        app->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "md", "json"}));
        app->add_option("--seed", seed, "random seed");
        app->add_option("--models", models, "comma-separated model labels to keep");
        app->add_option("--kinds", kinds, "comma-separated phase kinds");
    }

    [[nodiscard]] RunConfig resolve() const {
        RunConfig cfg;
        if (!config.empty()) load_config_file(cfg, config);
        ConfigEntries e;
        auto put = [&](const char* k, const std::optional<std::string>& v) {
            if (v) e.emplace_back(k, *v);
        };
        put("panel", panel);
        put("groups", groups);
        put("spells", spells);
        put("horizon", horizon);
        put("group", group);
        put("out", out);
        put("format", format);
        put("models", models);
        put("kinds", kinds);
        if (window) e.emplace_back("window", std::to_string(*window));
        if (min_phase) e.emplace_back("min_phase", std::to_string(*min_phase));
        if (min_cycle) e.emplace_back("min_cycle", std::to_string(*min_cycle));
        if (seed) e.emplace_back("seed", std::to_string(*seed));
        apply_config(cfg, e);
        return cfg;
    }
};

void date_cycles_command(const RunConfig& cfg, const std::vector<std::string>& variables, const std::string& cmd) {
    const auto panel = run_stage("ingest", [&] {
        if (cfg.panel_path.empty() || cfg.groups_path.empty())
            throw std::invalid_argument("a panel file and a group file are required");
        return load_panel_files(cfg.panel_path, cfg.groups_path);
    });
    OutputBundle b;
    run_stage("date-cycles", [&] { add_cycle_files(b, date_panel(panel, cfg, variables)); });
    b.add("manifest.json", manifest(cfg, cmd, b).dump(2) + "\n");
    run_stage("write", [&] { b.commit(cfg.out_dir); });
}

void run_command(const RunConfig& cfg, const Stages& stages, const std::string& cmd) {
    const auto b = run_pipeline(cfg, stages, cmd);
    run_stage("write", [&] { b.commit(cfg.out_dir); });
}

struct SimulateFlags {
    std::string what = "panel";
    std::string out = "fixture";
    std::uint64_t seed = 7;
    int n_ae = 8, n_em = 8;
    int groups = 200, spells = 8;
    double p = 1.5, theta = 0.5;
    std::vector<double> beta{1.0, 0.5, -0.3};
};

void simulate_command(const SimulateFlags& f) {
    namespace fs = std::filesystem;
    OutputBundle b;
    run_stage("simulate", [&] {
        if (f.what == "panel") {
            PanelSimConfig c;
            c.seed = f.seed;
            c.n_ae = f.n_ae;
            c.n_em = f.n_em;
            const auto sim = simulate_panel(c);
            std::ostringstream p, g;
            write_panel_csv(p, sim.panel);
            write_groups_csv(g, sim.panel);
            b.add("panel.csv", p.str());
            b.add("groups.csv", g.str());
        } else if (f.what == "durations") {
            SimConfig c;
            c.seed = f.seed;
            c.groups = f.groups;
            c.spells_min = c.spells_max = f.spells;
            c.p = f.p;
            c.theta = f.theta;
            if (f.beta.empty()) throw std::invalid_argument("--beta needs at least an intercept");
            c.beta_aft = Eigen::Map<const Eigen::VectorXd>(f.beta.data(), static_cast<Eigen::Index>(f.beta.size()));
            for (std::size_t j = 1; j < f.beta.size(); ++j)
                c.covariates.push_back({"x" + std::to_string(j), j % 2 == 1 ? CovariateLaw::Kind::Bernoulli
                                                                            : CovariateLaw::Kind::Normal,
                                        0.4});
            const auto sim = simulate_frailty_durations(c);
            std::ostringstream out;
            std::vector<std::string> head{"group", "duration"};
            for (std::size_t j = 1; j < f.beta.size(); ++j) head.push_back("x" + std::to_string(j));
            write_csv_row(out, head);
            const auto& X = sim.data.design();
            const auto t = sim.data.durations();
            const auto& g = sim.data.groups();
            for (std::size_t i = 0; i < t.size(); ++i) {
                std::vector<std::string> row{std::to_string(g[i]), exact(t[i])};
                for (Eigen::Index j = 1; j < X.cols(); ++j) row.push_back(exact(X(static_cast<Eigen::Index>(i), j)));
                write_csv_row(out, row);
            }
            b.add("durations.csv", out.str());
        } else {
            throw std::invalid_argument("unknown simulation '" + f.what + "' (panel or durations)");
        }
        Json m;
        m["software"] = "debtcycle";
        m["version"] = kVersion;
        m["rng"] = SplitMix64::kAlgorithm;
        m["seed"] = f.seed;
        m["simulation"] = f.what;
        b.add("manifest.json", m.dump(2) + "\n");
    });
    run_stage("write", [&] { b.commit(fs::path(f.out)); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Public debt cycle dating, duration and amplitude models"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        Stages stages;
        bool spells;
    };
    const std::vector<Sub> subs{
        {"stats", "phase statistics and conditional-duration figures", {false, true, false, false, false, false}, false},
        {"associate", "spell datasets with association dummies and covariates", {false, false, true, false, false, false}, false},
        {"survival", "Weibull frailty duration models", {false, false, false, true, false, false}, true},
        {"amplitude", "fixed-effects amplitude regressions", {false, false, false, false, true, false}, true},
        {"robustness", "macro controls, principal components, orthogonalized dummies, interactions",
         {false, false, false, false, false, true}, false},
        {"run-all", "every stage into one bundle", {}, false},
    };

    CommonFlags date_flags;
    std::string variables = "debt";
    auto* date = app.add_subcommand("date-cycles", "turning points and phases per country and variable");
    date_flags.attach(date, false);
    date->add_option("--variables", variables, "comma-separated variables to date");

    std::vector<CommonFlags> flags(subs.size());
    std::vector<CLI::App*> apps;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        apps.push_back(app.add_subcommand(subs[i].name, subs[i].help));
        flags[i].attach(apps.back(), subs[i].spells);
    }

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "synthetic panel or frailty durations");
    simulate->add_option("what", sim.what, "panel or durations")->check(CLI::IsMember({"panel", "durations"}));
    simulate->add_option("--out", sim.out, "output directory");
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--ae", sim.n_ae, "advanced-economy countries (panel)");
    simulate->add_option("--em", sim.n_em, "emerging-market countries (panel)");
    simulate->add_option("--n-groups", sim.groups, "groups (durations)");
    simulate->add_option("--spells", sim.spells, "spells per group (durations)");
    simulate->add_option("--p", sim.p, "Weibull shape (durations)");
    simulate->add_option("--theta", sim.theta, "frailty variance (durations)");
    simulate->add_option("--beta", sim.beta, "AFT coefficients, intercept first (durations)")->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    try {
        if (date->parsed()) {
            const auto cfg = run_stage("config", [&] { return date_flags.resolve(); });
            date_cycles_command(cfg, detail::split_list(variables), date->get_name());
        } else if (simulate->parsed()) {
            simulate_command(sim);
        } else {
            for (std::size_t i = 0; i < subs.size(); ++i) {
                if (!apps[i]->parsed()) continue;
                const auto cfg = run_stage("config", [&] { return flags[i].resolve(); });
                run_command(cfg, subs[i].stages, subs[i].name);
            }
        }
    } catch (const StageError& e) {
        std::cerr << "debtcycle: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "debtcycle: stage unknown: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
