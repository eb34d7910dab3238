#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "debtcycle/association.hpp"
#include "debtcycle/report.hpp"
#include "debtcycle/simulate.hpp"

namespace debtcycle {

inline constexpr const char* kVersion = "0.1.0";

/// Failure inside a named pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

inline const std::vector<std::string> kCycleVariables{"debt", "credit", "house", "equity"};

struct RunConfig {
    std::string panel_path;
    std::string groups_path;
    std::string spells_path;  ///< survival/amplitude input instead of a panel
    Horizon horizon = Horizon::Short;
    std::optional<int> window;
    std::optional<int> min_phase;
    std::optional<int> min_cycle;
    WindowMode window_mode = WindowMode::AllOffsets;
    std::string group = "all";
    std::vector<std::string> models;  ///< labels to keep, in order; empty = the whole ladder
    std::vector<ModelSpec> extra_models;
    std::vector<WindowSpec> growth_specs = default_growth_specs();
    std::vector<WindowSpec> macro_specs = default_macro_specs();
    std::vector<std::string> kinds{"expansion", "contraction"};
    std::string interaction_group = "EM";
    std::string out_dir = "debtcycle-out";
    OutputFormat format = OutputFormat::Csv;
    std::uint64_t seed = 20240601;

    [[nodiscard]] CensoringRules rules() const {
        auto r = rules_for(horizon);
        if (window) r.window = *window;
        if (min_phase) r.min_phase = *min_phase;
        if (min_cycle) r.min_cycle = *min_cycle;
        r.mode = window_mode;
        r.validate();
        return r;
    }
    [[nodiscard]] int association_window() const {
        return window ? *window : default_association_window(horizon);
    }

    [[nodiscard]] std::vector<ModelSpec> ladder() const {
        auto all = default_model_ladder();
        for (const auto& m : extra_models) {
            auto it = std::find_if(all.begin(), all.end(), [&](const ModelSpec& s) { return s.label == m.label; });
            if (it != all.end())
                *it = m;
            else
                all.push_back(m);
        }
        if (models.empty()) return all;
        std::vector<ModelSpec> out;
        for (const auto& label : models) {
            auto it = std::find_if(all.begin(), all.end(), [&](const ModelSpec& s) { return s.label == label; });
            if (it == all.end()) throw std::invalid_argument("unknown model '" + label + "'");
            out.push_back(*it);
        }
        return out;
    }

    [[nodiscard]] std::vector<PhaseKind> phase_kinds() const {
        std::vector<PhaseKind> out;
        for (const auto& k : kinds) out.push_back(parse_phase_kind(k));
        return out;
    }

    [[nodiscard]] Json to_json() const {
        Json j;
        j["panel"] = panel_path;
        j["groups"] = groups_path;
        j["spells"] = spells_path;
        j["horizon"] = debtcycle::to_string(horizon);
        const auto r = rules();
        j["window"] = r.window;
        j["min_phase"] = r.min_phase;
        j["min_cycle"] = r.min_cycle;
        j["window_mode"] = window_mode == WindowMode::AllOffsets ? "all" : "outer";
        j["association_window"] = association_window();
        j["group"] = group;
        Json ms = Json::array();
        for (const auto& m : ladder()) ms.push_back({{"label", m.label}, {"covariates", m.covariates}});
        j["models"] = ms;
        auto specs = [](const std::vector<WindowSpec>& v) {
            Json a = Json::array();
            for (const auto& s : v)
                a.push_back({{"name", s.name},
                             {"variable", s.variable},
                             {"quarters", s.n_quarters},
                             {"direction", s.direction == WindowDirection::Before ? "before" : "after"},
                             {"statistic", s.statistic == WindowStatistic::MeanLevel ? "level" : "pct"}});
            return a;
        };
        j["growth_covariates"] = specs(growth_specs);
        j["macro_covariates"] = specs(macro_specs);
        j["kinds"] = kinds;
        j["interaction_group"] = interaction_group;
        j["format"] = extension(format);
        j["seed"] = seed;
        return j;
    }
};

// -- configuration file -------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    int x = 0;
    try {
        x = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
    return x;
}

inline WindowSpec parse_window_spec(const std::string& name, const std::string& v) {
    const auto f = split_list(v);
    if (f.size() != 4)
        throw std::invalid_argument("covariate '" + name + "': expected variable,quarters,before|after,pct|level");
    WindowSpec s{name, f[0], parse_int(name, f[1]), WindowDirection::Before, WindowStatistic::MeanPctChange};
    if (f[2] == "after")
        s.direction = WindowDirection::After;
    else if (f[2] != "before")
        throw std::invalid_argument("covariate '" + name + "': direction must be before or after");
    if (f[3] == "level")
        s.statistic = WindowStatistic::MeanLevel;
    else if (f[3] != "pct")
        throw std::invalid_argument("covariate '" + name + "': statistic must be pct or level");
    s.validate();
    return s;
}

inline void upsert(std::vector<WindowSpec>& v, WindowSpec s) {
    for (auto& x : v)
        if (x.name == s.name) {
            x = std::move(s);
            return;
        }
    v.push_back(std::move(s));
}

}  // namespace detail

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` lines; `#` starts a comment.
[[nodiscard]] inline ConfigEntries parse_config(std::istream& in, const std::string& name = "config") {
    ConfigEntries out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(name + ":" + std::to_string(no) + ": expected key = value");
        auto key = detail::trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ParseError(name + ":" + std::to_string(no) + ": empty key");
        out.emplace_back(std::move(key), detail::trim(std::string_view(t).substr(eq + 1)));
    }
    return out;
}

inline void apply_config(RunConfig& cfg, const ConfigEntries& entries) {
    bool growth_reset = false, macro_reset = false;
    for (const auto& [k, v] : entries) {
        if (k == "panel") cfg.panel_path = v;
        else if (k == "groups") cfg.groups_path = v;
        else if (k == "spells") cfg.spells_path = v;
        else if (k == "horizon") cfg.horizon = parse_horizon(v);
        else if (k == "window") cfg.window = detail::parse_int(k, v);
        else if (k == "min_phase") cfg.min_phase = detail::parse_int(k, v);
        else if (k == "min_cycle") cfg.min_cycle = detail::parse_int(k, v);
        else if (k == "window_mode") {
            if (v == "all")
                cfg.window_mode = WindowMode::AllOffsets;
            else if (v == "outer")
                cfg.window_mode = WindowMode::OuterOnly;
            else
                throw std::invalid_argument("config key 'window_mode': expected all or outer");
        } else if (k == "group") cfg.group = v;
        else if (k == "models") cfg.models = detail::split_list(v);
        else if (k.rfind("model.", 0) == 0) cfg.extra_models.push_back({k.substr(6), detail::split_list(v)});
        else if (k.rfind("growth.", 0) == 0) {
            if (!growth_reset) cfg.growth_specs.clear(), growth_reset = true;
            detail::upsert(cfg.growth_specs, detail::parse_window_spec(k.substr(7), v));
        } else if (k.rfind("macro.", 0) == 0) {
            if (!macro_reset) cfg.macro_specs.clear(), macro_reset = true;
            detail::upsert(cfg.macro_specs, detail::parse_window_spec(k.substr(6), v));
        } else if (k == "kinds") cfg.kinds = detail::split_list(v);
        else if (k == "interaction_group") cfg.interaction_group = v;
        else if (k == "out") cfg.out_dir = v;
        else if (k == "format") cfg.format = parse_format(v);
        else if (k == "seed") {
            try {
                cfg.seed = std::stoull(v);
            } catch (const std::exception&) {
                throw std::invalid_argument("config key 'seed': not an unsigned integer: '" + v + "'");
            }
        } else
            throw std::invalid_argument("unknown config key '" + k + "'");
    }
    (void)cfg.phase_kinds();
    (void)cfg.rules();
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    apply_config(cfg, parse_config(in, path));
}

// -- output bundle ------------------------------------------------------------------------

/// Files keyed by relative path, written in one go: into a sibling temporary directory that replaces
/// the target only once everything has been written.
class OutputBundle {
public:
    void add(const std::string& rel, std::string content) { files_[rel] = std::move(content); }
    void add(const Table& t, const std::string& dir, OutputFormat f) {
        add(dir + "/" + t.name + "." + extension(f), render(t, f));
    }
    [[nodiscard]] const std::map<std::string, std::string>& files() const { return files_; }
    [[nodiscard]] bool contains(const std::string& rel) const { return files_.count(rel) > 0; }

    void commit(const std::filesystem::path& out) const {
        namespace fs = std::filesystem;
        const fs::path target = fs::absolute(out).lexically_normal();
        const fs::path tmp = target.parent_path() / (target.filename().string() + ".partial");
        fs::remove_all(tmp);
        try {
            for (const auto& [rel, content] : files_) {
                const fs::path p = tmp / rel;
                fs::create_directories(p.parent_path());
                std::ofstream f(p, std::ios::binary);
                f << content;
                if (!f) throw std::runtime_error("cannot write " + p.string());
            }
            fs::create_directories(tmp);
            fs::remove_all(target);
            fs::rename(tmp, target);
        } catch (...) {
            std::error_code ec;
            fs::remove_all(tmp, ec);
            throw;
        }
    }

private:
    std::map<std::string, std::string> files_;
};

// -- stages -------------------------------------------------------------------------------

struct DatedSeries {
    std::string country;
    std::string group;
    std::string variable;
    DatedCycles cycles;
};

struct DropRow {
    std::string country;
    std::string variable;
    std::string from;
    std::string to;
    std::string reason;
};

struct CycleStage {
    std::vector<DatedSeries> series;
    std::vector<CountryCycles> countries;
    std::vector<PhaseRecord> phases;  ///< debt phases with association flags
    std::vector<DropRow> drops;
};

/// Countries in the requested group ("all" keeps every country), in name order.
[[nodiscard]] inline std::vector<std::string> selected_countries(const Panel& panel, const std::string& group) {
    std::vector<std::string> out;
    for (const auto& c : panel.countries())
        if (group == "all" || panel.group_of(c) == group) out.push_back(c);
    if (out.empty()) throw std::invalid_argument("no countries in group '" + group + "'");
    return out;
}

[[nodiscard]] inline CycleStage date_panel(const Panel& panel, const RunConfig& cfg,
                                           const std::vector<std::string>& variables = kCycleVariables) {
    const auto rules = cfg.rules();
    const AssociationWindow win(cfg.association_window());
    CycleStage out;
    for (const auto& country : selected_countries(panel, cfg.group)) {
        CountryCycles cc;
        cc.country = country;
        cc.group = panel.group_of(country);
        for (const auto& var : variables) {
            const auto* s = panel.find(country, var);
            if (!s) {
                out.drops.push_back({country, var, "", "", "variable missing"});
                continue;
            }
            if (s->size() < static_cast<std::size_t>(2 * rules.window + 1)) {
                out.drops.push_back({country, var, format_quarter(s->start()), format_quarter(s->quarter_at(s->size() - 1)),
                                     "series too short to date"});
                continue;
            }
            auto d = date_cycles(*s, rules);
            const auto first = s->start();
            const auto last = s->quarter_at(s->size() - 1);
            if (d.points.empty()) {
                out.drops.push_back({country, var, format_quarter(first), format_quarter(last), "no turning points"});
            } else {
                if (d.points.front().time > first)
                    out.drops.push_back({country, var, format_quarter(first), format_quarter(d.points.front().time),
                                         "incomplete leading segment"});
                if (d.points.back().time < last)
                    out.drops.push_back({country, var, format_quarter(d.points.back().time), format_quarter(last),
                                         "incomplete trailing segment"});
            }
            if (var == "debt") {
                cc.debt = *s;
                cc.debt_phases = d.phases;
            } else {
                cc.financial_points[var] = d.points;
            }
            out.series.push_back({country, cc.group, var, std::move(d)});
        }
        if (cc.debt) {
            for (const auto& ph : cc.debt_phases) {
                PhaseRecord r;
                r.country = country;
                r.kind = ph.kind;
                r.horizon = cfg.horizon;
                r.metrics = phase_metrics(*cc.debt, ph);
                auto pts = [&](const char* t) -> std::vector<TurningPoint> {
                    auto it = cc.financial_points.find(t);
                    return it == cc.financial_points.end() ? std::vector<TurningPoint>{} : it->second;
                };
                r.flags = {associate_phase(ph, pts("credit"), win), associate_phase(ph, pts("house"), win),
                           associate_phase(ph, pts("equity"), win)};
                out.phases.push_back(r);
            }
        }
        out.countries.push_back(std::move(cc));
    }
    return out;
}

inline std::string series_file_stem(const std::string& country, const std::string& variable) {
    std::string s = country + "_" + variable;
    for (auto& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
    return s;
}

inline void add_cycle_files(OutputBundle& b, const CycleStage& st) {
    std::ostringstream summary;
    write_csv_row(summary, {"country", "group", "variable", "turning_points", "expansions", "contractions"});
    for (const auto& ds : st.series) {
        std::ostringstream pts, phs;
        write_csv_row(pts, {"country", "variable", "kind", "quarter", "value"});
        for (const auto& p : ds.cycles.points)
            write_csv_row(pts, {ds.country, ds.variable, to_string(p.kind), format_quarter(p.time), exact(p.value)});
        write_csv_row(phs, {"country", "variable", "phase", "start", "end", "duration", "start_value", "end_value",
                            "amplitude", "slope"});
        int n_exp = 0, n_con = 0;
        for (const auto& ph : ds.cycles.phases) {
            (ph.kind == PhaseKind::Expansion ? n_exp : n_con)++;
            const double amp = 100.0 * (ph.end.value - ph.start.value) / ph.start.value;
            write_csv_row(phs, {ds.country, ds.variable, to_string(ph.kind), format_quarter(ph.start.time),
                                format_quarter(ph.end.time), std::to_string(ph.duration), exact(ph.start.value),
                                exact(ph.end.value), exact(amp), exact(amp / ph.duration)});
        }
        const auto stem = series_file_stem(ds.country, ds.variable);
        b.add("cycles/" + stem + "_points.csv", pts.str());
        b.add("cycles/" + stem + "_phases.csv", phs.str());
        write_csv_row(summary, {ds.country, ds.group, ds.variable, std::to_string(ds.cycles.points.size()),
                                std::to_string(n_exp), std::to_string(n_con)});
    }
    b.add("cycles/summary.csv", summary.str());
    std::ostringstream drops;
    write_csv_row(drops, {"country", "variable", "from", "to", "reason"});
    for (const auto& d : st.drops) write_csv_row(drops, {d.country, d.variable, d.from, d.to, d.reason});
    b.add("cycles/drops.csv", drops.str());
}

/// Group labels of the selected countries, sorted.
[[nodiscard]] inline std::vector<std::string> group_labels(const CycleStage& st) {
    std::set<std::string> g;
    for (const auto& c : st.countries) g.insert(c.group);
    return {g.begin(), g.end()};
}

struct StatsStage {
    std::vector<GroupSummary> summary;
    std::map<PhaseKind, std::map<std::string, std::vector<ConditionalMean>>> conditional;  ///< kind -> group -> rows
};

[[nodiscard]] inline StatsStage phase_statistics(const CycleStage& st, const RunConfig& cfg) {
    StatsStage out;
    std::map<std::string, std::string> grouping;
    for (const auto& c : st.countries) grouping[c.country] = c.group;
    out.summary = summarize(st.phases, grouping, {cfg.horizon});
    for (auto kind : {PhaseKind::Expansion, PhaseKind::Contraction}) {
        std::map<std::string, std::vector<SpellRecord>> by_group;
        for (const auto& p : st.phases) {
            if (p.kind != kind) continue;
            SpellRecord s;
            s.country = p.country;
            s.group = grouping[p.country];
            s.kind = kind;
            s.duration = p.metrics.duration;
            s.flags = p.flags;
            by_group[s.group].push_back(s);
            by_group[kTotalGroup].push_back(s);
        }
        for (const auto& [g, spells] : by_group) out.conditional[kind][g] = conditional_duration_means(spells);
    }
    return out;
}

inline void add_stats_files(OutputBundle& b, const StatsStage& st, OutputFormat f) {
    b.add(phase_stats_table(st.summary, "phase_stats"), "tables", f);
    for (const auto& [kind, groups] : st.conditional) {
        std::ostringstream out;
        write_csv_row(out, {"group", "pattern", "n", "mean_duration"});
        for (const auto& [g, rows] : groups)
            for (const auto& r : rows) {
                const std::string label = r.pattern == "none" ? "none" : r.pattern + "_" + event_word(kind);
                write_csv_row(out, {g, label, std::to_string(r.n), exact(r.mean_duration)});
            }
        b.add(std::string("figures/duration_by_") + event_word(kind) + "_" + to_string(kind) + ".csv", out.str());
    }
}

// -- spells -------------------------------------------------------------------------------

/// Every covariate a model list needs from the panel, in first-use order.
[[nodiscard]] inline std::vector<std::string> window_covariates(const std::vector<ModelSpec>& models,
                                                                const std::vector<WindowSpec>& specs) {
    std::vector<std::string> out;
    for (const auto& m : models)
        for (const auto& c : m.covariates) {
            const bool is_spec = std::any_of(specs.begin(), specs.end(), [&](const WindowSpec& s) { return s.name == c; });
            if (is_spec && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        }
    return out;
}

[[nodiscard]] inline SpellDataset build_spells(const CycleStage& st, const Panel& panel, const RunConfig& cfg,
                                               PhaseKind kind, const std::vector<std::string>& covariates,
                                               bool with_interactions) {
    std::vector<WindowSpec> specs = cfg.growth_specs;
    specs.insert(specs.end(), cfg.macro_specs.begin(), cfg.macro_specs.end());
    PanelCovariates provider(panel, specs);
    SpellRequest req;
    req.kind = kind;
    req.horizon = cfg.horizon;
    req.window = cfg.association_window();
    req.covariates = covariates;
    if (with_interactions) {
        req.group_indicators = {cfg.interaction_group};
        for (auto t : kFinancialTypes) req.interactions.push_back({std::string(t), cfg.interaction_group});
    }
    return build_spell_dataset(st.countries, req, std::cref(provider));
}

[[nodiscard]] inline std::string spell_drops_csv(const std::map<PhaseKind, SpellDataset>& sets) {
    std::ostringstream out;
    write_csv_row(out, {"phase", "country", "start", "reason"});
    for (const auto& [kind, ds] : sets)
        for (const auto& d : ds.drops) write_csv_row(out, {to_string(kind), d.country, format_quarter(d.start), d.reason});
    return out.str();
}

[[nodiscard]] inline std::vector<SpellRecord> in_group(const std::vector<SpellRecord>& spells, const std::string& g) {
    std::vector<SpellRecord> out;
    for (const auto& s : spells)
        if (g == "all" || s.group == g) out.push_back(s);
    return out;
}

// -- model stages -------------------------------------------------------------------------

[[nodiscard]] inline std::vector<FrailtyFit> fit_survival_models(const std::vector<SpellRecord>& spells,
                                                                 const std::vector<ModelSpec>& models,
                                                                 std::uint64_t seed) {
    if (spells.empty()) throw std::invalid_argument("no spells to fit");
    std::vector<FrailtyFit> fits;
    for (std::size_t i = 0; i < models.size(); ++i) {
        FrailtyFitOptions opt;
        opt.seed = derive_seed(seed, i);
        fits.push_back(fit_frailty_model(make_survival_data(spells, models[i]), models[i], opt));
    }
    return fits;
}

[[nodiscard]] inline std::vector<FeFit> fit_amplitude_models(const std::vector<SpellRecord>& spells,
                                                             const std::vector<ModelSpec>& models) {
    if (spells.empty()) throw std::invalid_argument("no spells to fit");
    std::vector<FeFit> fits;
    for (const auto& m : models) fits.push_back(fit_amplitude_model(spells, m));
    return fits;
}

inline std::vector<std::string> dummies() { return {"credit", "house", "equity"}; }

/// Adds principal-component scores of the macro controls as covariates "pc1", "pc2", ... .
inline PcaResult add_macro_components(std::vector<SpellRecord>& spells, const std::vector<std::string>& macro) {
    Eigen::MatrixXd data(static_cast<Eigen::Index>(spells.size()), static_cast<Eigen::Index>(macro.size()));
    for (std::size_t r = 0; r < spells.size(); ++r)
        for (std::size_t c = 0; c < macro.size(); ++c)
            data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *spells[r].value_of(macro[c]);
    auto res = pca(data, macro);
    for (std::size_t r = 0; r < spells.size(); ++r)
        for (Eigen::Index k = 0; k < res.scores.cols(); ++k)
            spells[r].covariates.set("pc" + std::to_string(k + 1), res.scores(static_cast<Eigen::Index>(r), k));
    return res;
}

/// Adds "<type>_orth": each dummy's residual on an intercept and the growth covariates.
inline void add_orthogonal_dummies(std::vector<SpellRecord>& spells, const std::vector<std::string>& growth) {
    const auto n = static_cast<Eigen::Index>(spells.size());
    Eigen::MatrixXd G(n, static_cast<Eigen::Index>(growth.size()));
    for (Eigen::Index r = 0; r < n; ++r)
        for (std::size_t c = 0; c < growth.size(); ++c)
            G(r, static_cast<Eigen::Index>(c)) = *spells[static_cast<std::size_t>(r)].value_of(growth[c]);
    for (const auto& d : dummies()) {
        Eigen::VectorXd y(n);
        for (Eigen::Index r = 0; r < n; ++r) y(r) = *spells[static_cast<std::size_t>(r)].value_of(d);
        const auto e = orthogonalize(y, G, growth);
        for (Eigen::Index r = 0; r < n; ++r) spells[static_cast<std::size_t>(r)].covariates.set(d + "_orth", e(r));
    }
}

struct ModelLadders {
    std::vector<ModelSpec> macro;        ///< benchmark, then main model plus each control, then all controls
    std::vector<ModelSpec> components;   ///< benchmark, main model plus the first three components
    std::vector<ModelSpec> orthogonal;   ///< benchmark, each orthogonalized dummy, all three
};

[[nodiscard]] inline ModelLadders robustness_ladders(const RunConfig& cfg) {
    ModelLadders l;
    std::vector<std::string> main = dummies();
    for (const auto& g : cfg.growth_specs) main.push_back(g.name);
    l.macro.push_back({"M1", {}});
    int col = 1;
    for (const auto& m : cfg.macro_specs) {
        auto c = main;
        c.push_back(m.name);
        l.macro.push_back({"(" + std::to_string(col++) + ")", c});
    }
    auto all = main;
    for (const auto& m : cfg.macro_specs) all.push_back(m.name);
    l.macro.push_back({"(" + std::to_string(col) + ")", all});

    l.components.push_back({"M1", {}});
    auto pc = main;
    const auto n_pc = std::min<std::size_t>(3, cfg.macro_specs.size());
    for (std::size_t k = 1; k <= n_pc; ++k) pc.push_back("pc" + std::to_string(k));
    l.components.push_back({"PCA", pc});

    l.orthogonal.push_back({"M1", {}});
    std::vector<std::string> orth;
    for (const auto& d : dummies()) {
        l.orthogonal.push_back({d + "_orth", {d + "_orth"}});
        orth.push_back(d + "_orth");
    }
    l.orthogonal.push_back({"all_orth", orth});
    return l;
}

/// Interaction ladder for one financial type against the interaction group.
[[nodiscard]] inline std::vector<ModelSpec> interaction_ladder(const std::string& type, const RunConfig& cfg) {
    const std::string gcol = "group_" + cfg.interaction_group;
    const std::string x = type + "_x_" + cfg.interaction_group;
    std::vector<std::string> others;
    for (const auto& d : dummies())
        if (d != type) others.push_back(d);
    std::vector<ModelSpec> out{{"M1", {}}, {"M2", {type}}, {"M3", {type, gcol, x}}};
    auto m4 = out.back().covariates;
    m4.insert(m4.end(), others.begin(), others.end());
    out.push_back({"M4", m4});
    auto m5 = m4;
    for (const auto& g : cfg.growth_specs) m5.push_back(g.name);
    out.push_back({"M5", m5});
    return out;
}

// -- whole run ----------------------------------------------------------------------------

struct Stages {
    bool cycles = true;
    bool stats = true;
    bool spells = true;
    bool survival = true;
    bool amplitude = true;
    bool robustness = true;
};

[[nodiscard]] inline Json manifest(const RunConfig& cfg, const std::string& command, const OutputBundle& b) {
    Json m;
    m["software"] = "debtcycle";
    m["version"] = kVersion;
    m["command"] = command;
    m["rng"] = SplitMix64::kAlgorithm;
    m["seed"] = cfg.seed;
    m["config"] = cfg.to_json();
    Json files = Json::array();
    for (const auto& [rel, content] : b.files()) files.push_back(rel);
    m["files"] = files;
    return m;
}

/// Runs the selected stages on a panel and returns the bundle (not yet written).
[[nodiscard]] inline OutputBundle run_pipeline(const RunConfig& cfg, const Stages& stages, const std::string& command) {
    OutputBundle b;
    Json results;
    const auto f = cfg.format;
    const auto ladder = run_stage("config", [&] { return cfg.ladder(); });
    const auto kinds = run_stage("config", [&] { return cfg.phase_kinds(); });

    std::vector<SpellRecord> from_file;
    Panel panel;
    CycleStage cycles;
    const bool need_panel = cfg.spells_path.empty() || stages.cycles || stages.stats || stages.robustness;
    if (need_panel) {
        panel = run_stage("ingest", [&] {
            if (cfg.panel_path.empty() || cfg.groups_path.empty())
                throw std::invalid_argument("a panel file and a group file are required");
            return load_panel_files(cfg.panel_path, cfg.groups_path);
        });
        cycles = run_stage("date-cycles", [&] { return date_panel(panel, cfg); });
        if (stages.cycles) add_cycle_files(b, cycles);
    } else {
        from_file = run_stage("ingest", [&] {
            std::ifstream in(cfg.spells_path);
            if (!in) throw std::invalid_argument("cannot open " + cfg.spells_path);
            return read_spells_csv(in, cfg.spells_path);
        });
    }

    if (stages.stats) {
        const auto st = run_stage("stats", [&] { return phase_statistics(cycles, cfg); });
        add_stats_files(b, st, f);
        results["phase_stats"] = to_json(st.summary);
    }

    // Main spell sets: the covariates the ladder uses.
    std::map<PhaseKind, SpellDataset> main_sets;
    std::vector<std::string> groups;
    const bool need_spells = stages.spells || stages.survival || stages.amplitude;
    if (need_spells) {
        run_stage("associate", [&] {
            std::vector<WindowSpec> specs = cfg.growth_specs;
            specs.insert(specs.end(), cfg.macro_specs.begin(), cfg.macro_specs.end());
            const auto covs = window_covariates(ladder, specs);
            for (auto kind : kinds) {
                if (need_panel) {
                    main_sets[kind] = build_spells(cycles, panel, cfg, kind, covs, false);
                } else {
                    SpellDataset ds;
                    for (const auto& s : from_file)
                        if (s.kind == kind && (cfg.group == "all" || s.group == cfg.group)) ds.records.push_back(s);
                    ds.completed_phases = ds.records.size();
                    main_sets[kind] = std::move(ds);
                }
            }
        });
        std::set<std::string> gs;
        for (const auto& [k, ds] : main_sets)
            for (const auto& s : ds.records) gs.insert(s.group);
        groups.assign(gs.begin(), gs.end());
        if (stages.spells) {
            for (const auto& [kind, ds] : main_sets) {
                std::ostringstream out;
                write_spells_csv(out, ds.records);
                b.add(std::string("spells/") + to_string(kind) + ".csv", out.str());
            }
            b.add("spells/drops.csv", spell_drops_csv(main_sets));
        }
    }

    auto title = [&](const std::string& what, PhaseKind kind, const std::string& g) {
        return what + ": " + std::string(to_string(cfg.horizon)) + "-term public debt " + to_string(kind) + "s, " + g;
    };

    if (stages.survival) {
        run_stage("survival", [&] {
            for (const auto& [kind, ds] : main_sets)
                for (const auto& g : groups) {
                    const auto spells = in_group(ds.records, g);
                    const auto fits = fit_survival_models(spells, ladder, derive_seed(cfg.seed, 1));
                    const std::string name = std::string("survival_") + to_string(kind) + "_" + g;
                    b.add(survival_table(fits, kind, name, title("Duration models", kind, g)), "tables", f);
                    for (const auto& fit : fits) results["survival"][to_string(kind)][g].push_back(to_json(fit));
                }
        });
    }

    if (stages.amplitude) {
        run_stage("amplitude", [&] {
            for (const auto& [kind, ds] : main_sets)
                for (const auto& g : groups) {
                    const auto fits = fit_amplitude_models(in_group(ds.records, g), ladder);
                    const std::string name = std::string("amplitude_") + to_string(kind) + "_" + g;
                    b.add(amplitude_table(fits, kind, name, title("Amplitude regressions", kind, g)), "tables", f);
                    for (const auto& fit : fits) results["amplitude"][to_string(kind)][g].push_back(to_json(fit));
                }
        });
    }

    if (stages.robustness) {
        if (!need_panel) throw StageError("robustness", "requires a panel");
        run_stage("robustness", [&] {
            const auto lad = robustness_ladders(cfg);
            std::vector<std::string> growth, macro;
            for (const auto& s : cfg.growth_specs) growth.push_back(s.name);
            for (const auto& s : cfg.macro_specs) macro.push_back(s.name);
            auto covs = growth;
            covs.insert(covs.end(), macro.begin(), macro.end());
            const auto labels = group_labels(cycles);
            const bool pooled = labels.size() >= 2 &&
                                std::find(labels.begin(), labels.end(), cfg.interaction_group) != labels.end();
            std::map<PhaseKind, SpellDataset> sets;
            for (auto kind : kinds) sets[kind] = build_spells(cycles, panel, cfg, kind, covs, pooled);
            b.add("spells/robustness_drops.csv", spell_drops_csv(sets));
            for (auto& [kind, ds] : sets) {
                const std::string k = to_string(kind);
                for (const auto& g : labels) {
                    auto spells = in_group(ds.records, g);
                    if (spells.empty()) throw std::invalid_argument("no " + k + " spells with all controls in " + g);
                    const std::string sfx = k + "_" + g;
                    Json& rj = results["robustness"][k][g];

                    const auto seed = derive_seed(cfg.seed, 2);
                    auto macro_fits = fit_survival_models(spells, lad.macro, seed);
                    b.add(survival_table(macro_fits, kind, "robust_macro_survival_" + sfx,
                                         title("Duration models with macro controls", kind, g)),
                          "tables", f);
                    auto macro_fe = fit_amplitude_models(spells, lad.macro);
                    b.add(amplitude_table(macro_fe, kind, "robust_macro_amplitude_" + sfx,
                                          title("Amplitude regressions with macro controls", kind, g)),
                          "tables", f);

                    if (!macro.empty()) {
                        const auto pcs = add_macro_components(spells, macro);
                        b.add(pca_table(pcs, macro, "pca_" + sfx), "tables", f);
                        rj["pca"] = to_json(pcs, macro);
                        auto pc_fits = fit_survival_models(spells, lad.components, seed);
                        b.add(survival_table(pc_fits, kind, "robust_pca_survival_" + sfx,
                                             title("Duration models with principal components", kind, g)),
                              "tables", f);
                        for (const auto& fit : pc_fits) rj["pca_survival"].push_back(to_json(fit));
                    }

                    add_orthogonal_dummies(spells, growth);
                    auto orth_fits = fit_survival_models(spells, lad.orthogonal, seed);
                    b.add(survival_table(orth_fits, kind, "robust_orth_survival_" + sfx,
                                         title("Duration models with orthogonalized dummies", kind, g)),
                          "tables", f);
                    auto orth_fe = fit_amplitude_models(spells, lad.orthogonal);
                    b.add(amplitude_table(orth_fe, kind, "robust_orth_amplitude_" + sfx,
                                          title("Amplitude regressions with orthogonalized dummies", kind, g)),
                          "tables", f);
                    for (const auto& fit : macro_fits) rj["macro_survival"].push_back(to_json(fit));
                    for (const auto& fit : macro_fe) rj["macro_amplitude"].push_back(to_json(fit));
                    for (const auto& fit : orth_fits) rj["orth_survival"].push_back(to_json(fit));
                    for (const auto& fit : orth_fe) rj["orth_amplitude"].push_back(to_json(fit));
                }
                if (pooled) {
                    for (const auto& t : dummies()) {
                        auto fits = fit_survival_models(ds.records, interaction_ladder(t, cfg), derive_seed(cfg.seed, 3));
                        const std::string name = "interaction_" + t + "_" + k;
                        b.add(survival_table(fits, kind, name,
                                             title("Duration models with " + t + " x " + cfg.interaction_group, kind,
                                                   "pooled")),
                              "tables", f);
                        for (const auto& fit : fits) results["interactions"][k][t].push_back(to_json(fit));
                    }
                }
            }
        });
    }

    if (!results.is_null()) b.add("results.json", results.dump(2) + "\n");
    b.add("manifest.json", "");
    b.add("manifest.json", manifest(cfg, command, b).dump(2) + "\n");
    return b;
}

}  // namespace debtcycle
