#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "debtcycle/covariates.hpp"
#include "debtcycle/csv.hpp"
#include "debtcycle/cycle_stats.hpp"
#include "debtcycle/fe_regression.hpp"
#include "debtcycle/survival.hpp"

namespace debtcycle {

using Json = nlohmann::ordered_json;

enum class OutputFormat { Csv, Markdown, Json };

[[nodiscard]] inline OutputFormat parse_format(std::string_view s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "md") return OutputFormat::Markdown;
    if (s == "json") return OutputFormat::Json;
    throw std::invalid_argument("unknown format '" + std::string(s) + "' (expected csv, md or json)");
}

[[nodiscard]] inline const char* extension(OutputFormat f) {
    switch (f) {
        case OutputFormat::Csv: return "csv";
        case OutputFormat::Markdown: return "md";
        case OutputFormat::Json: return "json";
    }
    return "csv";
}

/// Fixed-point rendering; negative zero prints as zero.
[[nodiscard]] inline std::string fixed(double v, int decimals = 4) {
    if (!std::isfinite(v)) return std::isnan(v) ? "NA" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

/// Shortest text that reads back to the same double.
[[nodiscard]] inline std::string exact(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "NA" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

/// Two-sided p-value of a standard normal statistic.
[[nodiscard]] inline double normal_p_value(double z) {
    if (!std::isfinite(z)) return std::isnan(z) ? z : 0.0;
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), std::abs(z)));
}

[[nodiscard]] inline double chi2_p_value(double x, int df) {
    if (df < 1) throw std::invalid_argument("chi2_p_value: df must be >= 1");
    if (!(x > 0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(df), x));
}

[[nodiscard]] inline std::string stars(double p) {
    if (!(p < 0.10)) return "";
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    return "*";
}

/// A rendered table: header plus rows of already-formatted cells.
struct Table {
    std::string name;  ///< file stem
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;
};

[[nodiscard]] inline std::string render_csv(const Table& t) {
    std::ostringstream out;
    write_csv_row(out, t.columns);
    for (const auto& r : t.rows) write_csv_row(out, r);
    return out.str();
}

[[nodiscard]] inline std::string render_markdown(const Table& t) {
    auto cell = [](std::string s) {
        for (std::size_t p = 0; (p = s.find('|', p)) != std::string::npos; p += 2) s.replace(p, 1, "\\|");
        return s;
    };
    std::ostringstream out;
    if (!t.title.empty()) out << "### " << t.title << "\n\n";
    out << '|';
    for (const auto& c : t.columns) out << ' ' << cell(c) << " |";
    out << "\n|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i == 0 ? " :--- |" : " ---: |");
    out << '\n';
    for (const auto& r : t.rows) {
        out << '|';
        for (const auto& c : r) out << ' ' << cell(c) << " |";
        out << '\n';
    }
    if (!t.notes.empty()) {
        out << '\n';
        for (const auto& n : t.notes) out << "Note: " << n << '\n';
    }
    return out.str();
}

[[nodiscard]] inline Json table_json(const Table& t) {
    Json j;
    j["name"] = t.name;
    j["title"] = t.title;
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    j["notes"] = t.notes;
    return j;
}

[[nodiscard]] inline std::string render(const Table& t, OutputFormat f) {
    switch (f) {
        case OutputFormat::Csv: return render_csv(t);
        case OutputFormat::Markdown: return render_markdown(t);
        case OutputFormat::Json: return table_json(t).dump(2) + "\n";
    }
    return {};
}

/// Row label of a regressor: financial dummies read as "credit bust" for expansions, "credit boom"
/// for contractions.
[[nodiscard]] inline std::string display_name(const std::string& name, PhaseKind kind) {
    for (auto type : kFinancialTypes)
        if (name == type) return std::string(type) + " " + event_word(kind);
    if (name == kConstantName) return "Constant";
    return name;
}

[[nodiscard]] inline std::string optional_fixed(const std::optional<double>& v, int decimals = 4) {
    return v ? fixed(*v, decimals) : "";
}

// -- phase statistics ----------------------------------------------------------------------

[[nodiscard]] inline Table phase_stats_table(const std::vector<GroupSummary>& rows, const std::string& name) {
    Table t;
    t.name = name;
    t.title = "Duration, amplitude and slope of public debt phases";
    t.columns = {"horizon", "phase", "group", "events", "duration_mean", "duration_sd", "duration_se",
                 "amplitude_mean", "amplitude_sd", "amplitude_se", "slope_mean", "slope_sd", "slope_se",
                 "credit_associated", "house_associated", "equity_associated"};
    for (const auto& g : rows) {
        std::vector<std::string> r{to_string(g.horizon), to_string(g.kind), g.group, std::to_string(g.n_events)};
        for (const auto* m : {&g.duration, &g.amplitude, &g.slope}) {
            if (*m) {
                r.push_back(fixed((*m)->mean));
                r.push_back(optional_fixed((*m)->sd));
                r.push_back(optional_fixed((*m)->se));
            } else {
                r.insert(r.end(), {"", "", ""});
            }
        }
        r.push_back(std::to_string(g.credit_associations));
        r.push_back(std::to_string(g.house_associations));
        r.push_back(std::to_string(g.equity_associations));
        t.rows.push_back(std::move(r));
    }
    t.notes.push_back("sd is the sample standard deviation; se = sd / sqrt(events).");
    return t;
}

[[nodiscard]] inline Table conditional_duration_table(const std::vector<ConditionalMean>& rows, PhaseKind kind,
                                                      const std::string& name) {
    Table t;
    t.name = name;
    t.title = std::string("Mean duration of debt ") + to_string(kind) + "s by associated financial " +
              event_word(kind);
    t.columns = {"pattern", "n", "mean_duration"};
    for (const auto& r : rows) {
        const std::string label = r.pattern == "none" ? "none" : r.pattern + " " + event_word(kind);
        t.rows.push_back({label, std::to_string(r.n), fixed(r.mean_duration)});
    }
    return t;
}

// -- model tables -------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> union_names(const std::vector<std::vector<std::string>>& lists) {
    std::vector<std::string> out;
    for (const auto& l : lists)
        for (const auto& n : l)
            if (n != kConstantName && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    return out;
}

inline std::string coef_cell(double b, std::optional<double> se) {
    if (!se || !(*se > 0)) return fixed(b);
    return fixed(b) + stars(normal_p_value(b / *se));
}

inline std::string se_cell(std::optional<double> se) { return se ? "(" + fixed(*se) + ")" : ""; }

}  // namespace detail

/// Index of the benchmark fit: the one labelled "M1" if present, otherwise the first.
[[nodiscard]] inline std::size_t benchmark_index(const std::vector<FrailtyFit>& fits) {
    for (std::size_t i = 0; i < fits.size(); ++i)
        if (fits[i].label == "M1") return i;
    return 0;
}

/// LR statistic of each fit against the benchmark; nullopt for the benchmark itself and for fits it
/// is not nested in.
[[nodiscard]] inline std::vector<std::optional<LrTest>> lr_against_benchmark(const std::vector<FrailtyFit>& fits) {
    std::vector<std::optional<LrTest>> out(fits.size());
    if (fits.empty()) return out;
    const auto b = benchmark_index(fits);
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (i == b) continue;
        try {
            auto t = lr_test(fits[i], fits[b]);
            if (t.df > 0) out[i] = t;
        } catch (const std::invalid_argument&) {
        }
    }
    return out;
}

[[nodiscard]] inline Table survival_table(const std::vector<FrailtyFit>& fits, PhaseKind kind, const std::string& name,
                                          const std::string& title) {
    Table t;
    t.name = name;
    t.title = title;
    t.columns = {"variable"};
    std::vector<std::vector<std::string>> lists;
    for (const auto& f : fits) {
        t.columns.push_back(f.label);
        lists.push_back(f.names);
    }
    auto index_of = [](const FrailtyFit& f, const std::string& n) -> std::optional<Eigen::Index> {
        auto it = std::find(f.names.begin(), f.names.end(), n);
        if (it == f.names.end()) return std::nullopt;
        return static_cast<Eigen::Index>(it - f.names.begin());
    };
    auto names = detail::union_names(lists);
    names.push_back(kConstantName);
    for (const auto& n : names) {
        std::vector<std::string> coef{display_name(n, kind)}, se{""};
        for (const auto& f : fits) {
            const auto i = index_of(f, n);
            coef.push_back(i ? detail::coef_cell(f.beta_aft(*i), f.se(*i)) : "");
            se.push_back(i ? detail::se_cell(f.se(*i)) : "");
        }
        t.rows.push_back(std::move(coef));
        t.rows.push_back(std::move(se));
    }
    std::vector<std::string> lnp{"Weibull shape parameter (ln p)"}, lnp_se{""}, lnt{"Frailty parameter (ln theta)"},
        lnt_se{""}, ll{"Log likelihood"}, lr{"LR chi-squared"}, nobs{"Observations"}, ngr{"Countries"};
    const auto tests = lr_against_benchmark(fits);
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& f = fits[i];
        lnp.push_back(fixed(f.ln_p));
        lnp_se.push_back(detail::se_cell(f.se_ln_p()));
        lnt.push_back(f.theta_pinned ? "" : fixed(f.ln_theta));
        lnt_se.push_back(detail::se_cell(f.se_ln_theta()));
        ll.push_back(fixed(f.log_likelihood));
        lr.push_back(tests[i] ? fixed(tests[i]->statistic) + stars(chi2_p_value(tests[i]->statistic, tests[i]->df)) : "");
        nobs.push_back(std::to_string(f.n_obs));
        ngr.push_back(std::to_string(f.n_groups));
    }
    for (auto* r : {&lnp, &lnp_se, &lnt, &lnt_se, &ll, &lr, &nobs, &ngr}) t.rows.push_back(std::move(*r));
    t.notes.push_back("Coefficients on the log-duration scale; exp(coefficient) is the time ratio.");
    t.notes.push_back("Standard errors in parentheses. *, ** and *** denote significance at the 10%, 5% and 1% level.");
    if (!fits.empty()) t.notes.push_back("LR chi-squared against " + fits[benchmark_index(fits)].label + ".");
    for (const auto& f : fits)
        for (const auto& w : f.warnings) t.notes.push_back(f.label + ": " + w);
    return t;
}

[[nodiscard]] inline Table amplitude_table(const std::vector<FeFit>& fits, PhaseKind kind, const std::string& name,
                                           const std::string& title) {
    Table t;
    t.name = name;
    t.title = title;
    t.columns = {"variable"};
    std::vector<std::vector<std::string>> lists;
    for (const auto& f : fits) {
        t.columns.push_back(f.label);
        lists.push_back(f.names);
    }
    for (const auto& n : detail::union_names(lists)) {
        std::vector<std::string> coef{display_name(n, kind)}, se{""};
        for (const auto& f : fits) {
            auto it = std::find(f.names.begin(), f.names.end(), n);
            if (it == f.names.end()) {
                coef.emplace_back();
                se.emplace_back();
                continue;
            }
            const auto i = it - f.names.begin();
            coef.push_back(detail::coef_cell(f.coefficients(i), f.std_errors(i)));
            se.push_back(detail::se_cell(f.std_errors(i)));
        }
        t.rows.push_back(std::move(coef));
        t.rows.push_back(std::move(se));
    }
    std::vector<std::string> c{"Constant"}, cse{""}, ll{"Log likelihood"}, nobs{"Observations"}, ngr{"Countries"};
    for (const auto& f : fits) {
        c.push_back(detail::coef_cell(f.constant, f.constant_se));
        cse.push_back(detail::se_cell(f.constant_se));
        ll.push_back(fixed(f.log_likelihood));
        nobs.push_back(std::to_string(f.n));
        ngr.push_back(std::to_string(f.n_groups));
    }
    for (auto* r : {&c, &cse, &ll, &nobs, &ngr}) t.rows.push_back(std::move(*r));
    t.notes.push_back("Country fixed effects; Constant is the mean of the estimated country effects.");
    t.notes.push_back("Standard errors in parentheses. *, ** and *** denote significance at the 10%, 5% and 1% level.");
    for (const auto& f : fits)
        for (const auto& w : f.warnings) t.notes.push_back(f.label + ": " + w);
    return t;
}

[[nodiscard]] inline Table pca_table(const PcaResult& r, const std::vector<std::string>& names, const std::string& name) {
    Table t;
    t.name = name;
    t.title = "Principal components of the macro controls";
    t.columns = {"component", "eigenvalue", "explained", "cumulative"};
    for (const auto& n : names) t.columns.push_back("loading_" + n);
    for (Eigen::Index k = 0; k < r.eigenvalues.size(); ++k) {
        std::vector<std::string> row{"PC" + std::to_string(k + 1), fixed(r.eigenvalues(k)), fixed(r.explained(k)),
                                     fixed(r.cumulative(k + 1))};
        for (Eigen::Index j = 0; j < r.loadings.rows(); ++j) row.push_back(fixed(r.loadings(j, k)));
        t.rows.push_back(std::move(row));
    }
    if (r.eigenvalues.size() >= 3)
        t.notes.push_back("The first three components explain " + fixed(100.0 * r.cumulative(3), 2) +
                          "% of the variance of the standardized controls.");
    return t;
}

// -- serialized results -------------------------------------------------------------------

namespace detail {

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json finite_json(double v) { return std::isfinite(v) ? Json(v) : Json(exact(v)); }

}  // namespace detail

[[nodiscard]] inline Json to_json(const FrailtyFit& f) {
    Json j;
    j["label"] = f.label;
    j["coefficients"] = Json::array();
    for (Eigen::Index i = 0; i < f.beta_aft.size(); ++i) {
        Json c;
        c["name"] = f.names[static_cast<std::size_t>(i)];
        c["estimate"] = f.beta_aft(i);
        c["std_error"] = detail::opt_json(f.se(i));
        c["time_ratio"] = time_ratio(f.beta_aft(i));
        j["coefficients"].push_back(c);
    }
    j["ln_p"] = f.ln_p;
    j["ln_p_std_error"] = detail::opt_json(f.se_ln_p());
    j["ln_theta"] = f.ln_theta;
    j["ln_theta_std_error"] = detail::opt_json(f.se_ln_theta());
    j["theta_pinned"] = f.theta_pinned;
    j["log_likelihood"] = f.log_likelihood;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["n_obs"] = f.n_obs;
    j["n_groups"] = f.n_groups;
    if (f.covariance) {
        Json cov = Json::array();
        for (Eigen::Index r = 0; r < f.covariance->rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < f.covariance->cols(); ++c) row.push_back((*f.covariance)(r, c));
            cov.push_back(row);
        }
        j["covariance"] = cov;
    } else {
        j["covariance"] = nullptr;
    }
    j["warnings"] = f.warnings;
    return j;
}

[[nodiscard]] inline Json to_json(const FeFit& f) {
    Json j;
    j["label"] = f.label;
    j["coefficients"] = Json::array();
    for (Eigen::Index i = 0; i < f.coefficients.size(); ++i) {
        Json c;
        c["name"] = f.names[static_cast<std::size_t>(i)];
        c["estimate"] = f.coefficients(i);
        c["std_error"] = f.std_errors(i);
        j["coefficients"].push_back(c);
    }
    j["constant"] = f.constant;
    j["constant_std_error"] = f.constant_se;
    j["residual_variance"] = f.residual_variance;
    j["rss"] = f.rss;
    j["log_likelihood"] = detail::finite_json(f.log_likelihood);
    j["n_obs"] = f.n;
    j["n_groups"] = f.n_groups;
    j["df_resid"] = f.df_resid;
    j["warnings"] = f.warnings;
    return j;
}

[[nodiscard]] inline Json to_json(const PcaResult& r, const std::vector<std::string>& names) {
    Json j;
    j["variables"] = names;
    j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
    j["explained"] = std::vector<double>(r.explained.data(), r.explained.data() + r.explained.size());
    Json load = Json::array();
    for (Eigen::Index k = 0; k < r.loadings.cols(); ++k) {
        Json col = Json::array();
        for (Eigen::Index v = 0; v < r.loadings.rows(); ++v) col.push_back(r.loadings(v, k));
        load.push_back(col);
    }
    j["loadings"] = load;
    return j;
}

[[nodiscard]] inline Json to_json(const std::vector<GroupSummary>& rows) {
    Json out = Json::array();
    for (const auto& g : rows) {
        Json j;
        j["horizon"] = to_string(g.horizon);
        j["phase"] = to_string(g.kind);
        j["group"] = g.group;
        j["events"] = g.n_events;
        auto mom = [](const std::optional<Moments>& m) {
            if (!m) return Json(nullptr);
            Json x;
            x["mean"] = m->mean;
            x["sd"] = detail::opt_json(m->sd);
            x["se"] = detail::opt_json(m->se);
            return x;
        };
        j["duration"] = mom(g.duration);
        j["amplitude"] = mom(g.amplitude);
        j["slope"] = mom(g.slope);
        j["associations"] = {{"credit", g.credit_associations},
                             {"house", g.house_associations},
                             {"equity", g.equity_associations}};
        out.push_back(j);
    }
    return out;
}

// -- spell files --------------------------------------------------------------------------

inline constexpr const char* kSpellColumns[] = {"country", "group",    "kind",   "horizon", "start", "end",
                                                "duration", "amplitude", "credit", "house",   "equity"};

/// One row per spell; covariate columns follow the fixed columns in order of first appearance.
inline void write_spells_csv(std::ostream& out, const std::vector<SpellRecord>& spells) {
    std::vector<std::string> cov;
    for (const auto& s : spells)
        for (const auto& [n, v] : s.covariates.items())
            if (std::find(cov.begin(), cov.end(), n) == cov.end()) cov.push_back(n);
    std::vector<std::string> header(std::begin(kSpellColumns), std::end(kSpellColumns));
    header.insert(header.end(), cov.begin(), cov.end());
    write_csv_row(out, header);
    for (const auto& s : spells) {
        std::vector<std::string> r{s.country,
                                   s.group,
                                   to_string(s.kind),
                                   to_string(s.horizon),
                                   format_quarter(s.start.time),
                                   format_quarter(s.end.time),
                                   std::to_string(s.duration),
                                   exact(s.amplitude),
                                   s.flags.credit ? "1" : "0",
                                   s.flags.house ? "1" : "0",
                                   s.flags.equity ? "1" : "0"};
        for (const auto& n : cov) {
            const auto v = s.covariates.get(n);
            r.push_back(v ? exact(*v) : "NA");
        }
        write_csv_row(out, r);
    }
}

[[nodiscard]] inline PhaseKind parse_phase_kind(std::string_view s) {
    if (s == "expansion") return PhaseKind::Expansion;
    if (s == "contraction") return PhaseKind::Contraction;
    throw ParseError("unknown phase kind '" + std::string(s) + "'");
}

/// Reads the format written by write_spells_csv. Turning-point values are not stored; start and end
/// points carry their quarters and kinds only.
[[nodiscard]] inline std::vector<SpellRecord> read_spells_csv(std::istream& in, const std::string& name = "spells") {
    CsvReader reader(in, name);
    auto header = reader.next_row();
    if (!header) return {};
    const std::size_t fixed_cols = std::size(kSpellColumns);
    if (header->size() < fixed_cols || !std::equal(std::begin(kSpellColumns), std::end(kSpellColumns), header->begin()))
        throw ParseError(reader.context() + ": spell file header must start with country,group,kind,horizon,"
                                            "start,end,duration,amplitude,credit,house,equity");
    auto number = [&](const std::string& s) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw ParseError(reader.context() + ": not a number: '" + s + "'");
        return v;
    };
    auto flag = [&](const std::string& s) {
        if (s == "1") return true;
        if (s == "0") return false;
        throw ParseError(reader.context() + ": association flag must be 0 or 1, got '" + s + "'");
    };
    std::vector<SpellRecord> out;
    while (auto row = reader.next_row()) {
        if (row->size() != header->size())
            throw ParseError(reader.context() + ": expected " + std::to_string(header->size()) + " fields");
        const auto& r = *row;
        SpellRecord s;
        s.country = r[0];
        s.group = r[1];
        s.kind = parse_phase_kind(r[2]);
        s.horizon = parse_horizon(r[3]);
        const bool exp = s.kind == PhaseKind::Expansion;
        s.start = {exp ? TurningKind::Trough : TurningKind::Peak, parse_quarter(r[4]), 0.0};
        s.end = {exp ? TurningKind::Peak : TurningKind::Trough, parse_quarter(r[5]), 0.0};
        const double d = number(r[6]);
        if (!(d >= 1) || d != std::floor(d)) throw ParseError(reader.context() + ": duration must be a positive integer");
        s.duration = static_cast<int>(d);
        s.amplitude = number(r[7]);
        s.flags = {flag(r[8]), flag(r[9]), flag(r[10])};
        for (std::size_t c = fixed_cols; c < r.size(); ++c)
            if (r[c] != "NA" && !r[c].empty()) s.covariates.set((*header)[c], number(r[c]));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace debtcycle
