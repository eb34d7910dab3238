#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "debtcycle/covariates.hpp"
#include "debtcycle/cycle_stats.hpp"
#include "debtcycle/dating.hpp"
#include "debtcycle/panel.hpp"
#include "debtcycle/spell.hpp"

namespace debtcycle {

/// Half-width w of the association window [t-w, t+w].
struct AssociationWindow {
    int w = 1;

    explicit AssociationWindow(int width) : w(width) {
        if (w < 1) throw std::invalid_argument("association window must be >= 1");
    }
};

/// 1 iff a financial turning point of the associated kind lies within +-w quarters of the
/// turning point that starts the debt phase. An expansion starts at a debt trough and is matched
/// with financial peaks (busts); a contraction starts at a debt peak and is matched with troughs (booms).
[[nodiscard]] inline bool associate_phase(const Phase& debt_phase, const std::vector<TurningPoint>& fin_points,
                                          AssociationWindow win) {
    const QuarterIndex t = debt_phase.start.time;
    const TurningKind wanted = debt_phase.kind == PhaseKind::Expansion ? TurningKind::Peak : TurningKind::Trough;
    for (const auto& p : fin_points) {
        if (p.kind != wanted) continue;
        const auto d = p.time - t;
        if (d >= -win.w && d <= win.w) return true;
    }
    return false;
}

/// Everything dated for one country that a spell dataset is built from.
struct CountryCycles {
    std::string country;
    std::string group;
    std::optional<QuarterlySeries> debt;
    std::vector<Phase> debt_phases;
    std::map<std::string, std::vector<TurningPoint>> financial_points;  ///< keyed by "credit"/"house"/"equity"
};

/// flag(type) x 1[group == label], column "<type>_x_<label>".
struct Interaction {
    std::string flag_type;
    std::string group_label;

    [[nodiscard]] std::string column() const { return flag_type + "_x_" + group_label; }
};

struct SpellRequest {
    PhaseKind kind = PhaseKind::Expansion;
    Horizon horizon = Horizon::Short;
    int window = 1;
    std::vector<std::string> covariates;         ///< names passed to the covariate provider
    std::vector<std::string> group_indicators;   ///< adds "group_<label>" 0/1 columns
    std::vector<Interaction> interactions;
};

/// Returns the covariate value for a spell anchored at `anchor`, or nullopt when unavailable.
using CovariateProvider =
    std::function<std::optional<double>(const std::string& country, QuarterIndex anchor, const std::string& name)>;

struct DropRecord {
    std::string country;
    QuarterIndex start;
    std::string reason;
};

struct SpellDataset {
    std::vector<SpellRecord> records;
    std::vector<DropRecord> drops;
    std::size_t completed_phases = 0;  ///< phases of the requested kind before drops
};

[[nodiscard]] inline SpellDataset build_spell_dataset(const std::vector<CountryCycles>& countries,
                                                      const SpellRequest& req, const CovariateProvider& provider) {
    const AssociationWindow win(req.window);
    SpellDataset out;
    static const std::vector<TurningPoint> kNone;
    for (const auto& cc : countries) {
        auto points_of = [&](std::string_view type) -> const std::vector<TurningPoint>& {
            auto it = cc.financial_points.find(std::string(type));
            return it == cc.financial_points.end() ? kNone : it->second;
        };
        for (const auto& ph : cc.debt_phases) {
            if (ph.kind != req.kind) continue;
            ++out.completed_phases;

            SpellRecord rec;
            rec.country = cc.country;
            rec.group = cc.group;
            rec.kind = ph.kind;
            rec.horizon = req.horizon;
            rec.start = ph.start;
            rec.end = ph.end;
            if (cc.debt) {
                const auto m = phase_metrics(*cc.debt, ph);
                rec.duration = m.duration;
                rec.amplitude = m.amplitude;
            } else {
                rec.duration = ph.duration;
                rec.amplitude = 100.0 * (ph.end.value - ph.start.value) / ph.start.value;
            }
            rec.flags.credit = associate_phase(ph, points_of("credit"), win);
            rec.flags.house = associate_phase(ph, points_of("house"), win);
            rec.flags.equity = associate_phase(ph, points_of("equity"), win);

            std::optional<std::string> missing;
            for (const auto& name : req.covariates) {
                auto v = provider ? provider(cc.country, ph.start.time, name) : std::nullopt;
                if (!v) {
                    missing = name;
                    break;
                }
                rec.covariates.set(name, *v);
            }
            if (missing) {
                out.drops.push_back({cc.country, ph.start.time, "covariate '" + *missing + "' unavailable"});
                continue;
            }
            for (const auto& label : req.group_indicators)
                rec.covariates.set("group_" + label, cc.group == label ? 1.0 : 0.0);
            for (const auto& ia : req.interactions)
                rec.covariates.set(ia.column(),
                                   flag_of(rec.flags, ia.flag_type) && cc.group == ia.group_label ? 1.0 : 0.0);
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

/// Covariate provider backed by panel series and event-window specs, keyed by spec name.
class PanelCovariates {
public:
    PanelCovariates(const Panel& panel, std::vector<WindowSpec> specs) : panel_(&panel), specs_(std::move(specs)) {
        for (const auto& s : specs_) s.validate();
    }

    [[nodiscard]] std::optional<double> operator()(const std::string& country, QuarterIndex anchor,
                                                   const std::string& name) const {
        for (const auto& spec : specs_) {
            if (spec.name != name) continue;
            const auto* s = panel_->find(country, spec.variable);
            if (!s) return std::nullopt;
            return event_window_average(*s, anchor, spec);
        }
        throw std::invalid_argument("no window spec for covariate '" + name + "'");
    }

    [[nodiscard]] const std::vector<WindowSpec>& specs() const { return specs_; }

private:
    const Panel* panel_;
    std::vector<WindowSpec> specs_;
};

}  // namespace debtcycle
