#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "debtcycle/dating.hpp"

namespace debtcycle {

enum class Horizon { Short, Medium };

[[nodiscard]] inline const char* to_string(Horizon h) { return h == Horizon::Short ? "short" : "medium"; }

[[nodiscard]] inline Horizon parse_horizon(std::string_view s) {
    if (s == "short") return Horizon::Short;
    if (s == "medium") return Horizon::Medium;
    throw std::invalid_argument("horizon must be 'short' or 'medium', got '" + std::string(s) + "'");
}

[[nodiscard]] inline CensoringRules rules_for(Horizon h) {
    return h == Horizon::Short ? CensoringRules::short_term() : CensoringRules::medium_term();
}

/// Association window half-width in quarters: 1 for short-term, 2 for medium-term cycles.
[[nodiscard]] inline int default_association_window(Horizon h) { return h == Horizon::Short ? 1 : 2; }

/// Financial-cycle dummies. For expansions these are busts, for contractions booms.
struct AssociationFlags {
    bool credit = false;
    bool house = false;
    bool equity = false;

    [[nodiscard]] bool none() const { return !credit && !house && !equity; }
    friend bool operator==(const AssociationFlags&, const AssociationFlags&) = default;
};

/// The three financial cycle types in fixed order.
inline constexpr std::string_view kFinancialTypes[] = {"credit", "house", "equity"};

[[nodiscard]] inline bool flag_of(const AssociationFlags& f, std::string_view type) {
    if (type == "credit") return f.credit;
    if (type == "house") return f.house;
    if (type == "equity") return f.equity;
    throw std::invalid_argument("unknown financial type '" + std::string(type) + "'");
}

/// "bust" for expansions, "boom" for contractions.
[[nodiscard]] inline const char* event_word(PhaseKind k) { return k == PhaseKind::Expansion ? "bust" : "boom"; }

/// Insertion-ordered name -> value map with unique names.
class NamedVector {
public:
    void set(const std::string& name, double value) {
        for (auto& [n, v] : items_)
            if (n == name) {
                v = value;
                return;
            }
        items_.emplace_back(name, value);
    }
    [[nodiscard]] std::optional<double> get(std::string_view name) const {
        for (const auto& [n, v] : items_)
            if (n == name) return v;
        return std::nullopt;
    }
    [[nodiscard]] bool contains(std::string_view name) const { return get(name).has_value(); }
    [[nodiscard]] const std::vector<std::pair<std::string, double>>& items() const { return items_; }
    [[nodiscard]] std::size_t size() const { return items_.size(); }

    friend bool operator==(const NamedVector&, const NamedVector&) = default;

private:
    std::vector<std::pair<std::string, double>> items_;
};

/// One completed public-debt phase flattened to a regression row.
struct SpellRecord {
    std::string country;
    std::string group;
    PhaseKind kind = PhaseKind::Expansion;
    Horizon horizon = Horizon::Short;
    TurningPoint start{};
    TurningPoint end{};
    int duration = 0;
    double amplitude = 0.0;
    AssociationFlags flags;
    NamedVector covariates;

    /// Resolves a regressor name: financial type names ("credit", "credit_bust", ...) map to the
    /// dummies, anything else to a covariate.
    [[nodiscard]] std::optional<double> value_of(std::string_view name) const {
        for (auto type : kFinancialTypes) {
            if (name == type || name == std::string(type) + "_bust" || name == std::string(type) + "_boom")
                return flag_of(flags, type) ? 1.0 : 0.0;
        }
        return covariates.get(name);
    }
};

}  // namespace debtcycle
