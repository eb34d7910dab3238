#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace debtcycle {

/// Thrown for malformed text input (quarter literals, CSV cells, config values).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A calendar quarter. Ordered chronologically; (Y,4) is followed by (Y+1,1).
struct QuarterIndex {
    int year = 0;
    int quarter = 1;

    constexpr QuarterIndex() = default;
    constexpr QuarterIndex(int y, int q) : year(y), quarter(q) {
        if (q < 1 || q > 4) throw std::invalid_argument("quarter must be in 1..4");
    }

    /// Quarters elapsed since year 0 Q1; used for arithmetic.
    [[nodiscard]] constexpr std::int64_t ordinal() const {
        return static_cast<std::int64_t>(year) * 4 + (quarter - 1);
    }

    [[nodiscard]] static constexpr QuarterIndex from_ordinal(std::int64_t ord) {
        std::int64_t y = ord >= 0 ? ord / 4 : -((-ord + 3) / 4);
        return QuarterIndex(static_cast<int>(y), static_cast<int>(ord - y * 4) + 1);
    }

    [[nodiscard]] constexpr QuarterIndex operator+(std::int64_t n) const { return from_ordinal(ordinal() + n); }
    [[nodiscard]] constexpr QuarterIndex operator-(std::int64_t n) const { return from_ordinal(ordinal() - n); }
    [[nodiscard]] constexpr QuarterIndex next() const { return *this + 1; }

    /// Signed number of quarters from `other` to this.
    [[nodiscard]] constexpr std::int64_t operator-(const QuarterIndex& other) const {
        return ordinal() - other.ordinal();
    }

    friend constexpr auto operator<=>(const QuarterIndex&, const QuarterIndex&) = default;
};

/// Formats as `YYYYQn`, e.g. "1988Q2".
[[nodiscard]] inline std::string format_quarter(QuarterIndex q) {
    return std::to_string(q.year) + "Q" + std::to_string(q.quarter);
}

/// Parses `YYYYQn` (n in 1..4). Four-digit years only; no surrounding whitespace.
[[nodiscard]] inline QuarterIndex parse_quarter(std::string_view text) {
    auto fail = [&]() -> QuarterIndex {
        throw ParseError("invalid quarter literal '" + std::string(text) + "' (expected YYYYQn with n in 1..4)");
    };
    if (text.size() != 6 || (text[4] != 'Q' && text[4] != 'q')) return fail();
    int year = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (text[i] < '0' || text[i] > '9') return fail();
        year = year * 10 + (text[i] - '0');
    }
    const char qc = text[5];
    if (qc < '1' || qc > '4') return fail();
    return QuarterIndex(year, qc - '0');
}

}  // namespace debtcycle
