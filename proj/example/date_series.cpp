// Dates a single quarterly series read from stdin (one value per line) and prints its phases.

#include <iostream>
#include <vector>

#include "debtcycle/cycle_stats.hpp"

int main(int argc, char** argv) {
    using namespace debtcycle;
    const auto rules = (argc > 1 && std::string(argv[1]) == "medium") ? CensoringRules::medium_term()
                                                                      : CensoringRules::short_term();
    std::vector<double> values;
    for (double v; std::cin >> v;) values.push_back(v);
    const QuarterlySeries s("stdin", "debt", QuarterIndex(2000, 1), values);
    for (const auto& ph : date_cycles(s, rules).phases) {
        const auto m = phase_metrics(s, ph);
        std::cout << to_string(ph.kind) << ' ' << format_quarter(ph.start.time) << ' ' << format_quarter(ph.end.time)
                  << " duration " << m.duration << " amplitude " << m.amplitude << " slope " << m.slope << '\n';
    }
}
