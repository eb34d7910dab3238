#pragma once

// Brute-force reference for turning-point dating. Works on a per-quarter membership mask over the
// raw series and re-derives every quantity from scratch at each step: candidate status by window
// max/min, runs by walking the mask, violations by scanning all adjacent active pairs, and each
// deletion's cost by materialising the resulting subset and summing its excursion.

#include <algorithm>
#include <cmath>
#include <vector>

namespace debtcycle::oracle {

struct RefPoint {
    int offset;
    bool peak;
    double value;
};

struct RefRules {
    int window;
    int min_phase;
    int min_cycle;
};

// 0 = not an extremum, 1 = peak, -1 = trough.
inline std::vector<int> ref_classify(const std::vector<double>& y, int window) {
    const int n = static_cast<int>(y.size());
    std::vector<int> cls(n, 0);
    for (int t = window; t < n - window; ++t) {
        double nb_max = -INFINITY;
        double nb_min = INFINITY;
        for (int u = t - window; u <= t + window; ++u) {
            if (u == t) continue;
            nb_max = std::max(nb_max, y[u]);
            nb_min = std::min(nb_min, y[u]);
        }
        if (y[t] > nb_max) cls[t] = 1;
        if (y[t] < nb_min) cls[t] = -1;
    }
    return cls;
}

inline std::vector<int> ref_active(const std::vector<bool>& mask) {
    std::vector<int> out;
    for (int t = 0; t < static_cast<int>(mask.size()); ++t)
        if (mask[t]) out.push_back(t);
    return out;
}

// For every maximal run of same-kind active points keep only the best (ties: earliest).
inline void ref_alternate(std::vector<bool>& mask, const std::vector<int>& cls, const std::vector<double>& y) {
    const auto act = ref_active(mask);
    std::size_t i = 0;
    while (i < act.size()) {
        std::size_t j = i;
        while (j + 1 < act.size() && cls[act[j + 1]] == cls[act[i]]) ++j;
        int keep = act[i];
        for (std::size_t r = i; r <= j; ++r) {
            const int t = act[r];
            const bool better = cls[t] == 1 ? y[t] > y[keep] : y[t] < y[keep];
            if (better) keep = t;
        }
        for (std::size_t r = i; r <= j; ++r) mask[act[r]] = act[r] == keep;
        i = j + 1;
    }
}

inline double ref_excursion(const std::vector<bool>& mask, const std::vector<double>& y) {
    const auto act = ref_active(mask);
    double s = 0.0;
    for (std::size_t i = 1; i < act.size(); ++i) s += std::abs(y[act[i]] - y[act[i - 1]]);
    return s;
}

inline std::vector<RefPoint> reference_dating(const std::vector<double>& y, const RefRules& rules) {
    const auto cls = ref_classify(y, rules.window);
    std::vector<bool> mask(y.size(), false);
    for (std::size_t t = 0; t < y.size(); ++t) mask[t] = cls[t] != 0;
    ref_alternate(mask, cls, y);

    for (;;) {
        const auto act = ref_active(mask);
        std::vector<int> eligible;
        auto flag = [&](int t) {
            if (std::find(eligible.begin(), eligible.end(), t) == eligible.end()) eligible.push_back(t);
        };
        for (std::size_t i = 1; i < act.size(); ++i) {
            const int a = act[i - 1], b = act[i];
            const bool bad = cls[a] == 1 ? !(y[b] < y[a]) : !(y[b] > y[a]);
            if (bad) {
                flag(a);
                flag(b);
            }
        }
        if (eligible.empty())
            for (std::size_t i = 1; i < act.size(); ++i)
                if (act[i] - act[i - 1] < rules.min_phase) {
                    flag(act[i - 1]);
                    flag(act[i]);
                }
        if (eligible.empty())
            for (std::size_t i = 2; i < act.size(); ++i)
                if (act[i] - act[i - 2] < rules.min_cycle) flag(act[i - 1]);
        if (eligible.empty()) break;

        std::sort(eligible.begin(), eligible.end());
        std::vector<bool> best;
        double best_exc = -1.0;
        for (int t : eligible) {
            auto trial = mask;
            trial[t] = false;
            ref_alternate(trial, cls, y);
            const double e = ref_excursion(trial, y);
            if (e > best_exc) {
                best_exc = e;
                best = trial;
            }
        }
        mask = best;
    }

    std::vector<RefPoint> out;
    for (int t : ref_active(mask)) out.push_back({t, cls[t] == 1, y[t]});
    return out;
}

}  // namespace debtcycle::oracle
