#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace debtcycle {

/// Objective returning nullopt outside its domain (overflow, invalid parameters).
using Objective = std::function<std::optional<double>(const Eigen::VectorXd&)>;

/// Per-coordinate finite-difference step: rel * max(1, |x_i|).
[[nodiscard]] inline double fd_step(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

/// Central-difference gradient. nullopt when any evaluation leaves the domain.
[[nodiscard]] inline std::optional<Eigen::VectorXd> central_gradient(const Objective& f, const Eigen::VectorXd& x,
                                                                     double rel = 1e-5) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = fd_step(x(i), rel);
        xp(i) = x(i) + h;
        const auto fp = f(xp);
        xp(i) = x(i) - h;
        const auto fm = f(xp);
        xp(i) = x(i);
        if (!fp || !fm) return std::nullopt;
        g(i) = (*fp - *fm) / (2.0 * h);
    }
    return g;
}

/// One-sided (forward) difference gradient.
[[nodiscard]] inline std::optional<Eigen::VectorXd> forward_gradient(const Objective& f, const Eigen::VectorXd& x,
                                                                     double rel = 1e-7) {
    const auto f0 = f(x);
    if (!f0) return std::nullopt;
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = fd_step(x(i), rel);
        xp(i) = x(i) + h;
        const auto fp = f(xp);
        xp(i) = x(i);
        if (!fp) return std::nullopt;
        g(i) = (*fp - *f0) / h;
    }
    return g;
}

/// Central-difference Hessian from function values.
[[nodiscard]] inline std::optional<Eigen::MatrixXd> numerical_hessian(const Objective& f, const Eigen::VectorXd& x,
                                                                      double rel = 1e-3) {
    const Eigen::Index n = x.size();
    const auto f0 = f(x);
    if (!f0) return std::nullopt;
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h(i) = fd_step(x(i), rel);
    Eigen::MatrixXd H(n, n);
    auto eval = [&](Eigen::Index i, double si, Eigen::Index j, double sj) -> std::optional<double> {
        Eigen::VectorXd xp = x;
        xp(i) += si * h(i);
        xp(j) += sj * h(j);
        return f(xp);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto fp = eval(i, 1, i, 0);
        const auto fm = eval(i, -1, i, 0);
        if (!fp || !fm) return std::nullopt;
        H(i, i) = (*fp - 2.0 * *f0 + *fm) / (h(i) * h(i));
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto pp = eval(i, 1, j, 1);
            const auto pm = eval(i, 1, j, -1);
            const auto mp = eval(i, -1, j, 1);
            const auto mm = eval(i, -1, j, -1);
            if (!pp || !pm || !mp || !mm) return std::nullopt;
            H(i, j) = H(j, i) = (*pp - *pm - *mp + *mm) / (4.0 * h(i) * h(j));
        }
    }
    return H;
}

struct MinimizeOptions {
    int max_iterations = 500;
    double gradient_tol = 1e-6;       ///< on the projected gradient infinity norm, over max(1, |f|)
    double relative_f_tol = 1e-10;    ///< |f_k - f_{k-1}| / max(1, |f_k|)
    double fd_rel_step = 1e-5;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
};

/// BFGS on the inverse Hessian with central-difference gradients, Armijo backtracking (which also
/// backs off from points where the objective is undefined) and simple lower bounds handled by
/// projection: a coordinate sitting on its bound with the gradient pushing outward is frozen.
[[nodiscard]] inline MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0,
                                                  const Eigen::VectorXd& lower, const MinimizeOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    MinimizeResult res;
    auto project = [&](Eigen::VectorXd& x) {
        for (Eigen::Index i = 0; i < n; ++i) x(i) = std::max(x(i), lower(i));
    };
    project(x0);
    res.x = x0;
    auto fx = f(x0);
    if (!fx) return res;
    res.f = *fx;
    auto g = central_gradient(f, res.x, opt.fd_rel_step);
    if (!g) return res;

    auto active = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
        Eigen::Array<bool, Eigen::Dynamic, 1> a(n);
        for (Eigen::Index i = 0; i < n; ++i) a(i) = x(i) <= lower(i) && grad(i) > 0;
        return a;
    };
    auto projected = [&](const Eigen::VectorXd& grad, const Eigen::Array<bool, Eigen::Dynamic, 1>& a) {
        Eigen::VectorXd pg = grad;
        for (Eigen::Index i = 0; i < n; ++i)
            if (a(i)) pg(i) = 0.0;
        return pg;
    };

    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    double f_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it;
        auto act = active(res.x, *g);
        Eigen::VectorXd pg = projected(*g, act);
        const bool small_grad = pg.lpNorm<Eigen::Infinity>() < opt.gradient_tol * std::max(1.0, std::abs(res.f));
        const bool small_change = std::abs(f_prev - res.f) / std::max(1.0, std::abs(res.f)) < opt.relative_f_tol;
        if (small_grad && (small_change || pg.isZero(0.0))) {
            res.converged = true;
            break;
        }

        for (Eigen::Index i = 0; i < n; ++i)
            if (act(i)) {
                Hinv.row(i).setZero();
                Hinv.col(i).setZero();
            }
        Eigen::VectorXd d = -Hinv * pg;
        double slope = pg.dot(d);
        if (!(slope < 0)) {
            Hinv.setIdentity();
            for (Eigen::Index i = 0; i < n; ++i)
                if (act(i)) Hinv(i, i) = 0.0;
            d = -Hinv * pg;
            slope = pg.dot(d);
        }

        double step = 1.0;
        Eigen::VectorXd x_new;
        std::optional<double> f_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = res.x + step * d;
            project(x_new);
            f_new = f(x_new);
            const double decrease = pg.dot(x_new - res.x);
            if (f_new && *f_new <= res.f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // Stalled: the line search cannot improve along the quasi-Newton direction. Try the
            // steepest-descent direction once before giving up.
            if (!Hinv.isIdentity()) {
                Hinv.setIdentity();
                continue;
            }
            break;
        }
        auto g_new = central_gradient(f, x_new, opt.fd_rel_step);
        if (!g_new) break;

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = *g_new - *g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        f_prev = res.f;
        res.x = x_new;
        res.f = *f_new;
        g = g_new;
        res.iterations = it + 1;
    }
    res.gradient = projected(*g, active(res.x, *g));
    return res;
}

}  // namespace debtcycle
