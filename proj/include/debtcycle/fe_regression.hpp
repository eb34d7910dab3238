#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "debtcycle/linalg.hpp"
#include "debtcycle/spell.hpp"
#include "debtcycle/survival.hpp"

namespace debtcycle {

/// -n/2 (ln 2 pi + ln(RSS/n) + 1): the Gaussian log-likelihood at the MLE variance.
/// Returns +infinity when RSS is zero.
[[nodiscard]] inline double gaussian_loglik(std::span<const double> residuals, std::size_t n) {
    if (n < 1) throw std::invalid_argument("gaussian_loglik: n must be >= 1");
    double rss = 0.0;
    for (double r : residuals) rss += r * r;
    if (rss == 0.0) return std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    return -nn / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(rss / nn) + 1.0);
}

struct FeFit {
    std::string label;
    std::vector<std::string> names;  ///< slope names
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    double constant = 0.0;           ///< mean of the estimated country effects
    double constant_se = 0.0;
    double residual_variance = 0.0;  ///< RSS / (n - k - G)
    double rss = 0.0;
    double log_likelihood = 0.0;
    std::size_t n = 0;
    int n_groups = 0;
    int df_resid = 0;
    std::map<int, double> group_effects;
    Eigen::VectorXd residuals;
    std::vector<std::string> warnings;
};

/// Within (group-demeaned) OLS. A column of ones is an intercept and is absorbed by the country
/// effects; any other column annihilated by demeaning is a rank error. Residual degrees
/// of freedom are n - k - G with k slopes. Standard errors are homoskedastic.
[[nodiscard]] inline FeFit fit_fixed_effects(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                             const std::vector<int>& groups, std::vector<std::string> names = {}) {
    const Eigen::Index n = y.size();
    if (X.rows() != n || static_cast<Eigen::Index>(groups.size()) != n)
        throw std::invalid_argument("fit_fixed_effects: y, X and groups differ in length");
    for (Eigen::Index j = static_cast<Eigen::Index>(names.size()); j < X.cols(); ++j)
        names.push_back("x" + std::to_string(j + 1));

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const bool intercept = n > 0 && (X.col(j).array() == 1.0).all();
        if (!intercept) keep.push_back(j);
    }

    FeFit fit;
    for (auto j : keep) fit.names.push_back(names[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd Xk(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) Xk.col(static_cast<Eigen::Index>(c)) = X.col(keep[c]);
    const Eigen::Index k = Xk.cols();

    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < n; ++i) members[groups[static_cast<std::size_t>(i)]].push_back(i);
    const int G = static_cast<int>(members.size());
    for (const auto& [g, rows] : members)
        if (rows.size() == 1)
            fit.warnings.push_back("group " + std::to_string(g) + " has a single observation and does not identify slopes");

    Eigen::VectorXd yd = y;
    Eigen::MatrixXd Xd = Xk;
    std::map<int, double> ybar;
    std::map<int, Eigen::VectorXd> xbar;
    for (const auto& [g, rows] : members) {
        double ym = 0.0;
        Eigen::VectorXd xm = Eigen::VectorXd::Zero(k);
        for (auto i : rows) {
            ym += y(i);
            xm += Xk.row(i).transpose();
        }
        ym /= static_cast<double>(rows.size());
        xm /= static_cast<double>(rows.size());
        for (auto i : rows) {
            yd(i) -= ym;
            Xd.row(i) -= xm.transpose();
        }
        ybar[g] = ym;
        xbar[g] = xm;
    }

    fit.n = static_cast<std::size_t>(n);
    fit.n_groups = G;
    fit.df_resid = static_cast<int>(n - k - G);
    if (fit.df_resid < 1)
        throw std::invalid_argument("fit_fixed_effects: not identified (n=" + std::to_string(n) + ", slopes=" +
                                    std::to_string(k) + ", groups=" + std::to_string(G) + ")");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd XtXinv = Eigen::MatrixXd::Zero(k, k);
    if (k > 0) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double scale = std::max(1.0, Xk.col(j).cwiseAbs().maxCoeff());
            if (Xd.col(j).norm() <= 1e-12 * scale * std::sqrt(static_cast<double>(n)))
                throw CollinearityError("fixed effects: column '" + fit.names[static_cast<std::size_t>(j)] +
                                            "' is constant within every group",
                                        {fit.names[static_cast<std::size_t>(j)]});
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xd);
        qr.setThreshold(1e-10);
        if (qr.rank() < k) {
            const auto rep = scaled_condition(Xd, fit.names);
            throw CollinearityError("fixed effects: demeaned design is rank deficient; offending columns: " +
                                        detail::join(rep.offending),
                                    rep.offending);
        }
        beta = qr.solve(yd);
        XtXinv = (Xd.transpose() * Xd).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    }

    fit.residuals = yd - Xd * beta;
    fit.rss = fit.residuals.squaredNorm();
    fit.residual_variance = fit.rss / fit.df_resid;
    fit.coefficients = beta;
    const Eigen::MatrixXd V = fit.residual_variance * XtXinv;
    fit.std_errors = V.diagonal().cwiseMax(0.0).cwiseSqrt();

    double const_sum = 0.0;
    double inv_n_sum = 0.0;
    Eigen::VectorXd xbar_mean = Eigen::VectorXd::Zero(k);
    for (const auto& [g, rows] : members) {
        const double a = ybar[g] - xbar[g].dot(beta);
        fit.group_effects[g] = a;
        const_sum += a;
        inv_n_sum += 1.0 / static_cast<double>(rows.size());
        xbar_mean += xbar[g];
    }
    fit.constant = const_sum / G;
    xbar_mean /= G;
    const double var_const =
        fit.residual_variance * inv_n_sum / (static_cast<double>(G) * G) + xbar_mean.dot(V * xbar_mean);
    fit.constant_se = std::sqrt(std::max(0.0, var_const));

    fit.log_likelihood = gaussian_loglik({fit.residuals.data(), static_cast<std::size_t>(n)}, fit.n);
    return fit;
}

/// Amplitude regression for `spec` on spell records, with countries as the fixed-effect groups.
[[nodiscard]] inline FeFit fit_amplitude_model(const std::vector<SpellRecord>& spells, const ModelSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spells.size());
    Eigen::VectorXd y(n);
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(spec.covariates.size()));
    std::map<std::string, int> ids;
    std::vector<int> groups;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& s = spells[static_cast<std::size_t>(r)];
        y(r) = s.amplitude;
        for (std::size_t c = 0; c < spec.covariates.size(); ++c) {
            const auto v = s.value_of(spec.covariates[c]);
            if (!v) throw std::invalid_argument("model " + spec.label + ": covariate '" + spec.covariates[c] + "' missing");
            X(r, static_cast<Eigen::Index>(c)) = *v;
        }
        groups.push_back(ids.emplace(s.country, static_cast<int>(ids.size())).first->second);
    }
    auto fit = fit_fixed_effects(y, X, groups, spec.covariates);
    fit.label = spec.label;
    return fit;
}

}  // namespace debtcycle
