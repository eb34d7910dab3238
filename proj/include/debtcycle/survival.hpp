#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "debtcycle/linalg.hpp"
#include "debtcycle/optimize.hpp"
#include "debtcycle/random.hpp"
#include "debtcycle/spell.hpp"

namespace debtcycle {

/// Durations clustered in groups, with a design matrix whose first column is the intercept.
class SurvivalData {
public:
    SurvivalData(std::vector<int> group, std::vector<double> duration, Eigen::MatrixXd X,
                 std::vector<std::string> names)
        : group_(std::move(group)), duration_(std::move(duration)), X_(std::move(X)), names_(std::move(names)) {
        const auto n = duration_.size();
        if (group_.size() != n || static_cast<std::size_t>(X_.rows()) != n)
            throw std::invalid_argument("survival data: group, duration and design rows differ in length");
        if (names_.size() != static_cast<std::size_t>(X_.cols()))
            throw std::invalid_argument("survival data: one name per design column required");
        for (double t : duration_)
            if (!(t > 0) || !std::isfinite(t)) throw std::invalid_argument("survival data: durations must be > 0");
        std::map<int, int> index;
        for (int g : group_) index.emplace(g, 0);
        int next = 0;
        for (auto& [g, i] : index) i = next++;
        dense_group_.reserve(n);
        for (int g : group_) dense_group_.push_back(index[g]);
        n_groups_ = next;
    }

    [[nodiscard]] std::size_t size() const { return duration_.size(); }
    [[nodiscard]] int n_groups() const { return n_groups_; }
    [[nodiscard]] Eigen::Index n_covariates() const { return X_.cols(); }
    [[nodiscard]] const Eigen::MatrixXd& design() const { return X_; }
    [[nodiscard]] const std::vector<double>& durations() const { return duration_; }
    [[nodiscard]] const std::vector<int>& groups() const { return group_; }
    /// Groups renumbered 0..G-1 in ascending order of the original ids.
    [[nodiscard]] const std::vector<int>& dense_groups() const { return dense_group_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<int> group_;
    std::vector<double> duration_;
    Eigen::MatrixXd X_;
    std::vector<std::string> names_;
    std::vector<int> dense_group_;
    int n_groups_ = 0;
};

/// ln of (-1)^d d^d/ds^d of the inverse-Gaussian Laplace transform L(s) = exp[(1 - sqrt(1+2 theta s)) / theta]
/// (mean 1, variance theta). theta = 0 gives the degenerate frailty, L(s) = exp(-s).
///
/// With u = sqrt(1 + 2 theta s), (-1)^m psi^(m) = (2m-3)!! theta^(m-1) u^-(2m-1) for psi = ln L, and
/// (-1)^n L^(n) = L u^-n q_n where q_0 = 1 and q_n = sum_k C(n-1,k) (2k-1)!! (theta/u)^k q_{n-1-k}.
/// Every term is positive, so the recursion has no cancellation.
[[nodiscard]] inline double ig_laplace_log_derivative(double s, double theta, int d) {
    if (s < 0 || theta < 0 || d < 0) throw std::invalid_argument("ig_laplace_log_derivative: negative argument");
    const double u = std::sqrt(1.0 + 2.0 * theta * s);
    const double log_l = -2.0 * s / (1.0 + u);
    if (d == 0) return log_l;

    const auto n_max = static_cast<std::size_t>(d);
    std::vector<double> a(n_max, 1.0);  // a_k = (2k-1)!! (theta/u)^k
    for (std::size_t k = 1; k < n_max; ++k) a[k] = a[k - 1] * (2.0 * static_cast<double>(k) - 1.0) * theta / u;
    std::vector<double> q(n_max + 1, 0.0);
    q[0] = 1.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        double binom = 1.0;  // C(n-1, k)
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            sum += binom * a[k] * q[n - 1 - k];
            binom = binom * static_cast<double>(n - 1 - k) / static_cast<double>(k + 1);
        }
        q[n] = sum;
    }
    return log_l - d * std::log(u) + std::log(q[n_max]);
}

/// Parameter vector layout: [beta_aft (k), ln p, ln theta].
struct FrailtyParams {
    Eigen::VectorXd beta_aft;
    double ln_p = 0.0;
    double ln_theta = 0.0;

    [[nodiscard]] Eigen::VectorXd pack() const {
        Eigen::VectorXd x(beta_aft.size() + 2);
        x << beta_aft, ln_p, ln_theta;
        return x;
    }
    [[nodiscard]] static FrailtyParams unpack(const Eigen::VectorXd& x) {
        const auto k = x.size() - 2;
        return {x.head(k), x(k), x(k + 1)};
    }
};

/// Marginal log-likelihood of the Weibull AFT model with shared inverse-Gaussian frailty, every spell
/// an observed event:
///   sum_i ln[(-1)^{d_i} L^{(d_i)}(H_i)] + sum_ij ln h0_ij,
///   h0_ij = p t^{p-1} exp(x'b),  H_i = sum_j t_ij^p exp(x'b),  b = -p * beta_aft.
/// `ln_theta` = -infinity means no frailty. nullopt when the value is not finite.
[[nodiscard]] inline std::optional<double> marginal_loglik(const FrailtyParams& par, const SurvivalData& data) {
    if (par.beta_aft.size() != data.n_covariates())
        throw std::invalid_argument("marginal_loglik: coefficient count does not match design");
    const double p = std::exp(par.ln_p);
    const double theta = std::exp(par.ln_theta);
    if (!std::isfinite(p) || !(p > 0) || !std::isfinite(theta)) return std::nullopt;

    const auto& X = data.design();
    const Eigen::VectorXd eta = -p * (X * par.beta_aft);
    std::vector<double> H(static_cast<std::size_t>(data.n_groups()), 0.0);
    std::vector<int> d(static_cast<std::size_t>(data.n_groups()), 0);
    double sum_log_h0 = 0.0;
    const auto& t = data.durations();
    const auto& g = data.dense_groups();
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double lt = std::log(t[j]);
        sum_log_h0 += par.ln_p + (p - 1.0) * lt + eta(static_cast<Eigen::Index>(j));
        H[static_cast<std::size_t>(g[j])] += std::exp(p * lt + eta(static_cast<Eigen::Index>(j)));
        ++d[static_cast<std::size_t>(g[j])];
    }
    double ll = sum_log_h0;
    for (std::size_t i = 0; i < H.size(); ++i) {
        if (!std::isfinite(H[i])) return std::nullopt;
        ll += ig_laplace_log_derivative(H[i], theta, d[i]);
    }
    if (!std::isfinite(ll)) return std::nullopt;
    return ll;
}

/// Named covariate subset of a spell dataset; the intercept is implicit.
struct ModelSpec {
    std::string label;
    std::vector<std::string> covariates;
};

/// M1..M8: benchmark; each dummy alone; all dummies; + credit growth; + house growth; + both.
[[nodiscard]] inline std::vector<ModelSpec> default_model_ladder() {
    const std::vector<std::string> dummies{"credit", "house", "equity"};
    auto with = [&](std::vector<std::string> extra) {
        auto v = dummies;
        v.insert(v.end(), extra.begin(), extra.end());
        return v;
    };
    return {
        {"M1", {}},
        {"M2", {"credit"}},
        {"M3", {"house"}},
        {"M4", {"equity"}},
        {"M5", dummies},
        {"M6", with({"credit_growth"})},
        {"M7", with({"house_growth"})},
        {"M8", with({"credit_growth", "house_growth"})},
    };
}

inline constexpr const char* kConstantName = "const";

/// Builds the design (intercept first) for `spec` from spell records; groups are countries.
[[nodiscard]] inline SurvivalData make_survival_data(const std::vector<SpellRecord>& spells, const ModelSpec& spec) {
    std::vector<std::string> names{kConstantName};
    names.insert(names.end(), spec.covariates.begin(), spec.covariates.end());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(spells.size()), static_cast<Eigen::Index>(names.size()));
    std::map<std::string, int> country_id;
    std::vector<int> group;
    std::vector<double> duration;
    for (std::size_t r = 0; r < spells.size(); ++r) {
        const auto& s = spells[r];
        const auto row = static_cast<Eigen::Index>(r);
        X(row, 0) = 1.0;
        for (std::size_t c = 0; c < spec.covariates.size(); ++c) {
            const auto v = s.value_of(spec.covariates[c]);
            if (!v)
                throw std::invalid_argument("model " + spec.label + ": covariate '" + spec.covariates[c] +
                                            "' not present in spell data");
            X(row, static_cast<Eigen::Index>(c + 1)) = *v;
        }
        auto [it, inserted] = country_id.emplace(s.country, static_cast<int>(country_id.size()));
        group.push_back(it->second);
        duration.push_back(static_cast<double>(s.duration));
    }
    return SurvivalData(std::move(group), std::move(duration), std::move(X), std::move(names));
}

struct FrailtyFitOptions {
    int max_iterations = 500;
    int restarts = 5;
    double restart_scale = 0.1;
    std::uint64_t seed = 20240601;
    double ln_theta_floor = -20.0;
    double condition_limit = 1e8;
    double gradient_tol = 1e-6;
    double relative_f_tol = 1e-10;
};

struct FrailtyFit {
    std::string label;
    std::vector<std::string> names;  ///< coefficient names; first is the intercept
    Eigen::VectorXd beta_aft;
    double ln_p = 0.0;
    double ln_theta = 0.0;
    bool theta_pinned = false;
    std::optional<Eigen::MatrixXd> covariance;  ///< over [beta_aft, ln p, ln theta]; absent if Hessian singular
    std::optional<Eigen::VectorXd> std_errors;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    std::size_t n_obs = 0;
    int n_groups = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] int n_params() const { return static_cast<int>(beta_aft.size()) + (theta_pinned ? 1 : 2); }
    [[nodiscard]] std::optional<double> se(Eigen::Index i) const {
        if (!std_errors) return std::nullopt;
        return (*std_errors)(i);
    }
    [[nodiscard]] std::optional<double> se_ln_p() const { return se(beta_aft.size()); }
    [[nodiscard]] std::optional<double> se_ln_theta() const {
        if (theta_pinned) return std::nullopt;
        return se(beta_aft.size() + 1);
    }
    [[nodiscard]] FrailtyParams params() const { return {beta_aft, ln_p, ln_theta}; }
};

namespace detail {

/// AFT starting values from OLS of ln t on X with the extreme-value intercept shift.
inline FrailtyParams frailty_start(const SurvivalData& data) {
    const auto& X = data.design();
    Eigen::VectorXd y(X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::log(data.durations()[static_cast<std::size_t>(i)]);
    Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd r = y - X * b;
    const double dof = std::max<double>(1.0, static_cast<double>(X.rows() - X.cols()));
    double sigma = std::sqrt(r.squaredNorm() / dof) * std::sqrt(6.0) / std::numbers::pi;
    sigma = std::clamp(sigma, 0.1, 10.0);
    b(0) += std::numbers::egamma * sigma;
    return {b, -std::log(sigma), std::log(0.1)};
}

}  // namespace detail

/// Maximum-likelihood fit over (beta_aft, ln p, ln theta) with ln theta floored. The primary start
/// is followed by `restarts` perturbed starts; the best converged optimum is kept (the best overall if
/// none converged). Standard errors come from the inverse of the negative numerical Hessian.
[[nodiscard]] inline FrailtyFit fit_frailty_model(const SurvivalData& data, const ModelSpec& spec,
                                                  const FrailtyFitOptions& opt = {}) {
    require_well_conditioned(data.design(), data.names(), opt.condition_limit, "model " + spec.label);

    FrailtyFit fit;
    fit.label = spec.label;
    fit.names = data.names();
    fit.n_obs = data.size();
    fit.n_groups = data.n_groups();
    fit.theta_pinned = data.n_groups() < 2;
    if (fit.theta_pinned) fit.warnings.emplace_back("fewer than 2 groups: frailty variance pinned at its floor");

    const Eigen::Index k = data.n_covariates();
    const Eigen::Index dim = k + (fit.theta_pinned ? 1 : 2);
    auto to_params = [&](const Eigen::VectorXd& x) {
        FrailtyParams p;
        p.beta_aft = x.head(k);
        p.ln_p = x(k);
        p.ln_theta = fit.theta_pinned ? opt.ln_theta_floor : x(k + 1);
        return p;
    };
    Objective negll = [&](const Eigen::VectorXd& x) -> std::optional<double> {
        auto ll = marginal_loglik(to_params(x), data);
        if (!ll) return std::nullopt;
        return -*ll;
    };

    Eigen::VectorXd lower = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
    if (!fit.theta_pinned) lower(k + 1) = opt.ln_theta_floor;

    const auto start = detail::frailty_start(data);
    Eigen::VectorXd x0(dim);
    x0.head(k) = start.beta_aft;
    x0(k) = start.ln_p;
    if (!fit.theta_pinned) x0(k + 1) = start.ln_theta;

    MinimizeOptions mo;
    mo.max_iterations = opt.max_iterations;
    mo.gradient_tol = opt.gradient_tol;
    mo.relative_f_tol = opt.relative_f_tol;

    SplitMix64 rng(opt.seed);
    std::optional<MinimizeResult> best;
    auto better = [](const MinimizeResult& a, const MinimizeResult& b) {
        if (a.converged != b.converged) return a.converged;
        return a.f < b.f;
    };
    for (int r = 0; r <= opt.restarts; ++r) {
        Eigen::VectorXd xs = x0;
        if (r > 0)
            for (Eigen::Index i = 0; i < dim; ++i) xs(i) += opt.restart_scale * standard_normal(rng);
        auto res = minimize_bfgs(negll, xs, lower, mo);
        if (!std::isfinite(res.f)) continue;
        if (!best || better(res, *best)) best = std::move(res);
    }
    if (!best) throw std::runtime_error("model " + spec.label + ": likelihood not finite at any start");

    const auto par = to_params(best->x);
    fit.beta_aft = par.beta_aft;
    fit.ln_p = par.ln_p;
    fit.ln_theta = par.ln_theta;
    fit.log_likelihood = -best->f;
    fit.converged = best->converged;
    fit.iterations = best->iterations;
    if (!fit.converged) fit.warnings.emplace_back("optimizer did not converge within the iteration cap");

    const auto H = numerical_hessian(negll, best->x);
    if (H) {
        const Eigen::MatrixXd Hs = 0.5 * (*H + H->transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(Hs);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
            cov = 0.5 * (cov + cov.transpose());
            if ((cov.diagonal().array() > 0).all() && cov.allFinite()) {
                Eigen::MatrixXd full = Eigen::MatrixXd::Zero(k + 2, k + 2);
                full.topLeftCorner(dim, dim) = cov;
                fit.covariance = full;
                Eigen::VectorXd se = full.diagonal().cwiseSqrt();
                fit.std_errors = se;
            }
        }
    }
    if (!fit.std_errors) fit.warnings.emplace_back("Hessian not negative definite: standard errors unavailable");
    return fit;
}

struct LrTest {
    double statistic = 0.0;
    int df = 0;
};

/// 2 (LL_full - LL_null) with df the difference in parameter counts. `null`'s covariates must be a
/// subset of `full`'s and both must be fitted to the same observations.
[[nodiscard]] inline LrTest lr_test(const FrailtyFit& full, const FrailtyFit& null) {
    for (const auto& name : null.names)
        if (std::find(full.names.begin(), full.names.end(), name) == full.names.end())
            throw std::invalid_argument("lr_test: model " + null.label + " is not nested in " + full.label +
                                        " (extra covariate '" + name + "')");
    if (full.n_obs != null.n_obs) throw std::invalid_argument("lr_test: models fitted to different data");
    if (null.n_params() > full.n_params())
        throw std::invalid_argument("lr_test: null model has more parameters than the full model");
    return {2.0 * (full.log_likelihood - null.log_likelihood), full.n_params() - null.n_params()};
}

/// Log-likelihood form used when only the two values are known.
[[nodiscard]] inline double lr_statistic(double ll_full, double ll_null) { return 2.0 * (ll_full - ll_null); }

/// Multiplicative effect of an AFT coefficient on expected duration.
[[nodiscard]] inline double time_ratio(double coefficient) { return std::exp(coefficient); }

}  // namespace debtcycle
