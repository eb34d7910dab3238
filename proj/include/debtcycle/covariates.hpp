#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "debtcycle/linalg.hpp"
#include "debtcycle/panel.hpp"

namespace debtcycle {

enum class WindowDirection { Before, After };
enum class WindowStatistic { MeanPctChange, MeanLevel };

/// How one event-window covariate is computed from a panel variable around a debt turning point.
struct WindowSpec {
    std::string name;      ///< covariate column name
    std::string variable;  ///< panel variable it is computed from
    int n_quarters = 2;
    WindowDirection direction = WindowDirection::Before;
    WindowStatistic statistic = WindowStatistic::MeanPctChange;

    void validate() const {
        if (n_quarters < 1) throw std::invalid_argument("window spec '" + name + "': n_quarters must be >= 1");
    }
};

/// Financial growth covariates: two-quarter average growth before the debt turning point.
[[nodiscard]] inline std::vector<WindowSpec> default_growth_specs() {
    return {
        {"credit_growth", "credit", 2, WindowDirection::Before, WindowStatistic::MeanPctChange},
        {"house_growth", "house", 2, WindowDirection::Before, WindowStatistic::MeanPctChange},
    };
}

/// The six macro controls. Inflation uses the window after the turning point; the account balance
/// is averaged in levels.
[[nodiscard]] inline std::vector<WindowSpec> default_macro_specs() {
    return {
        {"gdp_growth", "gdp", 1, WindowDirection::Before, WindowStatistic::MeanPctChange},
        {"money_growth", "money", 2, WindowDirection::Before, WindowStatistic::MeanPctChange},
        {"inflation", "cpi", 2, WindowDirection::After, WindowStatistic::MeanPctChange},
        {"reer_growth", "reer", 2, WindowDirection::Before, WindowStatistic::MeanPctChange},
        {"account_balance", "balance", 2, WindowDirection::Before, WindowStatistic::MeanLevel},
        {"oil_growth", "oil", 3, WindowDirection::Before, WindowStatistic::MeanPctChange},
    };
}

/// Mean of the n percentage changes into t-n+1..t (Before) or into t+1..t+n (After); for
/// MeanLevel the mean of the levels over the same quarters. nullopt when the window leaves the series.
[[nodiscard]] inline std::optional<double> event_window_average(const QuarterlySeries& s, QuarterIndex t,
                                                                const WindowSpec& spec) {
    spec.validate();
    const int n = spec.n_quarters;
    const QuarterIndex first = spec.direction == WindowDirection::Before ? t - (n - 1) : t + 1;
    const QuarterIndex last = first + (n - 1);
    const bool needs_base = spec.statistic == WindowStatistic::MeanPctChange;
    if (!s.contains(needs_base ? first - 1 : first) || !s.contains(last)) return std::nullopt;

    double sum = 0.0;
    for (QuarterIndex q = first; q <= last; q = q.next()) {
        if (needs_base) {
            const double base = s.at(q - 1);
            if (base == 0.0)
                throw std::domain_error("percentage change undefined: zero at " + format_quarter(q - 1) + " in " +
                                        s.country() + "/" + s.variable());
            sum += 100.0 * (s.at(q) - base) / base;
        } else {
            sum += s.at(q);
        }
    }
    return sum / n;
}

/// Principal components of standardized data.
struct PcaResult {
    Eigen::MatrixXd loadings;        ///< variables x components, orthonormal columns
    Eigen::MatrixXd scores;          ///< observations x components
    Eigen::VectorXd eigenvalues;     ///< of the correlation matrix, descending
    Eigen::VectorXd explained;       ///< eigenvalue / trace, descending
    Eigen::VectorXd means;
    Eigen::VectorXd scales;          ///< sample standard deviations used for standardization

    [[nodiscard]] double cumulative(Eigen::Index k) const { return explained.head(k).sum(); }
};

/// Correlation-matrix PCA: columns are standardized (sample sd), the correlation matrix is
/// eigendecomposed, scores = standardized data x loadings. Each loading vector is signed so that
/// its largest-magnitude entry is positive.
[[nodiscard]] inline PcaResult pca(const Eigen::MatrixXd& data, const std::vector<std::string>& names = {}) {
    const Eigen::Index n = data.rows();
    const Eigen::Index m = data.cols();
    if (n < 2) throw std::invalid_argument("pca needs at least 2 observations");
    if (m < 1) throw std::invalid_argument("pca needs at least 1 variable");

    PcaResult r;
    r.means = data.colwise().mean().transpose();
    Eigen::MatrixXd z = data.rowwise() - r.means.transpose();
    r.scales.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
        if (!(sd > 1e-14 * std::max(1.0, std::abs(r.means(j)))))
            throw std::invalid_argument("pca: variable '" + detail::column_name(names, j) + "' has zero variance");
        r.scales(j) = sd;
        z.col(j) /= sd;
    }
    const Eigen::MatrixXd corr = (z.transpose() * z) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) throw std::runtime_error("pca: eigendecomposition failed");

    r.eigenvalues = eig.eigenvalues().reverse();
    r.loadings = eig.eigenvectors().rowwise().reverse();
    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::Index arg = 0;
        r.loadings.col(k).cwiseAbs().maxCoeff(&arg);
        if (r.loadings(arg, k) < 0) r.loadings.col(k) *= -1.0;
        if (r.eigenvalues(k) < 0) r.eigenvalues(k) = 0.0;  // rounding on rank-deficient input
    }
    r.explained = r.eigenvalues / r.eigenvalues.sum();
    r.scores = z * r.loadings;
    return r;
}

/// Residual of the OLS regression of `target` on an intercept plus the columns of `regressors`.
[[nodiscard]] inline Eigen::VectorXd orthogonalize(const Eigen::VectorXd& target, const Eigen::MatrixXd& regressors,
                                                   const std::vector<std::string>& names = {}) {
    const Eigen::Index n = target.size();
    if (regressors.rows() != n && regressors.cols() > 0)
        throw std::invalid_argument("orthogonalize: regressors and target differ in length");
    Eigen::MatrixXd X(n, regressors.cols() + 1);
    X.col(0).setOnes();
    if (regressors.cols() > 0) X.rightCols(regressors.cols()) = regressors;

    std::vector<std::string> all{"(intercept)"};
    all.insert(all.end(), names.begin(), names.end());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) {
        const auto rep = scaled_condition(X, all);
        throw CollinearityError("orthogonalize: regressors are rank deficient; offending columns: " +
                                    detail::join(rep.offending),
                                rep.offending);
    }
    const Eigen::VectorXd beta = qr.solve(target);
    return target - X * beta;
}

}  // namespace debtcycle
