#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace debtcycle {

/// Design matrix is rank deficient or too ill-conditioned to estimate.
class CollinearityError : public std::runtime_error {
public:
    CollinearityError(const std::string& what, std::vector<std::string> columns)
        : std::runtime_error(what), columns_(std::move(columns)) {}
    [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }

private:
    std::vector<std::string> columns_;
};

namespace detail {

inline std::string join(const std::vector<std::string>& xs, const char* sep = ", ") {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : sep) + x;
    return out;
}

inline std::string column_name(const std::vector<std::string>& names, Eigen::Index j) {
    return j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                       : "column " + std::to_string(j);
}

}  // namespace detail

/// Condition number of X after scaling every column to unit Euclidean norm.
/// Columns involved in the near-dependency are those with weight > 0.1 in the smallest right singular vector.
struct ConditionReport {
    double condition = 0.0;
    std::vector<std::string> offending;
};

[[nodiscard]] inline ConditionReport scaled_condition(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    ConditionReport rep;
    if (X.cols() == 0) return rep;
    Eigen::MatrixXd Xs = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double nrm = X.col(j).norm();
        if (nrm == 0.0) {
            rep.condition = INFINITY;
            rep.offending.push_back(detail::column_name(names, j));
            continue;
        }
        Xs.col(j) /= nrm;
    }
    if (!rep.offending.empty()) return rep;
    if (X.rows() < X.cols()) {
        rep.condition = INFINITY;
        for (Eigen::Index j = 0; j < X.cols(); ++j) rep.offending.push_back(detail::column_name(names, j));
        return rep;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    rep.condition = smin > 0 ? sv(0) / smin : INFINITY;
    const Eigen::VectorXd v = svd.matrixV().col(sv.size() - 1);
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) > 0.1) rep.offending.push_back(detail::column_name(names, j));
    return rep;
}

/// Throws CollinearityError when the scaled condition number exceeds `limit`.
inline void require_well_conditioned(const Eigen::MatrixXd& X, const std::vector<std::string>& names, double limit,
                                     const std::string& what) {
    const auto rep = scaled_condition(X, names);
    if (!(rep.condition <= limit))
        throw CollinearityError(what + ": design is collinear (condition number " +
                                    (std::isfinite(rep.condition) ? std::to_string(rep.condition) : "inf") +
                                    "); offending columns: " + detail::join(rep.offending),
                                rep.offending);
}

}  // namespace debtcycle
