#pragma once

// Small dense optimizers for parameter fits: bounded Levenberg-Marquardt for
// least squares, projected BFGS for smooth scalar objectives with box
// constraints, and Powell's direction-set method for noisy objectives.
// Derivatives are taken by finite differences.

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace ringcqed {

struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    /// Unbounded in n dimensions.
    static Bounds none(Eigen::Index n);
    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
    /// Throws std::invalid_argument when sizes disagree or lower > upper.
    void check(Eigen::Index n) const;
};

struct OptimizeOptions {
    int max_iterations = 200;
    double tolerance = 1e-10;      ///< relative change in cost / step
    double gradient_tolerance = 1e-10;
    double diff_step = 1e-7;       ///< relative finite-difference step
};

struct OptimizeResult {
    Eigen::VectorXd x;
    double cost = 0.0;             ///< 0.5 * |r|^2 for least squares, f(x) otherwise
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
    Eigen::MatrixXd jacobian;      ///< least squares only, at x
    Eigen::MatrixXd covariance;    ///< least squares only: s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - n)
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

OptimizeResult least_squares(const ResidualFn& residual, const Eigen::VectorXd& x0, const Bounds& bounds,
                             const OptimizeOptions& options = {});

OptimizeResult minimize_bfgs_box(const ObjectiveFn& f, const Eigen::VectorXd& x0, const Bounds& bounds,
                                 const OptimizeOptions& options = {});

OptimizeResult minimize_powell(const ObjectiveFn& f, const Eigen::VectorXd& x0, const Bounds& bounds,
                               const OptimizeOptions& options = {});

}  // namespace ringcqed
