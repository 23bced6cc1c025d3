#pragma once

// Adaptive Dormand-Prince 5(4) integrator for linear matrix-valued ODEs
// dY/dt = f(t, Y). Each column of Y is an independent vectorized state.

#include <functional>

#include "ringcqed/common.hpp"

namespace ringcqed {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    double initial_step = 0.0;  ///< 0 picks a step from the derivative norm
    double max_step = 0.0;      ///< 0 means unbounded
    long max_steps = 50'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

using OdeRhs = std::function<void(double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dydt)>;

/// Called once per output time (including the initial one when it is in `times`).
using OdeObserver = std::function<void(std::size_t index, double t, const Eigen::MatrixXcd& y)>;

/// Integrates from t0 through the non-decreasing output `times` (all >= t0),
/// stepping exactly onto each output time. Throws StiffnessError when the
/// step size collapses or max_steps is exceeded.
OdeStats integrate(const OdeRhs& rhs, double t0, Eigen::MatrixXcd y, const std::vector<double>& times,
                   const OdeObserver& observe, const OdeOptions& options = {});

}  // namespace ringcqed
