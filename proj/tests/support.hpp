#pragma once

// Shared helpers for the unit tests: seeded generators and small dense oracles.

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "ringcqed/model.hpp"

namespace testsupport {

using ringcqed::cplx;

inline Eigen::MatrixXcd dense(const ringcqed::SparseMatrix& m) { return Eigen::MatrixXcd(m); }

/// Random density matrix: normalized A A^dagger with Gaussian entries.
inline Eigen::MatrixXcd random_density(Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXcd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(n(rng), n(rng));
    Eigen::MatrixXcd rho = a * a.adjoint();
    return rho / rho.trace();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Dense e^{L t} v, used as the independent propagation oracle.
inline Eigen::VectorXcd expm_apply(const Eigen::MatrixXcd& l, double t, const Eigen::VectorXcd& v) {
    Eigen::MatrixXcd lt = l * t;
    return lt.exp() * v;
}

}  // namespace testsupport
