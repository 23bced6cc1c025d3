#pragma once

// Linear (bosonic) counterpart of the emitter model: each emitter becomes a
// harmonic mode c_n. Quadratic, excitation-conserving Hamiltonians with linear
// decay and pump keep the state Gaussian, so everything follows from the
// single-particle drift matrix and the normal-ordered covariance.

#include "ringcqed/dynamics.hpp"

namespace ringcqed {

/// Mode order: a, b, c_1, ..., c_N.
struct QuadraticModel {
    Eigen::MatrixXcd coupling;  ///< N x 2, row n = (g_n e^{i phi_n}, g_n e^{-i phi_n}) / sqrt2
    Eigen::VectorXd detuning;   ///< emitter detunings from the cavity
    double g_bs = 0.0;
    double kappa = 0.0;
    Eigen::VectorXd decay;  ///< emitter decay rates
    Eigen::VectorXd pump;   ///< emitter incoherent pump rates

    /// Throws ModelError when the configuration has dephasing or shelving,
    /// which have no quadratic counterpart.
    static QuadraticModel from_config(const SystemConfig& config);

    Eigen::Index modes() const { return coupling.rows() + 2; }
    /// Single-particle Hamiltonian h with H = sum_ij h_ij x_i^dag x_j.
    Eigen::MatrixXcd hamiltonian() const;
    /// d<x>/dt = M <x>, M = -i h - (K - P)/2.
    Eigen::MatrixXcd drift() const;
};

/// Chain form of the coupling matrix: G = Q R with Q unitary and R upper
/// triangular (no pivoting), so a couples only to d_1 and b to d_1, d_2.
/// The mirrored form factors conj(G), whose columns are (b, a) couplings up to
/// the gauge, so b couples to one mode and a to two.
struct ChainDecomposition {
    Eigen::MatrixXcd q;
    Eigen::MatrixXcd r;           ///< N x 2
    Eigen::MatrixXcd q_mirrored;
    Eigen::MatrixXcd r_mirrored;
    int rank = 0;                 ///< number of emitter modes in the chain (0, 1 or 2)
    bool shortened = false;       ///< rank < min(N, 2)
};
ChainDecomposition qr_reduce(const Eigen::MatrixXcd& g, double rank_tolerance = 1e-12);

/// Solves A X + X A^dag + Q = 0 for Hurwitz A (Bartels-Stewart on the complex
/// Schur form). Throws ModelError if A + conj(A)^T-type sums are singular.
Eigen::MatrixXcd solve_lyapunov(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& q);

struct GaussianState {
    Eigen::MatrixXcd covariance;  ///< C_ij = <x_i^dag x_j>
    Eigen::MatrixXcd drift;
    double lyapunov_residual = 0.0;  ///< relative to ||P||

    double occupation(Eigen::Index mode) const { return covariance(mode, mode).real(); }
    /// <x_i^dag(0) x_j(tau)> for tau >= 0.
    Eigen::MatrixXcd first_order(double tau) const;
};

/// Throws ModelError when the drift is not Hurwitz (pump outruns decay).
GaussianState gaussian_steady_state(const QuadraticModel& model);

/// Normalized g2 between channels "a" and "b" via Gaussian factorization:
/// <x^dag y^dag(tau) y(tau) x> = n_x n_y + |<x^dag(0) y(tau)>|^2.
/// Throws NormalizationError for an empty channel.
G2Set gaussian_g2_all(const QuadraticModel& model, const std::vector<double>& taus);
CorrelationCurve gaussian_g2(const QuadraticModel& model, const std::string& x, const std::string& y,
                             const std::vector<double>& taus);

struct SpinBosonReport {
    G2Set spin;
    G2Set boson;
    double spin_chirality = 0.0;   ///< chirality_metric of g2_ab
    double boson_chirality = 0.0;
    double spin_mirror_gap = 0.0;  ///< max |g2_aa - g2_bb|
    double boson_mirror_gap = 0.0;
    double spin_intensity[2] = {0.0, 0.0};
    double boson_intensity[2] = {0.0, 0.0};
};
SpinBosonReport spin_vs_boson_compare(const SystemConfig& config, const std::vector<double>& taus,
                                      const OdeOptions& options = {});

}  // namespace ringcqed
