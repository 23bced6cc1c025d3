#pragma once

// Steady states, time propagation and regression-theorem correlation
// functions for a vectorized Liouvillian.

#include <functional>
#include <string>
#include <vector>

#include "ringcqed/model.hpp"
#include "ringcqed/ode.hpp"

namespace ringcqed {

/// L(t) = constant + sum_k coefficient_k(t) * matrix_k
struct TimeDependentGenerator {
    struct Term {
        std::function<cplx(double)> coefficient;
        SparseMatrix matrix;
    };
    SparseMatrix constant;
    std::vector<Term> terms;
    Eigen::Index hilbert_dim = 0;

    static TimeDependentGenerator from(const Superoperator& l);
    void apply(double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) const;
};

struct SteadyStateOptions {
    /// Relative gap threshold below which the steady state is declared degenerate.
    double degeneracy_threshold = 1e-12;
    /// Largest D^2 for which a dense null-space basis is computed on failure.
    Eigen::Index dense_limit = 4096;
    OdeOptions ode;
};

struct SteadyState {
    Eigen::MatrixXcd rho;
    Eigen::VectorXcd vec;
    double residual = 0.0;      ///< ||L rho|| / (max|L| * ||rho||)
    double gap_estimate = 0.0;  ///< smallest singular value estimate of the bordered system, relative to max|L|
    std::string method;         ///< "sparse-lu", "dense-null-space" or "propagation"
};

/// Throws DegenerateSteadyStateError when the stationary space is not one-dimensional.
SteadyState steady_state(const Superoperator& l, const SteadyStateOptions& options = {});

/// Smallest nonzero |Re lambda| of L from a dense eigendecomposition; for small spaces only.
double dense_spectral_gap(const Superoperator& l, double zero_tolerance = 1e-9);

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> states;
    double max_trace_drift = 0.0;  ///< largest |Tr rho - 1| removed by renormalization
    OdeStats stats;
};

Trajectory evolve(const Superoperator& l, const Eigen::MatrixXcd& rho0, const std::vector<double>& times,
                  const OdeOptions& options = {});
Trajectory evolve(const TimeDependentGenerator& l, const Eigen::MatrixXcd& rho0, double t0,
                  const std::vector<double>& times, const OdeOptions& options = {});

/// Tr(O rho)
cplx expectation(const Operator& o, const Eigen::MatrixXcd& rho);

/// values[i][j][k] = Tr[observables[j] e^{L taus[k]} (jumps[i] rho jumps[i]^dagger)]
/// for non-negative, non-decreasing taus. All jumps are propagated together.
std::vector<std::vector<std::vector<cplx>>> regression(const Superoperator& l, const Eigen::VectorXcd& rho,
                                                       const std::vector<Operator>& jumps,
                                                       const std::vector<Operator>& observables,
                                                       const std::vector<double>& taus,
                                                       const OdeOptions& options = {});

/// Tr[obs_y e^{L tau} (jump_x rho jump_x^dagger)] for tau >= 0.
std::vector<cplx> two_time_correlation(const Superoperator& l, const Eigen::VectorXcd& rho, const Operator& jump_x,
                                       const Operator& obs_y, const std::vector<double>& taus,
                                       const OdeOptions& options = {});

struct CorrelationCurve {
    std::vector<double> taus;
    std::vector<double> values;
    int order = 2;
    std::vector<std::string> channels;
    double normalization = 0.0;
    bool nonstationary = false;  ///< steady-state residual was large
};

struct Correlation2D {
    std::vector<double> tau1s;  ///< delay between first and second detection
    std::vector<double> tau2s;  ///< delay between second and third detection
    Eigen::MatrixXd values;     ///< values(i, j) at (tau1s[i], tau2s[j])
    std::vector<std::string> channels;
    double normalization = 0.0;
};

/// A Liouvillian with its steady state and named detection channels.
struct CorrelationSystem {
    Superoperator liouvillian;
    SteadyState steady;
    std::vector<std::string> names;
    std::vector<Operator> channels;

    std::size_t index(const std::string& name) const;
    double intensity(const std::string& name) const;
};

/// Full model with channels "a" and "b".
CorrelationSystem prepare_full_model(const SystemConfig& config, const SteadyStateOptions& options = {});

/// All normalized second-order correlations between the channels of a system.
struct G2Set {
    std::vector<double> taus;                             ///< non-negative delays
    std::vector<std::string> names;
    std::vector<double> intensities;
    std::vector<std::vector<std::vector<double>>> raw;    ///< [x][y][k] = <x^dag y^dag(tau) y(tau) x>
    bool nonstationary = false;

    /// g2_xy on the symmetric grid -taus..taus, using g_xy(-tau) = g_yx(tau).
    CorrelationCurve curve(const std::string& x, const std::string& y) const;
    double at_zero(const std::string& x, const std::string& y) const;
};

G2Set g2_all(const CorrelationSystem& sys, const std::vector<double>& taus, const OdeOptions& options = {});
CorrelationCurve g2(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                    const std::vector<double>& taus, const OdeOptions& options = {});
CorrelationCurve g2(const SystemConfig& config, const std::string& x, const std::string& y,
                    const std::vector<double>& taus, const OdeOptions& options = {});

/// Nested regression for tau1, tau2 >= 0:
/// Tr[z^dag z e^{L tau2}(y e^{L tau1}(x rho x^dag) y^dag)] / (I_x I_y I_z).
Correlation2D g3_nested(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                        const std::string& z, const std::vector<double>& tau1s, const std::vector<double>& tau2s,
                        const OdeOptions& options = {});

/// Third-order correlation on the uniform grid tau in [-tau_max, tau_max] with n points
/// per side, where tau1 = t_y - t_x and tau2 = t_z - t_y. Quadrants with negative
/// delays are filled by time-ordering the three detections.
Correlation2D g3_map(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                     const std::string& z, double tau_max, int n, const OdeOptions& options = {});

/// 0, then log-spaced points near zero, then linear up to tau_max.
std::vector<double> default_tau_grid(double tau_max, int points = 400);

/// Maximum |g(tau) - g(-tau)| of a curve given on a symmetric delay grid.
/// Values below 1e-8 are considered achiral.
double chirality_metric(const CorrelationCurve& curve);

struct SweepPoint {
    double cavity_detuning = 0.0;
    double chirality = 0.0;
    double g2_aa0 = 0.0;
    double g2_bb0 = 0.0;
    double g2_ab0 = 0.0;
    CorrelationCurve aa;
    CorrelationCurve bb;
    CorrelationCurve ab;
    CorrelationCurve ba;
};

/// Evaluates correlations with the cavity frame shifted by each offset (subtracted
/// from every emitter detuning). Points run in parallel; output order follows input.
std::vector<SweepPoint> detuning_sweep(const SystemConfig& config, const std::vector<double>& cavity_detunings,
                                       const std::vector<double>& taus, const OdeOptions& options = {},
                                       unsigned workers = 0);

}  // namespace ringcqed
