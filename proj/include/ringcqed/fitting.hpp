#pragma once

// Parameter extraction: joint g2 fits with detector jitter, the single-emitter
// backscattering fit, the strong-coupling transport fit under spectral
// diffusion, and the HOM dephasing bound.

#include <functional>
#include <string>
#include <vector>

#include "ringcqed/analytic.hpp"
#include "ringcqed/optimize.hpp"

namespace ringcqed {

/// Samples (x, y) with residual weights (1 / sigma).
struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> weight;

    bool empty() const { return x.empty(); }
    /// Throws ValidationError for size mismatch, non-finite entries or weights <= 0.
    void validate(const std::string& field) const;
    /// Unit weights.
    static FitData uniform(std::vector<double> x, std::vector<double> y);
    /// Raw coincidence counts with Poisson weights 1 / sqrt(max(count, 1));
    /// y is the count divided by `normalization`, weights scale alike.
    static FitData from_counts(std::vector<double> x, const std::vector<double>& counts, double normalization);
};

/// Gaussian detector jitter: (f * G)(tau) with G of the given FWHM, by
/// trapezoid quadrature over +-4 sigma. fwhm = 0 returns f(tau).
double jitter_convolve(const std::function<double(double)>& f, double tau, double fwhm, int nodes = 61);
/// Same for a sampled curve, linearly interpolated and held constant beyond its ends.
std::vector<double> jitter_convolve(const std::vector<double>& taus, const std::vector<double>& values, double fwhm,
                                    int nodes = 61);

struct ParameterBound {
    double lower = 0.0;
    double upper = 0.0;
};

/// Names accepted in G2FitProblem::free: gamma, gamma_deph, gamma_ex, gamma_e,
/// gamma_s, n_emitters, xi, spread.
struct G2FitProblem {
    FitData aa;
    FitData ab;  ///< may be empty for an auto-only fit
    IdenticalFitModel start;  ///< initial guesses and fixed values
    std::vector<std::string> free{"gamma", "gamma_deph", "gamma_ex", "gamma_e", "n_emitters", "xi"};
    std::vector<std::pair<std::string, ParameterBound>> bounds;  ///< overrides of the default bounds
    double jitter_fwhm = 82e-12;
    OptimizeOptions optimizer{300, 1e-12, 1e-12, 1e-7};

    void validate() const;
};

struct FitResult {
    std::vector<std::string> names;  ///< free parameters, in fit order
    Eigen::VectorXd values;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;  ///< |weighted residual|
    int iterations = 0;
    bool converged = false;
    std::string message;

    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
};

struct G2Fit {
    IdenticalFitModel model;
    FitResult result;
};

/// Joint weighted least squares of the identical-emitter fit form on both
/// channels (xi enters only the cross channel), convolved with the jitter.
/// Non-convergence is reported in result.converged / message with the best
/// parameters found.
G2Fit fit_g2(const G2FitProblem& problem);

/// Fit form convolved with the jitter at the given delays.
std::vector<double> g2_fit_curve(const IdenticalFitModel& model, bool cross, const std::vector<double>& taus,
                                 double jitter_fwhm);

// ---------------------------------------------------------------------------
// Backscattering

/// Single emitter, modes a and b as coupled oscillators in the one-excitation
/// (linear) regime, a driven from the waveguide by s_in(t):
///   da/dt = -(kappa/2) a - i g_bs b - i (g/sqrt2) e^{-i phi} sigma + sqrt(kappa_c) s_in
///   db/dt = -(kappa/2) b - i g_bs a - i (g/sqrt2) e^{+i phi} sigma
///   dsigma/dt = -(gamma/2 + i delta) sigma - i (g/sqrt2)(e^{i phi} a + e^{-i phi} b)
/// The backscattered trace is kappa_c |b|^2.
struct BackscatterSetup {
    double kappa = 0.0;
    double kappa_c = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    std::vector<double> input_times;
    std::vector<cplx> input;  ///< s_in, linearly interpolated, zero outside

    void validate() const;
};

std::vector<double> backscatter_trace(const BackscatterSetup& setup, double g, double phi, double g_bs,
                                      const std::vector<double>& times);

struct BackscatterFit {
    double g = 0.0;
    double phi = 0.0;  ///< reduced to [0, pi): the trace depends on e^{2 i phi} only
    double g_bs = 0.0;
    FitResult result;
    bool g_identifiable = true;
    bool phi_identifiable = true;
    /// At delta = 0 the trace is also invariant under phi -> pi/2 - phi.
    bool mirror_degenerate = false;
};

/// Three-parameter least squares with starts spread over phi. Throws
/// DomainError for a flat trace.
BackscatterFit fit_backscatter(const BackscatterSetup& setup, const FitData& trace, double g_guess,
                               double g_bs_guess);

// ---------------------------------------------------------------------------
// Strong coupling under spectral diffusion

/// Emitter excited, cavity empty; single mode with coupling g:
///   da/dt = -(kappa/2) a - i g sigma,  dsigma/dt = -(gamma/2 + i delta) sigma - i g a.
/// Returns kappa |a(t)|^2 (zero for t < 0).
double cavity_emission(double g, double kappa, double gamma, double delta, double t);

/// Detunings delta ~ (N(center - zfs/2, width^2) + N(center + zfs/2, width^2)) / 2,
/// integrated with Gauss-Hermite quadrature per lobe.
struct DiffusionModel {
    double width = 0.0;
    double zfs = kTwoPi * 1e9;
    int nodes = 32;
};

/// Gauss-Hermite nodes and weights for weight e^{-x^2} (Golub-Welsch).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

double averaged_emission(double g, double center, double kappa, double gamma, const DiffusionModel& diffusion,
                         double t);

struct StrongCouplingSetup {
    double kappa = 0.0;
    double gamma = 0.0;
    DiffusionModel diffusion;
    double g_guess = 0.0;
    double center_guess = 0.0;
    int rounds = 12;  ///< alternations of the two optimization steps

    void validate() const;
};

struct StrongCouplingFit {
    double g = 0.0;
    double center = 0.0;
    double amplitude = 0.0;
    double dark = 0.0;
    double time_offset = 0.0;
    double cost = 0.0;
    int rounds = 0;
    bool converged = false;
    std::string message;
};

/// Trace model amplitude * averaged_emission(t - time_offset) + dark.
double strong_coupling_model(const StrongCouplingSetup& setup, const StrongCouplingFit& p, double t);

/// Alternates (1) g and centre by box-constrained BFGS, with amplitude and dark
/// offset solved linearly, and (2) amplitude, dark offset and time offset by
/// Powell's method, until a round gains less than 0.1%; a joint BFGS pass over
/// g, centre and time offset then finishes. Throws DomainError for a flat
/// trace; a stalled optimization returns the best point with converged = false.
StrongCouplingFit fit_strong_coupling(const StrongCouplingSetup& setup, const FitData& trace);

// ---------------------------------------------------------------------------

/// Dephasing bound gamma' = Gamma (1 - V) / V from V = Gamma / (gamma' + Gamma).
/// Throws DomainError unless 0 < V <= 1 and Gamma > 0.
double hom_dephasing_bound(double visibility, double gamma);

}  // namespace ringcqed
