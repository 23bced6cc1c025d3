#pragma once

// Pulsed parametric pair generation in the undepleted-pump regime. The pump
// mode is a classical mean field; it drives H = Omega(t) a^dag i^dag + h.c. with
// Omega = g_Kerr <a_-1>(t)^2 between the signal mode a and the idler.

#include <optional>
#include <string>
#include <vector>

#include "ringcqed/dynamics.hpp"

namespace ringcqed {

struct PumpPulse {
    std::vector<double> times;
    /// Input field s_in(t) in sqrt(photons/s), or the intracavity field
    /// <a_-1>(t) in sqrt(photons) when `intracavity` is set. Linearly
    /// interpolated, zero outside the samples.
    std::vector<cplx> samples;
    bool intracavity = false;
    double rep_period = 0.0;
    double detuning = 0.0;  ///< pump laser detuning from the pump mode
    double kappa = 0.0;     ///< pump-mode loaded linewidth
    double kappa_c = 0.0;   ///< pump-mode coupling rate to the waveguide

    /// Throws ValidationError naming the offending field.
    void validate() const;

    /// Gaussian input pulse centred at t = 0 with the given intensity FWHM and
    /// energy in photons, sampled with spacing `step` over +-span.
    static PumpPulse gaussian(double fwhm, double photons, double kappa, double kappa_c, double rep_period,
                              double step, double span);
};

struct PumpTrajectory {
    std::vector<double> times;
    std::vector<cplx> field;  ///< <a_-1>(t) in sqrt(photons)

    cplx peak() const;
};

/// Solves d<a>/dt = (-i delta - kappa/2)<a> + sqrt(kappa_c) s_in(t) from the
/// first sample, continuing the ring-down for `tail_lifetimes` / kappa after
/// the last one. Intracavity samples are passed through.
PumpTrajectory pump_response(const PumpPulse& pulse, double tail_lifetimes = 30.0, const OdeOptions& options = {});

/// Kerr parameters for the given pump trajectory.
KerrParams kerr_params(const PumpTrajectory& pump, double g_kerr, double omega_idler = 0.0);

struct KerrOptions {
    OdeOptions ode{1e-9, 1e-15};
    /// Step bound while the drive is on; 0 uses the pump sample spacing.
    double pulse_max_step = 0.0;
    double pair_warning = 0.2;        ///< pairs per pulse above which truncation is suspect
    double top_level_limit = 1e-3;    ///< population allowed in the highest Fock level
};

/// Space {a, idler} plus emitters with L(t) = L_static + Omega(t) K + Omega(t)^* K'.
struct KerrSystem {
    HilbertSpace space;
    TimeDependentGenerator generator;
    std::vector<int> charges;
    double kappa_c = 0.0;
    double kappa = 0.0;
    /// Rising edge of the drive, where the step is bounded.
    double drive_begin = 0.0;
    double drive_end = 0.0;
    double drive_step = 0.0;
};

/// Requires config.kerr. Throws ModelError otherwise.
KerrSystem build_kerr_liouvillian(const SystemConfig& config);

struct PulseRun {
    std::vector<double> times;
    std::vector<double> signal_flux;  ///< kappa_c <a^dag a>, photons/s
    std::vector<double> idler_flux;
    std::vector<double> emitter_population;  ///< summed excited-state population
    double pairs_per_pulse = 0.0;            ///< kappa * integral of <i^dag i>
    double top_level_population = 0.0;      ///< largest population in the highest Fock level of a or idler
    bool truncation_warning = false;
    std::string warning;
};

/// Single pulse from the vacuum at times.front(); times must increase.
PulseRun simulate_pulse(const SystemConfig& config, const std::vector<double>& times,
                        const KerrOptions& options = {});

/// Relative change of pairs per pulse and slow-window signal counts when the
/// Fock cutoff is raised by one.
struct CutoffCheck {
    double pair_change = 0.0;
    double signal_change = 0.0;
    bool converged = false;
};
CutoffCheck kerr_cutoff_check(const SystemConfig& config, const std::vector<double>& times, double tolerance = 0.01,
                              const KerrOptions& options = {});

/// Rescales config.kerr->g_kerr so that pairs per pulse reach `target`,
/// iterating on the weak-drive quadratic law.
SystemConfig calibrate_pair_rate(SystemConfig config, const std::vector<double>& times, double target,
                                 const KerrOptions& options = {});

enum class KerrChannel { signal, idler };

/// Normally ordered flux correlations G(t1, t2) = kappa_c^2 <x^dag(t1) y^dag(t2) y(t2) x(t1)>
/// for t2 >= t1, for both channel orders, with the first detection at times[i] for
/// i < first_count.
struct CoincidenceMap {
    std::vector<double> times;
    std::vector<double> signal_flux;
    std::vector<double> idler_flux;
    std::size_t first_count = 0;
    Eigen::MatrixXd idler_then_signal;  ///< (i, j), j >= i
    Eigen::MatrixXd signal_then_idler;

    /// G for an idler detection at times[i] and a signal detection at times[j].
    /// Throws std::out_of_range if the earlier index is not covered.
    double idler_signal(std::size_t i, std::size_t j) const;
};

/// Throws ModelError when the highest Fock level carries more than
/// options.top_level_limit population.
CoincidenceMap pulsed_two_time(const SystemConfig& config, const std::vector<double>& times, double first_until,
                               const KerrOptions& options = {});

struct CoincidenceWindows {
    double fast_lo = 0.0;
    double fast_hi = 0.8e-9;
    double slow_lo = 1.8e-9;
    double slow_hi = 20e-9;

    /// Throws ValidationError unless the windows are ordered, disjoint and
    /// within the repetition period.
    void validate(double rep_period) const;
};

/// Time grid covering [start, windows.slow_hi] with the window edges on it.
std::vector<double> coincidence_grid(const CoincidenceWindows& windows, double start, double fast_step,
                                     double slow_step);

/// Integration weights of the piecewise-linear interpolant over [lo, hi].
std::vector<double> window_weights(const std::vector<double>& times, double lo, double hi);

/// Detector dark counts, uncorrelated with everything (counts/s).
struct DarkCounts {
    double signal = 0.0;
    double idler = 0.0;
};

struct CarResult {
    double coincidences_signal_idler = 0.0;  ///< per pulse, idler fast x signal fast
    double coincidences_atoms_idler = 0.0;   ///< per pulse, idler fast x signal slow
    double idler_singles = 0.0;              ///< per pulse in the fast window
    double signal_fast_singles = 0.0;
    double signal_slow_singles = 0.0;
    double car_signal_idler = 0.0;
    double car_atoms_idler = 0.0;
};

/// Same-pulse coincidences over the product of per-pulse singles.
/// Throws NormalizationError when an accidental rate vanishes.
CarResult car(const CoincidenceMap& map, const CoincidenceWindows& windows, double rep_period,
              const DarkCounts& dark = {});

/// Two-rate decay fitted over [t_lo, t_hi] in relative residuals, with
/// t0 = t_lo and population rates:
///   values ~ P exp(-fast (t - t0)) + Q exp(-slow (t - t0)) + 2 R exp(-(fast + slow) (t - t0) / 2).
/// The cross term R is present with `interfering`, for a cavity field fed by a
/// re-emitting emitter, where the two decay paths add in amplitude.
struct TwoExponentialFit {
    double fast_rate = 0.0;
    double slow_rate = 0.0;
    double fast_amplitude = 0.0;   ///< P
    double slow_amplitude = 0.0;   ///< Q
    double cross_amplitude = 0.0;  ///< R
    double cost = 0.0;
    bool converged = false;
};
TwoExponentialFit fit_two_exponentials(const std::vector<double>& times, const std::vector<double>& values,
                                       double t_lo, double t_hi, bool interfering = true);

}  // namespace ringcqed
