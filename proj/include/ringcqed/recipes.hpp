#pragma once

// Canned parameter sets for the reference scenarios.

#include <array>

#include "ringcqed/kerr.hpp"
#include "ringcqed/model.hpp"

namespace ringcqed::recipes {

/// Target phase-disorder values of the four-emitter ensemble scenario.
inline constexpr std::array<double, 3> kEnsembleXi{0.6, 0.3, 0.06};

/// Phases {0, 0, theta, -theta} with xi_phi = ((1 + cos 2 theta) / 2)^2 = xi.
std::vector<double> ensemble_phases(double xi);

/// Four identical resonant emitters: gamma 15 MHz, dephasing 40 MHz, pump 0.3 gamma,
/// g 150 MHz, kappa 300 MHz, no backscattering.
SystemConfig ensemble(double xi, int fock_cutoff = 2);

/// Single resonant emitter at phi = pi/4 with backscattering: g = 0.3 kappa,
/// g_bs = 0.5 kappa, gamma = 0.2 kappa, dephasing = pump = 0.1 kappa.
SystemConfig chiral_single(double kappa = mhz_to_rad_s(300.0), int fock_cutoff = 2);

/// Two-emitter bad-cavity comparison: Delta = {kappa, kappa/2}, phi = {pi/4, 0},
/// g_bs = kappa/2, g = eps kappa, gamma = dephasing = pump = eps^d kappa.
SystemConfig bad_cavity_pair(double eps, int d, double kappa = 1.0, int fock_cutoff = 2);

/// Four spectrally and phase disordered emitters used for detuning sweeps.
SystemConfig disordered_four(double kappa = mhz_to_rad_s(300.0), int fock_cutoff = 1);

/// Three identical emitters at Delta = kappa, g = 0.01 kappa with g_bs = kappa/2.
SystemConfig weak_triplet(const std::array<double, 3>& phases, double kappa = 1.0);

/// Loaded linewidth of the nonlinear-optics modes: 327 THz at Q = 3.7e5.
inline constexpr double kKerrKappa = kTwoPi * 327e12 / 3.7e5;

struct KerrScenario {
    SystemConfig config;
    PumpPulse pulse;
    CoincidenceWindows windows;
};

/// Signal, idler and pump modes at kKerrKappa, over-coupled (kappa_c = 0.8 kappa),
/// pumped by a 50 ps Gaussian with `pump_photons` photons at 0.66 MHz. With an
/// emitter it is resonant with the signal mode: g = 100 MHz, gamma = 15 MHz.
/// The Kerr coupling is a bare single-photon value; use calibrate_pair_rate to
/// set the pairs per pulse.
KerrScenario kerr_pulse(bool with_emitter = true, double pump_photons = 6.9e7, int fock_cutoff = 3);

}  // namespace ringcqed::recipes
