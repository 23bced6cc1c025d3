#include "ringcqed/recipes.hpp"

#include <cmath>
#include <stdexcept>

namespace ringcqed::recipes {

std::vector<double> ensemble_phases(double xi) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("ensemble phases: xi must lie in [0, 1]");
    const double c = 2.0 * std::sqrt(xi) - 1.0;  // cos 2 theta
    const double theta = 0.5 * std::acos(c);
    return {0.0, 0.0, theta, -theta};
}

SystemConfig ensemble(double xi, int fock_cutoff) {
    SystemConfig c;
    c.cavity.kappa_c = mhz_to_rad_s(300.0);
    for (double phi : ensemble_phases(xi)) {
        EmitterParams e;
        e.g = mhz_to_rad_s(150.0);
        e.phi = phi;
        e.gamma = mhz_to_rad_s(15.0);
        e.gamma_deph = mhz_to_rad_s(40.0);
        e.gamma_ex = 0.3 * e.gamma;
        c.emitters.push_back(e);
    }
    c.fock_cutoff = fock_cutoff;
    return c;
}

SystemConfig chiral_single(double kappa, int fock_cutoff) {
    SystemConfig c;
    c.cavity.kappa_c = kappa;
    c.cavity.g_bs = 0.5 * kappa;
    EmitterParams e;
    e.phi = kPi / 4;
    e.g = 0.3 * kappa;
    e.gamma = 0.2 * kappa;
    e.gamma_deph = 0.1 * kappa;
    e.gamma_ex = 0.1 * kappa;
    c.emitters = {e};
    c.fock_cutoff = fock_cutoff;
    return c;
}

SystemConfig bad_cavity_pair(double eps, int d, double kappa, int fock_cutoff) {
    if (!(eps > 0.0) || (d != 1 && d != 2)) throw DomainError("bad-cavity pair: need eps > 0 and d in {1, 2}");
    SystemConfig c;
    c.cavity.kappa_c = kappa;
    c.cavity.g_bs = 0.5 * kappa;
    const double rate = std::pow(eps, d) * kappa;
    const double deltas[2] = {kappa, 0.5 * kappa};
    const double phis[2] = {kPi / 4, 0.0};
    for (int n = 0; n < 2; ++n) {
        EmitterParams e;
        e.delta = deltas[n];
        e.phi = phis[n];
        e.g = eps * kappa;
        e.gamma = rate;
        e.gamma_deph = rate;
        e.gamma_ex = rate;
        c.emitters.push_back(e);
    }
    c.fock_cutoff = fock_cutoff;
    return c;
}

SystemConfig disordered_four(double kappa, int fock_cutoff) {
    SystemConfig c;
    c.cavity.kappa_c = kappa;
    c.cavity.g_bs = 0.4 * kappa;
    const double deltas[4] = {-0.9, -0.35, 0.2, 0.75};
    const double phis[4] = {0.15, 1.05, 1.9, 2.75};
    const double gs[4] = {0.25, 0.3, 0.2, 0.28};
    for (int n = 0; n < 4; ++n) {
        EmitterParams e;
        e.delta = deltas[n] * kappa;
        e.phi = phis[n];
        e.g = gs[n] * kappa;
        e.gamma = 0.1 * kappa;
        e.gamma_deph = 0.05 * kappa;
        e.gamma_ex = 0.05 * kappa;
        c.emitters.push_back(e);
    }
    c.fock_cutoff = fock_cutoff;
    return c;
}

SystemConfig weak_triplet(const std::array<double, 3>& phases, double kappa) {
    SystemConfig c;
    c.cavity.kappa_c = kappa;
    c.cavity.g_bs = 0.5 * kappa;
    for (double phi : phases) {
        EmitterParams e;
        e.delta = kappa;
        e.g = 0.01 * kappa;
        e.phi = phi;
        c.emitters.push_back(e);
    }
    return c;
}

KerrScenario kerr_pulse(bool with_emitter, double pump_photons, int fock_cutoff) {
    KerrScenario s;
    s.pulse = PumpPulse::gaussian(50e-12, pump_photons, kKerrKappa, 0.8 * kKerrKappa, 1.0 / 0.66e6, 2e-12, 150e-12);
    s.config.cavity.kappa_c = 0.8 * kKerrKappa;
    s.config.cavity.kappa_i = 0.2 * kKerrKappa;
    if (with_emitter) {
        EmitterParams e;
        e.g = mhz_to_rad_s(100.0);
        e.gamma = mhz_to_rad_s(15.0);
        s.config.emitters.push_back(e);
    }
    s.config.kerr = kerr_params(pump_response(s.pulse), 1e-5);
    s.config.fock_cutoff = fock_cutoff;
    return s;
}

}  // namespace ringcqed::recipes
