#pragma once

// Closed-form photon correlations of independent emitters.
//
// Each emitter contributes with weight I_n (its share of the emitted
// intensity). Directional phases enter only through 2(phi_n - phi_m); the
// auto-correlations follow from setting all phases to zero. Rates in rad/s,
// delays in s.

#include <cstdint>
#include <string>
#include <vector>

#include "ringcqed/common.hpp"

namespace ringcqed {

enum class ChannelPair { aa, ab, ba, bb };

/// Parses "aa", "ab", "ba" or "bb".
ChannelPair parse_pair(const std::string& text);
std::string to_string(ChannelPair pair);

struct IndepEmitter {
    double weight = 1.0;      ///< I_n
    double delta = 0.0;       ///< emission frequency (mean of the diffusion distribution)
    double phi = 0.0;
    double gamma = 0.0;       ///< total radiative decay, including Purcell enhancement
    double gamma_deph = 0.0;
    double gamma_ex = 0.0;
    double gamma_e = 0.0;     ///< excited -> shelf
    double gamma_s = 0.0;     ///< shelf -> ground
    double spread = 0.0;      ///< standard deviation of the detuning distribution
};

struct IndepEnsemble {
    std::vector<IndepEmitter> emitters;

    /// Throws ValidationError for negative weights/rates/spreads or zero total weight.
    void validate() const;
    double total_weight() const;

    /// N emitters with unit weights and common rates, at the given phases and detunings.
    static IndepEnsemble identical(const std::vector<double>& phases, const IndepEmitter& prototype,
                                   const std::vector<double>& deltas = {});
};

/// sum_nm I_n I_m cos 2(phi_n - phi_m) / I^2.
double xi_phi(const IndepEnsemble& ensemble);
/// Same for uniform weights.
double xi_phi(const std::vector<double>& phases);

/// Steady-state intensity weights: gamma_ex Gamma / (gamma + gamma_ex) for a
/// two-level emitter, gamma_ex gamma_s Gamma / y for the shelved emitter.
double intensity_weight_2level(double purcell, double gamma, double gamma_ex);
double intensity_weight_3level(double purcell, double gamma, double gamma_ex, double gamma_e, double gamma_s);

/// Two-level emitters (gamma_e = 0 required; ValidationError otherwise).
double g2_indep_2level(const IndepEnsemble& ensemble, ChannelPair pair, double tau);

/// Emitters with a metastable shelf (gamma_s > 0 required). When x^2 < y the
/// self term is continued to cos / sin and *continued is set.
double g2_indep_3level(const IndepEnsemble& ensemble, ChannelPair pair, double tau, bool* continued = nullptr);

/// Cross terms averaged over Gaussian detuning distributions (mean delta_n,
/// std spread_n): each pair picks up exp(-(s_n^2 + s_m^2) tau^2 / 2). Uses the
/// shelved self term when any gamma_e > 0, else the two-level one. Weights are
/// taken as independent of the sampled detunings.
double g2_diffused(const IndepEnsemble& ensemble, ChannelPair pair, double tau);

/// Identical-emitter fit form with a non-integer emitter number:
/// 1 - e^{-x|t|}(cosh z|t| - lambda sinh z|t|) / N
///   + (xi - 1/N) e^{-(gamma + gamma_e + gamma_ex + gamma')|t|} e^{-s^2 t^2 / 2}.
/// Auto-correlations use xi = 1. Here s is the spread of the pairwise detuning difference.
struct IdenticalFitModel {
    double n_emitters = 1.0;
    double xi = 1.0;
    double gamma = 0.0;
    double gamma_deph = 0.0;
    double gamma_ex = 0.0;
    double gamma_e = 0.0;
    double gamma_s = 1.0;
    double spread = 0.0;

    void validate() const;
};
double g2_fit_form(const IdenticalFitModel& model, bool cross, double tau);

/// Monte-Carlo average of g2_indep over sampled detunings delta_n ~ N(delta_n, spread_n).
/// With purcell_weighting the weights I_n and total decays are recomputed per
/// draw from g_n and kappa (not part of the closed form).
struct DiffusionSampling {
    std::size_t draws = 10000;
    std::uint64_t seed = 1;
    bool purcell_weighting = false;
    std::vector<double> couplings;  ///< g_n, needed with purcell_weighting
    double kappa = 0.0;
    double intrinsic_gamma = 0.0;   ///< radiative rate excluding Purcell, with purcell_weighting
};
struct MonteCarloCurve {
    std::vector<double> taus;
    std::vector<double> mean;
    std::vector<double> standard_error;
};
MonteCarloCurve g2_diffused_monte_carlo(const IndepEnsemble& ensemble, ChannelPair pair,
                                        const std::vector<double>& taus, const DiffusionSampling& sampling);

}  // namespace ringcqed
