#pragma once

// Emitter-only dynamics after adiabatic elimination of both cavity modes.
//
// In the standing-mode basis (frequencies +g_bs, -g_bs) each mode follows the
// emitters as a_k = sum_n c_nk sigma_n with c_nk = g_nk / (Delta_n - omega_k + i kappa/2).
// Substituting into the cavity terms gives a coherent exchange J and a
// collective dissipator Gamma acting on the emitters.

#include "ringcqed/dynamics.hpp"

namespace ringcqed {

struct EffectiveModel {
    Eigen::MatrixXcd coupling;  ///< N x 2 standing-mode couplings g_nk
    Eigen::MatrixXcd alpha;     ///< N x 2 adiabatic amplitudes c_nk
    Eigen::MatrixXcd J;         ///< Hermitian; H_eff contains J_mn sigma_m^dag sigma_n
    Eigen::MatrixXcd Gamma;     ///< Hermitian PSD; dissipator sum Gamma_mn (sigma_m rho sigma_n^dag - ...)
    std::vector<double> purcell;
    double kappa = 0.0;
    double mode_frequency[2] = {0.0, 0.0};
    /// Bookkeeping for validation studies: collective operators are divided by
    /// epsilon so that their intensities compare with <a^dag a> / epsilon^2.
    double epsilon = 1.0;
    int dissipation_exponent = 1;
};

EffectiveModel effective_couplings(const SystemConfig& config);

/// Copy with the off-diagonal entries of J and Gamma removed (independent emitters).
EffectiveModel without_cross_couplings(const EffectiveModel& model);

/// Two-mode emitter space used by the effective model (no cavity factors).
HilbertSpace effective_space(const SystemConfig& config);

/// Emitter-only Liouvillian: detunings, J, collective Gamma and the intrinsic
/// emitter channels of the configuration. Throws ModelError when Gamma has an
/// eigenvalue below -1e-12 * ||Gamma||.
Superoperator build_effective_liouvillian(const EffectiveModel& model, const SystemConfig& config,
                                          const HilbertSpace& space);

/// alpha_a = (alpha_1 + alpha_2)/sqrt2 and alpha_b = (alpha_1 - alpha_2)/sqrt2,
/// with epsilon alpha_k = sum_n c_nk sigma_n.
std::pair<Operator, Operator> collective_jump_ops(const EffectiveModel& model, const HilbertSpace& space);

/// Effective model with channels "a" and "b" bound to the collective operators.
CorrelationSystem prepare_effective_model(const EffectiveModel& model, const SystemConfig& config,
                                          const SteadyStateOptions& options = {});

CorrelationCurve g2_effective(const EffectiveModel& model, const SystemConfig& config, const std::string& x,
                              const std::string& y, const std::vector<double>& taus,
                              const OdeOptions& options = {});

/// Closed forms for g_bs = 0 in the gauge theta_n = arg(Delta_n + i kappa / 2):
/// Gamma'_mn = sqrt(Gamma_m Gamma_n) cos(phi_m - phi_n), J'_mn = (Delta_m + Delta_n) / (2 kappa) Gamma'_mn.
struct GaugedCouplings {
    Eigen::MatrixXcd J;
    Eigen::MatrixXcd Gamma;
};
GaugedCouplings gauge_fixed_couplings(const EffectiveModel& model, const SystemConfig& config);
GaugedCouplings closed_form_couplings(const SystemConfig& config);

}  // namespace ringcqed
