#pragma once

// Physical parameters, truncated Hilbert space and the full two-mode
// cavity-QED generator.
//
// All frequencies and rates are angular (rad/s) and all simulations run in
// the frame rotating at the cavity frequency, so emitters enter only through
// their detuning.

#include <optional>
#include <vector>

#include "ringcqed/common.hpp"
#include "ringcqed/superop.hpp"

namespace ringcqed {

struct EmitterParams {
    double delta = 0.0;       ///< emitter - cavity detuning
    double g = 0.0;           ///< coupling strength (>= 0; phase carried by phi)
    double phi = 0.0;         ///< coupling phase (rad)
    double gamma = 0.0;       ///< spontaneous emission e -> g
    double gamma_deph = 0.0;  ///< pure dephasing
    double gamma_ex = 0.0;    ///< incoherent pump g -> e
    double gamma_e = 0.0;     ///< e -> metastable shelf
    double gamma_s = 0.0;     ///< shelf -> g
};

struct CavityParams {
    double kappa_i = 0.0;
    double kappa_c = 0.0;
    double g_bs = 0.0;          ///< backscattering, real and non-negative
    double detuning_cav = 0.0;  ///< cavity offset; subtracted from every emitter detuning

    double kappa() const { return kappa_i + kappa_c; }
};

/// Undepleted-pump parametric drive between the signal mode `a` and the idler.
struct KerrParams {
    double g_kerr = 0.0;
    double omega_idler = 0.0;
    /// Mean pump field <a_-1>(t), linearly interpolated and zero outside the samples.
    std::vector<double> pump_times;
    std::vector<cplx> pump_field;

    cplx pump_at(double t) const;
    /// Parametric drive amplitude g_Kerr <a_-1>(t)^2.
    cplx drive_at(double t) const { const cplx f = pump_at(t); return g_kerr * f * f; }
};

struct SystemConfig {
    std::vector<EmitterParams> emitters;
    CavityParams cavity;
    std::optional<KerrParams> kerr;
    int fock_cutoff = 2;
    long dimension_cap = 4096;

    /// 3 when any emitter has a metastable shelf, else 2.
    int emitter_levels() const;
    /// Detuning of emitter n from the (possibly offset) cavity.
    double detuning(std::size_t n) const { return emitters[n].delta - cavity.detuning_cav; }
    /// Throws ValidationError naming the offending field.
    void validate() const;
};

enum class Mode { a, b, idler };
const char* mode_name(Mode m);

/// Emitter basis states.
enum class Level { ground = 0, excited = 1, shelf = 2 };

/// Tensor-product space ordered as: modes in the listed order, then emitters
/// by index. The leftmost factor is the most significant in the basis index.
class HilbertSpace {
public:
    HilbertSpace(std::vector<Mode> modes, int fock_cutoff, int n_emitters, int emitter_levels);

    Eigen::Index dim() const { return dim_; }
    const std::vector<Mode>& modes() const { return modes_; }
    int fock_cutoff() const { return cutoff_; }
    int n_emitters() const { return n_emitters_; }
    int emitter_levels() const { return levels_; }
    bool has_mode(Mode m) const;

    Operator identity() const { return identity_op(dim_); }
    /// Throws std::out_of_range if the mode is absent.
    const Operator& annihilation(Mode m) const;
    /// sigma_n = |g><e|_n
    const Operator& lowering(int n) const { return lowering_.at(static_cast<std::size_t>(n)); }
    /// |to><from|_n
    Operator transition(int n, Level to, Level from) const;
    Operator projector(int n, Level l) const { return transition(n, l, l); }

    /// Per basis state: photons in a and b plus excited emitters, minus idler
    /// photons. Conserved by every term of the model, including the parametric drive.
    std::vector<int> excitation_charges() const;

    /// Local factor dimensions in tensor order.
    std::vector<int> factor_dims() const;

private:
    Operator embed(const Eigen::MatrixXcd& local, std::size_t factor) const;

    std::vector<Mode> modes_;
    int cutoff_;
    int n_emitters_;
    int levels_;
    Eigen::Index dim_;
    std::vector<Operator> mode_ops_;
    std::vector<Operator> lowering_;
};

/// Dimension the space would have, without building it.
long estimate_dimension(const SystemConfig& config, const std::vector<Mode>& modes);

/// Throws CapacityError if the dimension exceeds config.dimension_cap.
HilbertSpace build_space(const SystemConfig& config, const std::vector<Mode>& modes);

/// Static Hamiltonian H_e + H_cav + H_int (+ idler frequency when the idler
/// mode is present). Terms referring to absent modes are dropped.
Operator build_hamiltonian(const SystemConfig& config, const HilbertSpace& space);

/// Jump operators with rates folded in (sqrt(rate) * op), in a fixed order.
std::vector<Operator> build_jump_operators(const SystemConfig& config, const HilbertSpace& space);

Superoperator build_liouvillian(const SystemConfig& config, const HilbertSpace& space);

/// Adds theta_n to every coupling phase. For a common shift with g_bs = 0
/// the result is unitarily equivalent (modes rephased a -> e^{-ic} a,
/// b -> e^{ic} b); otherwise it is a different model.
SystemConfig gauge_transform(const SystemConfig& config, const std::vector<double>& thetas);

/// Standing modes a1 = (e^{-i p} a + e^{i p} b)/sqrt2, a2 = (e^{-i p} a - e^{i p} b)/sqrt2
/// for reference phase p. With p = 0 they are the cavity eigenmodes at
/// frequencies +g_bs and -g_bs.
struct StandingModes {
    Operator a1;
    Operator a2;
    std::vector<cplx> g1;  ///< coupling of emitter n to a1 (H contains g1* sigma^dag a1 + h.c.)
    std::vector<cplx> g2;
    double omega1 = 0.0;
    double omega2 = 0.0;
};
StandingModes standing_mode_transform(const SystemConfig& config, const HilbertSpace& space,
                                      double reference_phase = 0.0);

/// kappa g^2 / (delta^2 + kappa^2 / 4)
double purcell_rate(double g, double delta, double kappa);

}  // namespace ringcqed
