#include "ringcqed/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ringcqed {

cplx KerrParams::pump_at(double t) const {
    if (pump_times.empty() || t < pump_times.front() || t > pump_times.back()) return 0.0;
    auto it = std::upper_bound(pump_times.begin(), pump_times.end(), t);
    if (it == pump_times.end()) return pump_field.back();
    const auto hi = static_cast<std::size_t>(it - pump_times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - pump_times[lo]) / (pump_times[hi] - pump_times[lo]);
    return (1.0 - w) * pump_field[lo] + w * pump_field[hi];
}

int SystemConfig::emitter_levels() const {
    for (const auto& e : emitters)
        if (e.gamma_e > 0.0 || e.gamma_s > 0.0) return 3;
    return 2;
}

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field, what);
}

void require_rate(double v, const std::string& field) {
    require(std::isfinite(v), field, "must be finite");
    require(v >= 0.0, field, "must be non-negative");
}

}  // namespace

void SystemConfig::validate() const {
    require(!emitters.empty() || kerr.has_value(), "emitters", "at least one emitter is required");
    for (std::size_t n = 0; n < emitters.size(); ++n) {
        const auto& e = emitters[n];
        const std::string p = "emitters[" + std::to_string(n) + "].";
        require(std::isfinite(e.delta), p + "delta", "must be finite");
        require(std::isfinite(e.phi), p + "phi", "must be finite");
        require_rate(e.g, p + "g");
        require_rate(e.gamma, p + "gamma");
        require_rate(e.gamma_deph, p + "gamma_deph");
        require_rate(e.gamma_ex, p + "gamma_ex");
        require_rate(e.gamma_e, p + "gamma_e");
        require_rate(e.gamma_s, p + "gamma_s");
        require(!(e.gamma_e > 0.0 && e.gamma_s <= 0.0), p + "gamma_s",
                "must be positive when gamma_e > 0 (shelf would trap population)");
    }
    require_rate(cavity.kappa_i, "cavity.kappa_i");
    require_rate(cavity.kappa_c, "cavity.kappa_c");
    require(cavity.kappa() > 0.0, "cavity.kappa_c", "total kappa must be positive");
    require_rate(cavity.g_bs, "cavity.g_bs");
    require(std::isfinite(cavity.detuning_cav), "cavity.detuning_cav", "must be finite");
    require(fock_cutoff >= 1, "numerics.fock_cutoff", "must be >= 1");
    require(dimension_cap >= 1, "numerics.dimension_cap", "must be >= 1");
    if (kerr) {
        require(std::isfinite(kerr->g_kerr), "kerr.g_kerr", "must be finite");
        require(std::isfinite(kerr->omega_idler), "kerr.omega_idler", "must be finite");
        require(kerr->pump_times.size() == kerr->pump_field.size(), "kerr.pump",
                "times and field samples differ in length");
        for (std::size_t i = 0; i < kerr->pump_field.size(); ++i) {
            require(std::isfinite(kerr->pump_field[i].real()) && std::isfinite(kerr->pump_field[i].imag()),
                    "kerr.pump[" + std::to_string(i) + "]", "must be finite");
            if (i > 0)
                require(kerr->pump_times[i] > kerr->pump_times[i - 1],
                        "kerr.pump[" + std::to_string(i) + "]", "times must increase");
        }
    }
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::a: return "a";
        case Mode::b: return "b";
        case Mode::idler: return "idler";
    }
    return "?";
}

HilbertSpace::HilbertSpace(std::vector<Mode> modes, int fock_cutoff, int n_emitters, int emitter_levels)
    : modes_(std::move(modes)), cutoff_(fock_cutoff), n_emitters_(n_emitters), levels_(emitter_levels) {
    if (cutoff_ < 1) throw std::invalid_argument("fock cutoff must be >= 1");
    if (levels_ != 2 && levels_ != 3) throw std::invalid_argument("emitters have 2 or 3 levels");
    for (std::size_t i = 0; i < modes_.size(); ++i)
        for (std::size_t j = i + 1; j < modes_.size(); ++j)
            if (modes_[i] == modes_[j]) throw std::invalid_argument("duplicate mode");
    dim_ = 1;
    for (int d : factor_dims()) dim_ *= d;

    const int nf = cutoff_ + 1;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(nf, nf);
    for (int n = 1; n < nf; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    for (std::size_t m = 0; m < modes_.size(); ++m) mode_ops_.push_back(embed(a, m));

    Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(levels_, levels_);
    sigma(static_cast<int>(Level::ground), static_cast<int>(Level::excited)) = 1.0;
    for (int n = 0; n < n_emitters_; ++n) lowering_.push_back(embed(sigma, modes_.size() + n));
}

std::vector<int> HilbertSpace::factor_dims() const {
    std::vector<int> dims(modes_.size(), cutoff_ + 1);
    dims.insert(dims.end(), static_cast<std::size_t>(n_emitters_), levels_);
    return dims;
}

std::vector<int> HilbertSpace::excitation_charges() const {
    const auto dims = factor_dims();
    std::vector<int> weight(dims.size(), 0);
    for (std::size_t m = 0; m < modes_.size(); ++m) weight[m] = modes_[m] == Mode::idler ? -1 : 1;
    std::vector<int> q(static_cast<std::size_t>(dim_), 0);
    for (Eigen::Index idx = 0; idx < dim_; ++idx) {
        Eigen::Index rest = idx;
        int charge = 0;
        for (std::size_t f = dims.size(); f-- > 0;) {
            const int digit = static_cast<int>(rest % dims[f]);
            rest /= dims[f];
            if (f < modes_.size())
                charge += weight[f] * digit;
            else if (digit == static_cast<int>(Level::excited))
                charge += 1;
        }
        q[static_cast<std::size_t>(idx)] = charge;
    }
    return q;
}

bool HilbertSpace::has_mode(Mode m) const {
    return std::find(modes_.begin(), modes_.end(), m) != modes_.end();
}

const Operator& HilbertSpace::annihilation(Mode m) const {
    auto it = std::find(modes_.begin(), modes_.end(), m);
    if (it == modes_.end()) throw std::out_of_range(std::string("mode not in space: ") + mode_name(m));
    return mode_ops_[static_cast<std::size_t>(it - modes_.begin())];
}

Operator HilbertSpace::transition(int n, Level to, Level from) const {
    if (n < 0 || n >= n_emitters_) throw std::out_of_range("emitter index");
    if (static_cast<int>(to) >= levels_ || static_cast<int>(from) >= levels_)
        throw std::out_of_range("level not present in two-level emitter");
    Eigen::MatrixXcd local = Eigen::MatrixXcd::Zero(levels_, levels_);
    local(static_cast<int>(to), static_cast<int>(from)) = 1.0;
    return embed(local, modes_.size() + static_cast<std::size_t>(n));
}

Operator HilbertSpace::embed(const Eigen::MatrixXcd& local, std::size_t factor) const {
    const auto dims = factor_dims();
    Eigen::Index left = 1;
    Eigen::Index right = 1;
    for (std::size_t i = 0; i < factor; ++i) left *= dims[i];
    for (std::size_t i = factor + 1; i < dims.size(); ++i) right *= dims[i];
    return kron(kron(identity_op(left), to_sparse(local)), identity_op(right));
}

long estimate_dimension(const SystemConfig& config, const std::vector<Mode>& modes) {
    long d = 1;
    for (std::size_t i = 0; i < modes.size(); ++i) d *= config.fock_cutoff + 1;
    for (std::size_t n = 0; n < config.emitters.size(); ++n) d *= config.emitter_levels();
    return d;
}

HilbertSpace build_space(const SystemConfig& config, const std::vector<Mode>& modes) {
    config.validate();
    const long d = estimate_dimension(config, modes);
    if (d > config.dimension_cap)
        throw CapacityError("Hilbert dimension " + std::to_string(d) + " exceeds cap " +
                                std::to_string(config.dimension_cap),
                            d, config.dimension_cap);
    return HilbertSpace(modes, config.fock_cutoff, static_cast<int>(config.emitters.size()),
                        config.emitter_levels());
}

Operator build_hamiltonian(const SystemConfig& config, const HilbertSpace& space) {
    Operator h(space.dim(), space.dim());
    const bool has_a = space.has_mode(Mode::a);
    const bool has_b = space.has_mode(Mode::b);
    for (int n = 0; n < space.n_emitters(); ++n) {
        const auto& e = config.emitters[static_cast<std::size_t>(n)];
        const Operator& s = space.lowering(n);
        const Operator sd = s.adjoint();
        h += config.detuning(static_cast<std::size_t>(n)) * (sd * s);
        const double c = e.g / std::sqrt(2.0);
        if (has_a) {
            const Operator coup = c * std::exp(kI * e.phi) * (sd * space.annihilation(Mode::a));
            h += coup;
            h += Operator(coup.adjoint());
        }
        if (has_b) {
            const Operator coup = c * std::exp(-kI * e.phi) * (sd * space.annihilation(Mode::b));
            h += coup;
            h += Operator(coup.adjoint());
        }
    }
    if (has_a && has_b && config.cavity.g_bs != 0.0) {
        const Operator& a = space.annihilation(Mode::a);
        const Operator& b = space.annihilation(Mode::b);
        const Operator adb = Operator(a.adjoint()) * b;
        h += config.cavity.g_bs * adb;
        h += config.cavity.g_bs * Operator(adb.adjoint());
    }
    if (space.has_mode(Mode::idler) && config.kerr) {
        const Operator& i = space.annihilation(Mode::idler);
        h += config.kerr->omega_idler * (Operator(i.adjoint()) * i);
    }
    h.prune(cplx(0.0));
    return h;
}

std::vector<Operator> build_jump_operators(const SystemConfig& config, const HilbertSpace& space) {
    std::vector<Operator> jumps;
    const double kappa = config.cavity.kappa();
    for (Mode m : space.modes()) jumps.push_back(std::sqrt(kappa) * space.annihilation(m));
    for (int n = 0; n < space.n_emitters(); ++n) {
        const auto& e = config.emitters[static_cast<std::size_t>(n)];
        const Operator& s = space.lowering(n);
        if (e.gamma > 0.0) jumps.push_back(std::sqrt(e.gamma) * s);
        if (e.gamma_deph > 0.0) jumps.push_back(std::sqrt(e.gamma_deph) * (Operator(s.adjoint()) * s));
        if (e.gamma_ex > 0.0) jumps.push_back(std::sqrt(e.gamma_ex) * Operator(s.adjoint()));
        if (space.emitter_levels() == 3) {
            if (e.gamma_e > 0.0)
                jumps.push_back(std::sqrt(e.gamma_e) * space.transition(n, Level::shelf, Level::excited));
            if (e.gamma_s > 0.0)
                jumps.push_back(std::sqrt(e.gamma_s) * space.transition(n, Level::ground, Level::shelf));
        }
    }
    return jumps;
}

Superoperator build_liouvillian(const SystemConfig& config, const HilbertSpace& space) {
    Superoperator l;
    l.hilbert_dim = space.dim();
    l.matrix = commutator_generator(build_hamiltonian(config, space));
    for (const auto& j : build_jump_operators(config, space)) l.matrix += lindblad_dissipator(j);
    l.matrix.prune(cplx(0.0));
    l.matrix.makeCompressed();
    l.charges = space.excitation_charges();
    return l;
}

SystemConfig gauge_transform(const SystemConfig& config, const std::vector<double>& thetas) {
    if (thetas.size() != config.emitters.size())
        throw std::invalid_argument("gauge_transform: one phase per emitter required");
    SystemConfig out = config;
    for (std::size_t n = 0; n < thetas.size(); ++n) out.emitters[n].phi += thetas[n];
    return out;
}

StandingModes standing_mode_transform(const SystemConfig& config, const HilbertSpace& space,
                                      double reference_phase) {
    StandingModes sm;
    const Operator& a = space.annihilation(Mode::a);
    const Operator& b = space.annihilation(Mode::b);
    const double r = 1.0 / std::sqrt(2.0);
    const cplx em = std::exp(-kI * reference_phase);
    const cplx ep = std::exp(kI * reference_phase);
    sm.a1 = r * (em * a + ep * b);
    sm.a2 = r * (em * a - ep * b);
    for (const auto& e : config.emitters) {
        sm.g1.emplace_back(e.g * std::cos(e.phi + reference_phase));
        sm.g2.push_back(-kI * e.g * std::sin(e.phi + reference_phase));
    }
    sm.omega1 = config.cavity.g_bs;
    sm.omega2 = -config.cavity.g_bs;
    return sm;
}

double purcell_rate(double g, double delta, double kappa) {
    return kappa * g * g / (delta * delta + 0.25 * kappa * kappa);
}

}  // namespace ringcqed
