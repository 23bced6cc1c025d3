#include "ringcqed/badcavity.hpp"

#include <cmath>
#include <sstream>

namespace ringcqed {

EffectiveModel effective_couplings(const SystemConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.emitters.size());
    EffectiveModel m;
    m.kappa = config.cavity.kappa();
    m.mode_frequency[0] = config.cavity.g_bs;
    m.mode_frequency[1] = -config.cavity.g_bs;
    m.coupling.resize(n, 2);
    m.alpha.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = config.emitters[static_cast<std::size_t>(i)];
        m.coupling(i, 0) = e.g * std::cos(e.phi);
        m.coupling(i, 1) = -kI * e.g * std::sin(e.phi);
        const double delta = config.detuning(static_cast<std::size_t>(i));
        for (int k = 0; k < 2; ++k) m.alpha(i, k) = m.coupling(i, k) / (delta - m.mode_frequency[k] + kI * m.kappa / 2.0);
        m.purcell.push_back(purcell_rate(e.g, delta, m.kappa));
    }
    m.J.resize(n, n);
    m.Gamma.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            cplx j = 0.0, g = 0.0;
            for (int k = 0; k < 2; ++k) {
                j += 0.5 * (std::conj(m.alpha(a, k)) * m.coupling(b, k) + m.alpha(b, k) * std::conj(m.coupling(a, k)));
                g += m.kappa * m.alpha(a, k) * std::conj(m.alpha(b, k));
            }
            m.J(a, b) = j;
            m.Gamma(a, b) = g;
        }
    return m;
}

EffectiveModel without_cross_couplings(const EffectiveModel& model) {
    EffectiveModel m = model;
    m.J = Eigen::MatrixXcd(model.J.diagonal().asDiagonal());
    m.Gamma = Eigen::MatrixXcd(model.Gamma.diagonal().asDiagonal());
    return m;
}

HilbertSpace effective_space(const SystemConfig& config) {
    config.validate();
    const long dim = static_cast<long>(std::pow(config.emitter_levels(), config.emitters.size()));
    if (dim > config.dimension_cap)
        throw CapacityError("emitter space dimension " + std::to_string(dim) + " exceeds cap", dim,
                            config.dimension_cap);
    return HilbertSpace({}, 1, static_cast<int>(config.emitters.size()), config.emitter_levels());
}

Superoperator build_effective_liouvillian(const EffectiveModel& model, const SystemConfig& config,
                                          const HilbertSpace& space) {
    const auto n = static_cast<Eigen::Index>(config.emitters.size());
    if (model.J.rows() != n || space.n_emitters() != n)
        throw std::invalid_argument("effective model and configuration disagree on emitter count");

    Operator h(space.dim(), space.dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Operator& s = space.lowering(static_cast<int>(i));
        h += config.detuning(static_cast<std::size_t>(i)) * (SparseMatrix(s.adjoint()) * s);
    }
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            if (model.J(a, b) != cplx(0.0))
                h += model.J(a, b) *
                     (SparseMatrix(space.lowering(static_cast<int>(a)).adjoint()) * space.lowering(static_cast<int>(b)));

    Superoperator l;
    l.hilbert_dim = space.dim();
    l.matrix = commutator_generator(h);

    // Collective dissipator from the eigen-decomposition of Gamma.
    const Eigen::MatrixXcd gamma = 0.5 * (model.Gamma + model.Gamma.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma);
    const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        double lambda = es.eigenvalues()(k);
        if (lambda < -1e-12 * scale) {
            std::ostringstream os;
            os << "collective dissipator is not positive semidefinite (eigenvalue " << lambda << ")";
            throw ModelError(os.str());
        }
        if (lambda <= 0.0) continue;
        Operator jump(space.dim(), space.dim());
        for (Eigen::Index m = 0; m < n; ++m)
            if (es.eigenvectors()(m, k) != cplx(0.0)) jump += es.eigenvectors()(m, k) * space.lowering(static_cast<int>(m));
        l.matrix += lindblad_dissipator(std::sqrt(lambda) * jump);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = config.emitters[static_cast<std::size_t>(i)];
        const int idx = static_cast<int>(i);
        const Operator& s = space.lowering(idx);
        if (e.gamma > 0.0) l.matrix += lindblad_dissipator(std::sqrt(e.gamma) * s);
        if (e.gamma_deph > 0.0) l.matrix += lindblad_dissipator(std::sqrt(e.gamma_deph) * (SparseMatrix(s.adjoint()) * s));
        if (e.gamma_ex > 0.0) l.matrix += lindblad_dissipator(std::sqrt(e.gamma_ex) * SparseMatrix(s.adjoint()));
        if (space.emitter_levels() == 3) {
            if (e.gamma_e > 0.0)
                l.matrix += lindblad_dissipator(std::sqrt(e.gamma_e) * space.transition(idx, Level::shelf, Level::excited));
            if (e.gamma_s > 0.0)
                l.matrix += lindblad_dissipator(std::sqrt(e.gamma_s) * space.transition(idx, Level::ground, Level::shelf));
        }
    }
    l.matrix.prune(cplx(0.0));
    l.matrix.makeCompressed();
    l.charges = space.excitation_charges();
    return l;
}

std::pair<Operator, Operator> collective_jump_ops(const EffectiveModel& model, const HilbertSpace& space) {
    Operator a1(space.dim(), space.dim());
    Operator a2(space.dim(), space.dim());
    for (Eigen::Index i = 0; i < model.alpha.rows(); ++i) {
        const Operator& s = space.lowering(static_cast<int>(i));
        a1 += (model.alpha(i, 0) / model.epsilon) * s;
        a2 += (model.alpha(i, 1) / model.epsilon) * s;
    }
    const double r = 1.0 / std::sqrt(2.0);
    Operator aa = r * (a1 + a2);
    Operator ab = r * (a1 - a2);
    aa.prune(cplx(0.0));
    ab.prune(cplx(0.0));
    return {aa, ab};
}

CorrelationSystem prepare_effective_model(const EffectiveModel& model, const SystemConfig& config,
                                          const SteadyStateOptions& options) {
    const HilbertSpace space = effective_space(config);
    CorrelationSystem sys;
    sys.liouvillian = build_effective_liouvillian(model, config, space);
    sys.steady = steady_state(sys.liouvillian, options);
    auto [aa, ab] = collective_jump_ops(model, space);
    sys.names = {"a", "b"};
    sys.channels = {aa, ab};
    return sys;
}

CorrelationCurve g2_effective(const EffectiveModel& model, const SystemConfig& config, const std::string& x,
                              const std::string& y, const std::vector<double>& taus, const OdeOptions& options) {
    return g2(prepare_effective_model(model, config), x, y, taus, options);
}

namespace {

std::vector<double> gauge_angles(const SystemConfig& config) {
    const double kappa = config.cavity.kappa();
    std::vector<double> theta;
    for (std::size_t i = 0; i < config.emitters.size(); ++i)
        theta.push_back(std::arg(cplx(config.detuning(i), kappa / 2.0)));
    return theta;
}

}  // namespace

GaugedCouplings gauge_fixed_couplings(const EffectiveModel& model, const SystemConfig& config) {
    const auto theta = gauge_angles(config);
    GaugedCouplings out{model.J, model.Gamma};
    for (Eigen::Index m = 0; m < model.J.rows(); ++m)
        for (Eigen::Index n = 0; n < model.J.cols(); ++n) {
            const double d = theta[static_cast<std::size_t>(m)] - theta[static_cast<std::size_t>(n)];
            out.Gamma(m, n) *= std::exp(kI * d);
            out.J(m, n) *= std::exp(-kI * d);
        }
    return out;
}

GaugedCouplings closed_form_couplings(const SystemConfig& config) {
    const auto n = static_cast<Eigen::Index>(config.emitters.size());
    const double kappa = config.cavity.kappa();
    GaugedCouplings out{Eigen::MatrixXcd(n, n), Eigen::MatrixXcd(n, n)};
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto& em = config.emitters[static_cast<std::size_t>(m)];
            const auto& ek = config.emitters[static_cast<std::size_t>(k)];
            const double dm = config.detuning(static_cast<std::size_t>(m));
            const double dk = config.detuning(static_cast<std::size_t>(k));
            const double gamma = std::sqrt(purcell_rate(em.g, dm, kappa) * purcell_rate(ek.g, dk, kappa)) *
                                 std::cos(em.phi - ek.phi);
            out.Gamma(m, k) = gamma;
            out.J(m, k) = (dm + dk) / (2.0 * kappa) * gamma;
        }
    return out;
}

}  // namespace ringcqed
