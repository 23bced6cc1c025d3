#include "ringcqed/bosonic.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <unsupported/Eigen/MatrixFunctions>

namespace ringcqed {

QuadraticModel QuadraticModel::from_config(const SystemConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.emitters.size());
    QuadraticModel m;
    m.coupling.resize(n, 2);
    m.detuning.resize(n);
    m.decay.resize(n);
    m.pump.resize(n);
    m.g_bs = config.cavity.g_bs;
    m.kappa = config.cavity.kappa();
    const double r = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = config.emitters[static_cast<std::size_t>(i)];
        const std::string p = "emitters[" + std::to_string(i) + "]";
        if (e.gamma_deph != 0.0) throw ModelError(p + ": dephasing has no quadratic counterpart");
        if (e.gamma_e != 0.0 || e.gamma_s != 0.0) throw ModelError(p + ": shelving has no quadratic counterpart");
        m.coupling(i, 0) = r * e.g * std::exp(kI * e.phi);
        m.coupling(i, 1) = r * e.g * std::exp(-kI * e.phi);
        m.detuning(i) = config.detuning(static_cast<std::size_t>(i));
        m.decay(i) = e.gamma;
        m.pump(i) = e.gamma_ex;
    }
    return m;
}

Eigen::MatrixXcd QuadraticModel::hamiltonian() const {
    const Eigen::Index d = modes();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    h(0, 1) = h(1, 0) = g_bs;
    for (Eigen::Index n = 0; n < coupling.rows(); ++n) {
        h(n + 2, n + 2) = detuning(n);
        for (Eigen::Index k = 0; k < 2; ++k) {
            h(n + 2, k) = coupling(n, k);
            h(k, n + 2) = std::conj(coupling(n, k));
        }
    }
    return h;
}

Eigen::MatrixXcd QuadraticModel::drift() const {
    Eigen::MatrixXcd m = -kI * hamiltonian();
    m(0, 0) -= 0.5 * kappa;
    m(1, 1) -= 0.5 * kappa;
    for (Eigen::Index n = 0; n < coupling.rows(); ++n) m(n + 2, n + 2) -= 0.5 * (decay(n) - pump(n));
    return m;
}

ChainDecomposition qr_reduce(const Eigen::MatrixXcd& g, double rank_tolerance) {
    if (g.cols() != 2) throw std::invalid_argument("qr_reduce: coupling matrix must have two columns");
    ChainDecomposition out;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    out.q = qr.householderQ();
    out.r = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::HouseholderQR<Eigen::MatrixXcd> mirrored(g.conjugate());
    out.q_mirrored = mirrored.householderQ();
    out.r_mirrored = mirrored.matrixQR().triangularView<Eigen::Upper>();

    const double scale = g.cwiseAbs().maxCoeff();
    if (scale > 0.0) {
        out.rank = 1;
        if (g.rows() > 1 && std::abs(out.r(1, 1)) > rank_tolerance * scale) out.rank = 2;
    }
    out.shortened = out.rank < std::min<Eigen::Index>(g.rows(), 2);
    return out;
}

Eigen::MatrixXcd solve_lyapunov(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& q) {
    const Eigen::Index n = a.rows();
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a);
    const Eigen::MatrixXcd& u = schur.matrixU();
    const Eigen::MatrixXcd& t = schur.matrixT();
    const Eigen::MatrixXcd f = u.adjoint() * q * u;
    // T Y + Y T^dag = -F, solved column by column from the last one.
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        Eigen::VectorXcd rhs = -f.col(j);
        for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
        Eigen::MatrixXcd m = t;
        m.diagonal().array() += std::conj(t(j, j));
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(m(i, i)) == 0.0) throw ModelError("Lyapunov equation is singular (marginal drift)");
        y.col(j) = m.triangularView<Eigen::Upper>().solve(rhs);
    }
    return u * y * u.adjoint();
}

Eigen::MatrixXcd GaussianState::first_order(double tau) const {
    if (tau < 0.0) throw std::invalid_argument("first_order: tau must be non-negative");
    const Eigen::MatrixXcd prop = (drift * tau).exp();
    return covariance * prop.transpose();
}

GaussianState gaussian_steady_state(const QuadraticModel& model) {
    GaussianState s;
    s.drift = model.drift();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(s.drift, false);
    const double top = std::max(s.drift.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i).real() >= -1e-13 * top)
            throw ModelError("bosonic drift is not Hurwitz (pump at or above decay, or an undamped mode)");
    const Eigen::Index d = model.modes();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index n = 0; n < model.coupling.rows(); ++n) p(n + 2, n + 2) = model.pump(n);
    // d C / dt = conj(M) C + C M^T + P.
    const Eigen::MatrixXcd a = s.drift.conjugate();
    s.covariance = solve_lyapunov(a, p);
    s.covariance = 0.5 * (s.covariance + s.covariance.adjoint());
    const double pn = p.cwiseAbs().maxCoeff();
    const Eigen::MatrixXcd res = a * s.covariance + s.covariance * a.adjoint() + p;
    s.lyapunov_residual = pn > 0.0 ? res.cwiseAbs().maxCoeff() / pn : res.cwiseAbs().maxCoeff();
    return s;
}

G2Set gaussian_g2_all(const QuadraticModel& model, const std::vector<double>& taus) {
    for (std::size_t k = 0; k < taus.size(); ++k)
        if (taus[k] < 0.0 || (k > 0 && taus[k] < taus[k - 1]))
            throw std::invalid_argument("gaussian_g2: taus must be non-negative and non-decreasing");
    const GaussianState s = gaussian_steady_state(model);
    G2Set set;
    set.taus = taus;
    set.names = {"a", "b"};
    for (Eigen::Index i = 0; i < 2; ++i) {
        const double n = s.occupation(i);
        if (!(n > 1e-13 * std::max(s.covariance.cwiseAbs().maxCoeff(), 1e-300)) || n <= 0.0)
            throw NormalizationError("channel '" + set.names[static_cast<std::size_t>(i)] + "' has zero intensity");
        set.intensities.push_back(n);
    }
    set.raw.assign(2, std::vector<std::vector<double>>(2, std::vector<double>(taus.size(), 0.0)));
    for (std::size_t k = 0; k < taus.size(); ++k) {
        const Eigen::MatrixXcd g1 = s.first_order(taus[k]);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                set.raw[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)][k] =
                    set.intensities[static_cast<std::size_t>(x)] * set.intensities[static_cast<std::size_t>(y)] +
                    std::norm(g1(x, y));
    }
    return set;
}

CorrelationCurve gaussian_g2(const QuadraticModel& model, const std::string& x, const std::string& y,
                             const std::vector<double>& taus) {
    return gaussian_g2_all(model, taus).curve(x, y);
}

namespace {

double mirror_gap(const G2Set& set) {
    const auto aa = set.curve("a", "a");
    const auto bb = set.curve("b", "b");
    double gap = 0.0;
    for (std::size_t k = 0; k < aa.values.size(); ++k) gap = std::max(gap, std::abs(aa.values[k] - bb.values[k]));
    return gap;
}

}  // namespace

SpinBosonReport spin_vs_boson_compare(const SystemConfig& config, const std::vector<double>& taus,
                                      const OdeOptions& options) {
    const QuadraticModel model = QuadraticModel::from_config(config);
    SpinBosonReport rep;
    const CorrelationSystem sys = prepare_full_model(config);
    rep.spin = g2_all(sys, taus, options);
    rep.boson = gaussian_g2_all(model, taus);
    rep.spin_chirality = chirality_metric(rep.spin.curve("a", "b"));
    rep.boson_chirality = chirality_metric(rep.boson.curve("a", "b"));
    rep.spin_mirror_gap = mirror_gap(rep.spin);
    rep.boson_mirror_gap = mirror_gap(rep.boson);
    for (int i = 0; i < 2; ++i) {
        rep.spin_intensity[i] = rep.spin.intensities[static_cast<std::size_t>(i)];
        rep.boson_intensity[i] = rep.boson.intensities[static_cast<std::size_t>(i)];
    }
    return rep;
}

}  // namespace ringcqed
