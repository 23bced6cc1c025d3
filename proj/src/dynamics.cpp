#include "ringcqed/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include <Eigen/SparseLU>
#ifdef RINGCQED_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "ringcqed/parallel.hpp"

namespace ringcqed {

TimeDependentGenerator TimeDependentGenerator::from(const Superoperator& l) {
    TimeDependentGenerator g;
    g.constant = l.matrix;
    g.hilbert_dim = l.hilbert_dim;
    return g;
}

void TimeDependentGenerator::apply(double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) const {
    out.noalias() = constant * y;
    for (const auto& term : terms) {
        const cplx c = term.coefficient(t);
        if (c != cplx(0.0)) out.noalias() += c * (term.matrix * y);
    }
}

namespace {

// Generator restricted to the balanced sector whenever the given inputs lie in it.
class WorkingSpace {
public:
    WorkingSpace(const Superoperator& l, const Eigen::MatrixXcd& inputs) : full_(l) {
        sector_ = balanced_sector(l);
        if (sector_ && inputs.size() > 0) {
            const double total = inputs.squaredNorm();
            const double inside = sector_->extract(inputs).squaredNorm();
            if (total - inside > 1e-28 * std::max(total, 1e-300)) sector_.reset();
        }
    }
    WorkingSpace(const WorkingSpace&) = delete;
    WorkingSpace& operator=(const WorkingSpace&) = delete;

    const SparseMatrix& matrix() const { return sector_ ? sector_->matrix : full_.matrix; }
    Eigen::MatrixXcd reduce(const Eigen::MatrixXcd& y) const { return sector_ ? sector_->extract(y) : y; }
    Eigen::VectorXcd reduce_vector(const Eigen::VectorXcd& y) const { return sector_ ? sector_->extract(y) : y; }
    Eigen::RowVectorXcd reduce(const Eigen::RowVectorXcd& w) const {
        return sector_ ? sector_->extract_functional(w) : w;
    }
    Eigen::VectorXcd expand(const Eigen::VectorXcd& v) const { return sector_ ? sector_->embed(v) : v; }
    bool reduced() const { return sector_.has_value(); }

private:
    const Superoperator& full_;
    std::optional<Sector> sector_;
};

// Row 0 (the equation for rho(0,0), always present in the working space)
// replaced by the scaled trace functional, so that L x = 0 and Tr x = 1 become
// one square system.
SparseMatrix bordered_system(const SparseMatrix& m, const Eigen::RowVectorXcd& trace, double scale) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(m.nonZeros() + trace.size()));
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            if (it.row() != 0) trips.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < trace.size(); ++i)
        if (trace(i) != cplx(0.0)) trips.emplace_back(0, i, scale * trace(i));
    SparseMatrix a(m.rows(), m.cols());
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    return a;
}

SteadyState finish(const Superoperator& l, Eigen::VectorXcd x, const std::string& method, double gap) {
    const Eigen::Index d = l.hilbert_dim;
    const cplx tr = trace_functional(d) * x;
    x /= tr;
    SteadyState ss;
    ss.rho = unvec(x, d);
    ss.rho = 0.5 * (ss.rho + ss.rho.adjoint()).eval();
    ss.vec = vec(ss.rho);
    const double scale = std::max(max_abs(l.matrix), 1e-300);
    ss.residual = (l.matrix * ss.vec).norm() / (scale * std::max(ss.vec.norm(), 1e-300));
    ss.gap_estimate = gap;
    ss.method = method;
    return ss;
}

std::vector<Eigen::VectorXcd> dense_null_space(const SparseMatrix& m) {
    const Eigen::MatrixXcd dense(m);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(dense);
    lu.setThreshold(1e-10);
    std::vector<Eigen::VectorXcd> basis;
    if (lu.dimensionOfKernel() == 0) return basis;
    const Eigen::MatrixXcd kernel = lu.kernel();
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) basis.emplace_back(kernel.col(c));
    return basis;
}

SteadyState by_propagation(const Superoperator& l, const SteadyStateOptions& options) {
    const Eigen::Index d = l.hilbert_dim;
    double slowest = 0.0;
    for (Eigen::Index i = 0; i < l.matrix.rows(); ++i) {
        const double r = std::abs(l.matrix.coeff(i, i).real());
        if (r > 0.0 && (slowest == 0.0 || r < slowest)) slowest = r;
    }
    if (slowest == 0.0) throw DegenerateSteadyStateError("Liouvillian has no decay", {});
    const double chunk = 10.0 / slowest;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
    const double scale = max_abs(l.matrix);
    for (int iter = 0; iter < 200; ++iter) {
        auto traj = evolve(l, rho, {chunk}, options.ode);
        rho = traj.states.back();
        const Eigen::VectorXcd v = vec(rho);
        if ((l.matrix * v).norm() < 1e-10 * scale * v.norm()) return finish(l, v, "propagation", 0.0);
    }
    throw StiffnessError("steady state by propagation did not converge");
}

}  // namespace

SteadyState steady_state(const Superoperator& l, const SteadyStateOptions& options) {
    const Eigen::Index d = l.hilbert_dim;
    // Populations always lie in the balanced sector.
    const WorkingSpace ws(l, vec(Eigen::MatrixXcd::Identity(d, d)));
    const SparseMatrix& m = ws.matrix();
    const Eigen::Index n = m.rows();
    const double scale = std::max(max_abs(l.matrix), 1e-300);
    const SparseMatrix a = bordered_system(m, ws.reduce(trace_functional(d)), scale);

#ifdef RINGCQED_HAVE_UMFPACK
    Eigen::UmfPackLU<SparseMatrix> lu(a);
#else
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu(a);
#endif
    const bool factored = lu.info() == Eigen::Success;
    bool ok = factored;
    Eigen::VectorXcd x;
    double gap = 0.0;
    if (ok) {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
        rhs(0) = scale;
        x = lu.solve(rhs);
        ok = lu.info() == Eigen::Success && x.allFinite();
        if (ok) {
            // Inverse iteration for the smallest singular direction of the bordered system.
            Eigen::VectorXcd v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v(i) = 1.0 + 0.5 * cplx(std::sin(1.0 + double(i)), std::cos(3.0 * double(i)));
            v.normalize();
            double growth = 0.0;
            for (int it = 0; it < 6; ++it) {
                Eigen::VectorXcd w = lu.solve(v);
                growth = w.norm();
                if (!std::isfinite(growth) || growth == 0.0) break;
                v = w / growth;
            }
            gap = std::isfinite(growth) && growth > 0.0 ? 1.0 / (growth * scale) : 0.0;
            ok = gap >= options.degeneracy_threshold;
        }
    }
    if (ok) {
        SteadyState ss = finish(l, ws.expand(x), ws.reduced() ? "sparse-lu (balanced sector)" : "sparse-lu", gap);
        if (ss.residual < 1e-8) return ss;
    }

    if (n <= options.dense_limit) {
        auto basis = dense_null_space(m);
        for (auto& v : basis) v = ws.expand(v);
        if (basis.size() == 1) return finish(l, basis.front(), "dense-null-space", gap);
        std::ostringstream os;
        os << "steady state is not unique: null space of dimension " << basis.size();
        throw DegenerateSteadyStateError(os.str(), std::move(basis));
    }
    if (factored && gap < options.degeneracy_threshold)
        throw DegenerateSteadyStateError("steady state is not unique (vanishing spectral gap estimate)", {});
    return by_propagation(l, options);
}

double dense_spectral_gap(const Superoperator& l, double zero_tolerance) {
    const Eigen::MatrixXcd dense(l.matrix);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(dense, false);
    const double scale = std::max(max_abs(l.matrix), 1e-300);
    double gap = -1.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const cplx ev = es.eigenvalues()(i);
        if (std::abs(ev) <= zero_tolerance * scale) continue;
        const double r = std::abs(ev.real());
        if (gap < 0.0 || r < gap) gap = r;
    }
    return std::max(gap, 0.0);
}

namespace {

Trajectory run_evolution(const OdeRhs& rhs, Eigen::Index d, const Eigen::MatrixXcd& rho0, double t0,
                         const std::vector<double>& times, const OdeOptions& options) {
    Trajectory traj;
    traj.times = times;
    traj.states.resize(times.size());
    const Eigen::RowVectorXcd tr = trace_functional(d);
    const cplx tr0 = rho0.trace();
    traj.stats = integrate(rhs, t0, vec(rho0), times,
                           [&](std::size_t i, double, const Eigen::MatrixXcd& y) {
                               const cplx t = tr * y.col(0);
                               traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(t - tr0));
                               Eigen::MatrixXcd rho = unvec(y.col(0), d);
                               if (std::abs(t) > 0.0) rho *= tr0 / t;
                               traj.states[i] = std::move(rho);
                           },
                           options);
    return traj;
}

}  // namespace

Trajectory evolve(const Superoperator& l, const Eigen::MatrixXcd& rho0, const std::vector<double>& times,
                  const OdeOptions& options) {
    const Eigen::VectorXcd v0 = vec(rho0);
    const WorkingSpace ws(l, v0);
    if (!ws.reduced()) {
        const OdeRhs rhs = [&](double, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) { out.noalias() = l.matrix * y; };
        return run_evolution(rhs, l.hilbert_dim, rho0, 0.0, times, options);
    }
    const Eigen::Index d = l.hilbert_dim;
    Trajectory traj;
    traj.times = times;
    traj.states.resize(times.size());
    const Eigen::RowVectorXcd tr = ws.reduce(trace_functional(d));
    const cplx tr0 = rho0.trace();
    const SparseMatrix& m = ws.matrix();
    const OdeRhs rhs = [&](double, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) { out.noalias() = m * y; };
    traj.stats = integrate(rhs, 0.0, ws.reduce_vector(v0), times,
                           [&](std::size_t i, double, const Eigen::MatrixXcd& y) {
                               const cplx t = tr * y.col(0);
                               traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(t - tr0));
                               Eigen::MatrixXcd rho = unvec(ws.expand(y.col(0)), d);
                               if (std::abs(t) > 0.0) rho *= tr0 / t;
                               traj.states[i] = std::move(rho);
                           },
                           options);
    return traj;
}

Trajectory evolve(const TimeDependentGenerator& l, const Eigen::MatrixXcd& rho0, double t0,
                  const std::vector<double>& times, const OdeOptions& options) {
    const OdeRhs rhs = [&](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) { l.apply(t, y, out); };
    return run_evolution(rhs, l.hilbert_dim, rho0, t0, times, options);
}

cplx expectation(const Operator& o, const Eigen::MatrixXcd& rho) {
    cplx acc = 0.0;
    for (Eigen::Index k = 0; k < o.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(o, k); it; ++it) acc += it.value() * rho(it.col(), it.row());
    return acc;
}

std::vector<std::vector<std::vector<cplx>>> regression(const Superoperator& l, const Eigen::VectorXcd& rho,
                                                       const std::vector<Operator>& jumps,
                                                       const std::vector<Operator>& observables,
                                                       const std::vector<double>& taus,
                                                       const OdeOptions& options) {
    const Eigen::Index d = l.hilbert_dim;
    const Eigen::RowVectorXcd tr = trace_functional(d);
    Eigen::MatrixXcd y0(d * d, static_cast<Eigen::Index>(jumps.size()));
    std::vector<cplx> norms(jumps.size(), 1.0);
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        y0.col(c) = sandwich(jumps[i], jumps[i]) * rho;
        // Propagate unit-trace columns so the absolute tolerance is meaningful.
        const cplx t = tr * y0.col(c);
        if (std::abs(t) > 1e-300) norms[i] = t;
        y0.col(c) /= norms[i];
    }
    const WorkingSpace ws(l, y0);
    std::vector<Eigen::RowVectorXcd> w;
    for (const auto& o : observables) w.push_back(ws.reduce(Eigen::RowVectorXcd(expectation_functional(o))));

    std::vector<std::vector<std::vector<cplx>>> out(
        jumps.size(), std::vector<std::vector<cplx>>(observables.size(), std::vector<cplx>(taus.size())));
    const SparseMatrix& m = ws.matrix();
    const OdeRhs rhs = [&](double, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& res) { res.noalias() = m * y; };
    integrate(rhs, 0.0, ws.reduce(y0), taus,
              [&](std::size_t k, double, const Eigen::MatrixXcd& y) {
                  for (std::size_t j = 0; j < w.size(); ++j) {
                      const Eigen::RowVectorXcd proj = w[j] * y;
                      for (std::size_t i = 0; i < jumps.size(); ++i)
                          out[i][j][k] = proj(static_cast<Eigen::Index>(i)) * norms[i];
                  }
              },
              options);
    return out;
}

std::vector<cplx> two_time_correlation(const Superoperator& l, const Eigen::VectorXcd& rho, const Operator& jump_x,
                                       const Operator& obs_y, const std::vector<double>& taus,
                                       const OdeOptions& options) {
    return regression(l, rho, {jump_x}, {obs_y}, taus, options)[0][0];
}

std::size_t CorrelationSystem::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("unknown channel '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

double CorrelationSystem::intensity(const std::string& name) const {
    const Operator& c = channels[index(name)];
    return expectation(SparseMatrix(c.adjoint()) * c, steady.rho).real();
}

CorrelationSystem prepare_full_model(const SystemConfig& config, const SteadyStateOptions& options) {
    const HilbertSpace space = build_space(config, {Mode::a, Mode::b});
    CorrelationSystem sys;
    sys.liouvillian = build_liouvillian(config, space);
    sys.steady = steady_state(sys.liouvillian, options);
    sys.names = {"a", "b"};
    sys.channels = {space.annihilation(Mode::a), space.annihilation(Mode::b)};
    return sys;
}

namespace {

constexpr double kMinIntensity = 1e-13;

double checked_intensity(const CorrelationSystem& sys, const std::string& name) {
    const double i = sys.intensity(name);
    if (!(i > kMinIntensity))
        throw NormalizationError("channel '" + name + "' has vanishing steady-state intensity");
    return i;
}

std::vector<Operator> number_operators(const std::vector<Operator>& ops) {
    std::vector<Operator> out;
    for (const auto& c : ops) out.push_back(SparseMatrix(c.adjoint()) * c);
    return out;
}

}  // namespace

G2Set g2_all(const CorrelationSystem& sys, const std::vector<double>& taus, const OdeOptions& options) {
    for (std::size_t k = 0; k < taus.size(); ++k)
        if (taus[k] < 0.0 || (k > 0 && taus[k] < taus[k - 1]))
            throw std::invalid_argument("g2: delays must be non-negative and non-decreasing");
    G2Set set;
    set.taus = taus;
    set.names = sys.names;
    for (const auto& n : sys.names) set.intensities.push_back(checked_intensity(sys, n));
    set.nonstationary = sys.steady.residual > 1e-8;
    const auto values =
        regression(sys.liouvillian, sys.steady.vec, sys.channels, number_operators(sys.channels), taus, options);
    set.raw.assign(sys.names.size(), std::vector<std::vector<double>>(sys.names.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = 0; j < values[i].size(); ++j)
            for (const cplx& v : values[i][j]) set.raw[i][j].push_back(v.real());
    // At zero delay both orderings are the same moment <x^dag y^dag y x>.
    if (!taus.empty() && taus.front() == 0.0)
        for (std::size_t i = 0; i < set.raw.size(); ++i)
            for (std::size_t j = i + 1; j < set.raw.size(); ++j) {
                const double m = 0.5 * (set.raw[i][j][0] + set.raw[j][i][0]);
                set.raw[i][j][0] = set.raw[j][i][0] = m;
            }
    return set;
}

CorrelationCurve G2Set::curve(const std::string& x, const std::string& y) const {
    auto find = [&](const std::string& n) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) throw std::invalid_argument("unknown channel '" + n + "'");
        return static_cast<std::size_t>(it - names.begin());
    };
    const std::size_t ix = find(x);
    const std::size_t iy = find(y);
    const double norm = intensities[ix] * intensities[iy];
    CorrelationCurve c;
    c.order = 2;
    c.channels = {x, y};
    c.normalization = norm;
    c.nonstationary = nonstationary;
    const std::size_t n = taus.size();
    const bool has_zero = n > 0 && taus.front() == 0.0;
    // Negative delays from the exchanged channel pair, most negative first.
    for (std::size_t k = n; k-- > (has_zero ? 1u : 0u);) {
        c.taus.push_back(-taus[k]);
        c.values.push_back(raw[iy][ix][k] / norm);
    }
    for (std::size_t k = 0; k < n; ++k) {
        c.taus.push_back(taus[k]);
        c.values.push_back(raw[ix][iy][k] / norm);
    }
    return c;
}

double G2Set::at_zero(const std::string& x, const std::string& y) const {
    if (taus.empty() || taus.front() != 0.0) throw std::invalid_argument("grid does not contain tau = 0");
    const auto c = curve(x, y);
    const auto it = std::find(c.taus.begin(), c.taus.end(), 0.0);
    return c.values[static_cast<std::size_t>(it - c.taus.begin())];
}

CorrelationCurve g2(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                    const std::vector<double>& taus, const OdeOptions& options) {
    return g2_all(sys, taus, options).curve(x, y);
}

CorrelationCurve g2(const SystemConfig& config, const std::string& x, const std::string& y,
                    const std::vector<double>& taus, const OdeOptions& options) {
    return g2(prepare_full_model(config), x, y, taus, options);
}

Correlation2D g3_nested(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                        const std::string& z, const std::vector<double>& tau1s, const std::vector<double>& tau2s,
                        const OdeOptions& options) {
    const double ix = checked_intensity(sys, x);
    const double iy = checked_intensity(sys, y);
    const double iz = checked_intensity(sys, z);
    const Operator& cx = sys.channels[sys.index(x)];
    const Operator& cy = sys.channels[sys.index(y)];
    const Operator& cz = sys.channels[sys.index(z)];
    const auto& l = sys.liouvillian;
    const Eigen::Index d = l.hilbert_dim;
    const Eigen::RowVectorXcd tr = trace_functional(d);

    // First leg: x rho x^dag propagated to every tau1, then hit with y.
    Eigen::VectorXcd start = sandwich(cx, cx) * sys.steady.vec;
    cplx n1 = tr * start;
    if (std::abs(n1) < 1e-300) n1 = 1.0;
    start /= n1;
    const SparseMatrix sy = sandwich(cy, cy);
    Eigen::MatrixXcd second(d * d, static_cast<Eigen::Index>(tau1s.size()));
    std::vector<cplx> n2(tau1s.size(), 1.0);
    {
        const WorkingSpace ws(l, start);
        const SparseMatrix& m = ws.matrix();
        const OdeRhs rhs = [&](double, const Eigen::MatrixXcd& v, Eigen::MatrixXcd& res) { res.noalias() = m * v; };
        integrate(rhs, 0.0, ws.reduce_vector(start), tau1s,
                  [&](std::size_t i, double, const Eigen::MatrixXcd& v) {
                      Eigen::VectorXcd col = sy * ws.expand(v.col(0));
                      const cplx t = tr * col;
                      if (std::abs(t) > 1e-300) n2[i] = t;
                      second.col(static_cast<Eigen::Index>(i)) = col / n2[i];
                  },
                  options);
    }

    // Second leg: all tau1 columns propagated together over tau2.
    const WorkingSpace ws(l, second);
    const Eigen::RowVectorXcd wz = ws.reduce(Eigen::RowVectorXcd(expectation_functional(SparseMatrix(cz.adjoint()) * cz)));
    Correlation2D out;
    out.tau1s = tau1s;
    out.tau2s = tau2s;
    out.channels = {x, y, z};
    out.normalization = ix * iy * iz;
    out.values.resize(static_cast<Eigen::Index>(tau1s.size()), static_cast<Eigen::Index>(tau2s.size()));
    const SparseMatrix& m = ws.matrix();
    const OdeRhs rhs = [&](double, const Eigen::MatrixXcd& v, Eigen::MatrixXcd& res) { res.noalias() = m * v; };
    integrate(rhs, 0.0, ws.reduce(second), tau2s,
              [&](std::size_t j, double, const Eigen::MatrixXcd& v) {
                  const Eigen::RowVectorXcd proj = wz * v;
                  for (std::size_t i = 0; i < tau1s.size(); ++i)
                      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                          (proj(static_cast<Eigen::Index>(i)) * n2[i] * n1).real() / out.normalization;
              },
              options);
    return out;
}

Correlation2D g3_map(const CorrelationSystem& sys, const std::string& x, const std::string& y,
                     const std::string& z, double tau_max, int n, const OdeOptions& options) {
    if (n < 1 || !(tau_max > 0.0)) throw std::invalid_argument("g3_map: need n >= 1 and tau_max > 0");
    const double h = tau_max / n;
    std::vector<double> gaps;
    for (int k = 0; k <= 2 * n; ++k) gaps.push_back(k * h);

    std::map<std::tuple<std::string, std::string, std::string>, Correlation2D> tables;
    auto table = [&](const std::string& c1, const std::string& c2, const std::string& c3) -> const Correlation2D& {
        auto key = std::make_tuple(c1, c2, c3);
        auto it = tables.find(key);
        if (it == tables.end()) it = tables.emplace(key, g3_nested(sys, c1, c2, c3, gaps, gaps, options)).first;
        return it->second;
    };

    Correlation2D out;
    out.channels = {x, y, z};
    for (int k = -n; k <= n; ++k) {
        out.tau1s.push_back(k * h);
        out.tau2s.push_back(k * h);
    }
    out.values.resize(2 * n + 1, 2 * n + 1);
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            // Detection times in units of h, sorted stably so ties keep channel order.
            std::array<std::pair<int, const std::string*>, 3> ev{{{0, &x}, {i, &y}, {i + j, &z}}};
            std::stable_sort(ev.begin(), ev.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
            const auto& t = table(*ev[0].second, *ev[1].second, *ev[2].second);
            out.values(i + n, j + n) = t.values(ev[1].first - ev[0].first, ev[2].first - ev[1].first);
            out.normalization = t.normalization;
        }
    }
    return out;
}

std::vector<double> default_tau_grid(double tau_max, int points) {
    if (!(tau_max > 0.0) || points < 8) throw std::invalid_argument("tau grid: need tau_max > 0 and >= 8 points");
    std::vector<double> taus{0.0};
    const int n_log = points / 4;
    const double lo = tau_max * 1e-4;
    const double mid = tau_max * 0.02;
    for (int k = 0; k < n_log; ++k) taus.push_back(lo * std::pow(mid / lo, double(k) / n_log));
    const int n_lin = points - 1 - n_log;
    for (int k = 0; k < n_lin; ++k) taus.push_back(mid + (tau_max - mid) * double(k + 1) / n_lin);
    return taus;
}

double chirality_metric(const CorrelationCurve& curve) {
    const auto& t = curve.taus;
    const std::size_t n = t.size();
    if (n == 0) throw DomainError("chirality metric: empty curve");
    double span = 0.0;
    for (double v : t) span = std::max(span, std::abs(v));
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(t[i] + t[n - 1 - i]) > 1e-9 * std::max(span, 1e-300))
            throw DomainError("chirality metric requires a delay grid symmetric about zero");
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c = std::max(c, std::abs(curve.values[i] - curve.values[n - 1 - i]));
    return c;
}

std::vector<SweepPoint> detuning_sweep(const SystemConfig& config, const std::vector<double>& cavity_detunings,
                                       const std::vector<double>& taus, const OdeOptions& options,
                                       unsigned workers) {
    std::vector<SweepPoint> out(cavity_detunings.size());
    parallel_for(
        cavity_detunings.size(),
        [&](std::size_t i) {
            SystemConfig c = config;
            c.cavity.detuning_cav = cavity_detunings[i];
            const auto set = g2_all(prepare_full_model(c), taus, options);
            SweepPoint p;
            p.cavity_detuning = cavity_detunings[i];
            p.aa = set.curve("a", "a");
            p.bb = set.curve("b", "b");
            p.ab = set.curve("a", "b");
            p.ba = set.curve("b", "a");
            p.chirality = chirality_metric(p.ab);
            p.g2_aa0 = set.at_zero("a", "a");
            p.g2_bb0 = set.at_zero("b", "b");
            p.g2_ab0 = set.at_zero("a", "b");
            out[i] = std::move(p);
        },
        workers);
    return out;
}

}  // namespace ringcqed
