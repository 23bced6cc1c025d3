#include "ringcqed/kerr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ringcqed/optimize.hpp"

namespace ringcqed {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field, what);
}

cplx interpolate(const std::vector<double>& times, const std::vector<cplx>& values, double t) {
    if (times.empty() || t < times.front() || t > times.back()) return 0.0;
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return values.back();
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * values[lo] + w * values[hi];
}

double min_spacing(const std::vector<double>& times) {
    double h = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double d = times[k] - times[k - 1];
        if (h == 0.0 || d < h) h = d;
    }
    return h;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
    return s;
}

// Restriction of a superoperator to the balanced sector. With `closed` the
// matrix must not connect the sector to the rest of the space; otherwise
// entries leaving the sector are dropped (inputs are assumed to lie inside).
SparseMatrix restrict_to(const SparseMatrix& m, const Sector& s, bool closed) {
    std::vector<Eigen::Index> position(static_cast<std::size_t>(s.full_size), -1);
    for (std::size_t k = 0; k < s.indices.size(); ++k)
        position[static_cast<std::size_t>(s.indices[k])] = static_cast<Eigen::Index>(k);
    std::vector<Triplet> trips;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            const Eigen::Index r = position[static_cast<std::size_t>(it.row())];
            const Eigen::Index c = position[static_cast<std::size_t>(it.col())];
            if (closed && (r < 0) != (c < 0)) throw ModelError("drive term leaves the balanced sector");
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    const auto n = static_cast<Eigen::Index>(s.indices.size());
    SparseMatrix out(n, n);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

Sector full_sector(Eigen::Index size) {
    Sector s;
    s.full_size = size;
    s.indices.resize(static_cast<std::size_t>(size));
    std::iota(s.indices.begin(), s.indices.end(), Eigen::Index{0});
    return s;
}

// Diagonal operator projecting onto the highest Fock level of mode factor f.
Operator top_level_projector(const HilbertSpace& space, std::size_t factor) {
    const auto dims = space.factor_dims();
    Eigen::Index stride = 1;
    for (std::size_t i = factor + 1; i < dims.size(); ++i) stride *= dims[i];
    std::vector<Triplet> trips;
    for (Eigen::Index k = 0; k < space.dim(); ++k)
        if ((k / stride) % dims[factor] == dims[factor] - 1) trips.emplace_back(k, k, 1.0);
    Operator p(space.dim(), space.dim());
    p.setFromTriplets(trips.begin(), trips.end());
    return p;
}

// The Kerr generator restricted to the balanced sector, with the reduced
// functionals needed for fluxes and truncation checks.
struct ReducedKerr {
    KerrSystem sys;
    Sector sector;
    TimeDependentGenerator reduced;
    Eigen::VectorXcd vacuum;
    Eigen::RowVectorXcd n_signal;
    Eigen::RowVectorXcd n_idler;
    Eigen::RowVectorXcd excited;
    Eigen::RowVectorXcd top_signal;
    Eigen::RowVectorXcd top_idler;
    SparseMatrix jump_signal;  ///< a rho a^dag
    SparseMatrix jump_idler;

    explicit ReducedKerr(const SystemConfig& config) : sys(build_kerr_liouvillian(config)) {
        Superoperator l;
        l.matrix = sys.generator.constant;
        l.hilbert_dim = sys.space.dim();
        l.charges = sys.charges;
        const auto found = balanced_sector(l);
        sector = found ? *found : full_sector(l.hilbert_dim * l.hilbert_dim);
        reduced.hilbert_dim = l.hilbert_dim;
        reduced.constant = found ? found->matrix : l.matrix;
        for (const auto& term : sys.generator.terms)
            reduced.terms.push_back({term.coefficient, found ? restrict_to(term.matrix, sector, true) : term.matrix});

        const Eigen::Index d = sys.space.dim();
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d * d);
        v(0) = 1.0;  // vacuum, all emitters in the ground state
        vacuum = sector.extract(v);
        const Operator& a = sys.space.annihilation(Mode::a);
        const Operator& i = sys.space.annihilation(Mode::idler);
        n_signal = sector.extract_functional(expectation_functional(Operator(a.adjoint()) * a));
        n_idler = sector.extract_functional(expectation_functional(Operator(i.adjoint()) * i));
        Operator ex(d, d);
        for (int n = 0; n < sys.space.n_emitters(); ++n) ex += sys.space.projector(n, Level::excited);
        excited = sector.extract_functional(expectation_functional(ex));
        const auto& modes = sys.space.modes();
        const auto ia = static_cast<std::size_t>(std::find(modes.begin(), modes.end(), Mode::a) - modes.begin());
        const auto ii = static_cast<std::size_t>(std::find(modes.begin(), modes.end(), Mode::idler) - modes.begin());
        top_signal = sector.extract_functional(expectation_functional(top_level_projector(sys.space, ia)));
        top_idler = sector.extract_functional(expectation_functional(top_level_projector(sys.space, ii)));
        jump_signal = restrict_to(sandwich(a, a), sector, false);
        jump_idler = restrict_to(sandwich(i, i), sector, false);
    }

    OdeRhs rhs() const {
        return [this](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) { reduced.apply(t, y, out); };
    }

    OdeOptions segment_options(const KerrOptions& opts, double t0, double t1) const {
        OdeOptions o = opts.ode;
        if (t1 > sys.drive_begin && t0 < sys.drive_end) {
            const double h = opts.pulse_max_step > 0.0 ? opts.pulse_max_step : sys.drive_step;
            if (h > 0.0) o.max_step = o.max_step > 0.0 ? std::min(o.max_step, h) : h;
        }
        return o;
    }

    // Propagates y from t0 to t1 in place.
    void step(Eigen::MatrixXcd& y, double t0, double t1, const KerrOptions& opts) const {
        if (t1 <= t0) return;
        integrate(rhs(), t0, y, {t1}, [&](std::size_t, double, const Eigen::MatrixXcd& out) { y = out; },
                  segment_options(opts, t0, t1));
    }

    double value(const Eigen::RowVectorXcd& w, const Eigen::VectorXcd& y) const { return (w * y)(0).real(); }
};

void check_times(const std::vector<double>& times) {
    if (times.size() < 2) throw std::invalid_argument("Kerr simulation: need at least two times");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("Kerr simulation: times must increase");
}

}  // namespace

void PumpPulse::validate() const {
    require(!times.empty(), "pulse.times", "at least one sample is required");
    require(times.size() == samples.size(), "pulse.samples", "one sample per time is required");
    for (std::size_t k = 0; k < times.size(); ++k) {
        require(std::isfinite(times[k]), "pulse.times[" + std::to_string(k) + "]", "must be finite");
        if (k > 0) require(times[k] > times[k - 1], "pulse.times[" + std::to_string(k) + "]", "must increase");
        require(std::isfinite(samples[k].real()) && std::isfinite(samples[k].imag()),
                "pulse.samples[" + std::to_string(k) + "]", "must be finite");
    }
    require(std::isfinite(rep_period) && rep_period > 0.0, "pulse.rep_period", "must be positive");
    require(std::isfinite(detuning), "pulse.detuning", "must be finite");
    if (!intracavity) {
        require(std::isfinite(kappa) && kappa > 0.0, "pulse.kappa", "must be positive");
        require(std::isfinite(kappa_c) && kappa_c > 0.0 && kappa_c <= kappa, "pulse.kappa_c",
                "must be positive and at most kappa");
    }
}

PumpPulse PumpPulse::gaussian(double fwhm, double photons, double kappa, double kappa_c, double rep_period,
                              double step, double span) {
    if (!(fwhm > 0.0 && photons >= 0.0 && step > 0.0 && span > 0.0))
        throw DomainError("gaussian pulse: need fwhm > 0, photons >= 0, step > 0, span > 0");
    PumpPulse p;
    p.kappa = kappa;
    p.kappa_c = kappa_c;
    p.rep_period = rep_period;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));  // intensity
    const double peak = std::sqrt(photons / (sigma * std::sqrt(kTwoPi)));
    const auto n = static_cast<long>(std::ceil(span / step));
    for (long k = -n; k <= n; ++k) {
        const double t = static_cast<double>(k) * step;
        p.times.push_back(t);
        p.samples.emplace_back(peak * std::exp(-0.25 * t * t / (sigma * sigma)), 0.0);
    }
    return p;
}

cplx PumpTrajectory::peak() const {
    cplx best = 0.0;
    for (const auto& f : field)
        if (std::abs(f) > std::abs(best)) best = f;
    return best;
}

PumpTrajectory pump_response(const PumpPulse& pulse, double tail_lifetimes, const OdeOptions& options) {
    pulse.validate();
    PumpTrajectory out;
    if (pulse.intracavity) {
        out.times = pulse.times;
        out.field = pulse.samples;
        return out;
    }
    const double h = pulse.times.size() > 1 ? min_spacing(pulse.times) : 1.0 / pulse.kappa;
    out.times = pulse.times;
    const double end = pulse.times.back() + tail_lifetimes / pulse.kappa;
    for (double t = pulse.times.back() + h; t < end + 0.5 * h; t += h) out.times.push_back(t);

    const cplx rate = -kI * pulse.detuning - 0.5 * pulse.kappa;
    const double drive = std::sqrt(pulse.kappa_c);
    OdeRhs rhs = [&](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        dy.resize(1, 1);
        dy(0, 0) = rate * y(0, 0) + drive * interpolate(pulse.times, pulse.samples, t);
    };
    OdeOptions o = options;
    o.max_step = o.max_step > 0.0 ? std::min(o.max_step, h) : h;
    out.field.resize(out.times.size());
    integrate(rhs, out.times.front(), Eigen::MatrixXcd::Zero(1, 1), out.times,
              [&](std::size_t k, double, const Eigen::MatrixXcd& y) { out.field[k] = y(0, 0); }, o);
    return out;
}

KerrParams kerr_params(const PumpTrajectory& pump, double g_kerr, double omega_idler) {
    KerrParams k;
    k.g_kerr = g_kerr;
    k.omega_idler = omega_idler;
    k.pump_times = pump.times;
    k.pump_field = pump.field;
    return k;
}

KerrSystem build_kerr_liouvillian(const SystemConfig& config) {
    if (!config.kerr) throw ModelError("Kerr simulation requires Kerr parameters");
    KerrSystem sys{build_space(config, {Mode::a, Mode::idler}), {}, {}, config.cavity.kappa_c,
                   config.cavity.kappa()};
    const Superoperator l = build_liouvillian(config, sys.space);
    sys.generator = TimeDependentGenerator::from(l);
    sys.charges = l.charges;
    const KerrParams& k = *config.kerr;
    if (k.g_kerr != 0.0 && !k.pump_times.empty()) {
        const Operator& a = sys.space.annihilation(Mode::a);
        const Operator& i = sys.space.annihilation(Mode::idler);
        const Operator pair = Operator(a.adjoint()) * Operator(i.adjoint());
        const KerrParams params = k;
        sys.generator.terms.push_back({[params](double t) { return params.drive_at(t); },
                                       commutator_generator(pair)});
        sys.generator.terms.push_back({[params](double t) { return std::conj(params.drive_at(t)); },
                                       commutator_generator(Operator(pair.adjoint()))});
        // Until the drive peaks the state may still be stationary, so the step
        // is bounded there; afterwards the error control sees the drive.
        std::size_t peak = 0;
        for (std::size_t j = 0; j < k.pump_field.size(); ++j)
            if (std::abs(k.pump_field[j]) > std::abs(k.pump_field[peak])) peak = j;
        sys.drive_begin = k.pump_times.front();
        sys.drive_end = k.pump_times[peak];
        sys.drive_step = min_spacing(k.pump_times);
    }
    return sys;
}

PulseRun simulate_pulse(const SystemConfig& config, const std::vector<double>& times, const KerrOptions& options) {
    check_times(times);
    const ReducedKerr rk(config);
    PulseRun run;
    run.times = times;
    Eigen::MatrixXcd y = rk.vacuum;
    std::vector<double> n_idler;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0) rk.step(y, times[k - 1], times[k], options);
        const Eigen::VectorXcd v = y.col(0);
        const double ns = rk.value(rk.n_signal, v);
        const double ni = rk.value(rk.n_idler, v);
        run.signal_flux.push_back(rk.sys.kappa_c * ns);
        run.idler_flux.push_back(rk.sys.kappa_c * ni);
        n_idler.push_back(ni);
        run.emitter_population.push_back(rk.value(rk.excited, v));
        run.top_level_population = std::max(
            {run.top_level_population, rk.value(rk.top_signal, v), rk.value(rk.top_idler, v)});
    }
    run.pairs_per_pulse = rk.sys.kappa * trapezoid(times, n_idler);
    if (run.pairs_per_pulse > options.pair_warning) {
        run.truncation_warning = true;
        run.warning = "pair probability per pulse " + std::to_string(run.pairs_per_pulse) +
                      " is high for Fock cutoff " + std::to_string(config.fock_cutoff);
    } else if (run.top_level_population > options.top_level_limit) {
        run.truncation_warning = true;
        run.warning = "highest Fock level reaches population " + std::to_string(run.top_level_population);
    }
    return run;
}

CutoffCheck kerr_cutoff_check(const SystemConfig& config, const std::vector<double>& times, double tolerance,
                              const KerrOptions& options) {
    SystemConfig raised = config;
    raised.fock_cutoff += 1;
    const PulseRun lo = simulate_pulse(config, times, options);
    const PulseRun hi = simulate_pulse(raised, times, options);
    CutoffCheck c;
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    c.pair_change = rel(lo.pairs_per_pulse, hi.pairs_per_pulse);
    c.signal_change = rel(trapezoid(times, lo.signal_flux), trapezoid(times, hi.signal_flux));
    c.converged = c.pair_change < tolerance && c.signal_change < tolerance;
    return c;
}

SystemConfig calibrate_pair_rate(SystemConfig config, const std::vector<double>& times, double target,
                                 const KerrOptions& options) {
    if (!config.kerr || config.kerr->g_kerr == 0.0)
        throw ModelError("pair-rate calibration needs a non-zero Kerr coupling");
    if (!(target > 0.0)) throw DomainError("pair-rate calibration: target must be positive");
    for (int it = 0; it < 8; ++it) {
        const double p = simulate_pulse(config, times, options).pairs_per_pulse;
        if (!(p > 0.0)) throw ModelError("pair-rate calibration: the pulse generates no pairs");
        if (std::abs(p / target - 1.0) < 1e-3) break;
        config.kerr->g_kerr *= std::sqrt(target / p);
    }
    return config;
}

double CoincidenceMap::idler_signal(std::size_t i, std::size_t j) const {
    if (j >= i) {
        if (i >= first_count) throw std::out_of_range("coincidence map: idler time not covered as first detection");
        return idler_then_signal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    if (j >= first_count) throw std::out_of_range("coincidence map: signal time not covered as first detection");
    return signal_then_idler(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
}

CoincidenceMap pulsed_two_time(const SystemConfig& config, const std::vector<double>& times, double first_until,
                               const KerrOptions& options) {
    check_times(times);
    const ReducedKerr rk(config);
    const std::size_t n = times.size();
    CoincidenceMap map;
    map.times = times;
    while (map.first_count < n && times[map.first_count] <= first_until) ++map.first_count;
    const auto nf = static_cast<Eigen::Index>(map.first_count);
    const auto nt = static_cast<Eigen::Index>(n);
    map.idler_then_signal = Eigen::MatrixXd::Zero(nf, nt);
    map.signal_then_idler = Eigen::MatrixXd::Zero(nf, nt);

    // Forward pass for the states at the first-detection times and the fluxes.
    std::vector<Eigen::VectorXcd> states;
    Eigen::MatrixXcd y = rk.vacuum;
    double top = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) rk.step(y, times[k - 1], times[k], options);
        const Eigen::VectorXcd v = y.col(0);
        map.signal_flux.push_back(rk.sys.kappa_c * rk.value(rk.n_signal, v));
        map.idler_flux.push_back(rk.sys.kappa_c * rk.value(rk.n_idler, v));
        top = std::max({top, rk.value(rk.top_signal, v), rk.value(rk.top_idler, v)});
        if (k < map.first_count) states.push_back(v);
    }
    if (top > options.top_level_limit)
        throw ModelError("Fock truncation not converged: highest level reaches population " + std::to_string(top) +
                         "; raise fock_cutoff or lower the drive");

    // Block sweeps: column i holds x rho(t_i) x^dag / <x^dag x>(t_i), propagated to later times.
    auto sweep = [&](const SparseMatrix& jump, const Eigen::RowVectorXcd& first_n, const Eigen::RowVectorXcd& second_n,
                     Eigen::MatrixXd& out) {
        const auto m = static_cast<Eigen::Index>(rk.vacuum.size());
        Eigen::MatrixXcd block(m, 0);
        std::vector<double> scale;
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0 && block.cols() > 0) rk.step(block, times[k - 1], times[k], options);
            if (k < map.first_count) {
                const double nx = rk.value(first_n, states[k]);
                Eigen::VectorXcd col = jump * states[k];
                if (nx > 0.0) col /= nx;
                else col.setZero();
                block.conservativeResize(m, block.cols() + 1);
                block.col(block.cols() - 1) = col;
                scale.push_back(std::max(nx, 0.0));
            }
            const Eigen::RowVectorXcd obs = (second_n * block).eval();
            for (Eigen::Index c = 0; c < block.cols(); ++c)
                out(c, static_cast<Eigen::Index>(k)) =
                    rk.sys.kappa_c * rk.sys.kappa_c * scale[static_cast<std::size_t>(c)] * obs(c).real();
        }
    };
    sweep(rk.jump_idler, rk.n_idler, rk.n_signal, map.idler_then_signal);
    sweep(rk.jump_signal, rk.n_signal, rk.n_idler, map.signal_then_idler);
    return map;
}

void CoincidenceWindows::validate(double rep_period) const {
    require(std::isfinite(fast_lo) && fast_lo >= 0.0, "windows.fast", "must start at or after the pulse");
    require(fast_hi > fast_lo, "windows.fast", "upper edge must exceed lower edge");
    require(slow_hi > slow_lo, "windows.slow", "upper edge must exceed lower edge");
    require(slow_lo >= fast_hi, "windows.slow", "must not overlap the fast window");
    require(rep_period > 0.0 && slow_hi <= rep_period, "windows.slow", "must end within the repetition period");
}

std::vector<double> coincidence_grid(const CoincidenceWindows& windows, double start, double fast_step,
                                     double slow_step) {
    if (!(fast_step > 0.0 && slow_step > 0.0 && start < windows.fast_lo))
        throw std::invalid_argument("coincidence grid: need positive steps and start before the fast window");
    std::vector<double> t;
    auto fill = [&](double lo, double hi, double h) {
        const auto k = static_cast<long>(std::ceil((hi - lo) / h - 1e-9));
        for (long j = 0; j < k; ++j) t.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(k));
    };
    fill(start, windows.fast_lo, fast_step);
    fill(windows.fast_lo, windows.fast_hi, fast_step);
    fill(windows.fast_hi, windows.slow_lo, slow_step);
    fill(windows.slow_lo, windows.slow_hi, slow_step);
    t.push_back(windows.slow_hi);
    return t;
}

std::vector<double> window_weights(const std::vector<double>& times, double lo, double hi) {
    std::vector<double> w(times.size(), 0.0);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double t0 = times[k - 1];
        const double t1 = times[k];
        const double u = std::max(lo, t0);
        const double v = std::min(hi, t1);
        if (v <= u) continue;
        const double h = t1 - t0;
        // Integral of the linear interpolant over [u, v], split onto both nodes.
        const double mid = 0.5 * (u + v);
        const double len = v - u;
        w[k - 1] += len * (t1 - mid) / h;
        w[k] += len * (mid - t0) / h;
    }
    return w;
}

CarResult car(const CoincidenceMap& map, const CoincidenceWindows& windows, double rep_period,
              const DarkCounts& dark) {
    windows.validate(rep_period);
    const auto wf = window_weights(map.times, windows.fast_lo, windows.fast_hi);
    const auto ws = window_weights(map.times, windows.slow_lo, windows.slow_hi);
    auto singles = [](const std::vector<double>& w, const std::vector<double>& flux) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * flux[k];
        return s;
    };
    auto coincidences = [&](const std::vector<double>& wi, const std::vector<double>& wsig) {
        double c = 0.0;
        for (std::size_t i = 0; i < wi.size(); ++i) {
            if (wi[i] == 0.0) continue;
            for (std::size_t j = 0; j < wsig.size(); ++j)
                if (wsig[j] != 0.0) c += wi[i] * wsig[j] * map.idler_signal(i, j);
        }
        return c;
    };
    CarResult r;
    const double dark_idler = dark.idler * (windows.fast_hi - windows.fast_lo);
    const double dark_fast = dark.signal * (windows.fast_hi - windows.fast_lo);
    const double dark_slow = dark.signal * (windows.slow_hi - windows.slow_lo);
    const double si = singles(wf, map.idler_flux);
    const double sf = singles(wf, map.signal_flux);
    const double ss = singles(ws, map.signal_flux);
    r.idler_singles = si + dark_idler;
    r.signal_fast_singles = sf + dark_fast;
    r.signal_slow_singles = ss + dark_slow;
    // Dark counts are independent of the light, so they add only accidental-like terms.
    r.coincidences_signal_idler = coincidences(wf, wf) + si * dark_fast + dark_idler * sf + dark_idler * dark_fast;
    r.coincidences_atoms_idler = coincidences(wf, ws) + si * dark_slow + dark_idler * ss + dark_idler * dark_slow;
    const double acc_si = r.idler_singles * r.signal_fast_singles;
    const double acc_ai = r.idler_singles * r.signal_slow_singles;
    if (!(acc_si > 0.0) || !(acc_ai > 0.0)) throw NormalizationError("CAR undefined: zero accidental coincidences");
    r.car_signal_idler = r.coincidences_signal_idler / acc_si;
    r.car_atoms_idler = r.coincidences_atoms_idler / acc_ai;
    return r;
}

TwoExponentialFit fit_two_exponentials(const std::vector<double>& times, const std::vector<double>& values,
                                       double t_lo, double t_hi, bool interfering) {
    if (times.size() != values.size()) throw std::invalid_argument("two-exponential fit: size mismatch");
    std::vector<double> t;
    std::vector<double> y;
    for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] >= t_lo && times[k] <= t_hi && values[k] > 0.0) {
            t.push_back(times[k] - t_lo);
            y.push_back(values[k]);
        }
    if (t.size() < 8) throw DomainError("two-exponential fit: fewer than 8 positive samples in range");
    const std::size_t n = t.size();
    const auto rows = static_cast<Eigen::Index>(n);

    // Starting rates from straight lines through log y: the tail gives the
    // slow rate, the first samples the fast one.
    auto slope = [&](std::size_t from, std::size_t to) {
        double st = 0, sy = 0, stt = 0, sty = 0, m = 0;
        for (std::size_t k = from; k < to; ++k) {
            const double ly = std::log(y[k]);
            st += t[k], sy += ly, stt += t[k] * t[k], sty += t[k] * ly, m += 1;
        }
        return (m * sty - st * sy) / (m * stt - st * st);
    };
    const double slow0 = std::max(-slope(n / 2, n), 1e-3 / std::max(t.back(), 1e-300));
    const double fast0 = std::max(-slope(0, std::max<std::size_t>(3, n / 10)), 3.0 * slow0);

    // Variable projection: for given rates the amplitudes follow from a
    // linear least-squares problem in relative residuals.
    const Eigen::Index cols = interfering ? 3 : 2;
    auto solve = [&](double k1, double k2, Eigen::VectorXd& coef) {
        Eigen::MatrixXd basis(rows, cols);
        Eigen::VectorXd rhs = Eigen::VectorXd::Ones(rows);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const double tk = t[static_cast<std::size_t>(k)];
            const double w = 1.0 / y[static_cast<std::size_t>(k)];
            basis(k, 0) = w * std::exp(-k1 * tk);
            basis(k, 1) = w * std::exp(-k2 * tk);
            if (interfering) basis(k, 2) = 2.0 * w * std::exp(-0.5 * (k1 + k2) * tk);
        }
        coef = basis.colPivHouseholderQr().solve(rhs);
        return Eigen::VectorXd(basis * coef - rhs);
    };
    const double unit = slow0;
    ResidualFn residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd coef;
        return solve(unit * std::exp(p(0)), unit * std::exp(p(1)), coef);
    };
    // Several fast-rate starts; fits with a negative decay amplitude are
    // only kept when nothing physical is found.
    OptimizeResult res;
    bool have = false;
    bool have_physical = false;
    for (double scale : {1.0, 3.0, 10.0, 0.3}) {
        Eigen::VectorXd x0(2);
        x0 << std::log(scale * fast0 / unit), 0.0;
        OptimizeResult r = least_squares(residual, x0, Bounds::none(2));
        Eigen::VectorXd c;
        solve(unit * std::exp(r.x(0)), unit * std::exp(r.x(1)), c);
        const bool physical = c(0) > 0.0 && c(1) > 0.0;
        if (!have || (physical && !have_physical) || (physical == have_physical && r.cost < res.cost)) {
            res = std::move(r);
            have = true;
            have_physical = physical;
        }
    }

    TwoExponentialFit fit;
    double k1 = unit * std::exp(res.x(0));
    double k2 = unit * std::exp(res.x(1));
    Eigen::VectorXd coef;
    solve(k1, k2, coef);
    double a1 = coef(0);
    double a2 = coef(1);
    if (k1 < k2) {
        std::swap(k1, k2);
        std::swap(a1, a2);
    }
    fit.fast_rate = k1;
    fit.slow_rate = k2;
    fit.fast_amplitude = a1;
    fit.slow_amplitude = a2;
    fit.cross_amplitude = interfering ? coef(2) : 0.0;
    fit.cost = res.cost;
    fit.converged = res.converged;
    return fit;
}

}  // namespace ringcqed
