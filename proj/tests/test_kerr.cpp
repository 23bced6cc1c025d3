#include <doctest.h>

#include <random>

#include "ringcqed/kerr.hpp"
#include "ringcqed/recipes.hpp"
#include "support.hpp"

using namespace ringcqed;
using testsupport::uniform;

namespace {

constexpr double kKappa = recipes::kKerrKappa;

std::vector<double> fine_grid(double end = 20e-9, double step = 20e-12) {
    std::vector<double> t;
    for (int k = 0;; ++k) {
        const double v = -0.2e-9 + k * step;
        if (v > end + 1e-15) break;
        t.push_back(v);
    }
    return t;
}

// Scenario calibrated to 0.01 pairs per pulse, computed once per emitter setting.
const SystemConfig& calibrated(bool with_emitter) {
    static const SystemConfig bare = calibrate_pair_rate(recipes::kerr_pulse(false).config, fine_grid(3e-9), 0.01);
    static const SystemConfig dressed = calibrate_pair_rate(recipes::kerr_pulse(true).config, fine_grid(3e-9), 0.01);
    return with_emitter ? dressed : bare;
}

std::size_t nearest(const std::vector<double>& t, double v) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (std::abs(t[k] - v) < std::abs(t[best] - v)) best = k;
    return best;
}

// Dense full-space L(t) with a fixed-step RK4 propagator, independent of the
// sector reduction and the adaptive integrator.
struct DenseKerr {
    Eigen::MatrixXcd l0, lp, lm;
    KerrParams params;
    Eigen::Index d;
    Operator a, i;

    explicit DenseKerr(const SystemConfig& c) : params(*c.kerr) {
        const HilbertSpace space = build_space(c, {Mode::a, Mode::idler});
        d = space.dim();
        l0 = testsupport::dense(build_liouvillian(c, space).matrix);
        a = space.annihilation(Mode::a);
        i = space.annihilation(Mode::idler);
        const Operator pair = Operator(a.adjoint()) * Operator(i.adjoint());
        lp = testsupport::dense(commutator_generator(pair));
        lm = testsupport::dense(commutator_generator(Operator(pair.adjoint())));
    }
    Eigen::VectorXcd rhs(double t, const Eigen::VectorXcd& v) const {
        const cplx w = params.drive_at(t);
        return l0 * v + w * (lp * v) + std::conj(w) * (lm * v);
    }
    void propagate(Eigen::VectorXcd& v, double t0, double t1, double h) const {
        const int n = static_cast<int>(std::ceil((t1 - t0) / h));
        const double dt = (t1 - t0) / n;
        double t = t0;
        for (int k = 0; k < n; ++k, t += dt) {
            const Eigen::VectorXcd k1 = rhs(t, v);
            const Eigen::VectorXcd k2 = rhs(t + dt / 2, v + dt / 2 * k1);
            const Eigen::VectorXcd k3 = rhs(t + dt / 2, v + dt / 2 * k2);
            const Eigen::VectorXcd k4 = rhs(t + dt, v + dt * k3);
            v += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
};

}  // namespace

TEST_CASE("pump response") {
    SUBCASE("ring-down after a short kick") {
        PumpPulse p;
        p.times = {0.0, 0.1e-12, 0.2e-12};
        p.samples = {0.0, 1e6, 0.0};
        p.kappa = kKappa;
        p.kappa_c = 0.5 * kKappa;
        p.detuning = 0.3 * kKappa;
        p.rep_period = 1e-6;
        const auto r = pump_response(p, 10.0);
        const std::size_t k1 = nearest(r.times, 0.2e-9);
        const std::size_t k2 = nearest(r.times, 0.6e-9);
        const double dt = r.times[k2] - r.times[k1];
        CHECK(std::abs(r.field[k2]) / std::abs(r.field[k1]) == doctest::Approx(std::exp(-0.5 * kKappa * dt)).epsilon(1e-6));
        const cplx turn = r.field[k2] / r.field[k1] / std::abs(r.field[k2] / r.field[k1]);
        CHECK(std::abs(turn - std::exp(-kI * p.detuning * dt)) < 1e-6);
    }
    SUBCASE("continuous input reaches the driven steady state") {
        PumpPulse p;
        const double s = 3e4;
        for (int k = 0; k <= 2000; ++k) {
            p.times.push_back(k * 5e-12);
            p.samples.emplace_back(s, 0.0);
        }
        p.kappa = kKappa;
        p.kappa_c = 0.8 * kKappa;
        p.detuning = -0.7 * kKappa;
        p.rep_period = 1e-6;
        const auto r = pump_response(p, 0.0);
        const cplx expected = std::sqrt(p.kappa_c) * s / (kI * p.detuning + 0.5 * p.kappa);
        CHECK(std::abs(r.field.back() - expected) < 1e-6 * std::abs(expected));
    }
    SUBCASE("Gaussian pulse peak is converged in the sample step") {
        const auto coarse = pump_response(PumpPulse::gaussian(50e-12, 6.9e7, kKappa, 0.8 * kKappa, 1e-6, 2e-12, 150e-12));
        const auto fine = pump_response(PumpPulse::gaussian(50e-12, 6.9e7, kKappa, 0.8 * kKappa, 1e-6, 1e-12, 150e-12));
        CHECK(std::abs(std::abs(coarse.peak()) / std::abs(fine.peak()) - 1.0) < 0.05);
        // The input itself integrates to the requested photon number.
        const auto p = PumpPulse::gaussian(50e-12, 6.9e7, kKappa, 0.8 * kKappa, 1e-6, 1e-12, 150e-12);
        double n = 0.0;
        for (std::size_t k = 1; k < p.times.size(); ++k)
            n += 0.5 * (p.times[k] - p.times[k - 1]) * (std::norm(p.samples[k]) + std::norm(p.samples[k - 1]));
        CHECK(n == doctest::Approx(6.9e7).epsilon(1e-6));
    }
    SUBCASE("intracavity samples pass through; bad pulses are rejected") {
        PumpPulse p;
        p.intracavity = true;
        p.times = {0.0, 1e-12};
        p.samples = {cplx(1.0, 2.0), cplx(3.0, 0.0)};
        p.rep_period = 1e-6;
        const auto r = pump_response(p);
        CHECK(r.field == p.samples);
        p.times = {1e-12, 0.0};
        CHECK_THROWS_AS(pump_response(p), ValidationError);
        PumpPulse q = PumpPulse::gaussian(50e-12, 1.0, kKappa, 2.0 * kKappa, 1e-6, 2e-12, 150e-12);
        CHECK_THROWS_AS(pump_response(q), ValidationError);
    }
}

TEST_CASE("Kerr generator") {
    SUBCASE("zero Kerr coupling leaves the static model and no photons") {
        SystemConfig c = recipes::kerr_pulse(true).config;
        c.kerr->g_kerr = 0.0;
        const KerrSystem sys = build_kerr_liouvillian(c);
        CHECK(sys.generator.terms.empty());
        const auto space = build_space(c, {Mode::a, Mode::idler});
        CHECK(max_abs(SparseMatrix(sys.generator.constant - build_liouvillian(c, space).matrix)) == 0.0);
        const auto grid = fine_grid(2e-9, 50e-12);
        const auto run = simulate_pulse(c, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            CHECK(run.signal_flux[k] == 0.0);
            CHECK(run.idler_flux[k] == 0.0);
        }
        const CoincidenceWindows w{0.0, 0.8e-9, 1.0e-9, 2e-9};
        const auto map = pulsed_two_time(c, coincidence_grid(w, -0.2e-9, 50e-12, 100e-12), w.fast_hi);
        CHECK(map.idler_then_signal.cwiseAbs().maxCoeff() == 0.0);
        CHECK(map.signal_then_idler.cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(car(map, w, 1e-6), NormalizationError);
    }
    SUBCASE("missing Kerr parameters are rejected") {
        SystemConfig c = recipes::kerr_pulse(true).config;
        c.kerr.reset();
        CHECK_THROWS_AS(build_kerr_liouvillian(c), ModelError);
    }
    SUBCASE("generator preserves the trace") {
        const KerrSystem sys = build_kerr_liouvillian(calibrated(true));
        const Eigen::RowVectorXcd tr = trace_functional(sys.space.dim());
        std::mt19937_64 rng(11);
        const Eigen::VectorXcd v = vec(testsupport::random_density(sys.space.dim(), rng));
        Eigen::MatrixXcd out;
        sys.generator.apply(0.1e-9, v, out);
        CHECK(std::abs((tr * out)(0)) < 1e-12 * kKappa);
    }
}

TEST_CASE("pair generation without emitters") {
    const SystemConfig& c = calibrated(false);
    const auto grid = fine_grid(4e-9, 10e-12);
    const auto run = simulate_pulse(c, grid);
    CHECK(run.pairs_per_pulse == doctest::Approx(0.01).epsilon(2e-3));
    CHECK_FALSE(run.truncation_warning);

    SUBCASE("signal and idler photon numbers balance") {
        double s = 0.0, i = 0.0, gap = 0.0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double h = grid[k] - grid[k - 1];
            s += 0.5 * h * (run.signal_flux[k] + run.signal_flux[k - 1]);
            i += 0.5 * h * (run.idler_flux[k] + run.idler_flux[k - 1]);
            gap = std::max(gap, std::abs(run.signal_flux[k] - run.idler_flux[k]));
        }
        CHECK(std::abs(s / i - 1.0) < 0.01);
        CHECK(gap < 1e-6 * *std::max_element(run.signal_flux.begin(), run.signal_flux.end()));
    }
    SUBCASE("pairs scale with the square of the drive over a decade") {
        std::vector<double> lx, ly;
        for (double f : {1.0, std::pow(10.0, 0.25), std::sqrt(10.0)}) {
            SystemConfig s = c;
            s.kerr->g_kerr *= f;
            lx.push_back(std::log(f));
            ly.push_back(std::log(simulate_pulse(s, grid).pairs_per_pulse));
        }
        const double slope_lo = (ly[1] - ly[0]) / (lx[1] - lx[0]);
        const double slope_hi = (ly[2] - ly[1]) / (lx[2] - lx[1]);
        CHECK(slope_lo == doctest::Approx(2.0).epsilon(0.02));
        CHECK(slope_hi == doctest::Approx(2.0).epsilon(0.02));
        // Pump energy enters squared through Omega = g <a_-1>^2.
        auto scen = recipes::kerr_pulse(false, 2 * 6.9e7);
        scen.config.kerr->g_kerr = c.kerr->g_kerr;
        CHECK(simulate_pulse(scen.config, grid).pairs_per_pulse / run.pairs_per_pulse ==
              doctest::Approx(4.0).epsilon(0.02));
    }
    SUBCASE("cutoff convergence and truncation warnings") {
        const auto check = kerr_cutoff_check(c, fine_grid(3e-9));
        CHECK(check.converged);
        CHECK(check.pair_change < 0.01);
        SystemConfig strong = c;
        strong.fock_cutoff = 1;
        strong.kerr->g_kerr *= std::sqrt(40.0);
        const auto hot = simulate_pulse(strong, grid);
        CHECK(hot.truncation_warning);
        CHECK(hot.pairs_per_pulse > 0.2);
        CHECK_THROWS_AS(pulsed_two_time(strong, grid, 0.8e-9), ModelError);
    }
}

TEST_CASE("coincidence map against a dense propagation") {
    SystemConfig c = calibrated(false);
    c.fock_cutoff = 2;
    const CoincidenceWindows w{0.0, 0.8e-9, 1.0e-9, 2.0e-9};
    const auto grid = coincidence_grid(w, -0.2e-9, 20e-12, 50e-12);
    const auto map = pulsed_two_time(c, grid, w.fast_hi);

    const DenseKerr dense(c);
    const double h = 0.25e-12;
    Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(dense.d * dense.d);
    rho(0) = 1.0;
    const std::size_t i1 = nearest(grid, 0.2e-9);
    const std::size_t i2 = nearest(grid, 0.4e-9);
    dense.propagate(rho, grid.front(), grid[i1], h);
    const Eigen::RowVectorXcd n_a = expectation_functional(Operator(dense.a.adjoint()) * dense.a);
    const Eigen::RowVectorXcd n_i = expectation_functional(Operator(dense.i.adjoint()) * dense.i);
    CHECK(map.signal_flux[i1] == doctest::Approx(c.cavity.kappa_c * (n_a * rho)(0).real()).epsilon(1e-5));

    for (bool idler_first : {true, false}) {
        const Operator& x = idler_first ? dense.i : dense.a;
        Eigen::VectorXcd col = testsupport::dense(sandwich(x, x)) * rho;
        dense.propagate(col, grid[i1], grid[i2], h);
        const double expected =
            c.cavity.kappa_c * c.cavity.kappa_c * ((idler_first ? n_a : n_i) * col)(0).real();
        const double got = idler_first ? map.idler_then_signal(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2))
                                       : map.signal_then_idler(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2));
        CHECK(got == doctest::Approx(expected).epsilon(1e-5));
    }

    SUBCASE("coincidences sit within a few cavity lifetimes of each other") {
        const auto wt = window_weights(grid, grid.front(), w.fast_hi);
        double near = 0.0, total = 0.0;
        for (std::size_t i = 0; i < map.first_count; ++i)
            for (std::size_t j = 0; j < map.first_count; ++j) {
                const double g = wt[i] * wt[j] * map.idler_signal(i, j);
                total += g;
                if (std::abs(grid[i] - grid[j]) < 3.0 / c.cavity.kappa()) near += g;
            }
        CHECK(near / total > 0.9);
    }
}

TEST_CASE("emitter on the signal mode") {
    const SystemConfig& c = calibrated(true);
    const auto grid = fine_grid(20e-9, 20e-12);
    const auto run = simulate_pulse(c, grid);
    const double kappa = c.cavity.kappa();
    const auto& e = c.emitters[0];
    const double slow_expected = e.gamma + purcell_rate(e.g / std::sqrt(2.0), e.delta, kappa);

    SUBCASE("signal decays on two timescales, the idler on one") {
        const auto fit = fit_two_exponentials(grid, run.signal_flux, 0.8e-9, 20e-9);
        CHECK(fit.fast_rate == doctest::Approx(kappa).epsilon(0.10));
        CHECK(fit.slow_rate == doctest::Approx(slow_expected).epsilon(0.10));
        const std::size_t k = nearest(grid, 3e-9);
        CHECK(run.idler_flux[k] < 1e-3 * run.signal_flux[k]);
        const std::size_t k1 = nearest(grid, 1.5e-9), k2 = nearest(grid, 3e-9);
        const double idler_rate = std::log(run.idler_flux[k1] / run.idler_flux[k2]) / (grid[k2] - grid[k1]);
        CHECK(idler_rate == doctest::Approx(kappa).epsilon(0.10));
    }
    SUBCASE("slow emission is correlated with the idler") {
        const CoincidenceWindows w;
        const auto map = pulsed_two_time(c, coincidence_grid(w, -0.2e-9, 20e-12, 100e-12), w.fast_hi);
        const auto r = car(map, w, recipes::kerr_pulse(true).pulse.rep_period);
        CHECK(r.coincidences_atoms_idler > 0.0);
        CHECK(r.car_signal_idler > r.car_atoms_idler);
        CHECK(r.car_atoms_idler > 1.0);

        SystemConfig doubled = c;
        doubled.kerr->g_kerr *= 2.0;  // twice the pump energy
        const auto map2 = pulsed_two_time(doubled, coincidence_grid(w, -0.2e-9, 20e-12, 100e-12), w.fast_hi);
        const auto r2 = car(map2, w, 1e-6);
        CHECK(r2.car_signal_idler < r.car_signal_idler);
        CHECK(r2.car_atoms_idler < r.car_atoms_idler);

        // Dark counts add accidentals, and more of them in the longer slow window.
        const auto noisy = car(map, w, 1e-6, {1e5, 1e5});
        CHECK(noisy.car_atoms_idler < r.car_atoms_idler);
        CHECK(noisy.car_signal_idler < r.car_signal_idler);
    }
}

TEST_CASE("coincidence bookkeeping") {
    SUBCASE("factorized coincidences give CAR 1") {
        const CoincidenceWindows w{0.0, 1.0, 2.0, 5.0};
        CoincidenceMap m;
        for (int k = 0; k <= 50; ++k) m.times.push_back(-0.5 + 0.11 * k);
        for (double t : m.times) {
            m.signal_flux.push_back(1.0 + std::exp(-std::abs(t - 1.0)));
            m.idler_flux.push_back(0.5 + 0.1 * std::cos(t));
        }
        m.first_count = m.times.size();
        const auto n = static_cast<Eigen::Index>(m.times.size());
        m.idler_then_signal.resize(n, n);
        m.signal_then_idler.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                m.idler_then_signal(i, j) = m.idler_flux[static_cast<std::size_t>(i)] * m.signal_flux[static_cast<std::size_t>(j)];
                m.signal_then_idler(i, j) = m.signal_flux[static_cast<std::size_t>(i)] * m.idler_flux[static_cast<std::size_t>(j)];
            }
        const auto r = car(m, w, 10.0);
        CHECK(r.car_signal_idler == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.car_atoms_idler == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(car(m, w, 10.0, {0.3, 0.7}).car_atoms_idler == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("window validation") {
        CHECK_THROWS_AS((CoincidenceWindows{0.0, 1.0, 0.5, 2.0}.validate(10.0)), ValidationError);
        CHECK_THROWS_AS((CoincidenceWindows{0.0, 1.0, 2.0, 20.0}.validate(10.0)), ValidationError);
        CHECK_THROWS_AS((CoincidenceWindows{1.0, 0.5, 2.0, 3.0}.validate(10.0)), ValidationError);
        CHECK_NOTHROW((CoincidenceWindows{}.validate(1e-6)));
    }
    SUBCASE("window weights integrate piecewise-linear data exactly") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> t{0.0};
            for (int k = 0; k < 20; ++k) t.push_back(t.back() + uniform(rng, 0.05, 0.5));
            const double lo = uniform(rng, 0.0, t.back());
            const double hi = uniform(rng, lo, t.back());
            const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
            const auto w = window_weights(t, lo, hi);
            double s = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k) s += w[k] * (a + b * t[k]);
            CHECK(s == doctest::Approx(a * (hi - lo) + 0.5 * b * (hi * hi - lo * lo)).epsilon(1e-10));
        }
    }
    SUBCASE("coincidence grid contains the window edges") {
        const CoincidenceWindows w;
        const auto g = coincidence_grid(w, -0.2e-9, 20e-12, 100e-12);
        for (double edge : {w.fast_lo, w.fast_hi, w.slow_lo, w.slow_hi})
            CHECK(std::abs(g[nearest(g, edge)] - edge) < 1e-21);
    }
}

TEST_CASE("two-exponential fit") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double k1 = uniform(rng, 5.0, 20.0), k2 = uniform(rng, 0.1, 1.0);
        const double p = uniform(rng, 1.0, 10.0), q = uniform(rng, 0.01, 0.1);
        const double r = uniform(rng, -0.9, 0.9) * std::sqrt(p * q);
        std::vector<double> t, y;
        for (int k = 0; k <= 300; ++k) {
            t.push_back(0.03 * k);
            y.push_back(p * std::exp(-k1 * t.back()) + q * std::exp(-k2 * t.back()) +
                        2 * r * std::exp(-0.5 * (k1 + k2) * t.back()));
        }
        const auto fit = fit_two_exponentials(t, y, 0.0, 9.0);
        CHECK(fit.fast_rate == doctest::Approx(k1).epsilon(1e-5));
        CHECK(fit.slow_rate == doctest::Approx(k2).epsilon(1e-5));
        CHECK(fit.cross_amplitude == doctest::Approx(r).epsilon(1e-4));
    }
    CHECK_THROWS_AS(fit_two_exponentials({0, 1, 2}, {1, 1, 1}, 0, 2), DomainError);
}
