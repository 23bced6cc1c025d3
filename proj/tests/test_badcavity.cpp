#include <doctest.h>

#include <random>

#include "ringcqed/badcavity.hpp"
#include "ringcqed/recipes.hpp"
#include "support.hpp"

using namespace ringcqed;
using testsupport::dense;
using testsupport::uniform;

namespace {

SystemConfig random_config(int n, std::mt19937_64& rng, bool backscatter) {
    SystemConfig c;
    c.cavity.kappa_c = uniform(rng, 0.5, 2.0);
    c.cavity.kappa_i = uniform(rng, 0.0, 0.3);
    c.cavity.g_bs = backscatter ? uniform(rng, 0.0, 1.0) : 0.0;
    for (int k = 0; k < n; ++k) {
        EmitterParams e;
        e.delta = uniform(rng, -2.0, 2.0);
        e.g = uniform(rng, 0.01, 0.2);
        e.phi = uniform(rng, -kPi, kPi);
        e.gamma = uniform(rng, 0.001, 0.01);
        e.gamma_ex = uniform(rng, 0.0005, 0.005);
        c.emitters.push_back(e);
    }
    return c;
}

double max_rel_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("coupling matrices") {
    SUBCASE("resonant Purcell limit") {
        SystemConfig c;
        c.cavity.kappa_c = 2.0;
        EmitterParams e;
        e.g = 0.1;
        e.phi = 0.8;
        c.emitters = {e};
        auto m = effective_couplings(c);
        CHECK(m.Gamma(0, 0).real() == doctest::Approx(4 * 0.01 / 2.0).epsilon(1e-12));
        CHECK(m.purcell[0] == doctest::Approx(4 * 0.01 / 2.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal phases do not share a decay channel") {
        SystemConfig c;
        c.cavity.kappa_c = 1.0;
        EmitterParams e;
        e.g = 0.1;
        e.delta = 0.3;
        e.phi = 0.2;
        c.emitters = {e, e};
        c.emitters[1].phi = 0.2 + kPi / 2;
        auto m = effective_couplings(c);
        CHECK(std::abs(m.Gamma(0, 1)) < 1e-15);
    }
    SUBCASE("gauge-invariant phases") {
        // J_mn Gamma_mn and closed loops are unchanged by sigma_n -> e^{i theta_n} sigma_n.
        auto invariant_phases = [](const EffectiveModel& m) {
            std::vector<double> out;
            for (int a = 0; a < 3; ++a)
                for (int b = a + 1; b < 3; ++b) out.push_back(std::arg(m.J(a, b) * m.Gamma(a, b)));
            out.push_back(std::arg(m.J(0, 1) * m.J(1, 2) * m.J(2, 0)));
            out.push_back(std::arg(m.Gamma(0, 1) * m.Gamma(1, 2) * m.Gamma(2, 0)));
            return out;
        };
        auto max_sin = [&](const SystemConfig& c) {
            double s = 0.0;
            for (double ph : invariant_phases(effective_couplings(c))) s = std::max(s, std::abs(std::sin(ph)));
            return s;
        };
        auto c = recipes::weak_triplet({0.1, 1.3, 2.2});
        // Identical detunings: both matrices are real already.
        CHECK(max_sin(c) < 1e-12);
        c.emitters[1].delta = 0.5;
        c.emitters[2].delta = -0.3;
        CHECK(max_sin(c) > 0.05);
        c.cavity.g_bs = 0.0;
        CHECK(max_sin(c) < 1e-12);

        c.cavity.g_bs = 0.5;
        const auto m = effective_couplings(c);
        EffectiveModel rephased = m;
        const double th[3] = {0.4, -1.1, 2.0};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                rephased.J(a, b) *= std::exp(kI * (th[b] - th[a]));
                rephased.Gamma(a, b) *= std::exp(kI * (th[a] - th[b]));
            }
        const auto before = invariant_phases(m);
        const auto after = invariant_phases(rephased);
        for (std::size_t k = 0; k < before.size(); ++k)
            CHECK(std::abs(std::sin(before[k] - after[k])) < 1e-9);
    }
}

TEST_CASE("structural properties on random configurations") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_config(1 + trial % 5, rng, true);
        auto m = effective_couplings(c);
        CHECK((m.Gamma - m.Gamma.adjoint()).cwiseAbs().maxCoeff() < 1e-15 * m.Gamma.cwiseAbs().maxCoeff() + 1e-300);
        CHECK((m.J - m.J.adjoint()).cwiseAbs().maxCoeff() < 1e-15 * m.J.cwiseAbs().maxCoeff() + 1e-300);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.Gamma);
        const double top = es.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(es.eigenvalues().minCoeff() > -1e-12 * top);
        int rank = 0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
            if (es.eigenvalues()(k) > 1e-10 * top) ++rank;
        CHECK(rank <= 2);
    }
}

TEST_CASE("gauge-fixed couplings equal the closed forms") {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_config(1 + trial % 4, rng, false);
        auto m = effective_couplings(c);
        auto fixed = gauge_fixed_couplings(m, c);
        auto closed = closed_form_couplings(c);
        CHECK(max_rel_diff(fixed.Gamma, closed.Gamma) < 1e-10);
        CHECK(max_rel_diff(fixed.J, closed.J) < 1e-10);
    }
}

TEST_CASE("non-PSD dissipator is rejected") {
    SystemConfig c;
    c.cavity.kappa_c = 1.0;
    EmitterParams e;
    e.g = 0.1;
    c.emitters = {e, e};
    auto m = effective_couplings(c);
    m.Gamma(0, 1) = m.Gamma(1, 0) = 2.0 * m.Gamma(0, 0);
    CHECK_THROWS_AS(build_effective_liouvillian(m, c, effective_space(c)), ModelError);
}

TEST_CASE("single emitter decays at gamma + Purcell like the full model") {
    const double eps = 0.01;
    SystemConfig c;
    c.cavity.kappa_c = 1.0;
    EmitterParams e;
    e.g = eps;
    e.gamma = eps * eps;
    e.phi = 0.3;
    c.emitters = {e};
    c.fock_cutoff = 1;
    auto m = effective_couplings(c);
    const double rate = e.gamma + m.purcell[0];
    const double t = 1.0 / rate;

    auto space = effective_space(c);
    auto leff = build_effective_liouvillian(m, c, space);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(1, 1) = 1.0;
    auto traj = evolve(leff, rho, {t});
    CHECK(traj.states[0](1, 1).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));

    auto full_space = build_space(c, {Mode::a, Mode::b});
    auto lfull = build_liouvillian(c, full_space);
    Eigen::MatrixXcd rf = Eigen::MatrixXcd::Zero(full_space.dim(), full_space.dim());
    rf(1, 1) = 1.0;
    auto tf = evolve(lfull, rf, {t});
    const double pe = expectation(full_space.projector(0, Level::excited), tf.states[0]).real();
    CHECK(std::abs(-std::log(pe) / t / rate - 1.0) < 0.01);
}

TEST_CASE("independent emitters factorize") {
    std::mt19937_64 rng(303);
    auto c = random_config(2, rng, true);
    auto m = without_cross_couplings(effective_couplings(c));
    auto space = effective_space(c);
    auto ss = steady_state(build_effective_liouvillian(m, c, space));
    for (int n = 0; n < 2; ++n) {
        const auto& e = c.emitters[static_cast<std::size_t>(n)];
        const double pe = e.gamma_ex / (e.gamma_ex + e.gamma + m.Gamma(n, n).real());
        CHECK(expectation(space.projector(n, Level::excited), ss.rho).real() == doctest::Approx(pe).epsilon(1e-10));
    }
    const double p0 = expectation(space.projector(0, Level::excited), ss.rho).real();
    const double p1 = expectation(space.projector(1, Level::excited), ss.rho).real();
    const Operator both = space.projector(0, Level::excited) * space.projector(1, Level::excited);
    CHECK(expectation(both, ss.rho).real() == doctest::Approx(p0 * p1).epsilon(1e-10));
}

TEST_CASE("collective operators") {
    SUBCASE("real couplings leave one standing mode dark") {
        SystemConfig c;
        c.cavity.kappa_c = 1.0;
        EmitterParams e;
        e.g = 0.1;
        e.delta = 0.4;
        c.emitters = {e, e};
        c.emitters[1].delta = -0.2;
        auto m = effective_couplings(c);
        auto [aa, ab] = collective_jump_ops(m, effective_space(c));
        CHECK(max_abs(SparseMatrix(aa - ab)) < 1e-16);
        CHECK(max_abs(aa) > 0.0);
    }
    SUBCASE("phase pi/4 emits equally in both directions") {
        SystemConfig c;
        c.cavity.kappa_c = 1.0;
        EmitterParams e;
        e.g = 0.1;
        e.phi = kPi / 4;
        e.gamma = 0.01;
        e.gamma_ex = 0.004;
        c.emitters = {e};
        auto sys = prepare_effective_model(effective_couplings(c), c);
        CHECK(sys.intensity("a") == doctest::Approx(sys.intensity("b")).epsilon(1e-12));
    }
    SUBCASE("intensities approach the full model") {
        std::vector<double> err;
        for (double eps : {0.2, 0.1, 0.05}) {
            auto c = recipes::bad_cavity_pair(eps, 2);
            auto m = effective_couplings(c);
            m.epsilon = eps;
            auto eff = prepare_effective_model(m, c);
            auto full = prepare_full_model(c);
            const double rel = std::abs(eff.intensity("a") - full.intensity("a") / (eps * eps)) /
                               (full.intensity("a") / (eps * eps));
            err.push_back(rel);
        }
        CHECK(err[1] < err[0]);
        CHECK(err[2] < err[1]);
        CHECK(err[2] < 0.1);
    }
}

TEST_CASE("uncorrelated emitters reach the zero-delay bounds") {
    SystemConfig c;
    c.cavity.kappa_c = 1.0;
    for (double phi : {0.0, kPi / 2, kPi, 3 * kPi / 2}) {
        EmitterParams e;
        e.g = 0.05;
        e.phi = phi;
        e.gamma = 0.002;
        e.gamma_ex = 0.001;
        e.gamma_deph = 0.003;
        c.emitters.push_back(e);
    }
    auto m = without_cross_couplings(effective_couplings(c));
    auto set = g2_all(prepare_effective_model(m, c), {0.0});
    CHECK(set.at_zero("a", "a") == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(set.at_zero("a", "b") == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("single emitter in the Markovian limit has identical channels") {
    SystemConfig c;
    c.cavity.kappa_c = 1.0;
    c.cavity.g_bs = 0.4;
    EmitterParams e;
    e.g = 0.05;
    e.delta = 0.3;
    e.phi = 0.9;
    e.gamma = 0.002;
    e.gamma_ex = 0.001;
    c.emitters = {e};
    auto set = g2_all(prepare_effective_model(effective_couplings(c), c), default_tau_grid(2000.0, 40));
    const auto aa = set.curve("a", "a");
    const auto ab = set.curve("a", "b");
    const auto bb = set.curve("b", "b");
    for (std::size_t i = 0; i < aa.values.size(); ++i) {
        CHECK(std::abs(aa.values[i] - ab.values[i]) < 1e-12);
        CHECK(std::abs(aa.values[i] - bb.values[i]) < 1e-12);
    }
    CHECK(std::abs(set.at_zero("a", "a")) < 1e-12);
    auto sys = prepare_effective_model(effective_couplings(c), c);
    auto g3v = g3_nested(sys, "a", "a", "a", {0.0}, {0.0});
    CHECK(std::abs(g3v.values(0, 0)) < 1e-12);
}

TEST_CASE("effective correlations converge to the full model") {
    for (int d : {1, 2}) {
        std::vector<double> errs;
        for (double eps : {0.2, 0.1, 0.05}) {
            auto c = recipes::bad_cavity_pair(eps, d);
            auto m = effective_couplings(c);
            const double horizon = 10.0 / m.purcell[0];
            std::vector<double> taus;
            for (int k = 0; k <= 40; ++k) taus.push_back(horizon * k / 40.0);
            const auto eff = g2_all(prepare_effective_model(m, c), taus).curve("a", "a");
            const auto full = g2_all(prepare_full_model(c), taus).curve("a", "a");
            double err = 0.0;
            for (std::size_t i = 0; i < eff.values.size(); ++i) err = std::max(err, std::abs(eff.values[i] - full.values[i]));
            errs.push_back(err);
            MESSAGE("d=" << d << " eps=" << eps << " sup error " << err);
        }
        if (d == 2) {
            CHECK(errs[1] < errs[0]);
            CHECK(errs[2] < errs[1]);
        }
    }
}
