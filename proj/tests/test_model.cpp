#include <doctest.h>

#include <algorithm>
#include <random>

#include "ringcqed/model.hpp"
#include "support.hpp"

using namespace ringcqed;
using testsupport::dense;

namespace {

SystemConfig simple_config(int n_emitters, double g = 1.0) {
    SystemConfig c;
    c.cavity.kappa_c = 3.0;
    c.cavity.kappa_i = 0.5;
    for (int n = 0; n < n_emitters; ++n) {
        EmitterParams e;
        e.g = g;
        e.gamma = 0.2;
        c.emitters.push_back(e);
    }
    return c;
}

SystemConfig random_config(int n_emitters, std::mt19937_64& rng, bool three_level = false) {
    using testsupport::uniform;
    SystemConfig c;
    c.cavity.kappa_c = uniform(rng, 0.5, 2.0);
    c.cavity.kappa_i = uniform(rng, 0.0, 0.5);
    c.cavity.g_bs = uniform(rng, 0.0, 1.0);
    for (int n = 0; n < n_emitters; ++n) {
        EmitterParams e;
        e.delta = uniform(rng, -1.0, 1.0);
        e.g = uniform(rng, 0.1, 1.0);
        e.phi = uniform(rng, 0.0, kTwoPi);
        e.gamma = uniform(rng, 0.05, 0.3);
        e.gamma_deph = uniform(rng, 0.0, 0.2);
        e.gamma_ex = uniform(rng, 0.0, 0.1);
        if (three_level) {
            e.gamma_e = uniform(rng, 0.01, 0.1);
            e.gamma_s = uniform(rng, 0.01, 0.1);
        }
        c.emitters.push_back(e);
    }
    return c;
}

Eigen::VectorXcd single_excitation_eigenvalues(const Eigen::MatrixXcd& h, const HilbertSpace& space) {
    // Basis states with exactly one excitation (photon or emitter).
    Eigen::MatrixXcd nexc = Eigen::MatrixXcd::Zero(space.dim(), space.dim());
    for (Mode m : space.modes()) {
        const auto& a = space.annihilation(m);
        nexc += dense(SparseMatrix(a.adjoint()) * a);
    }
    for (int n = 0; n < space.n_emitters(); ++n) nexc += dense(space.projector(n, Level::excited));
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < space.dim(); ++i)
        if (std::abs(nexc(i, i) - 1.0) < 1e-12) idx.push_back(i);
    Eigen::MatrixXcd block(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) block(i, j) = h(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
    return es.eigenvalues().cast<cplx>();
}

}  // namespace

TEST_CASE("dimension bookkeeping") {
    auto c = simple_config(1);
    c.fock_cutoff = 1;
    CHECK(build_space(c, {Mode::a, Mode::b}).dim() == 8);

    auto c4 = simple_config(4);
    c4.fock_cutoff = 2;
    CHECK(build_space(c4, {Mode::a, Mode::b}).dim() == 144);

    auto c3 = simple_config(1);
    c3.emitters[0].gamma_e = 0.1;
    c3.emitters[0].gamma_s = 0.1;
    c3.kerr = KerrParams{};
    CHECK(build_space(c3, {Mode::a, Mode::idler}).dim() == 27);
}

TEST_CASE("capacity error above the dimension cap") {
    auto c = simple_config(4);
    c.fock_cutoff = 3;
    c.dimension_cap = 200;
    CHECK_THROWS_AS(build_space(c, {Mode::a, Mode::b}), CapacityError);
}

TEST_CASE("validation names the offending field") {
    auto c = simple_config(3);
    c.emitters[2].gamma = -1.0;
    try {
        c.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field == "emitters[2].gamma");
    }
    auto c2 = simple_config(1);
    c2.emitters[0].gamma_e = 0.1;
    CHECK_THROWS_AS(c2.validate(), ValidationError);
    auto c3 = simple_config(1);
    c3.cavity.kappa_c = 0.0;
    c3.cavity.kappa_i = 0.0;
    CHECK_THROWS_AS(c3.validate(), ValidationError);
}

TEST_CASE("absent mode access throws") {
    auto c = simple_config(1);
    auto space = build_space(c, {Mode::a, Mode::b});
    CHECK_THROWS_AS(space.annihilation(Mode::idler), std::out_of_range);
    CHECK_THROWS_AS(space.transition(0, Level::shelf, Level::excited), std::out_of_range);
}

TEST_CASE("Hamiltonians are Hermitian and Liouvillians trace preserving") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 3;
        auto c = random_config(n, rng, trial % 2 == 1);
        c.fock_cutoff = n == 3 ? 1 : 2;
        auto space = build_space(c, {Mode::a, Mode::b});
        auto h = build_hamiltonian(c, space);
        CHECK(hermiticity_defect(h) < 1e-12);

        auto l = build_liouvillian(c, space);
        // Adjoint annihilates the identity: trace functional times L vanishes.
        const Eigen::RowVectorXcd t = trace_functional(space.dim());
        const Eigen::RowVectorXcd tl = t * l.matrix;
        CHECK(tl.cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, max_abs(l.matrix)));

        for (int k = 0; k < (trial == 0 ? 100 : 5); ++k) {
            const Eigen::MatrixXcd rho = testsupport::random_density(space.dim(), rng);
            const cplx tr = t * l.apply(vec(rho));
            CHECK(std::abs(tr) < 1e-10 * rho.norm() * std::max(1.0, max_abs(l.matrix)));
        }
    }
}

TEST_CASE("maximally mixed state has zero trace derivative") {
    auto c = simple_config(2);
    auto space = build_space(c, {Mode::a, Mode::b});
    auto l = build_liouvillian(c, space);
    const Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(space.dim(), space.dim()) / double(space.dim());
    const cplx tr = trace_functional(space.dim()) * l.apply(vec(rho));
    CHECK(std::abs(tr) < 1e-14);
}

TEST_CASE("population operators are projectors") {
    std::mt19937_64 rng(3);
    auto c = random_config(2, rng, true);
    auto space = build_space(c, {Mode::a, Mode::b});
    for (int n = 0; n < 2; ++n) {
        const auto& s = space.lowering(n);
        const Eigen::MatrixXcd p = dense(SparseMatrix(s.adjoint()) * s);
        CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        const Eigen::MatrixXcd ps = dense(space.projector(n, Level::shelf));
        CHECK((ps * ps - ps).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((ps * p).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("vectorization identities") {
    std::mt19937_64 rng(5);
    const Eigen::Index d = 5;
    const Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(d, d);
    const Eigen::MatrixXcd b = Eigen::MatrixXcd::Random(d, d);
    const Eigen::MatrixXcd rho = testsupport::random_density(d, rng);
    const auto sa = to_sparse(a);
    const auto sb = to_sparse(b);
    CHECK((unvec(spre(sa) * vec(rho), d) - a * rho).norm() < 1e-12);
    CHECK((unvec(spost(sb) * vec(rho), d) - rho * b).norm() < 1e-12);
    CHECK((unvec(sandwich(sa, sb) * vec(rho), d) - a * rho * b.adjoint()).norm() < 1e-12);
    const cplx expect = expectation_functional(sa) * vec(rho);
    CHECK(std::abs(expect - (a * rho).trace()) < 1e-12);
}

TEST_CASE("single emitter decays at gamma") {
    auto c = simple_config(1, 0.0);
    c.emitters[0].gamma = 0.7;
    auto space = build_space(c, {Mode::a, Mode::b});
    auto l = build_liouvillian(c, space);
    Eigen::MatrixXcd rho = dense(space.projector(0, Level::excited));
    rho /= rho.trace();
    const Eigen::RowVectorXcd pe = expectation_functional(space.projector(0, Level::excited));
    for (double t : {0.3, 1.0, 2.5}) {
        const auto v = testsupport::expm_apply(dense(l.matrix), t, vec(rho));
        CHECK(std::abs(cplx(pe * v) - std::exp(-0.7 * t)) < 1e-10);
    }
}

TEST_CASE("Jaynes-Cummings splitting is phase independent") {
    auto c = simple_config(1, 0.8);
    c.emitters[0].phi = 0.7;
    c.fock_cutoff = 1;
    auto space = build_space(c, {Mode::a, Mode::b});
    const auto ev = single_excitation_eigenvalues(dense(build_hamiltonian(c, space)), space);
    REQUIRE(ev.size() == 3);
    CHECK(ev(0).real() == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(std::abs(ev(1)) < 1e-12);  // dark standing mode
    CHECK(ev(2).real() == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("backscattering hybridizes the modes at +-g_bs") {
    auto c = simple_config(1, 0.0);
    c.cavity.g_bs = 0.5 * c.cavity.kappa();
    c.fock_cutoff = 1;
    auto space = build_space(c, {Mode::a, Mode::b});
    const auto ev = single_excitation_eigenvalues(dense(build_hamiltonian(c, space)), space);
    REQUIRE(ev.size() == 3);
    CHECK(ev(0).real() == doctest::Approx(-c.cavity.g_bs).epsilon(1e-12));
    CHECK(std::abs(ev(1)) < 1e-12);  // bare emitter at zero detuning
    CHECK(ev(2).real() == doctest::Approx(c.cavity.g_bs).epsilon(1e-12));
}

TEST_CASE("mode exchange equals phase conjugation") {
    std::mt19937_64 rng(21);
    auto c = random_config(2, rng);
    auto space = build_space(c, {Mode::a, Mode::b});
    auto flipped = c;
    for (auto& e : flipped.emitters) e.phi = -e.phi;

    // Permutation swapping the a and b tensor factors.
    const Eigen::Index nf = space.fock_cutoff() + 1;
    const Eigen::Index rest = space.dim() / (nf * nf);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(space.dim());
    for (Eigen::Index na = 0; na < nf; ++na)
        for (Eigen::Index nb = 0; nb < nf; ++nb)
            for (Eigen::Index r = 0; r < rest; ++r) perm.indices()((na * nf + nb) * rest + r) = (nb * nf + na) * rest + r;

    const Eigen::MatrixXcd h = dense(build_hamiltonian(c, space));
    const Eigen::MatrixXcd hf = dense(build_hamiltonian(flipped, space));
    CHECK((perm * h * perm.transpose() - hf).cwiseAbs().maxCoeff() < 1e-13);

    const Eigen::MatrixXcd a = dense(space.annihilation(Mode::a));
    const Eigen::MatrixXcd b = dense(space.annihilation(Mode::b));
    CHECK((perm * a * perm.transpose() - b).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("standing modes") {
    auto c = simple_config(2, 1.0);
    c.emitters[0].phi = 0.4;
    c.emitters[1].phi = 0.4;
    auto space = build_space(c, {Mode::a, Mode::b});

    SUBCASE("common phase leaves a dark mode after rephasing") {
        auto sm = standing_mode_transform(c, space, -0.4);
        for (const auto& g : sm.g2) CHECK(std::abs(g) < 1e-15);
        // The interaction written with the standing modes matches the Hamiltonian.
        Operator hint(space.dim(), space.dim());
        for (int n = 0; n < 2; ++n) {
            const Operator sd = space.lowering(n).adjoint();
            const Operator t1 = std::conj(sm.g1[n]) * (sd * sm.a1);
            const Operator t2 = std::conj(sm.g2[n]) * (sd * sm.a2);
            hint += t1 + Operator(t1.adjoint()) + t2 + Operator(t2.adjoint());
        }
        CHECK((dense(hint) - dense(build_hamiltonian(c, space))).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("zero phase") {
        auto c0 = c;
        for (auto& e : c0.emitters) e.phi = 0.0;
        auto sm = standing_mode_transform(c0, space);
        for (const auto& g : sm.g2) CHECK(std::abs(g) == 0.0);
        for (const auto& g : sm.g1) CHECK(std::abs(g) == doctest::Approx(1.0));
    }
    SUBCASE("phase pi/2 darkens the symmetric mode") {
        auto c0 = c;
        for (auto& e : c0.emitters) e.phi = kPi / 2;
        auto sm = standing_mode_transform(c0, space);
        for (const auto& g : sm.g1) CHECK(std::abs(g) < 1e-15);
    }
    SUBCASE("phase pi/4 splits coupling evenly") {
        auto c0 = c;
        const double g = mhz_to_rad_s(150.0);
        for (auto& e : c0.emitters) {
            e.phi = kPi / 4;
            e.g = g;
        }
        auto sm = standing_mode_transform(c0, space);
        CHECK(std::abs(sm.g1[0]) == doctest::Approx(g / std::sqrt(2.0)));
        CHECK(std::abs(sm.g2[0]) == doctest::Approx(g / std::sqrt(2.0)));
    }
    SUBCASE("eigenfrequencies") {
        auto c0 = c;
        c0.cavity.g_bs = 0.3;
        auto sm = standing_mode_transform(c0, space);
        CHECK(sm.omega1 == 0.3);
        CHECK(sm.omega2 == -0.3);
    }
}

TEST_CASE("global gauge shift is a mode rephasing") {
    std::mt19937_64 rng(8);
    auto c = random_config(2, rng);
    c.cavity.g_bs = 0.0;
    auto space = build_space(c, {Mode::a, Mode::b});
    const double shift = 0.9;
    auto shifted = gauge_transform(c, {shift, shift});
    CHECK(shifted.emitters[1].phi == doctest::Approx(c.emitters[1].phi + shift));
    // U = exp(-i shift n_a + i shift n_b) maps H onto the shifted Hamiltonian.
    const Eigen::MatrixXcd na = dense(SparseMatrix(space.annihilation(Mode::a).adjoint()) * space.annihilation(Mode::a));
    const Eigen::MatrixXcd nb = dense(SparseMatrix(space.annihilation(Mode::b).adjoint()) * space.annihilation(Mode::b));
    Eigen::VectorXcd phases(space.dim());
    for (Eigen::Index i = 0; i < space.dim(); ++i) phases(i) = std::exp(kI * shift * (nb(i, i) - na(i, i)).real());
    const Eigen::MatrixXcd u = phases.asDiagonal();
    const Eigen::MatrixXcd h = dense(build_hamiltonian(c, space));
    const Eigen::MatrixXcd hs = dense(build_hamiltonian(shifted, space));
    CHECK((u * h * u.adjoint() - hs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS(gauge_transform(c, {0.1}));
}

TEST_CASE("Purcell rate") {
    CHECK(purcell_rate(2.0, 0.0, 4.0) == doctest::Approx(4.0 * 4.0 / 4.0));
    CHECK(purcell_rate(1.0, 1.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("Kerr pump interpolation") {
    KerrParams k;
    k.g_kerr = 2.0;
    k.pump_times = {0.0, 1.0, 2.0};
    k.pump_field = {0.0, cplx(1.0, 1.0), 0.0};
    CHECK(std::abs(k.pump_at(0.5) - cplx(0.5, 0.5)) < 1e-15);
    CHECK(std::abs(k.pump_at(-1.0)) == 0.0);
    CHECK(std::abs(k.pump_at(3.0)) == 0.0);
    CHECK(std::abs(k.drive_at(1.0) - 2.0 * cplx(1.0, 1.0) * cplx(1.0, 1.0)) < 1e-15);
}
