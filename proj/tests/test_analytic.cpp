#include <doctest.h>

#include <random>

#include "ringcqed/analytic.hpp"
#include "ringcqed/badcavity.hpp"
#include "ringcqed/recipes.hpp"
#include "support.hpp"

using namespace ringcqed;
using testsupport::uniform;

namespace {

// Independent brute-force sum over ordered pairs.
double xi_brute(const std::vector<double>& w, const std::vector<double>& phi) {
    double num = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        tot += w[i];
        for (std::size_t j = 0; j < w.size(); ++j) num += w[i] * w[j] * std::cos(2.0 * phi[i] - 2.0 * phi[j]);
    }
    return num / (tot * tot);
}

IndepEnsemble random_ensemble(int n, std::mt19937_64& rng, bool shelf) {
    IndepEnsemble ens;
    for (int k = 0; k < n; ++k) {
        IndepEmitter e;
        e.weight = uniform(rng, 0.1, 2.0);
        e.delta = uniform(rng, -3.0, 3.0);
        e.phi = uniform(rng, -kPi, kPi);
        e.gamma = uniform(rng, 0.5, 2.0);
        e.gamma_deph = uniform(rng, 0.0, 2.0);
        e.gamma_ex = uniform(rng, 0.1, 1.0);
        if (shelf) {
            e.gamma_e = uniform(rng, 0.01, 0.5);
            e.gamma_s = uniform(rng, 0.01, 0.5);
        }
        ens.emitters.push_back(e);
    }
    return ens;
}

// Single shelved emitter whose correlations come from the regression theorem.
CorrelationSystem single_emitter_system(const EmitterParams& e) {
    SystemConfig c;
    c.cavity.kappa_c = 1.0;
    c.emitters = {e};
    auto model = without_cross_couplings(effective_couplings(c));
    model.Gamma.setZero();
    model.J.setZero();
    const auto space = effective_space(c);
    CorrelationSystem sys;
    sys.liouvillian = build_effective_liouvillian(model, c, space);
    sys.steady = steady_state(sys.liouvillian);
    sys.names = {"a", "b"};
    sys.channels = {space.lowering(0), space.lowering(0)};
    return sys;
}

}  // namespace

TEST_CASE("phase disorder parameter") {
    CHECK(xi_phi(std::vector<double>{0.3, 0.3, 0.3}) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> quarter{0.0, kPi / 4, kPi / 2, 3 * kPi / 4};
    CHECK(xi_phi(quarter) == doctest::Approx(xi_brute({1, 1, 1, 1}, quarter)).epsilon(1e-12));
    CHECK(std::abs(xi_phi(quarter)) < 1e-15);
    for (double target : recipes::kEnsembleXi)
        CHECK(xi_phi(recipes::ensemble_phases(target)) == doctest::Approx(target).epsilon(1e-12));

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto ens = random_ensemble(1 + trial % 6, rng, false);
        std::vector<double> w, p;
        for (const auto& e : ens.emitters) {
            w.push_back(e.weight);
            p.push_back(e.phi);
        }
        CHECK(xi_phi(ens) == doctest::Approx(xi_brute(w, p)).epsilon(1e-12));
    }
}

TEST_CASE("two-level formula") {
    SUBCASE("single emitter") {
        IndepEnsemble ens;
        ens.emitters = {IndepEmitter{.gamma = 1.3, .gamma_deph = 0.4, .gamma_ex = 0.2}};
        CHECK(g2_indep_2level(ens, ChannelPair::aa, 0.0) == doctest::Approx(0.0));
        for (double t : {-2.0, -0.3, 0.5, 1.7})
            CHECK(g2_indep_2level(ens, ChannelPair::ab, t) == doctest::Approx(1.0 - std::exp(-1.5 * std::abs(t))).epsilon(1e-14));
    }
    SUBCASE("identical emitters without phase disorder") {
        std::mt19937_64 rng(9);
        for (int n = 2; n <= 5; ++n) {
            auto ens = IndepEnsemble::identical(std::vector<double>(static_cast<std::size_t>(n), 0.7),
                                                IndepEmitter{.gamma = 1.0, .gamma_deph = 0.5, .gamma_ex = 0.3});
            for (int k = 0; k < 20; ++k) {
                const double t = uniform(rng, -5.0, 5.0);
                CHECK(g2_indep_2level(ens, ChannelPair::ab, t) ==
                      doctest::Approx(g2_indep_2level(ens, ChannelPair::aa, t)).epsilon(1e-14));
            }
        }
    }
    SUBCASE("ensemble fit values") {
        IdenticalFitModel m;
        m.n_emitters = 17.4;
        m.xi = 0.07;
        m.gamma = 1.0;
        CHECK(g2_fit_form(m, false, 0.0) == doctest::Approx(2.0 * (1.0 - 1.0 / 17.4)).epsilon(1e-14));
        CHECK(g2_fit_form(m, false, 0.0) == doctest::Approx(1.885).epsilon(1e-3));
        CHECK(g2_fit_form(m, true, 0.0) == doctest::Approx(1.0 + 0.07 - 2.0 / 17.4).epsilon(1e-14));
        CHECK(g2_fit_form(m, true, 0.0) == doctest::Approx(0.955).epsilon(1e-3));
    }
    SUBCASE("shelf-free emitters accept no shelving") {
        IndepEnsemble ens;
        ens.emitters = {IndepEmitter{.gamma = 1.0, .gamma_e = 0.1, .gamma_s = 0.1}};
        CHECK_THROWS_AS(g2_indep_2level(ens, ChannelPair::aa, 0.0), ValidationError);
    }
}

TEST_CASE("zero-delay identities, bound and symmetry") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const bool shelf = trial % 2 == 1;
        auto ens = random_ensemble(1 + trial % 7, rng, shelf);
        auto eval = [&](ChannelPair p, double t) {
            return shelf ? g2_indep_3level(ens, p, t) : g2_indep_2level(ens, p, t);
        };
        const double total = ens.total_weight();
        double sum_sq = 0.0;
        for (const auto& e : ens.emitters) sum_sq += (e.weight / total) * (e.weight / total);
        const double aa0 = eval(ChannelPair::aa, 0.0);
        CHECK(aa0 == doctest::Approx(2.0 - 2.0 * sum_sq).epsilon(1e-12));
        CHECK(eval(ChannelPair::ab, 0.0) == doctest::Approx(aa0 + xi_phi(ens) - 1.0).epsilon(1e-12));
        const double n = static_cast<double>(ens.emitters.size());
        CHECK(aa0 <= 2.0 * (1.0 - 1.0 / n) + 1e-14);

        const double t = uniform(rng, 0.0, 4.0);
        CHECK(eval(ChannelPair::aa, -t) == doctest::Approx(eval(ChannelPair::aa, t)).epsilon(1e-13));
        CHECK(eval(ChannelPair::bb, t) == doctest::Approx(eval(ChannelPair::aa, t)).epsilon(1e-13));
        CHECK(eval(ChannelPair::ab, -t) == doctest::Approx(eval(ChannelPair::ba, t)).epsilon(1e-13));
    }
    auto uniform_ens = IndepEnsemble::identical({0.1, 0.5, 2.0, -1.0}, IndepEmitter{.gamma = 1.0, .gamma_ex = 1.0});
    CHECK(g2_indep_2level(uniform_ens, ChannelPair::aa, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("shelved emitters") {
    SUBCASE("vanishing shelving recovers the two-level curve") {
        std::mt19937_64 rng(23);
        auto ens = random_ensemble(3, rng, false);
        auto shelved = ens;
        for (auto& e : shelved.emitters) {
            e.gamma_e = 1e-13;
            e.gamma_s = 0.3;
        }
        for (int k = 0; k <= 40; ++k) {
            const double t = -6.0 + 0.3 * k;
            for (auto p : {ChannelPair::aa, ChannelPair::ab, ChannelPair::ba})
                CHECK(std::abs(g2_indep_3level(shelved, p, t) - g2_indep_2level(ens, p, t)) < 1e-9);
        }
    }
    SUBCASE("bunching shoulder") {
        IndepEnsemble ens;
        ens.emitters = {IndepEmitter{.gamma = 1.0, .gamma_ex = 0.5, .gamma_e = 0.3, .gamma_s = 0.02}};
        double peak = 0.0;
        for (int k = 1; k < 200; ++k) peak = std::max(peak, g2_indep_3level(ens, ChannelPair::aa, 0.1 * k));
        CHECK(peak > 1.05);
        CHECK(g2_indep_3level(ens, ChannelPair::aa, 1e4) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("oscillatory regime is continued") {
        IndepEnsemble ens;
        ens.emitters = {IndepEmitter{.gamma = 0.1, .gamma_ex = 3.0, .gamma_e = 2.0, .gamma_s = 3.0}};
        bool continued = false;
        const double v = g2_indep_3level(ens, ChannelPair::aa, 0.7, &continued);
        CHECK(continued);
        CHECK(std::isfinite(v));
    }
    SUBCASE("matches regression theorem of the rate model") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 5; ++trial) {
            EmitterParams p;
            p.gamma = uniform(rng, 0.5, 2.0);
            p.gamma_deph = uniform(rng, 0.0, 1.0);
            p.gamma_ex = uniform(rng, 0.1, 1.5);
            p.gamma_e = uniform(rng, 0.05, 1.0);
            p.gamma_s = uniform(rng, 0.05, 1.0);
            const auto sys = single_emitter_system(p);
            std::vector<double> taus;
            for (int k = 0; k <= 30; ++k) taus.push_back(0.25 * k);
            const auto set = g2_all(sys, taus);
            IndepEnsemble ens;
            ens.emitters = {IndepEmitter{.gamma = p.gamma, .gamma_deph = p.gamma_deph, .gamma_ex = p.gamma_ex,
                                         .gamma_e = p.gamma_e, .gamma_s = p.gamma_s}};
            for (std::size_t k = 0; k < taus.size(); ++k)
                CHECK(std::abs(set.raw[0][0][k] / (set.intensities[0] * set.intensities[0]) -
                               g2_indep_3level(ens, ChannelPair::aa, taus[k])) < 1e-6);
        }
    }
}

TEST_CASE("agrees with the effective model when emitters are uncorrelated") {
    std::mt19937_64 rng(41);
    for (int n = 1; n <= 3; ++n) {
        SystemConfig c;
        c.cavity.kappa_c = 1.0;
        for (int k = 0; k < n; ++k) {
            EmitterParams e;
            e.g = uniform(rng, 0.02, 0.06);
            e.delta = uniform(rng, -0.5, 0.5);
            e.phi = uniform(rng, -kPi, kPi);
            e.gamma = uniform(rng, 0.001, 0.004);
            e.gamma_deph = uniform(rng, 0.0, 0.004);
            e.gamma_ex = uniform(rng, 0.0005, 0.003);
            c.emitters.push_back(e);
        }
        auto model = without_cross_couplings(effective_couplings(c));
        IndepEnsemble ens;
        for (int k = 0; k < n; ++k) {
            const auto& e = c.emitters[static_cast<std::size_t>(k)];
            const double purcell = model.Gamma(k, k).real();
            IndepEmitter ie;
            ie.gamma = e.gamma + purcell;
            ie.gamma_deph = e.gamma_deph;
            ie.gamma_ex = e.gamma_ex;
            ie.delta = e.delta + model.J(k, k).real();
            ie.phi = e.phi;
            ie.weight = intensity_weight_2level(purcell, ie.gamma, ie.gamma_ex);
            ens.emitters.push_back(ie);
        }
        std::vector<double> taus;
        for (int k = 0; k <= 40; ++k) taus.push_back(10.0 * k);
        const auto set = g2_all(prepare_effective_model(model, c), taus);
        for (const auto& [x, y, pair] : {std::tuple{"a", "a", ChannelPair::aa}, std::tuple{"a", "b", ChannelPair::ab},
                                          std::tuple{"b", "a", ChannelPair::ba}, std::tuple{"b", "b", ChannelPair::bb}}) {
            const auto curve = set.curve(x, y);
            for (std::size_t k = 0; k < curve.taus.size(); ++k)
                CHECK(std::abs(curve.values[k] - g2_indep_2level(ens, pair, curve.taus[k])) < 1e-6);
        }
    }
}

TEST_CASE("spectral diffusion") {
    std::mt19937_64 rng(53);
    auto ens = random_ensemble(3, rng, false);
    SUBCASE("zero spread reduces to the bare formula") {
        for (double t : {-1.0, 0.0, 0.4, 2.5})
            CHECK(g2_diffused(ens, ChannelPair::ab, t) == doctest::Approx(g2_indep_2level(ens, ChannelPair::ab, t)).epsilon(1e-15));
    }
    SUBCASE("one gigahertz spread removes interference after a nanosecond") {
        IdenticalFitModel m;
        m.n_emitters = 4;
        m.xi = 0.3;
        m.gamma = mhz_to_rad_s(15.0);
        m.gamma_s = mhz_to_rad_s(1.0);
        m.spread = kTwoPi * 1e9;
        const double factor = std::exp(-0.5 * m.spread * m.spread * 1e-9 * 1e-9);
        CHECK(factor < 1e-8);
        auto without = m;
        without.xi = 1.0 / m.n_emitters;
        CHECK(g2_fit_form(m, true, 1e-9) == doctest::Approx(g2_fit_form(without, true, 1e-9)).epsilon(1e-8));
    }
    SUBCASE("closed form matches the sampled average") {
        for (auto& e : ens.emitters) e.spread = uniform(rng, 0.5, 2.0);
        std::vector<double> taus{-1.5, -0.4, 0.0, 0.3, 0.8, 2.0};
        DiffusionSampling s;
        s.draws = 10000;
        s.seed = 77;
        for (auto pair : {ChannelPair::aa, ChannelPair::ab}) {
            const auto mc = g2_diffused_monte_carlo(ens, pair, taus, s);
            for (std::size_t k = 0; k < taus.size(); ++k)
                CHECK(std::abs(mc.mean[k] - g2_diffused(ens, pair, taus[k])) <= 3.0 * mc.standard_error[k] + 1e-12);
        }
    }
    SUBCASE("identical-emitter fit form equals the per-emitter form") {
        IdenticalFitModel m;
        m.n_emitters = 4;
        m.gamma = 1.0;
        m.gamma_deph = 0.7;
        m.gamma_ex = 0.3;
        m.gamma_e = 0.2;
        m.gamma_s = 0.1;
        m.spread = 1.3;
        const auto phases = recipes::ensemble_phases(0.3);
        m.xi = xi_phi(phases);
        // Identical spreads s_n = s / sqrt2 give a pairwise spread s.
        auto per = IndepEnsemble::identical(phases, IndepEmitter{.gamma = 1.0, .gamma_deph = 0.7, .gamma_ex = 0.3,
                                                                 .gamma_e = 0.2, .gamma_s = 0.1,
                                                                 .spread = 1.3 / std::sqrt(2.0)});
        for (double t : {-2.0, -0.5, 0.0, 0.25, 1.0, 3.0}) {
            CHECK(g2_fit_form(m, true, t) == doctest::Approx(g2_diffused(per, ChannelPair::ab, t)).epsilon(1e-12));
            CHECK(g2_fit_form(m, false, t) == doctest::Approx(g2_diffused(per, ChannelPair::aa, t)).epsilon(1e-12));
        }
    }
}
