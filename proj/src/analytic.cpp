#include "ringcqed/analytic.hpp"

#include <cmath>
#include <random>

#include "ringcqed/model.hpp"

namespace ringcqed {

ChannelPair parse_pair(const std::string& text) {
    if (text == "aa") return ChannelPair::aa;
    if (text == "ab") return ChannelPair::ab;
    if (text == "ba") return ChannelPair::ba;
    if (text == "bb") return ChannelPair::bb;
    throw ValidationError("pair", "expected one of aa, ab, ba, bb, got '" + text + "'");
}

std::string to_string(ChannelPair pair) {
    switch (pair) {
        case ChannelPair::aa: return "aa";
        case ChannelPair::ab: return "ab";
        case ChannelPair::ba: return "ba";
        case ChannelPair::bb: return "bb";
    }
    return "?";
}

void IndepEnsemble::validate() const {
    if (emitters.empty()) throw ValidationError("emitters", "at least one emitter required");
    double total = 0.0;
    for (std::size_t n = 0; n < emitters.size(); ++n) {
        const auto& e = emitters[n];
        const std::string p = "emitters[" + std::to_string(n) + "].";
        auto nonneg = [&](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(p + name, "must be finite and >= 0");
        };
        nonneg(e.weight, "weight");
        nonneg(e.gamma, "gamma");
        nonneg(e.gamma_deph, "gamma_deph");
        nonneg(e.gamma_ex, "gamma_ex");
        nonneg(e.gamma_e, "gamma_e");
        nonneg(e.gamma_s, "gamma_s");
        nonneg(e.spread, "spread");
        if (!std::isfinite(e.delta)) throw ValidationError(p + "delta", "must be finite");
        if (!std::isfinite(e.phi)) throw ValidationError(p + "phi", "must be finite");
        total += e.weight;
    }
    if (!(total > 0.0)) throw ValidationError("emitters", "total intensity weight must be positive");
}

double IndepEnsemble::total_weight() const {
    double total = 0.0;
    for (const auto& e : emitters) total += e.weight;
    return total;
}

IndepEnsemble IndepEnsemble::identical(const std::vector<double>& phases, const IndepEmitter& prototype,
                                       const std::vector<double>& deltas) {
    if (!deltas.empty() && deltas.size() != phases.size())
        throw std::invalid_argument("identical ensemble: one detuning per phase required");
    IndepEnsemble ens;
    for (std::size_t n = 0; n < phases.size(); ++n) {
        IndepEmitter e = prototype;
        e.weight = 1.0;
        e.phi = phases[n];
        if (!deltas.empty()) e.delta = deltas[n];
        ens.emitters.push_back(e);
    }
    return ens;
}

double xi_phi(const IndepEnsemble& ensemble) {
    ensemble.validate();
    const double total = ensemble.total_weight();
    double xi = 0.0;
    for (const auto& a : ensemble.emitters)
        for (const auto& b : ensemble.emitters) xi += a.weight * b.weight * std::cos(2.0 * (a.phi - b.phi));
    return xi / (total * total);
}

double xi_phi(const std::vector<double>& phases) {
    IndepEnsemble ens;
    for (double p : phases) ens.emitters.push_back(IndepEmitter{.phi = p});
    return xi_phi(ens);
}

double intensity_weight_2level(double purcell, double gamma, double gamma_ex) {
    return gamma_ex * purcell / (gamma + gamma_ex);
}

double intensity_weight_3level(double purcell, double gamma, double gamma_ex, double gamma_e, double gamma_s) {
    const double y = (gamma + gamma_e) * gamma_s + (gamma_s + gamma_e) * gamma_ex;
    return gamma_ex * gamma_s * purcell / y;
}

namespace {

double two_level_self(const IndepEmitter& e, double t) { return std::exp(-(e.gamma + e.gamma_ex) * t); }

// e^{-x t}(cosh z t - lambda sinh z t), written with lambda z so that z -> 0 and
// imaginary z need no special parameters.
double shelf_self(const IndepEmitter& e, double t, bool* continued) {
    const double x = 0.5 * (e.gamma + e.gamma_e + e.gamma_s + e.gamma_ex);
    const double y = (e.gamma + e.gamma_e) * e.gamma_s + (e.gamma_s + e.gamma_e) * e.gamma_ex;
    const double lz = x - e.gamma_s + e.gamma_e * e.gamma_ex / e.gamma_s;
    const double d = x * x - y;
    if (d >= 0.0) {
        const double z = std::sqrt(d);
        const double up = std::exp((z - x) * t);
        const double down = std::exp(-(z + x) * t);
        const double ch = 0.5 * (up + down);
        double sh_over_z;
        if (z * t < 1e-4)
            sh_over_z = t * std::exp(-x * t) * (1.0 + (z * t) * (z * t) / 6.0);
        else
            sh_over_z = 0.5 * (up - down) / z;
        return ch - lz * sh_over_z;
    }
    if (continued) *continued = true;
    const double w = std::sqrt(-d);
    const double damp = std::exp(-x * t);
    const double sin_over_w = (w * t < 1e-4) ? t * (1.0 - (w * t) * (w * t) / 6.0) : std::sin(w * t) / w;
    return damp * (std::cos(w * t) - lz * sin_over_w);
}

double pair_sign(ChannelPair pair) {
    switch (pair) {
        case ChannelPair::ab: return 1.0;
        case ChannelPair::ba: return -1.0;
        default: return 0.0;
    }
}

template <class SelfTerm>
double assemble(const IndepEnsemble& ens, ChannelPair pair, double tau, bool diffused, SelfTerm&& self) {
    const double total = ens.total_weight();
    const double t = std::abs(tau);
    const double sign = pair_sign(pair);
    double value = 1.0;
    const std::size_t n = ens.emitters.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = ens.emitters[i];
        const double ri = a.weight / total;
        value -= ri * ri * self(a, t);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto& b = ens.emitters[j];
            const double rj = b.weight / total;
            const double rate = 0.5 * (a.gamma + a.gamma_e + a.gamma_ex + a.gamma_deph + b.gamma + b.gamma_e +
                                       b.gamma_ex + b.gamma_deph);
            double term = std::exp(-rate * t) * std::cos((a.delta - b.delta) * tau - sign * 2.0 * (a.phi - b.phi));
            if (diffused) term *= std::exp(-0.5 * (a.spread * a.spread + b.spread * b.spread) * tau * tau);
            value += ri * rj * term;
        }
    }
    return value;
}

void require_shelf(const IndepEnsemble& ens) {
    for (std::size_t n = 0; n < ens.emitters.size(); ++n)
        if (!(ens.emitters[n].gamma_s > 0.0))
            throw ValidationError("emitters[" + std::to_string(n) + "].gamma_s", "must be > 0 for the shelved model");
}

}  // namespace

double g2_indep_2level(const IndepEnsemble& ensemble, ChannelPair pair, double tau) {
    ensemble.validate();
    for (std::size_t n = 0; n < ensemble.emitters.size(); ++n)
        if (ensemble.emitters[n].gamma_e != 0.0)
            throw ValidationError("emitters[" + std::to_string(n) + "].gamma_e", "must be 0 for the two-level model");
    return assemble(ensemble, pair, tau, false, [](const IndepEmitter& e, double t) { return two_level_self(e, t); });
}

double g2_indep_3level(const IndepEnsemble& ensemble, ChannelPair pair, double tau, bool* continued) {
    ensemble.validate();
    require_shelf(ensemble);
    if (continued) *continued = false;
    return assemble(ensemble, pair, tau, false,
                    [&](const IndepEmitter& e, double t) { return shelf_self(e, t, continued); });
}

double g2_diffused(const IndepEnsemble& ensemble, ChannelPair pair, double tau) {
    ensemble.validate();
    bool shelved = false;
    for (const auto& e : ensemble.emitters) shelved = shelved || e.gamma_e > 0.0;
    if (!shelved)
        return assemble(ensemble, pair, tau, true, [](const IndepEmitter& e, double t) { return two_level_self(e, t); });
    require_shelf(ensemble);
    return assemble(ensemble, pair, tau, true,
                    [](const IndepEmitter& e, double t) { return shelf_self(e, t, nullptr); });
}

void IdenticalFitModel::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be finite and >= 0");
    };
    if (!(n_emitters >= 1.0) || !std::isfinite(n_emitters)) throw ValidationError("n_emitters", "must be >= 1");
    if (!std::isfinite(xi)) throw ValidationError("xi", "must be finite");
    nonneg(gamma, "gamma");
    nonneg(gamma_deph, "gamma_deph");
    nonneg(gamma_ex, "gamma_ex");
    nonneg(gamma_e, "gamma_e");
    nonneg(spread, "spread");
    if (!(gamma_s > 0.0)) throw ValidationError("gamma_s", "must be > 0");
}

double g2_fit_form(const IdenticalFitModel& m, bool cross, double tau) {
    const double t = std::abs(tau);
    IndepEmitter e;
    e.gamma = m.gamma;
    e.gamma_ex = m.gamma_ex;
    e.gamma_e = m.gamma_e;
    e.gamma_s = m.gamma_s;
    const double self = shelf_self(e, t, nullptr);
    const double xi = cross ? m.xi : 1.0;
    const double coherence = std::exp(-(m.gamma + m.gamma_e + m.gamma_ex + m.gamma_deph) * t) *
                             std::exp(-0.5 * m.spread * m.spread * tau * tau);
    return 1.0 - self / m.n_emitters + (xi - 1.0 / m.n_emitters) * coherence;
}

MonteCarloCurve g2_diffused_monte_carlo(const IndepEnsemble& ensemble, ChannelPair pair,
                                        const std::vector<double>& taus, const DiffusionSampling& sampling) {
    ensemble.validate();
    if (sampling.draws < 2) throw ValidationError("draws", "at least two draws required");
    const std::size_t n = ensemble.emitters.size();
    if (sampling.purcell_weighting && (sampling.couplings.size() != n || !(sampling.kappa > 0.0)))
        throw ValidationError("couplings", "Purcell weighting needs one coupling per emitter and kappa > 0");
    bool shelved = false;
    for (const auto& e : ensemble.emitters) shelved = shelved || e.gamma_e > 0.0;

    std::mt19937_64 rng(sampling.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sum(taus.size(), 0.0), sum_sq(taus.size(), 0.0);
    IndepEnsemble draw = ensemble;
    for (auto& e : draw.emitters) e.spread = 0.0;
    for (std::size_t k = 0; k < sampling.draws; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& src = ensemble.emitters[i];
            auto& e = draw.emitters[i];
            e.delta = src.delta + src.spread * normal(rng);
            if (sampling.purcell_weighting) {
                const double purcell = purcell_rate(sampling.couplings[i], e.delta, sampling.kappa);
                e.gamma = sampling.intrinsic_gamma + purcell;
                e.weight = shelved ? intensity_weight_3level(purcell, e.gamma, e.gamma_ex, e.gamma_e, e.gamma_s)
                                   : intensity_weight_2level(purcell, e.gamma, e.gamma_ex);
            }
        }
        for (std::size_t t = 0; t < taus.size(); ++t) {
            const double v = shelved ? g2_indep_3level(draw, pair, taus[t]) : g2_indep_2level(draw, pair, taus[t]);
            sum[t] += v;
            sum_sq[t] += v * v;
        }
    }
    MonteCarloCurve out;
    out.taus = taus;
    const double m = static_cast<double>(sampling.draws);
    for (std::size_t t = 0; t < taus.size(); ++t) {
        const double mean = sum[t] / m;
        const double var = std::max(sum_sq[t] / m - mean * mean, 0.0) * m / (m - 1.0);
        out.mean.push_back(mean);
        out.standard_error.push_back(std::sqrt(var / m));
    }
    return out;
}

}  // namespace ringcqed
