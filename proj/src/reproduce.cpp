#include "ringcqed/reproduce.hpp"

#include <cmath>
#include <sstream>

#include "ringcqed/analytic.hpp"
#include "ringcqed/badcavity.hpp"
#include "ringcqed/kerr.hpp"
#include "ringcqed/parallel.hpp"
#include "ringcqed/recipes.hpp"

namespace ringcqed {

namespace {

std::string tag(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

double max_abs_diff(const CorrelationCurve& x, const CorrelationCurve& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) d = std::max(d, std::abs(x.values[i] - y.values[i]));
    return d;
}

FigureBundle ensemble_figure(const OdeOptions& options, unsigned workers) {
    FigureBundle out;
    out.name = "fig3";
    const auto taus = default_tau_grid(40e-9, 200);
    const auto& xis = recipes::kEnsembleXi;
    struct Run {
        G2Set full, bad;
    };
    std::vector<Run> runs(xis.size());
    parallel_for(
        xis.size(),
        [&](std::size_t k) {
            const SystemConfig c = recipes::ensemble(xis[k]);
            runs[k].full = g2_all(prepare_full_model(c), taus, options);
            runs[k].bad = g2_all(prepare_effective_model(effective_couplings(c), c), taus, options);
        },
        workers);
    std::vector<std::pair<std::string, CorrelationCurve>> full, bad;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < xis.size(); ++k) {
        const std::string s = "_xi" + tag(xis[k]);
        for (const char* pair : {"aa", "ab"}) {
            const std::string x(1, pair[0]), y(1, pair[1]);
            full.emplace_back(std::string(pair) + s, runs[k].full.curve(x, y));
            bad.emplace_back(std::string(pair) + s, runs[k].bad.curve(x, y));
        }
        rows.push_back({{"xi_phi", xi_phi(recipes::ensemble_phases(xis[k]))},
                        {"full_g2_aa0", runs[k].full.at_zero("a", "a")},
                        {"full_g2_ab0", runs[k].full.at_zero("a", "b")},
                        {"badcavity_g2_aa0", runs[k].bad.at_zero("a", "a")},
                        {"badcavity_g2_ab0", runs[k].bad.at_zero("a", "b")}});
    }
    for (auto* set : {&full, &bad}) {
        std::vector<std::pair<std::string, const CorrelationCurve*>> cols;
        for (const auto& [name, c] : *set) cols.emplace_back(name, &c);
        out.tables.emplace_back(set == &full ? "fig3_full.csv" : "fig3_badcavity.csv", curves_table(cols));
    }
    for (const auto& r : runs)
        for (const G2Set* set : {&r.full, &r.bad})
            for (const char* x : {"a", "b"})
                for (const char* y : {"a", "b"}) out.curves.push_back(set->curve(x, y));
    out.summary["phase_sets"] = rows;
    return out;
}

FigureBundle chiral_figure(const OdeOptions& options) {
    FigureBundle out;
    out.name = "fig4a";
    const SystemConfig c = recipes::chiral_single();
    const auto taus = default_tau_grid(30.0 / c.cavity.kappa(), 200);
    const G2Set set = g2_all(prepare_full_model(c), taus, options);
    const auto aa = set.curve("a", "a"), bb = set.curve("b", "b"), ab = set.curve("a", "b"), ba = set.curve("b", "a");
    out.tables.emplace_back("fig4a.csv", curves_table({{"g2_aa", &aa}, {"g2_bb", &bb}, {"g2_ab", &ab}, {"g2_ba", &ba}}));
    out.summary = {{"chirality_metric", chirality_metric(ab)},
                   {"max_abs_aa_minus_bb", max_abs_diff(aa, bb)},
                   {"g2_aa0", set.at_zero("a", "a")},
                   {"g2_bb0", set.at_zero("b", "b")},
                   {"g2_ab0", set.at_zero("a", "b")}};
    out.curves = {aa, bb, ab, ba};
    return out;
}

FigureBundle sweep_figure(const OdeOptions& options, unsigned workers) {
    FigureBundle out;
    out.name = "fig4e";
    const SystemConfig c = recipes::disordered_four();
    const double kappa = c.cavity.kappa();
    std::vector<double> offsets;
    for (int k = 0; k <= 12; ++k) offsets.push_back(kappa * (-1.2 + 0.2 * k));
    const auto points = detuning_sweep(c, offsets, default_tau_grid(30.0 / kappa, 120), options, workers);
    CsvTable t({"cavity_detuning_rad_s", "chirality", "g2_aa0", "g2_bb0", "g2_ab0"});
    double lo = 1e300, hi = 0.0;
    for (const auto& p : points) {
        t.add_row({p.cavity_detuning, p.chirality, p.g2_aa0, p.g2_bb0, p.g2_ab0});
        lo = std::min(lo, p.chirality);
        hi = std::max(hi, p.chirality);
        out.curves.insert(out.curves.end(), {p.aa, p.bb, p.ab, p.ba});
    }
    out.tables.emplace_back("fig4e_sweep.csv", t);
    out.summary = {{"min_chirality", lo}, {"max_chirality", hi}, {"points", points.size()}};
    return out;
}

FigureBundle comparison_figure(const OdeOptions& options, unsigned workers) {
    FigureBundle out;
    out.name = "g2cmp";
    struct Case {
        int d;
        double eps;
        CorrelationCurve full, eff;
        double error = 0.0;
    };
    std::vector<Case> cases;
    for (int d : {1, 2})
        for (double eps : {0.2, 0.1, 0.05}) cases.push_back({d, eps, {}, {}, 0.0});
    parallel_for(
        cases.size(),
        [&](std::size_t k) {
            Case& cs = cases[k];
            const SystemConfig c = recipes::bad_cavity_pair(cs.eps, cs.d, mhz_to_rad_s(300.0));
            const EffectiveModel m = effective_couplings(c);
            const double horizon = 10.0 / m.purcell[0];
            std::vector<double> taus;
            for (int i = 0; i <= 200; ++i) taus.push_back(horizon * i / 200.0);
            cs.full = g2_all(prepare_full_model(c), taus, options).curve("a", "a");
            cs.eff = g2_all(prepare_effective_model(m, c), taus, options).curve("a", "a");
            cs.error = max_abs_diff(cs.full, cs.eff);
        },
        workers);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cs : cases) {
        const std::string name = "g2cmp_d" + std::to_string(cs.d) + "_eps" + tag(cs.eps) + ".csv";
        out.tables.emplace_back(name, curves_table({{"full_g2_aa", &cs.full}, {"effective_g2_aa", &cs.eff}}));
        rows.push_back({{"d", cs.d}, {"eps", cs.eps}, {"sup_error", cs.error}});
        out.curves.push_back(cs.full);
        out.curves.push_back(cs.eff);
    }
    out.summary["cases"] = rows;
    return out;
}

FigureBundle kerr_figure(const OdeOptions& options) {
    FigureBundle out;
    out.name = "fig5e";
    recipes::KerrScenario s = recipes::kerr_pulse(true);
    KerrOptions ko;
    ko.ode.rtol = std::min(ko.ode.rtol, options.rtol);
    std::vector<double> calibration;
    for (int k = 0; k * 20e-12 <= 3.2e-9; ++k) calibration.push_back(-0.2e-9 + k * 20e-12);
    s.config = calibrate_pair_rate(s.config, calibration, 0.01, ko);

    std::vector<double> grid;
    for (int k = 0; k * 20e-12 <= 20.2e-9 + 1e-15; ++k) grid.push_back(-0.2e-9 + k * 20e-12);
    const PulseRun run = simulate_pulse(s.config, grid, ko);
    CsvTable flux({"t_s", "signal_flux", "idler_flux", "emitter_population"});
    for (std::size_t k = 0; k < grid.size(); ++k)
        flux.add_row({grid[k], run.signal_flux[k], run.idler_flux[k], run.emitter_population[k]});
    out.tables.emplace_back("fig5e_flux.csv", flux);

    const CoincidenceMap map =
        pulsed_two_time(s.config, coincidence_grid(s.windows, -0.2e-9, 20e-12, 100e-12), s.windows.fast_hi, ko);
    CsvTable coinc({"t_idler_s", "t_signal_s", "coincidence_rate"});
    for (std::size_t i = 0; i < map.first_count; ++i)
        for (std::size_t j = 0; j < map.times.size(); ++j) coinc.add_row({map.times[i], map.times[j], map.idler_signal(i, j)});
    out.tables.emplace_back("fig5e_coincidences.csv", coinc);

    const CarResult r = car(map, s.windows, s.pulse.rep_period);
    const TwoExponentialFit fit = fit_two_exponentials(grid, run.signal_flux, s.windows.fast_hi, s.windows.slow_hi);
    const auto& e = s.config.emitters[0];
    out.summary = {{"g_kerr_rad_s", s.config.kerr->g_kerr},
                   {"pairs_per_pulse", run.pairs_per_pulse},
                   {"kappa_rad_s", s.config.cavity.kappa()},
                   {"emitter_rate_rad_s", e.gamma + purcell_rate(e.g / std::sqrt(2.0), e.delta, s.config.cavity.kappa())},
                   {"fast_rate_rad_s", fit.fast_rate},
                   {"slow_rate_rad_s", fit.slow_rate},
                   {"car_signal_idler", r.car_signal_idler},
                   {"car_atoms_idler", r.car_atoms_idler},
                   {"truncation_warning", run.truncation_warning}};
    return out;
}

}  // namespace

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"fig3", "fig4a", "fig4e", "g2cmp", "fig5e"};
    return names;
}

FigureBundle reproduce(const std::string& figure, const OdeOptions& options, unsigned workers) {
    if (figure == "fig3") return ensemble_figure(options, workers);
    if (figure == "fig4a") return chiral_figure(options);
    if (figure == "fig4e") return sweep_figure(options, workers);
    if (figure == "g2cmp") return comparison_figure(options, workers);
    if (figure == "fig5e") return kerr_figure(options);
    throw ValidationError("figure", "unknown recipe '" + figure + "' (expected fig3, fig4a, fig4e, g2cmp or fig5e)");
}

CsvTable curves_table(const std::vector<std::pair<std::string, const CorrelationCurve*>>& columns) {
    if (columns.empty()) throw std::invalid_argument("curves_table: no curves");
    std::vector<std::string> header{"tau_s"};
    for (const auto& [name, c] : columns) {
        if (c->taus != columns.front().second->taus) throw std::invalid_argument("curves_table: delay grids differ");
        header.push_back(name);
    }
    CsvTable t(header);
    const auto& taus = columns.front().second->taus;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        std::vector<double> row{taus[k]};
        for (const auto& col : columns) row.push_back(col.second->values[k]);
        t.add_row(row);
    }
    return t;
}

}  // namespace ringcqed
