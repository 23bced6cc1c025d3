// ring-cqed: command-line entry point.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "ringcqed/analytic.hpp"
#include "ringcqed/badcavity.hpp"
#include "ringcqed/bosonic.hpp"
#include "ringcqed/fitting.hpp"
#include "ringcqed/io.hpp"
#include "ringcqed/kerr.hpp"
#include "ringcqed/parallel.hpp"
#include "ringcqed/reproduce.hpp"

using namespace ringcqed;
using nlohmann::json;

namespace {

struct Global {
    std::uint64_t seed = 1;
};

// Writes one output file plus <name>.manifest.json next to it.
void emit_single(const std::string& out, const std::string& contents, const std::string& command,
                 const std::string& config_hash, std::uint64_t seed) {
    const std::filesystem::path p(out);
    const std::string dir = p.has_parent_path() ? p.parent_path().string() : ".";
    OutputWriter w(dir, command, config_hash, seed);
    w.write(p.filename().string(), contents);
    w.finish(p.filename().string() + ".manifest.json");
    std::cout << "wrote " << out << "\n";
}

std::string hash_of(const RunConfig& rc) { return fnv1a_hex(rc.canonical); }

std::vector<Mode> model_modes(const SystemConfig& c) {
    return c.kerr ? std::vector<Mode>{Mode::a, Mode::idler} : std::vector<Mode>{Mode::a, Mode::b};
}

CsvTable curve_csv(const CorrelationCurve& c) {
    CsvTable t({"tau_s", "value"});
    for (std::size_t k = 0; k < c.taus.size(); ++k) t.add_row({c.taus[k], c.values[k]});
    return t;
}

std::pair<std::string, std::string> split_pair(const std::string& pair) {
    if (pair.size() != 2 || (pair[0] != 'a' && pair[0] != 'b') || (pair[1] != 'a' && pair[1] != 'b'))
        throw ValidationError("--pair", "expected aa, ab, ba or bb");
    return {std::string(1, pair[0]), std::string(1, pair[1])};
}

std::string windows_text(const CoincidenceWindows& w) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%gns:%gns,%gns:%gns", w.fast_lo * 1e9, w.fast_hi * 1e9, w.slow_lo * 1e9,
                  w.slow_hi * 1e9);
    return buf;
}

CoincidenceWindows parse_windows(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ValidationError("--windows", "expected fast_lo:fast_hi,slow_lo:slow_hi");
    auto range = [](const std::string& r, double& lo, double& hi) {
        const auto colon = r.find(':');
        if (colon == std::string::npos) throw ValidationError("--windows", "expected lo:hi in '" + r + "'");
        lo = parse_duration(r.substr(0, colon));
        hi = parse_duration(r.substr(colon + 1));
    };
    CoincidenceWindows w;
    range(text.substr(0, comma), w.fast_lo, w.fast_hi);
    range(text.substr(comma + 1), w.slow_lo, w.slow_hi);
    return w;
}

// Independent-emitter parameter files: {"emitters": [...]} in MHz and units of
// pi, or the identical-emitter fit form {"n_emitters", "xi", rates...}.
IndepEnsemble parse_ensemble(const json& j) {
    if (!j.contains("emitters") || !j["emitters"].is_array())
        throw ValidationError("emitters", "an array of emitters is required");
    IndepEnsemble ens;
    for (std::size_t n = 0; n < j["emitters"].size(); ++n) {
        const json& e = j["emitters"][n];
        const std::string p = "emitters[" + std::to_string(n) + "].";
        auto get = [&](const char* key, double fallback) {
            if (!e.contains(key)) return fallback;
            if (!e[key].is_number()) throw ValidationError(p + key, "must be a number");
            return e[key].get<double>();
        };
        IndepEmitter x;
        x.weight = get("weight", 1.0);
        x.delta = mhz_to_rad_s(get("delta", 0.0));
        x.phi = kPi * get("phi", 0.0);
        x.gamma = mhz_to_rad_s(get("gamma", 0.0));
        x.gamma_deph = mhz_to_rad_s(get("gamma_deph", 0.0));
        x.gamma_ex = mhz_to_rad_s(get("gamma_ex", 0.0));
        x.gamma_e = mhz_to_rad_s(get("gamma_e", 0.0));
        x.gamma_s = mhz_to_rad_s(get("gamma_s", 0.0));
        x.spread = mhz_to_rad_s(get("spread", 0.0));
        ens.emitters.push_back(x);
    }
    ens.validate();
    return ens;
}

IdenticalFitModel parse_fit_model(const json& j) {
    IdenticalFitModel m;
    auto get = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw ValidationError(key, "must be a number");
        return j[key].get<double>();
    };
    m.n_emitters = get("n_emitters", m.n_emitters);
    m.xi = get("xi", m.xi);
    m.gamma = mhz_to_rad_s(get("gamma", 0.0));
    m.gamma_deph = mhz_to_rad_s(get("gamma_deph", 0.0));
    m.gamma_ex = mhz_to_rad_s(get("gamma_ex", 0.0));
    m.gamma_e = mhz_to_rad_s(get("gamma_e", 0.0));
    m.gamma_s = mhz_to_rad_s(get("gamma_s", 1.0));
    m.spread = mhz_to_rad_s(get("spread", 0.0));
    m.validate();
    return m;
}

json fit_model_json(const IdenticalFitModel& m) {
    return {{"n_emitters", m.n_emitters},
            {"xi", m.xi},
            {"gamma", rad_s_to_mhz(m.gamma)},
            {"gamma_deph", rad_s_to_mhz(m.gamma_deph)},
            {"gamma_ex", rad_s_to_mhz(m.gamma_ex)},
            {"gamma_e", rad_s_to_mhz(m.gamma_e)},
            {"gamma_s", rad_s_to_mhz(m.gamma_s)},
            {"spread", rad_s_to_mhz(m.spread)}};
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path, std::string("JSON syntax error: ") + e.what());
    }
}

FitData fit_data(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.header().size() < 2) throw ValidationError(path, "expected columns tau_s, value[, weight]");
    FitData d;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        d.x.push_back(t.row(i)[0]);
        d.y.push_back(t.row(i)[1]);
        d.weight.push_back(t.header().size() > 2 ? t.row(i)[2] : 1.0);
    }
    d.validate(path);
    return d;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
    const RunConfig rc = load_config(path);
    const SystemConfig& c = rc.system;
    const long dim = estimate_dimension(c, model_modes(c));
    std::cout << "config: " << path << "\n";
    std::cout << "emitters: " << c.emitters.size() << ", levels: " << c.emitter_levels()
              << ", fock cutoff: " << c.fock_cutoff << "\n";
    std::cout << "dimension estimate: D=" << dim << " (cap " << c.dimension_cap << ")\n";
    if (dim > c.dimension_cap)
        throw CapacityError("Hilbert dimension " + std::to_string(dim) + " exceeds the cap " +
                                std::to_string(c.dimension_cap),
                            dim, c.dimension_cap);
    if (!c.emitters.empty()) {
        // Linear-response stability: the single-excitation drift must be Hurwitz.
        // Dephasing and shelving only add coherence damping there.
        SystemConfig linear = c;
        for (auto& e : linear.emitters) {
            e.gamma += e.gamma_deph + e.gamma_e + e.gamma_s;
            e.gamma_deph = e.gamma_e = e.gamma_s = 0.0;
        }
        const Eigen::MatrixXcd drift = QuadraticModel::from_config(linear).drift();
        const double top = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(drift).eigenvalues().real().maxCoeff();
        std::cout << "drift spectral abscissa: " << top << " rad/s (" << (top < 0.0 ? "Hurwitz" : "not Hurwitz")
                  << ")\n";
        if (!(top < 0.0)) throw ModelError("drift matrix is not Hurwitz: the linearized model has no steady state");
    }
    std::cout << "config hash: " << hash_of(rc) << "\nOK\n";
    return 0;
}

int cmd_correlate(const Global& g, const std::string& path, const std::string& pair, const std::string& tau_max,
                  int points, const std::string& model, const std::string& out) {
    const RunConfig rc = load_config(path);
    const auto [x, y] = split_pair(pair);
    const auto taus = default_tau_grid(parse_duration(tau_max), points);
    CorrelationCurve curve;
    if (model == "full") {
        curve = g2(prepare_full_model(rc.system), x, y, taus, rc.ode);
    } else if (model == "effective") {
        curve = g2_effective(effective_couplings(rc.system), rc.system, x, y, taus, rc.ode);
    } else {
        throw ValidationError("--model", "expected full or effective");
    }
    if (curve.nonstationary) std::cerr << "warning: steady-state residual is large\n";
    emit_single(out, curve_csv(curve).str(), "correlate", hash_of(rc), g.seed);
    return 0;
}

int cmd_g3(const Global& g, const std::string& path, const std::string& channels, const std::string& tau_max, int n,
           const std::string& out) {
    const RunConfig rc = load_config(path);
    if (channels.size() != 3 || channels.find_first_not_of("ab") != std::string::npos)
        throw ValidationError("--channels", "expected three letters from {a, b}, e.g. aab");
    const auto sys = prepare_full_model(rc.system);
    const auto map = g3_map(sys, channels.substr(0, 1), channels.substr(1, 1), channels.substr(2, 1),
                            parse_duration(tau_max), n, rc.ode);
    CsvTable t({"tau1_s", "tau2_s", "value"});
    for (std::size_t i = 0; i < map.tau1s.size(); ++i)
        for (std::size_t j = 0; j < map.tau2s.size(); ++j)
            t.add_row({map.tau1s[i], map.tau2s[j], map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    emit_single(out, t.str(), "g3", hash_of(rc), g.seed);
    return 0;
}

int cmd_effective(const Global& g, const std::string& path, const std::string& matrices, bool compare,
                  const std::string& pair, const std::string& tau_max, int points, const std::string& out) {
    const RunConfig rc = load_config(path);
    const EffectiveModel m = effective_couplings(rc.system);
    if (!matrices.empty()) {
        CsvTable t({"m", "n", "J_re", "J_im", "Gamma_re", "Gamma_im"});
        for (Eigen::Index i = 0; i < m.J.rows(); ++i)
            for (Eigen::Index j = 0; j < m.J.cols(); ++j)
                t.add_row({static_cast<double>(i), static_cast<double>(j), m.J(i, j).real(), m.J(i, j).imag(),
                           m.Gamma(i, j).real(), m.Gamma(i, j).imag()});
        emit_single(matrices, t.str(), "effective", hash_of(rc), g.seed);
    }
    if (compare) {
        const auto [x, y] = split_pair(pair);
        const auto taus = default_tau_grid(parse_duration(tau_max), points);
        const auto full = g2(prepare_full_model(rc.system), x, y, taus, rc.ode);
        const auto eff = g2_effective(m, rc.system, x, y, taus, rc.ode);
        CsvTable t = curves_table({{"full", &full}, {"effective", &eff}});
        double err = 0.0;
        for (std::size_t k = 0; k < full.values.size(); ++k) err = std::max(err, std::abs(full.values[k] - eff.values[k]));
        std::cout << "sup |full - effective| = " << err << "\n";
        emit_single(out, t.str(), "effective --compare-full", hash_of(rc), g.seed);
    }
    return 0;
}

int cmd_analytic(const Global& g, const std::string& model, const std::string& params, const std::string& pair,
                 const std::string& tau_max, int points, std::size_t draws, const std::string& out) {
    const json j = read_json(params);
    const double tmax = parse_duration(tau_max);
    std::vector<double> taus;
    for (int k = -points; k <= points; ++k) taus.push_back(tmax * k / points);
    const std::string hash = fnv1a_hex(j.dump());
    if (model == "fit") {
        const IdenticalFitModel m = parse_fit_model(j);
        const bool cross = pair != "aa" && pair != "bb";
        CsvTable t({"tau_s", "value"});
        for (double tau : taus) t.add_row({tau, g2_fit_form(m, cross, tau)});
        emit_single(out, t.str(), "analytic", hash, g.seed);
        return 0;
    }
    const IndepEnsemble ens = parse_ensemble(j);
    const ChannelPair p = parse_pair(pair);
    std::vector<std::string> header{"tau_s", "value"};
    MonteCarloCurve mc;
    if (draws > 0) {
        DiffusionSampling s;
        s.draws = draws;
        s.seed = g.seed;
        mc = g2_diffused_monte_carlo(ens, p, taus, s);
        header.insert(header.end(), {"mc_mean", "mc_standard_error"});
    }
    CsvTable t(header);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        double v = 0.0;
        if (model == "2level") v = g2_indep_2level(ens, p, taus[k]);
        else if (model == "3level") v = g2_indep_3level(ens, p, taus[k]);
        else if (model == "diffused") v = g2_diffused(ens, p, taus[k]);
        else throw ValidationError("--model", "expected 2level, 3level, diffused or fit");
        std::vector<double> row{taus[k], v};
        if (draws > 0) row.insert(row.end(), {mc.mean[k], mc.standard_error[k]});
        t.add_row(row);
    }
    std::cout << "xi_phi = " << xi_phi(ens) << "\n";
    emit_single(out, t.str(), "analytic", hash, g.seed);
    return 0;
}

int cmd_kerr(const Global& g, const std::string& path, const std::string& pulse_csv, const std::string& windows,
             const std::string& out, const std::string& flux_out) {
    RunConfig rc = load_config(path);
    if (!rc.system.kerr) throw ValidationError("kerr", "the config needs a kerr section");
    if (!pulse_csv.empty()) {
        if (!rc.pump) throw ValidationError("kerr.pump", "mode parameters are required with --pulse");
        const CsvTable t = read_csv(pulse_csv);
        PumpPulse p = *rc.pump;
        p.times.clear();
        p.samples.clear();
        for (std::size_t i = 0; i < t.rows(); ++i) {
            const auto& r = t.row(i);
            if (r.size() < 2) throw ValidationError(pulse_csv, "expected columns t_s, re[, im]");
            p.times.push_back(r[0]);
            p.samples.emplace_back(r[1], r.size() > 2 ? r[2] : 0.0);
        }
        p.validate();
        rc.pump = p;
        rc.system.kerr = kerr_params(pump_response(p), rc.system.kerr->g_kerr, rc.system.kerr->omega_idler);
    }
    if (rc.system.kerr->pump_field.empty())
        throw ValidationError("kerr.pump", "no pump: give a Gaussian pulse in the config or --pulse");
    const CoincidenceWindows w = parse_windows(windows);
    const double rep = rc.pump ? rc.pump->rep_period : 0.0;
    w.validate(rep > 0.0 ? rep : 1.0);
    KerrOptions ko;
    const double start = rc.system.kerr->pump_times.front();
    if (rc.target_pairs) {
        std::vector<double> cal;
        for (double t = start; t <= w.fast_hi + 2e-9; t += 20e-12) cal.push_back(t);
        rc.system = calibrate_pair_rate(rc.system, cal, *rc.target_pairs, ko);
        std::cout << "calibrated g_kerr = " << rad_s_to_mhz(rc.system.kerr->g_kerr) << " MHz\n";
    }
    const auto grid = coincidence_grid(w, start, 20e-12, 100e-12);
    const CoincidenceMap map = pulsed_two_time(rc.system, grid, w.fast_hi, ko);
    CsvTable t({"t_idler_s", "t_signal_s", "coincidence_rate"});
    for (std::size_t i = 0; i < map.first_count; ++i)
        for (std::size_t k = i; k < map.times.size(); ++k) t.add_row({map.times[i], map.times[k], map.idler_signal(i, k)});
    emit_single(out, t.str(), "kerr", hash_of(rc), g.seed);
    if (!flux_out.empty()) {
        CsvTable f({"t_s", "signal_flux", "idler_flux"});
        for (std::size_t k = 0; k < map.times.size(); ++k) f.add_row({map.times[k], map.signal_flux[k], map.idler_flux[k]});
        emit_single(flux_out, f.str(), "kerr", hash_of(rc), g.seed);
    }
    if (rep > 0.0) {
        const CarResult r = car(map, w, rep);
        std::cout << "windows: " << windows_text(w) << "\n";
        std::cout << "CAR signal-idler: " << r.car_signal_idler << "\nCAR atoms-idler: " << r.car_atoms_idler << "\n";
    }
    return 0;
}

int cmd_bosonic(const Global& g, const std::string& path, bool check_symmetry, const std::string& tau_max,
                const std::string& out) {
    const RunConfig rc = load_config(path);
    const QuadraticModel m = QuadraticModel::from_config(rc.system);
    const ChainDecomposition chain = qr_reduce(m.coupling);
    const GaussianState s = gaussian_steady_state(m);
    json report;
    report["chain_rank"] = chain.rank;
    report["chain_shortened"] = chain.shortened;
    auto matrix = [](const Eigen::MatrixXcd& a) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back({a(i, j).real(), a(i, j).imag()});
            rows.push_back(row);
        }
        return rows;
    };
    report["chain_r"] = matrix(chain.r);
    report["chain_r_mirrored"] = matrix(chain.r_mirrored);
    report["occupation_a"] = s.occupation(0);
    report["occupation_b"] = s.occupation(1);
    report["lyapunov_residual"] = s.lyapunov_residual;
    if (check_symmetry) {
        const auto set = gaussian_g2_all(m, default_tau_grid(parse_duration(tau_max), 200));
        const auto aa = set.curve("a", "a"), bb = set.curve("b", "b"), ab = set.curve("a", "b");
        double gap = 0.0;
        for (std::size_t k = 0; k < aa.values.size(); ++k) gap = std::max(gap, std::abs(aa.values[k] - bb.values[k]));
        const double chir = chirality_metric(ab);
        report["chirality"] = chir;
        report["mirror_gap"] = gap;
        report["symmetric"] = chir < 1e-8 && gap < 1e-8;
        std::cout << "chirality " << chir << ", max |g2_aa - g2_bb| " << gap << "\n";
    }
    emit_single(out, report.dump(2) + "\n", "bosonic", hash_of(rc), g.seed);
    return 0;
}

int cmd_sweep(const Global& g, const std::string& path, double from_mhz, double to_mhz, int points,
              const std::string& tau_max, const std::string& out) {
    const RunConfig rc = load_config(path);
    if (points < 1) throw ValidationError("--points", "must be positive");
    std::vector<double> offsets;
    for (int k = 0; k < points; ++k)
        offsets.push_back(mhz_to_rad_s(points == 1 ? from_mhz : from_mhz + (to_mhz - from_mhz) * k / (points - 1)));
    const auto pts = detuning_sweep(rc.system, offsets, default_tau_grid(parse_duration(tau_max), 120), rc.ode);
    CsvTable t({"cavity_detuning_rad_s", "chirality", "g2_aa0", "g2_bb0", "g2_ab0"});
    for (const auto& p : pts) t.add_row({p.cavity_detuning, p.chirality, p.g2_aa0, p.g2_bb0, p.g2_ab0});
    emit_single(out, t.str(), "sweep", hash_of(rc), g.seed);
    return 0;
}

int cmd_reproduce(const Global& g, const std::string& figure, const std::string& dir) {
    const FigureBundle b = reproduce(figure);
    OutputWriter w(dir, "reproduce " + figure, fnv1a_hex(figure), g.seed);
    for (const auto& [name, table] : b.tables) w.write_csv(name, table);
    w.write_json(figure + "_summary.json", b.summary);
    w.finish();
    std::cout << b.summary.dump(2) << "\n";
    return 0;
}

int cmd_fit_g2(const Global& g, const std::string& aa, const std::string& ab, const std::string& jitter,
               const std::string& start, const std::vector<std::string>& free, const std::string& out) {
    G2FitProblem p;
    p.aa = fit_data(aa);
    if (!ab.empty()) p.ab = fit_data(ab);
    p.jitter_fwhm = parse_duration(jitter);
    if (!start.empty()) p.start = parse_fit_model(read_json(start));
    if (!free.empty()) p.free = free;
    else if (ab.empty()) p.free.pop_back();  // xi needs the cross channel
    const G2Fit fit = fit_g2(p);
    json j;
    j["params"] = fit_model_json(fit.model);
    j["free"] = fit.result.names;
    json cov = json::array();
    for (Eigen::Index i = 0; i < fit.result.covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < fit.result.covariance.cols(); ++k) row.push_back(fit.result.covariance(i, k));
        cov.push_back(row);
    }
    j["covariance_si"] = cov;
    j["residual_norm"] = fit.result.residual_norm;
    j["iterations"] = fit.result.iterations;
    j["converged"] = fit.result.converged;
    j["message"] = fit.result.message;
    if (!fit.result.converged) std::cerr << "warning: " << fit.result.message << "\n";
    emit_single(out, j.dump(2) + "\n", "fit g2", fnv1a_hex(aa + "|" + ab), g.seed);
    return 0;
}

int cmd_fit_strong(const Global& g, const std::string& trace, double kappa, double gamma, double width, double g_guess,
                   double center_guess, const std::string& out) {
    StrongCouplingSetup s;
    s.kappa = mhz_to_rad_s(kappa);
    s.gamma = mhz_to_rad_s(gamma);
    s.diffusion.width = mhz_to_rad_s(width);
    s.g_guess = mhz_to_rad_s(g_guess);
    s.center_guess = mhz_to_rad_s(center_guess);
    const StrongCouplingFit f = fit_strong_coupling(s, fit_data(trace));
    const json j = {{"g_mhz", rad_s_to_mhz(f.g)},           {"center_mhz", rad_s_to_mhz(f.center)},
                    {"amplitude", f.amplitude},             {"dark", f.dark},
                    {"time_offset_s", f.time_offset},       {"cost", f.cost},
                    {"rounds", f.rounds},                   {"converged", f.converged},
                    {"message", f.message}};
    emit_single(out, j.dump(2) + "\n", "fit strong", fnv1a_hex(trace), g.seed);
    return 0;
}

int cmd_fit_backscatter(const Global& g, const std::string& trace, const std::string& input, double kappa,
                        double kappa_c, double gamma, double delta, double g_guess, double g_bs_guess,
                        const std::string& out) {
    BackscatterSetup s;
    s.kappa = mhz_to_rad_s(kappa);
    s.kappa_c = mhz_to_rad_s(kappa_c);
    s.gamma = mhz_to_rad_s(gamma);
    s.delta = mhz_to_rad_s(delta);
    const CsvTable in = read_csv(input);
    for (std::size_t i = 0; i < in.rows(); ++i) {
        s.input_times.push_back(in.row(i)[0]);
        s.input.emplace_back(in.row(i)[1], in.row(i).size() > 2 ? in.row(i)[2] : 0.0);
    }
    const BackscatterFit f = fit_backscatter(s, fit_data(trace), mhz_to_rad_s(g_guess), mhz_to_rad_s(g_bs_guess));
    const json j = {{"g_mhz", rad_s_to_mhz(f.g)},
                    {"phi_over_pi", f.phi / kPi},
                    {"g_bs_mhz", rad_s_to_mhz(f.g_bs)},
                    {"g_identifiable", f.g_identifiable},
                    {"phi_identifiable", f.phi_identifiable},
                    {"mirror_degenerate", f.mirror_degenerate},
                    {"residual_norm", f.result.residual_norm},
                    {"converged", f.result.converged}};
    emit_single(out, j.dump(2) + "\n", "fit backscatter", fnv1a_hex(trace), g.seed);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-emitter ring-resonator cavity QED simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--seed", g.seed, "Seed for every random draw of the run")->capture_default_str();
    std::function<int()> action;

    std::string config, out, pair = "ab", tau_max = "40ns";
    int points = 400;

    auto* validate = app.add_subcommand("validate", "Check a configuration file");
    validate->add_option("config", config, "Configuration JSON")->required();
    validate->callback([&] { action = [&] { return cmd_validate(config); }; });

    std::string model = "full";
    auto* correlate = app.add_subcommand("correlate", "Second-order correlation curve");
    correlate->add_option("--config", config)->required();
    correlate->add_option("--pair", pair, "aa, ab, ba or bb")->capture_default_str();
    correlate->add_option("--tau-max", tau_max)->capture_default_str();
    correlate->add_option("--points", points)->capture_default_str();
    correlate->add_option("--model", model, "full or effective")->capture_default_str();
    correlate->add_option("--out", out)->required();
    correlate->callback([&] { action = [&] { return cmd_correlate(g, config, pair, tau_max, points, model, out); }; });

    std::string channels = "aab";
    int n3 = 20;
    auto* g3 = app.add_subcommand("g3", "Third-order correlation map");
    g3->add_option("--config", config)->required();
    g3->add_option("--channels", channels, "three channels, e.g. aab")->capture_default_str();
    g3->add_option("--tau-max", tau_max)->capture_default_str();
    g3->add_option("--n", n3, "points per side")->capture_default_str();
    g3->add_option("--out", out)->required();
    g3->callback([&] { action = [&] { return cmd_g3(g, config, channels, tau_max, n3, out); }; });

    std::string matrices;
    bool compare = false;
    auto* effective = app.add_subcommand("effective", "Bad-cavity effective model");
    effective->add_option("--config", config)->required();
    effective->add_option("--emit-matrices", matrices, "CSV of J and Gamma");
    effective->add_flag("--compare-full", compare, "Also run the full model and write paired curves");
    effective->add_option("--pair", pair)->capture_default_str();
    effective->add_option("--tau-max", tau_max)->capture_default_str();
    effective->add_option("--points", points)->capture_default_str();
    effective->add_option("--out", out);
    effective->callback([&] {
        if (compare && out.empty()) throw CLI::ValidationError("--out", "required with --compare-full");
        action = [&] { return cmd_effective(g, config, matrices, compare, pair, tau_max, points, out); };
    });

    std::string params, amodel = "2level";
    std::size_t draws = 0;
    int apoints = 200;
    auto* analytic = app.add_subcommand("analytic", "Closed-form independent-emitter correlations");
    analytic->add_option("--model", amodel, "2level, 3level, diffused or fit")->capture_default_str();
    analytic->add_option("--params", params, "parameter JSON")->required();
    analytic->add_option("--pair", pair)->capture_default_str();
    analytic->add_option("--tau-max", tau_max)->capture_default_str();
    analytic->add_option("--points", apoints, "points per side")->capture_default_str();
    analytic->add_option("--mc-draws", draws, "Monte-Carlo diffusion draws for comparison (0 = none)");
    analytic->add_option("--out", out)->required();
    analytic->callback(
        [&] { action = [&] { return cmd_analytic(g, amodel, params, pair, tau_max, apoints, draws, out); }; });

    std::string pulse, windows = "0:0.8ns,1.8ns:20ns", flux;
    auto* kerr = app.add_subcommand("kerr", "Pulsed pair generation and coincidences");
    kerr->add_option("--config", config)->required();
    kerr->add_option("--pulse", pulse, "input pump pulse CSV: t_s, re[, im] in sqrt(photons/s)");
    kerr->add_option("--windows", windows, "fast and slow windows")->capture_default_str();
    kerr->add_option("--out", out, "coincidence map (long format)")->required();
    kerr->add_option("--flux", flux, "signal and idler flux CSV");
    kerr->callback([&] { action = [&] { return cmd_kerr(g, config, pulse, windows, out, flux); }; });

    bool check_symmetry = false;
    auto* bosonic = app.add_subcommand("bosonic", "Linear (bosonic) counterpart");
    bosonic->add_option("--config", config)->required();
    bosonic->add_flag("--check-symmetry", check_symmetry);
    bosonic->add_option("--tau-max", tau_max)->capture_default_str();
    bosonic->add_option("--out", out)->required();
    bosonic->callback([&] { action = [&] { return cmd_bosonic(g, config, check_symmetry, tau_max, out); }; });

    auto* fit = app.add_subcommand("fit", "Parameter extraction");
    fit->require_subcommand(1);
    std::string aa, ab, jitter = "82ps", start;
    std::vector<std::string> free;
    auto* fit_g2_cmd = fit->add_subcommand("g2", "Joint g2 fit");
    fit_g2_cmd->add_option("--aa", aa, "auto-correlation CSV: tau_s, value[, weight]")->required();
    fit_g2_cmd->add_option("--ab", ab, "cross-correlation CSV");
    fit_g2_cmd->add_option("--jitter-fwhm", jitter)->capture_default_str();
    fit_g2_cmd->add_option("--start", start, "initial parameters JSON (MHz)");
    fit_g2_cmd->add_option("--free", free, "free parameter names");
    fit_g2_cmd->add_option("--out", out)->required();
    fit_g2_cmd->callback([&] { action = [&] { return cmd_fit_g2(g, aa, ab, jitter, start, free, out); }; });

    double visibility = 0.0, purcell = 0.0;
    auto* hom = fit->add_subcommand("hom", "Dephasing bound from HOM visibility");
    hom->add_option("--visibility", visibility)->required();
    hom->add_option("--gamma", purcell, "Purcell-enhanced rate (any unit)")->required();
    hom->callback([&] {
        action = [&] {
            std::printf("gamma' <= %.6g\n", hom_dephasing_bound(visibility, purcell));
            return 0;
        };
    });

    std::string trace, input;
    double kappa = 0, kappa_c = 0, gamma = 0, width = 0, delta = 0, g_guess = 150, center = 0, g_bs_guess = 50;
    auto* strong = fit->add_subcommand("strong", "Strong-coupling transport fit (rates in MHz)");
    strong->add_option("--trace", trace)->required();
    strong->add_option("--kappa", kappa)->required();
    strong->add_option("--gamma", gamma)->required();
    strong->add_option("--width", width, "diffusion standard deviation per lobe");
    strong->add_option("--g-guess", g_guess)->capture_default_str();
    strong->add_option("--center-guess", center)->capture_default_str();
    strong->add_option("--out", out)->required();
    strong->callback([&] {
        action = [&] { return cmd_fit_strong(g, trace, kappa, gamma, width, g_guess, center, out); };
    });

    auto* back = fit->add_subcommand("backscatter", "Backscattering interference fit (rates in MHz)");
    back->add_option("--trace", trace)->required();
    back->add_option("--input", input, "input pulse CSV: t_s, re[, im]")->required();
    back->add_option("--kappa", kappa)->required();
    back->add_option("--kappa-c", kappa_c)->required();
    back->add_option("--gamma", gamma)->required();
    back->add_option("--delta", delta)->capture_default_str();
    back->add_option("--g-guess", g_guess)->capture_default_str();
    back->add_option("--g-bs-guess", g_bs_guess)->capture_default_str();
    back->add_option("--out", out)->required();
    back->callback([&] {
        action = [&] {
            return cmd_fit_backscatter(g, trace, input, kappa, kappa_c, gamma, delta, g_guess, g_bs_guess, out);
        };
    });

    double from = -300, to = 300;
    int spoints = 13;
    auto* sweep = app.add_subcommand("sweep", "Cavity-detuning sweep of chirality");
    sweep->add_option("--config", config)->required();
    sweep->add_option("--from", from, "MHz")->capture_default_str();
    sweep->add_option("--to", to, "MHz")->capture_default_str();
    sweep->add_option("--points", spoints)->capture_default_str();
    sweep->add_option("--tau-max", tau_max)->capture_default_str();
    sweep->add_option("--out", out)->required();
    sweep->callback([&] { action = [&] { return cmd_sweep(g, config, from, to, spoints, tau_max, out); }; });

    std::string figure, out_dir = "out";
    auto* repro = app.add_subcommand("reproduce", "Run a canned reference scenario");
    repro->add_option("figure", figure, "fig3, fig4a, fig4e, g2cmp or fig5e")->required();
    repro->add_option("--out-dir", out_dir)->capture_default_str();
    repro->callback([&] { action = [&] { return cmd_reproduce(g, figure, out_dir); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
