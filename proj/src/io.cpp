#include "ringcqed/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ringcqed {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "(root)" : path_, "must be an object");
        for (const auto& [key, value] : j_.items())
            if (!allowed.count(key)) throw ValidationError(at(key), "unknown field");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key) const { return j_.at(key); }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ValidationError(at(key), "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ValidationError(at(key), "must be finite");
        return x;
    }
    double required_number(const std::string& key) const {
        if (!has(key)) throw ValidationError(at(key), "is required");
        return number(key, 0.0);
    }
    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ValidationError(at(key), "must be an integer");
        return v.get<long>();
    }

private:
    const json& j_;
    std::string path_;
};

double mhz(const Section& s, const std::string& key, double fallback_rad_s = 0.0) {
    return mhz_to_rad_s(s.number(key, rad_s_to_mhz(fallback_rad_s)));
}

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunConfig config_from_json(const json& j) {
    const Section root(j, "", {"schema_version", "emitters", "cavity", "kerr", "numerics"});
    if (!root.has("schema_version")) throw ValidationError("schema_version", "is required");
    const long version = root.integer("schema_version", 0);
    if (version != kSchemaVersion)
        throw ValidationError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                    std::to_string(kSchemaVersion) + ")");
    RunConfig rc;
    SystemConfig& c = rc.system;

    if (root.has("emitters")) {
        const json& list = root.raw("emitters");
        if (!list.is_array()) throw ValidationError("emitters", "must be an array");
        for (std::size_t n = 0; n < list.size(); ++n) {
            const Section e(list[n], "emitters[" + std::to_string(n) + "]",
                            {"delta", "g", "phi", "gamma", "gamma_deph", "gamma_ex", "gamma_e", "gamma_s"});
            EmitterParams p;
            p.delta = mhz(e, "delta");
            p.g = mhz(e, "g");
            p.phi = kPi * e.number("phi", 0.0);
            p.gamma = mhz(e, "gamma");
            p.gamma_deph = mhz(e, "gamma_deph");
            p.gamma_ex = mhz(e, "gamma_ex");
            p.gamma_e = mhz(e, "gamma_e");
            p.gamma_s = mhz(e, "gamma_s");
            c.emitters.push_back(p);
        }
    }
    if (root.has("cavity")) {
        const Section s(root.raw("cavity"), "cavity", {"kappa_i", "kappa_c", "g_bs", "detuning_cav"});
        c.cavity.kappa_i = mhz(s, "kappa_i");
        c.cavity.kappa_c = mhz(s, "kappa_c");
        c.cavity.g_bs = mhz(s, "g_bs");
        c.cavity.detuning_cav = mhz(s, "detuning_cav");
    }
    if (root.has("numerics")) {
        const Section s(root.raw("numerics"), "numerics", {"fock_cutoff", "dimension_cap", "rtol", "atol"});
        c.fock_cutoff = static_cast<int>(s.integer("fock_cutoff", c.fock_cutoff));
        c.dimension_cap = s.integer("dimension_cap", c.dimension_cap);
        rc.ode.rtol = s.number("rtol", rc.ode.rtol);
        rc.ode.atol = s.number("atol", rc.ode.atol);
        if (!(rc.ode.rtol > 0.0)) throw ValidationError("numerics.rtol", "must be positive");
        if (!(rc.ode.atol > 0.0)) throw ValidationError("numerics.atol", "must be positive");
    }
    if (root.has("kerr")) {
        const Section s(root.raw("kerr"), "kerr", {"g_kerr", "omega_idler", "target_pairs", "pump"});
        KerrParams k;
        k.g_kerr = mhz(s, "g_kerr");
        k.omega_idler = mhz(s, "omega_idler");
        if (s.has("target_pairs")) {
            rc.target_pairs = s.number("target_pairs", 0.0);
            if (!(*rc.target_pairs > 0.0)) throw ValidationError("kerr.target_pairs", "must be positive");
        }
        if (s.has("pump")) {
            const Section p(s.raw("pump"), "kerr.pump",
                            {"kappa_i", "kappa_c", "detuning", "rep_rate", "fwhm_ps", "photons", "step_ps", "span_ps"});
            const double kappa_i = mhz(p, "kappa_i");
            const double kappa_c = mhz(p, "kappa_c");
            const double rep_rate = p.required_number("rep_rate");
            if (!(rep_rate > 0.0)) throw ValidationError("kerr.pump.rep_rate", "must be positive");
            if (!(kappa_c > 0.0)) throw ValidationError("kerr.pump.kappa_c", "must be positive");
            PumpPulse pulse;
            if (p.has("fwhm_ps") || p.has("photons")) {
                const double fwhm = 1e-12 * p.required_number("fwhm_ps");
                const double photons = p.required_number("photons");
                const double step = 1e-12 * p.number("step_ps", 2.0);
                const double span = 1e-12 * p.number("span_ps", 3.0 * fwhm * 1e12);
                pulse = PumpPulse::gaussian(fwhm, photons, kappa_i + kappa_c, kappa_c, 1.0 / (1e6 * rep_rate), step,
                                            span);
            } else {
                pulse.kappa = kappa_i + kappa_c;
                pulse.kappa_c = kappa_c;
                pulse.rep_period = 1.0 / (1e6 * rep_rate);
            }
            pulse.detuning = mhz(p, "detuning");
            if (!pulse.samples.empty()) {
                pulse.validate();
                k = kerr_params(pump_response(pulse), k.g_kerr, k.omega_idler);
            }
            rc.pump = pulse;
        }
        c.kerr = k;
    }
    c.validate();
    rc.canonical = j.dump();
    return rc;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(line_column(text, e.byte), "JSON syntax error");
    }
    return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_config(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.field, std::string(e.what()).substr(e.field.size() + 2));
    }
}

json config_to_json(const RunConfig& rc) {
    const SystemConfig& c = rc.system;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["emitters"] = json::array();
    for (const auto& e : c.emitters) {
        j["emitters"].push_back({{"delta", rad_s_to_mhz(e.delta)},
                                 {"g", rad_s_to_mhz(e.g)},
                                 {"phi", e.phi / kPi},
                                 {"gamma", rad_s_to_mhz(e.gamma)},
                                 {"gamma_deph", rad_s_to_mhz(e.gamma_deph)},
                                 {"gamma_ex", rad_s_to_mhz(e.gamma_ex)},
                                 {"gamma_e", rad_s_to_mhz(e.gamma_e)},
                                 {"gamma_s", rad_s_to_mhz(e.gamma_s)}});
    }
    j["cavity"] = {{"kappa_i", rad_s_to_mhz(c.cavity.kappa_i)},
                   {"kappa_c", rad_s_to_mhz(c.cavity.kappa_c)},
                   {"g_bs", rad_s_to_mhz(c.cavity.g_bs)},
                   {"detuning_cav", rad_s_to_mhz(c.cavity.detuning_cav)}};
    j["numerics"] = {{"fock_cutoff", c.fock_cutoff},
                     {"dimension_cap", c.dimension_cap},
                     {"rtol", rc.ode.rtol},
                     {"atol", rc.ode.atol}};
    if (c.kerr) {
        j["kerr"] = {{"g_kerr", rad_s_to_mhz(c.kerr->g_kerr)}, {"omega_idler", rad_s_to_mhz(c.kerr->omega_idler)}};
        if (rc.target_pairs) j["kerr"]["target_pairs"] = *rc.target_pairs;
        if (rc.pump) {
            j["kerr"]["pump"] = {{"kappa_i", rad_s_to_mhz(rc.pump->kappa - rc.pump->kappa_c)},
                                 {"kappa_c", rad_s_to_mhz(rc.pump->kappa_c)},
                                 {"detuning", rad_s_to_mhz(rc.pump->detuning)},
                                 {"rep_rate", 1e-6 / rc.pump->rep_period}};
        }
    }
    return j;
}

double parse_duration(const std::string& text) {
    static const std::vector<std::pair<std::string, double>> units{
        {"ns", 1e-9}, {"ps", 1e-12}, {"fs", 1e-15}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
    std::string number = text;
    double scale = 1.0;
    for (const auto& [suffix, factor] : units) {
        if (text.size() > suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
            number = text.substr(0, text.size() - suffix.size());
            scale = factor;
            break;
        }
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(number, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != number.size() || !std::isfinite(v))
        throw ValidationError(text, "not a duration (expected e.g. 40ns, 82ps, 1e-9)");
    return v * scale;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v == 0.0 ? 0.0 : v);  // no negative zero
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CSV row width differs from the header");
    rows_.push_back(row);
}

std::vector<double> CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header_.size(); ++c) {
        if (header_[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(r[c]);
        return out;
    }
    throw std::out_of_range("CSV has no column '" + name + "'");
}

std::string CsvTable::str() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

void CsvTable::write(std::ostream& out) const {
    for (std::size_t c = 0; c < header_.size(); ++c) out << (c ? "," : "") << header_[c];
    out << '\n';
    for (const auto& r : rows_) {
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << format_number(r[c]);
        out << '\n';
    }
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::optional<CsvTable> table;
    std::size_t line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
        }
        return cells;
    };
    auto numbers = [](const std::vector<std::string>& cells, std::vector<double>& out) {
        out.clear();
        for (const auto& c : cells) {
            std::size_t used = 0;
            try {
                out.push_back(std::stod(c, &used));
            } catch (const std::exception&) {
                return false;
            }
            if (used != c.size()) return false;
        }
        return true;
    };
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = split(line);
        const bool numeric = numbers(cells, row);
        if (!table) {
            if (numeric) {
                std::vector<std::string> names;
                for (std::size_t c = 0; c < cells.size(); ++c) names.push_back("c" + std::to_string(c));
                table.emplace(names);
            } else {
                table.emplace(cells);
                continue;
            }
        }
        const std::string where = source + ": line " + std::to_string(line_no);
        if (!numeric) throw ValidationError(where, "expected numeric values");
        if (row.size() != table->header().size())
            throw ValidationError(where, "expected " + std::to_string(table->header().size()) + " columns");
        table->add_row(row);
    }
    if (!table) throw ValidationError(source, "empty CSV");
    return *table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

// ---------------------------------------------------------------------------

nlohmann::json RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["module_versions"] = module_versions;
    j["started_utc"] = started_utc;
    j["wall_seconds"] = wall_seconds;
    j["outputs"] = json::array();
    for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"fnv1a", o.hash}, {"bytes", o.bytes}});
    return j;
}

std::map<std::string, std::string> module_versions() {
    std::map<std::string, std::string> m;
    for (const char* name : {"model", "dynamics", "badcavity", "analytic", "kerr", "bosonic", "fitting", "cli"})
        m[name] = "1.0.0";
    return m;
}

ManifestEntry write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << contents;
    if (!out) throw Error("failed writing " + path);
    return {path, fnv1a_hex(contents), contents.size()};
}

OutputWriter::OutputWriter(std::string directory, std::string command, std::string config_hash, std::uint64_t seed)
    : dir_(std::move(directory)), start_(now_seconds()) {
    std::filesystem::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.config_hash = std::move(config_hash);
    manifest_.seed = seed;
    manifest_.module_versions = module_versions();
    manifest_.started_utc = utc_now();
}

std::string OutputWriter::write(const std::string& name, const std::string& contents) {
    const std::string path = (std::filesystem::path(dir_) / name).string();
    ManifestEntry e = write_file(path, contents);
    e.path = name;
    manifest_.outputs.push_back(e);
    return path;
}

std::string OutputWriter::finish(const std::string& name) {
    manifest_.wall_seconds = now_seconds() - start_;
    const std::string path = (std::filesystem::path(dir_) / name).string();
    write_file(path, manifest_.to_json().dump(2) + "\n");
    return path;
}

}  // namespace ringcqed
