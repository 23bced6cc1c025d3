#pragma once

// Configuration files, CSV output and run manifests.
//
// Configuration files are JSON. Rates and frequencies are given in MHz
// (cyclic) and converted to rad/s; coupling phases are given in units of pi.
//
//   {
//     "schema_version": 1,
//     "emitters": [{"delta": 0, "g": 150, "phi": 0.25, "gamma": 15,
//                   "gamma_deph": 40, "gamma_ex": 4.5, "gamma_e": 0, "gamma_s": 0}],
//     "cavity": {"kappa_i": 0, "kappa_c": 300, "g_bs": 0, "detuning_cav": 0},
//     "kerr": {"g_kerr": 4.2e-6, "omega_idler": 0, "target_pairs": 0.01,
//              "pump": {"kappa_i": 176.8, "kappa_c": 707.0, "detuning": 0, "rep_rate": 0.66,
//                       "fwhm_ps": 50, "photons": 6.9e7, "step_ps": 2, "span_ps": 150}},
//     "numerics": {"fock_cutoff": 2, "dimension_cap": 4096, "rtol": 1e-8, "atol": 1e-12}
//   }
//
// Every section except "emitters" is optional; absent fields keep their
// defaults. Unknown keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringcqed/kerr.hpp"

namespace ringcqed {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    SystemConfig system;
    OdeOptions ode;
    /// Input pump pulse, when the kerr section describes one.
    std::optional<PumpPulse> pump;
    /// Pairs per pulse to calibrate g_kerr to, when given.
    std::optional<double> target_pairs;
    /// Canonical JSON of the file as read (sorted keys), used for hashing.
    std::string canonical;
};

/// Throws ValidationError with the JSON path of the offending field, or with
/// "line L, column C" for syntax errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& j);

/// Inverse of config_from_json (units converted back; pump samples omitted).
nlohmann::json config_to_json(const RunConfig& config);

/// "40ns", "82ps", "1.5us", "2e-9" (seconds) and the like, in seconds.
double parse_duration(const std::string& text);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// CSV: fixed 17-significant-digit scientific notation.

std::string format_number(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    /// Throws std::invalid_argument when the width differs from the header.
    void add_row(const std::vector<double>& row);
    const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
    /// Column by name; throws std::out_of_range if absent.
    std::vector<double> column(const std::string& name) const;

    std::string str() const;
    void write(std::ostream& out) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// Reads numeric CSV. A first line that does not parse as numbers is the
/// header; otherwise columns are named c0, c1, ... Blank lines and lines
/// starting with '#' are skipped. Throws ValidationError with the line number.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "csv");

// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string path;
    std::string hash;  ///< FNV-1a of the file bytes
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> module_versions;
    std::string started_utc;
    double wall_seconds = 0.0;
    std::vector<ManifestEntry> outputs;

    nlohmann::json to_json() const;
};

/// Version string recorded for every module.
std::map<std::string, std::string> module_versions();

/// Collects output files and writes them with their hashes into the manifest.
class OutputWriter {
public:
    /// Creates `directory` if needed.
    OutputWriter(std::string directory, std::string command, std::string config_hash, std::uint64_t seed);

    /// Writes a file relative to the directory and records it.
    std::string write(const std::string& name, const std::string& contents);
    std::string write_csv(const std::string& name, const CsvTable& table) { return write(name, table.str()); }
    std::string write_json(const std::string& name, const nlohmann::json& j) { return write(name, j.dump(2) + "\n"); }
    /// Writes the manifest (default manifest.json) and returns its path.
    std::string finish(const std::string& name = "manifest.json");

    const RunManifest& manifest() const { return manifest_; }

private:
    std::string dir_;
    RunManifest manifest_;
    double start_ = 0.0;
};

/// Writes a single file and returns its manifest entry.
ManifestEntry write_file(const std::string& path, const std::string& contents);

}  // namespace ringcqed
