#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiberlab/eigensolver.hpp"
#include "fiberlab/field_model.hpp"

namespace fiberlab {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Resolved run configuration.  Parsed from a flat key = value file (one key
// per line, '#' comments); every key can also be overridden on the command
// line as key=value.  Unknown keys are rejected.
struct RunConfig {
    CutoffProfile cutoff;
    int n_radial = 5;
    int n_polar = 3;
    int n_azimuthal = 2;
    int n_max = 3;
    std::uint64_t dimension_cap = 1'000'000;
    std::vector<double> alphas = {0.02, 0.04, 0.08, 0.16};
    std::int64_t mc_samples = 100'000;
    std::uint64_t mc_seed = 20240901;
    int quadrature_resolution = 48;
    SolverConfig solver;
    std::string output_dir = "out";
    bool output_grid_csv = false;
    bool output_dump_vector = false;
    bool debug_break_transversality = false;

    GridSpec grid_spec() const { return {n_radial, n_polar, n_azimuthal, cutoff}; }
};

// Applies "key = value" to the config; throws ConfigError for unknown keys or
// malformed values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& config, const std::string& key_equals_value);

// Canonical text form; re-parsing reproduces the same config.
std::string serialize_config(const RunConfig& config);

// FNV-1a over the canonical text; embedded in every output file so that runs
// with equal hashes are byte-comparable.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace fiberlab
