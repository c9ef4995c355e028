#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nfjcl/harness.hpp"

namespace nfjcl {

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; a repeated key keeps its last value.
std::map<std::string, std::string> parse_key_values(std::istream& is);
std::map<std::string, std::string> load_key_values(const std::string& path);

/// Everything a sweep subcommand can be told. Keys accepted by
/// apply_setting() are the long flag names without the leading dashes.
struct RunSettings {
    double snr_min = -20.0;
    double snr_max = 10.0;
    double snr_step = 5.0;
    int users = 8;
    int symbols = 100;
    int antennas = 128;
    int trials = 50;
    std::uint64_t seed = 1;
    std::string algorithms = "proposed,omp";
    double grid_spacing = 1.0;
    std::string mode = "k_known";
    std::optional<double> beta;
    int max_iters = 200;
    double xi = 1e-5;
    bool noiseless = false;
    int threads = 0;
    std::string out;
};

/// Throws ConfigError on an unknown key or a malformed value.
void apply_setting(RunSettings& settings, const std::string& key, const std::string& value);
void apply_settings(RunSettings& settings, const std::map<std::string, std::string>& kv);

std::vector<double> snr_grid(double lo, double hi, double step);
std::vector<Algorithm> parse_algorithms(const std::string& list);

ExperimentSpec to_spec(const RunSettings& settings);

}  // namespace nfjcl
