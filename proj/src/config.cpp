#include "nfjcl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace nfjcl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

long long to_integer(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key + ": value out of range");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": missing '='");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse_key_values(is);
}

void apply_setting(RunSettings& s, const std::string& key, const std::string& value) {
    if (key == "snr-min") s.snr_min = to_double(key, value);
    else if (key == "snr-max") s.snr_max = to_double(key, value);
    else if (key == "snr-step") s.snr_step = to_double(key, value);
    else if (key == "users") s.users = to_int(key, value);
    else if (key == "symbols") s.symbols = to_int(key, value);
    else if (key == "antennas") s.antennas = to_int(key, value);
    else if (key == "trials") s.trials = to_int(key, value);
    else if (key == "seed") {
        const long long v = to_integer(key, value);
        if (v < 0) throw ConfigError("seed must be non-negative");
        s.seed = static_cast<std::uint64_t>(v);
    }
    else if (key == "algorithms") s.algorithms = value;
    else if (key == "grid-spacing") s.grid_spacing = to_double(key, value);
    else if (key == "mode") s.mode = value;
    else if (key == "beta") s.beta = to_double(key, value);
    else if (key == "max-iters") s.max_iters = to_int(key, value);
    else if (key == "xi") s.xi = to_double(key, value);
    else if (key == "noiseless") s.noiseless = to_bool(key, value);
    else if (key == "threads") s.threads = to_int(key, value);
    else if (key == "out") s.out = value;
    else throw ConfigError("unknown setting '" + key + "'");
}

void apply_settings(RunSettings& settings, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) apply_setting(settings, k, v);
}

std::vector<double> snr_grid(double lo, double hi, double step) {
    if (!(step > 0.0)) throw ConfigError("snr-step must be positive");
    if (hi < lo) throw ConfigError("snr-max is below snr-min");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    if (count > 10000) throw ConfigError("SNR grid too large");
    for (long i = 0; i <= count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
    std::vector<Algorithm> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const Algorithm a = algorithm_from_string(item);
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
    if (out.empty()) throw ConfigError("no algorithms given");
    return out;
}

ExperimentSpec to_spec(const RunSettings& s) {
    ExperimentSpec spec;
    spec.scenario.num_users = s.users;
    spec.scenario.block_length = s.symbols;
    spec.scenario.num_antennas = s.antennas;
    spec.scenario.grid_spacing = s.grid_spacing;
    spec.snr_grid_db = snr_grid(s.snr_min, s.snr_max, s.snr_step);
    spec.trials = s.trials;
    spec.seed = s.seed;
    spec.algorithms = parse_algorithms(s.algorithms);
    if (s.mode == "k_known") spec.mode = DetectionMode::KKnown;
    else if (s.mode == "threshold") spec.mode = DetectionMode::Threshold;
    else throw ConfigError("mode must be k_known or threshold");
    spec.beta = s.beta;
    spec.max_iterations = s.max_iters;
    spec.xi = s.xi;
    spec.noiseless = s.noiseless;
    spec.threads = s.threads;
    validate(spec);
    return spec;
}

}  // namespace nfjcl
