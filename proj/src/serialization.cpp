#include "nfjcl/serialization.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace nfjcl {

namespace {

constexpr const char* kScenarioHeader = "# nfjcl scenario v1";
constexpr const char* kTruthHeader = "# nfjcl truth v1";

// Reads the next line and checks its leading keyword; the rest is returned as a stream.
std::istringstream expect(std::istream& is, const std::string& key) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("unexpected end of input, wanted '" + key + "'");
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word != key) throw ConfigError("expected '" + key + "', found '" + word + "'");
    return ss;
}

template <typename... T>
void read_fields(std::istringstream& ss, const std::string& key, T&... out) {
    ((ss >> out), ...);
    if (ss.fail()) throw ConfigError("malformed '" + key + "' line");
}

void expect_header(std::istream& is, const char* header) {
    std::string line;
    if (!std::getline(is, line) || line != header) throw ConfigError(std::string("missing header '") + header + "'");
}

}  // namespace

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_scenario(std::ostream& os, const ScenarioConfig& cfg) {
    os << kScenarioHeader << '\n';
    os << "area_origin " << format_real(cfg.area_origin.x) << ' ' << format_real(cfg.area_origin.y) << '\n';
    os << "area_side " << format_real(cfg.area_side) << '\n';
    os << "grid_spacing " << format_real(cfg.grid_spacing) << '\n';
    os << "bs_count " << cfg.bs_positions.size() << '\n';
    for (const auto& p : cfg.bs_positions) os << "bs " << format_real(p.x) << ' ' << format_real(p.y) << '\n';
    os << "num_antennas " << cfg.num_antennas << '\n';
    os << "antenna_spacing " << format_real(cfg.antenna_spacing) << '\n';
    os << "wavelength " << format_real(cfg.wavelength) << '\n';
    os << "num_users " << cfg.num_users << '\n';
    os << "block_length " << cfg.block_length << '\n';
    os << "constellation " << to_string(cfg.constellation) << '\n';
}

ScenarioConfig read_scenario(std::istream& is) {
    expect_header(is, kScenarioHeader);
    ScenarioConfig cfg;
    {
        auto ss = expect(is, "area_origin");
        read_fields(ss, "area_origin", cfg.area_origin.x, cfg.area_origin.y);
    }
    {
        auto ss = expect(is, "area_side");
        read_fields(ss, "area_side", cfg.area_side);
    }
    {
        auto ss = expect(is, "grid_spacing");
        read_fields(ss, "grid_spacing", cfg.grid_spacing);
    }
    std::size_t count = 0;
    {
        auto ss = expect(is, "bs_count");
        read_fields(ss, "bs_count", count);
    }
    cfg.bs_positions.assign(count, Position2D{});
    for (auto& p : cfg.bs_positions) {
        auto ss = expect(is, "bs");
        read_fields(ss, "bs", p.x, p.y);
    }
    {
        auto ss = expect(is, "num_antennas");
        read_fields(ss, "num_antennas", cfg.num_antennas);
    }
    {
        auto ss = expect(is, "antenna_spacing");
        read_fields(ss, "antenna_spacing", cfg.antenna_spacing);
    }
    {
        auto ss = expect(is, "wavelength");
        read_fields(ss, "wavelength", cfg.wavelength);
    }
    {
        auto ss = expect(is, "num_users");
        read_fields(ss, "num_users", cfg.num_users);
    }
    {
        auto ss = expect(is, "block_length");
        read_fields(ss, "block_length", cfg.block_length);
    }
    {
        auto ss = expect(is, "constellation");
        std::string name;
        read_fields(ss, "constellation", name);
        cfg.constellation = constellation_from_string(name);
    }
    return cfg;
}

void write_ground_truth(std::ostream& os, const GroundTruth& truth) {
    const auto K = truth.gains.rows();
    const auto L = truth.gains.cols();
    const auto N = truth.symbols.cols();
    os << kTruthHeader << '\n';
    os << "dims " << K << ' ' << N << ' ' << L << ' ' << truth.bits_per_symbol << '\n';
    os << "users";
    for (int m : truth.user_grid_indices) os << ' ' << m;
    os << '\n';
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < L; ++l)
            os << "gain " << k << ' ' << l << ' ' << format_real(truth.gains(k, l).real()) << ' '
               << format_real(truth.gains(k, l).imag()) << '\n';
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index n = 0; n < N; ++n)
            os << "symbol " << k << ' ' << n << ' ' << format_real(truth.symbols(k, n).real()) << ' '
               << format_real(truth.symbols(k, n).imag()) << '\n';
    os << "bits ";
    for (auto b : truth.info_bits) os << (b ? '1' : '0');
    os << '\n';
}

GroundTruth read_ground_truth(std::istream& is) {
    expect_header(is, kTruthHeader);
    GroundTruth truth;
    Eigen::Index K = 0, N = 0, L = 0;
    {
        auto ss = expect(is, "dims");
        read_fields(ss, "dims", K, N, L, truth.bits_per_symbol);
    }
    if (K < 1 || N < 1 || L < 1 || truth.bits_per_symbol < 1) throw ConfigError("truth: bad dims");
    {
        auto ss = expect(is, "users");
        truth.user_grid_indices.resize(static_cast<std::size_t>(K));
        for (auto& m : truth.user_grid_indices) read_fields(ss, "users", m);
    }
    truth.gains.resize(K, L);
    for (Eigen::Index i = 0; i < K * L; ++i) {
        auto ss = expect(is, "gain");
        Eigen::Index k = 0, l = 0;
        double re = 0.0, im = 0.0;
        read_fields(ss, "gain", k, l, re, im);
        if (k != i / L || l != i % L) throw ConfigError("truth: gain lines out of order");
        truth.gains(k, l) = Complex(re, im);
    }
    truth.symbols.resize(K, N);
    for (Eigen::Index i = 0; i < K * N; ++i) {
        auto ss = expect(is, "symbol");
        Eigen::Index k = 0, n = 0;
        double re = 0.0, im = 0.0;
        read_fields(ss, "symbol", k, n, re, im);
        if (k != i / N || n != i % N) throw ConfigError("truth: symbol lines out of order");
        truth.symbols(k, n) = Complex(re, im);
    }
    {
        auto ss = expect(is, "bits");
        std::string bits;
        ss >> bits;
        const auto want = static_cast<std::size_t>(K * (N - 1) * truth.bits_per_symbol);
        if (bits.size() != want) throw ConfigError("truth: wrong bit count");
        truth.info_bits.reserve(bits.size());
        for (char c : bits) {
            if (c != '0' && c != '1') throw ConfigError("truth: bits must be 0/1");
            truth.info_bits.push_back(static_cast<std::uint8_t>(c == '1'));
        }
    }
    return truth;
}

}  // namespace nfjcl
