#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nfjcl/baselines.hpp"
#include "nfjcl/diff_detector.hpp"
#include "nfjcl/geometry.hpp"
#include "nfjcl/sbl_localizer.hpp"

namespace nfjcl {

enum class Algorithm { Proposed, Omp, FfMismatch };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct ExperimentSpec {
    ScenarioConfig scenario = default_scenario();
    std::vector<double> snr_grid_db{0.0};
    int trials = 1;
    std::vector<Algorithm> algorithms{Algorithm::Proposed};
    std::uint64_t seed = 1;
    DetectionMode mode = DetectionMode::KKnown;
    std::optional<double> beta;
    bool noiseless = false;
    bool run_detector = true;  // off: localization only, BER columns are NaN
    double xi = 1e-5;
    int max_iterations = 200;
    int detector_max_iterations = 100;
    int threads = 0;  // 0: NFJCL_THREADS or hardware concurrency
};

/// Throws ConfigError on an unusable spec.
void validate(const ExperimentSpec& spec);

/// Independent generator for one trial, derived from (seed, trial) by a
/// counter-based hash, so trials can run in any order.
Rng trial_rng(std::uint64_t seed, std::uint64_t trial_index);

struct TrialRecord {
    double snr_db = 0.0;
    Algorithm algorithm = Algorithm::Proposed;
    int trial = 0;
    bool located = false;
    std::size_t bit_errors = 0;  // over all K(N-1)log2|A| bits; 0 if no detector
    std::size_t bits = 0;
    double gamma_rel_error = 0.0;  // NaN when undefined (OMP, noiseless)
    int iterations = 0;
    bool converged = false;
    bool detector_converged = false;
    double max_epsilon_clamp = 0.0;
};

/// Everything the harness needs that depends on the scenario only.
struct SweepContext {
    ExperimentSpec spec;
    Constellation constellation;
    PreparedDictionary near_field;
    std::optional<PreparedDictionary> far_field;

    explicit SweepContext(ExperimentSpec s);
};

/// Runs every selected algorithm on one (SNR, trial) draw. The ground truth
/// depends on the trial index only, so all SNR points see the same users,
/// gains, bits and unit noise realization.
std::vector<TrialRecord> run_trial(const SweepContext& ctx, double snr_db, int trial_index);

struct MetricsRow {
    double snr_db = 0.0;
    std::string algorithm;
    int K = 0;
    int N = 0;
    double loc_accuracy = 0.0;
    double ber = 0.0;
    double ber_cond = 0.0;
    double gamma_rel_error = 0.0;  // median over trials
    double mean_iters = 0.0;
    int trials = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Per-trial records plus their aggregation, rows ordered by (snr, algorithm).
struct SweepResult {
    std::vector<TrialRecord> records;
    std::vector<MetricsRow> rows;
};

SweepResult run_sweep(const ExperimentSpec& spec);

std::vector<MetricsRow> aggregate(const std::vector<TrialRecord>& records, const ExperimentSpec& spec);

/// Standard error of the per-trial BER around its mean for one (snr, algorithm).
double ber_standard_error(const std::vector<TrialRecord>& records, double snr_db, Algorithm algorithm);

inline constexpr const char* kCsvHeader =
    "snr_db,algorithm,K,N,loc_accuracy,ber,ber_cond,gamma_rel_error,mean_iters,trials";

void emit_csv(const std::vector<MetricsRow>& rows, std::ostream& os);
void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> parse_csv(std::istream& is);

enum class PlotQuantity { Accuracy, Ber, GammaError };

/// Whitespace-separated table: first column SNR, then one column per
/// algorithm/K combination.
void emit_plotdata(const std::vector<MetricsRow>& rows, PlotQuantity quantity, std::ostream& os);
void emit_plotdata(const std::vector<MetricsRow>& rows, PlotQuantity quantity, const std::string& path);

int resolve_thread_count(int requested);

}  // namespace nfjcl
