#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nfjcl/constellation.hpp"
#include "nfjcl/gaussian_message.hpp"
#include "nfjcl/sbl_localizer.hpp"
#include "nfjcl/system_model.hpp"

namespace nfjcl {

/// Dictionary restricted to the detected users plus its own unitary transform.
/// Column j of every block belongs to grid point active_grid_indices[j].
struct PrunedModel {
    std::vector<int> active_grid_indices;
    BlockDictionary dictionary;
    TransformedModel model;
};

PrunedModel prune(const BlockDictionary& dict, const std::vector<int>& active_grid_indices, const CMatrix& Y);

/// Discrete distributions over the alphabet, one per (user k, data position n),
/// n = 1 .. N-1 (position 0 is the reference symbol and carries no data).
class SymbolBeliefs {
public:
    SymbolBeliefs() = default;
    SymbolBeliefs(int num_users, int block_length, int alphabet_size);

    int num_users() const { return num_users_; }
    int block_length() const { return block_length_; }
    int alphabet_size() const { return static_cast<int>(weights_.cols()); }

    auto row(int k, int n) { return weights_.row(index(k, n)); }
    auto row(int k, int n) const { return weights_.row(index(k, n)); }
    const RMatrix& table() const { return weights_; }
    RMatrix& table() { return weights_; }

private:
    Eigen::Index index(int k, int n) const;

    int num_users_ = 0;
    int block_length_ = 0;
    RMatrix weights_;  // (K * (N-1)) x |A|
};

// ---------------------------------------------------------------------------
// Message rules. Messages are K x N with full per-snapshot variances; an
// infinite variance is an absent message.
// ---------------------------------------------------------------------------

/// z_l^n -> delta^n: UAMP extrinsic times the message from delta^{n+1}.
GaussianVecMessage forward_to_delta(const GaussianVecMessage& q, const GaussianVecMessage& from_next_delta);

/// z_l^{n-1} -> delta^n, stored in column n. Column 0 is uninformative.
GaussianVecMessage forward_from_prev(const GaussianVecMessage& q, const GaussianVecMessage& from_delta);

/// log CN(z_fwd ; q * z_prev, v_fwd + |q|^2 v_prev).
double symbol_log_likelihood(ScalarGaussian z_fwd, ScalarGaussian z_prev, Complex q);

/// Per-block log-likelihood tables, same layout as SymbolBeliefs.
std::vector<RMatrix> symbol_log_likelihoods(const std::vector<GaussianVecMessage>& fwd,
                                            const std::vector<GaussianVecMessage>& fwd_prev,
                                            const Constellation& constellation);

/// Normalizes exp(row - max) in place.
void normalize_log_weights(Eigen::Ref<RVector> row);

/// Symbol beliefs psi: product over all blocks.
SymbolBeliefs symbol_weights(const std::vector<RMatrix>& log_lik, int num_users, int block_length);

/// Extrinsic weights xi for block l: product over all other blocks.
SymbolBeliefs extrinsic_weights(const std::vector<RMatrix>& log_lik, std::size_t l, int num_users,
                                int block_length);

/// alpha_q = xi_q |q|^2 / sum_q' xi_q' |q'|^2.
RVector mixture_weights(const Eigen::Ref<const RVector>& xi, const Constellation& constellation);

/// Gaussian projection of the message delta^n -> z^n, the mixture
/// sum_q alpha_q CN(q * z_prev, |q|^2 v_prev).
ScalarGaussian backward_to_zn(const Eigen::Ref<const RVector>& alpha, ScalarGaussian z_prev,
                              const Constellation& constellation, double variance_floor);

/// Gaussian projection of the message delta^n -> z^{n-1}: the mixture of
/// z_fwd / q, i.e. sum_q alpha_q CN(z_fwd / q, v_fwd / |q|^2).
ScalarGaussian backward_to_zprev(const Eigen::Ref<const RVector>& alpha, ScalarGaussian z_fwd,
                                 const Constellation& constellation, double variance_floor);

/// Stage-2 belief of z: product of the UAMP extrinsic and both differential
/// messages (absent ones are skipped).
GaussianVecMessage combine_z_belief(const GaussianVecMessage& q, const GaussianVecMessage& from_next_delta,
                                    const GaussianVecMessage& from_delta);

/// Argmax per (k, n); ties resolve to the lowest constellation index.
/// Returns K x (N-1) constellation indices.
Eigen::MatrixXi hard_decide(const SymbolBeliefs& psi);

/// Gray labels of the decided symbols, K x (N-1) x bits_per_symbol, user-major.
std::vector<std::uint8_t> demodulate_bits(const Eigen::MatrixXi& symbol_indices, const Constellation& constellation);

double mean_symbol_entropy(const SymbolBeliefs& psi);

// ---------------------------------------------------------------------------
// Stage-2 solver
// ---------------------------------------------------------------------------

struct DetectorTraceRecord {
    int iteration = 0;
    double gamma_hat = 0.0;
    double metric = 0.0;
    double mean_entropy = 0.0;
};

std::string format_trace(const DetectorTraceRecord& rec);

struct DetectorOptions {
    double xi = 1e-5;
    int max_iterations = 100;
    double variance_floor = 1e-12;
    bool check_invariants = true;
    std::function<void(const DetectorTraceRecord&)> trace;
};

/// Starting point for stage 2, one K x N message per block: the stage-1
/// posterior means on the active columns with the variance reset to
/// `initial_variance`, plus the stage-1 noise precision. The stage-1 q
/// variances are not reused; on strongly coherent column pairs they are
/// overconfident and pin the detector to the split stage-1 estimate.
struct DetectorWarmStart {
    std::vector<GaussianVecMessage> q;
    double gamma_hat = 1.0;
};

inline constexpr double kWarmStartVariance = 1.0;

DetectorWarmStart warm_start_from(const LocalizationResult& stage1, const std::vector<int>& active_grid_indices,
                                  double initial_variance = kWarmStartVariance);

struct DetectorState {
    std::vector<GaussianVecMessage> q, z, p, h, e;
    std::vector<GaussianVecMessage> fwd;        // z^n -> delta^n
    std::vector<GaussianVecMessage> fwd_prev;   // z^{n-1} -> delta^n (column n)
    std::vector<GaussianVecMessage> bwd;        // delta^n -> z^n (column 0 absent)
    std::vector<GaussianVecMessage> bwd_next;   // delta^{n+1} -> z^n (column N-1 absent)
    std::vector<SymbolBeliefs> xi;              // extrinsic symbol weights per block
    std::vector<SymbolBeliefs> alpha;           // EP mixture weights per block
    double gamma_hat = 1.0;
    int iteration = 0;
};

struct DetectionResult {
    SymbolBeliefs psi;
    Eigen::MatrixXi decisions;  // K x (N-1) constellation indices
    DetectorState state;
    int iterations_used = 0;
    bool converged = false;
};

DetectionResult run_detection(const PrunedModel& pruned, const DetectorWarmStart& warm,
                              const Constellation& constellation, const DetectorOptions& options);

}  // namespace nfjcl
