#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfjcl/gaussian_message.hpp"
#include "nfjcl/system_model.hpp"

namespace nfjcl {

// ---------------------------------------------------------------------------
// UAMP building blocks. Each acts on one block l and on all snapshots of that
// block at once (column n of every mean is snapshot n). The detector reuses
// update_p / update_h_belief / update_gamma / update_e / update_q unchanged.
// ---------------------------------------------------------------------------

/// Posterior of z under the Gaussian prior with precisions `lambda`:
/// nu_z = 1 ./ (1 ./ nu_q + lambda), z = nu_z .* q ./ nu_q.
GaussianVecMessage update_z_belief(const GaussianVecMessage& q, const RVector& lambda);

/// nu_p = |Phi|^2 nu_z, p = Phi z - nu_p .* e.
GaussianVecMessage update_p(const CMatrix& phi, const RMatrix& phi_abs2, const GaussianVecMessage& z,
                            const CMatrix& e_mean);

/// nu_h = nu_p ./ (1 + gamma nu_p), h = nu_h .* (p ./ nu_p + gamma y).
/// Evaluated as (p + gamma nu_p y) ./ (1 + gamma nu_p) so zero nu_p rows stay finite.
GaussianVecMessage update_h_belief(const GaussianVecMessage& p, const Eigen::Ref<const CMatrix>& y_bar, double gamma);

/// sum_n ||y - h||^2 + 1^T nu_h for one block.
double residual_energy(const GaussianVecMessage& h, const Eigen::Ref<const CMatrix>& y_bar);

/// gamma = N L R / sum over blocks of residual_energy.
double update_gamma(const std::vector<GaussianVecMessage>& h, const CMatrix& y_bar_stacked);

/// nu_e = 1 ./ (nu_p + 1/gamma), e = nu_e .* (y - p).
GaussianVecMessage update_e(const GaussianVecMessage& p, const Eigen::Ref<const CMatrix>& y_bar, double gamma);

/// nu_q = 1 ./ (|Phi^H|^2 nu_e), q = z + nu_q .* (Phi^H e).
GaussianVecMessage update_q(const CMatrix& phi, const RMatrix& phi_abs2, const GaussianVecMessage& z,
                            const GaussianVecMessage& e);

/// lambda_m = (eps' + 1) N L / (eta + sum_{n,l} |z_{l,m}^n|^2 + nu_{z_{l,m}^n}).
RVector update_lambda(const std::vector<GaussianVecMessage>& z, double epsilon_prime, double eta);

/// Argument of the square root in the epsilon' rule, before clamping.
double epsilon_rule_argument(const RVector& lambda);
/// eps' = 0.5 * sqrt(max(0, log(mean lambda) - mean(log lambda))).
double update_epsilon(const RVector& lambda);

struct ConvergenceCheck {
    double metric = 0.0;
    bool converged = false;
    bool degenerate = false;  // current estimate is identically zero
};

/// sum ||z_curr - z_prev||^2 / sum ||z_curr||^2 over every block and snapshot.
ConvergenceCheck check_convergence(const std::vector<CMatrix>& z_prev, const std::vector<CMatrix>& z_curr,
                                   double xi);

// ---------------------------------------------------------------------------
// Active-set extraction
// ---------------------------------------------------------------------------

enum class DetectionMode { KKnown, Threshold };

struct DetectionRule {
    DetectionMode mode = DetectionMode::KKnown;
    int num_users = 1;                // K-known mode
    std::optional<double> beta;       // threshold mode; no default exists
};

/// K-known: the K smallest lambda (ties -> lower index). Threshold: lambda_m < beta.
/// Result is sorted by grid index.
std::vector<int> detect_active(const RVector& lambda, const DetectionRule& rule);

// ---------------------------------------------------------------------------
// Stage-1 solver
// ---------------------------------------------------------------------------

struct SblTraceRecord {
    int iteration = 0;
    double gamma_hat = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double epsilon_prime = 0.0;
    double metric = 0.0;
};

std::string format_trace(const SblTraceRecord& rec);

struct SblOptions {
    double xi = 1e-5;
    int max_iterations = 200;
    double eta = 1e-6;
    double damping = 0.0;  // weight of the previous z belief; 0 disables
    DetectionRule detection;
    bool check_invariants = true;

    // Algorithm 1 initial values.
    double initial_lambda = 1.0;
    double initial_gamma = 1.0;
    double initial_epsilon = 1.0;

    // Freezing lambda / gamma turns the loop into plain UAMP with a fixed
    // Gaussian prior; used by the LMMSE oracle checks.
    std::optional<RVector> fixed_lambda;
    std::optional<double> fixed_gamma;

    std::function<void(const SblTraceRecord&)> trace;
};

struct SblState {
    std::vector<GaussianVecMessage> z, q, p, h, e;  // one entry per block
    RVector lambda_hat;
    double gamma_hat = 1.0;
    double epsilon_prime = 1.0;
    double eta = 1e-6;
    int iteration = 0;
    // Largest raw epsilon-rule argument that had to be clamped up to zero.
    double max_epsilon_clamp = 0.0;
};

struct LocalizationResult {
    std::vector<int> active_grid_indices;
    RVector lambda_hat;
    double gamma_hat = 0.0;
    std::vector<CMatrix> z_estimate;  // per block, M x N
    int iterations_used = 0;
    bool converged = false;
    bool degenerate = false;
    SblState state;
};

SblState initial_sbl_state(const TransformedModel& model, const SblOptions& options);

/// One pass of steps 1-9; returns the convergence check against `z_prev`.
ConvergenceCheck sbl_iteration(const TransformedModel& model, SblState& state, const SblOptions& options,
                               const std::vector<CMatrix>& z_prev);

LocalizationResult run_localization(const TransformedModel& model, const SblOptions& options);

}  // namespace nfjcl
