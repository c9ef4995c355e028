#include "nfjcl/sbl_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nfjcl {

namespace {

// out.col(n) = var.col(n or 0) .* mean.col(n)
CMatrix scale_columns(const RMatrix& var, const CMatrix& mean) {
    CMatrix out(mean.rows(), mean.cols());
    if (var.cols() == 1) {
        out = mean.array().colwise() * var.col(0).cast<Complex>().array();
    } else {
        out = mean.array() * var.cast<Complex>().array();
    }
    return out;
}

CMatrix residual(const Eigen::Ref<const CMatrix>& y_bar, const CMatrix& mean) { return y_bar - mean; }

}  // namespace

GaussianVecMessage update_z_belief(const GaussianVecMessage& q, const RVector& lambda) {
    if (lambda.size() != q.length()) throw NumericalError("update_z_belief: lambda length mismatch");
    if ((q.var.array() <= 0.0).any()) throw NumericalError("update_z_belief: non-positive q variance");
    // nu_z = nu_q / (1 + lambda nu_q); z = q / (1 + lambda nu_q).
    RMatrix shrink = (q.var.array().colwise() * lambda.array() + 1.0).inverse();
    GaussianVecMessage z;
    z.var = q.var.array() * shrink.array();
    z.mean = scale_columns(shrink, q.mean);
    return z;
}

GaussianVecMessage update_p(const CMatrix& phi, const RMatrix& phi_abs2, const GaussianVecMessage& z,
                            const CMatrix& e_mean) {
    GaussianVecMessage p;
    p.var.noalias() = phi_abs2 * z.var;
    p.mean.noalias() = phi * z.mean;
    p.mean -= scale_columns(p.var, e_mean);
    return p;
}

GaussianVecMessage update_h_belief(const GaussianVecMessage& p, const Eigen::Ref<const CMatrix>& y_bar,
                                   double gamma) {
    GaussianVecMessage h;
    RMatrix gain = (gamma * p.var.array() + 1.0).inverse();  // 1 / (1 + gamma nu_p)
    h.var = p.var.array() * gain.array();
    RMatrix weight = gamma * h.var.array();                  // gamma nu_p / (1 + gamma nu_p)
    h.mean = scale_columns(gain, p.mean) + scale_columns(weight, y_bar);
    return h;
}

double residual_energy(const GaussianVecMessage& h, const Eigen::Ref<const CMatrix>& y_bar) {
    const double fit = residual(y_bar, h.mean).squaredNorm();
    const double var_sum = h.shared_variance() ? h.var.sum() * static_cast<double>(h.snapshots()) : h.var.sum();
    return fit + var_sum;
}

double update_gamma(const std::vector<GaussianVecMessage>& h, const CMatrix& y_bar_stacked) {
    if (h.empty()) throw NumericalError("update_gamma: no blocks");
    const Eigen::Index R = h.front().length();
    double denom = 0.0;
    double count = 0.0;
    for (std::size_t l = 0; l < h.size(); ++l) {
        denom += residual_energy(h[l], y_bar_stacked.middleRows(static_cast<Eigen::Index>(l) * R, R));
        count += static_cast<double>(R * h[l].snapshots());
    }
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw NumericalError("update_gamma: degenerate residual (zero or non-finite denominator)");
    }
    return count / denom;
}

GaussianVecMessage update_e(const GaussianVecMessage& p, const Eigen::Ref<const CMatrix>& y_bar, double gamma) {
    GaussianVecMessage e;
    e.var = (p.var.array() + 1.0 / gamma).inverse();
    e.mean = scale_columns(e.var, residual(y_bar, p.mean));
    return e;
}

GaussianVecMessage update_q(const CMatrix& phi, const RMatrix& phi_abs2, const GaussianVecMessage& z,
                            const GaussianVecMessage& e) {
    GaussianVecMessage q;
    RMatrix precision;
    precision.noalias() = phi_abs2.transpose() * e.var;
    q.var = precision.array().inverse();
    CMatrix back;
    back.noalias() = phi.adjoint() * e.mean;
    q.mean = z.mean + scale_columns(q.var, back);
    return q;
}

RVector update_lambda(const std::vector<GaussianVecMessage>& z, double epsilon_prime, double eta) {
    if (z.empty()) throw NumericalError("update_lambda: no blocks");
    const Eigen::Index M = z.front().length();
    RVector energy = RVector::Zero(M);
    double NL = 0.0;
    for (const auto& zl : z) {
        energy += zl.mean.cwiseAbs2().rowwise().sum();
        if (zl.shared_variance()) {
            energy += zl.var.col(0) * static_cast<double>(zl.snapshots());
        } else {
            energy += zl.var.rowwise().sum();
        }
        NL += static_cast<double>(zl.snapshots());
    }
    return ((epsilon_prime + 1.0) * NL) / (energy.array() + eta);
}

double epsilon_rule_argument(const RVector& lambda) {
    const double log_mean = std::log(lambda.mean());
    const double mean_log = lambda.array().log().mean();
    return log_mean - mean_log;
}

double update_epsilon(const RVector& lambda) {
    return 0.5 * std::sqrt(std::max(0.0, epsilon_rule_argument(lambda)));
}

ConvergenceCheck check_convergence(const std::vector<CMatrix>& z_prev, const std::vector<CMatrix>& z_curr,
                                   double xi) {
    if (z_prev.size() != z_curr.size()) throw NumericalError("check_convergence: block count mismatch");
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t l = 0; l < z_curr.size(); ++l) {
        diff += (z_curr[l] - z_prev[l]).squaredNorm();
        norm += z_curr[l].squaredNorm();
    }
    ConvergenceCheck check;
    if (norm == 0.0) {
        check.degenerate = true;
        check.converged = true;
        check.metric = 0.0;
        return check;
    }
    check.metric = diff / norm;
    check.converged = check.metric < xi;
    return check;
}

std::vector<int> detect_active(const RVector& lambda, const DetectionRule& rule) {
    std::vector<int> active;
    if (rule.mode == DetectionMode::Threshold) {
        if (!rule.beta) throw ConfigError("threshold detection requires beta");
        for (Eigen::Index m = 0; m < lambda.size(); ++m) {
            if (lambda(m) < *rule.beta) active.push_back(static_cast<int>(m));
        }
        return active;
    }
    if (rule.num_users < 0 || rule.num_users > lambda.size()) {
        throw ConfigError("detect_active: K out of range");
    }
    std::vector<int> order(static_cast<std::size_t>(lambda.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambda(a) < lambda(b); });
    active.assign(order.begin(), order.begin() + rule.num_users);
    std::sort(active.begin(), active.end());
    return active;
}

std::string format_trace(const SblTraceRecord& rec) {
    std::ostringstream os;
    os.precision(9);
    os << "sbl iter=" << rec.iteration << " gamma=" << rec.gamma_hat << " lambda_min=" << rec.lambda_min
       << " lambda_max=" << rec.lambda_max << " eps=" << rec.epsilon_prime << " metric=" << rec.metric;
    return os.str();
}

SblState initial_sbl_state(const TransformedModel& model, const SblOptions& options) {
    const auto L = model.num_blocks();
    const Eigen::Index M = model.cols();
    const Eigen::Index R = model.rows();
    const Eigen::Index N = model.snapshots();
    SblState s;
    s.lambda_hat = options.fixed_lambda ? *options.fixed_lambda : RVector::Constant(M, options.initial_lambda);
    if (s.lambda_hat.size() != M) throw ConfigError("fixed_lambda has the wrong length");
    s.gamma_hat = options.fixed_gamma ? *options.fixed_gamma : options.initial_gamma;
    s.epsilon_prime = options.initial_epsilon;
    s.eta = options.eta;
    for (std::size_t l = 0; l < L; ++l) {
        // Stage-1 variances are identical across snapshots, so one column is kept.
        s.q.push_back(GaussianVecMessage::zeros(M, N, 1.0, true));
        s.e.push_back(GaussianVecMessage::zeros(R, N, 1.0, true));
        s.z.push_back(update_z_belief(s.q.back(), s.lambda_hat));
        s.p.push_back(GaussianVecMessage::zeros(R, N, 1.0, true));
        s.h.push_back(GaussianVecMessage::zeros(R, N, 1.0, true));
    }
    return s;
}

ConvergenceCheck sbl_iteration(const TransformedModel& model, SblState& s, const SblOptions& options,
                               const std::vector<CMatrix>& z_prev) {
    const auto& T = *model.transform;
    const std::size_t L = model.num_blocks();
    const Eigen::Index R = model.rows();
    auto y_block = [&](std::size_t l) { return model.y_bar.middleRows(static_cast<Eigen::Index>(l) * R, R); };

    // 1-3: z belief, UAMP output-side messages, h belief.
    for (std::size_t l = 0; l < L; ++l) {
        s.z[l] = update_z_belief(s.q[l], s.lambda_hat);
        s.p[l] = update_p(T.phi[l], T.phi_abs2[l], s.z[l], s.e[l].mean);
        s.h[l] = update_h_belief(s.p[l], y_block(l), s.gamma_hat);
    }
    // 4: noise precision.
    if (!options.fixed_gamma) s.gamma_hat = update_gamma(s.h, model.y_bar);
    // 5-7: e, q and the refreshed z belief.
    for (std::size_t l = 0; l < L; ++l) {
        s.e[l] = update_e(s.p[l], y_block(l), s.gamma_hat);
        s.q[l] = update_q(T.phi[l], T.phi_abs2[l], s.z[l], s.e[l]);
        GaussianVecMessage z_new = update_z_belief(s.q[l], s.lambda_hat);
        if (options.damping > 0.0) {
            const double d = options.damping;
            z_new.mean = (1.0 - d) * z_new.mean + d * s.z[l].mean;
            z_new.var = (1.0 - d) * z_new.var + d * s.z[l].var;
        }
        s.z[l] = std::move(z_new);
    }
    // 8-9: prior precisions and the shape parameter.
    if (!options.fixed_lambda) {
        s.lambda_hat = update_lambda(s.z, s.epsilon_prime, s.eta);
        const double arg = epsilon_rule_argument(s.lambda_hat);
        if (arg < 0.0) s.max_epsilon_clamp = std::max(s.max_epsilon_clamp, -arg);
        s.epsilon_prime = update_epsilon(s.lambda_hat);
    }
    ++s.iteration;

    if (options.check_invariants) {
        for (std::size_t l = 0; l < L; ++l) {
            require_positive_variance(s.z[l].var, "z belief");
            require_positive_variance(s.q[l].var, "q message");
            require_positive_variance(s.e[l].var, "e message");
            require_nonnegative_variance(s.p[l].var, "p message");
            require_nonnegative_variance(s.h[l].var, "h belief");
        }
        if (!(s.gamma_hat > 0.0) || !std::isfinite(s.gamma_hat)) throw NumericalError("gamma_hat left (0, inf)");
        if (!(s.lambda_hat.array() > 0.0).all() || !s.lambda_hat.allFinite()) {
            throw NumericalError("lambda_hat left (0, inf)");
        }
        if (!(s.epsilon_prime >= 0.0) || !std::isfinite(s.epsilon_prime)) {
            throw NumericalError("epsilon' is negative or non-finite");
        }
    }

    std::vector<CMatrix> z_curr;
    z_curr.reserve(L);
    for (const auto& z : s.z) z_curr.push_back(z.mean);
    return check_convergence(z_prev, z_curr, options.xi);
}

LocalizationResult run_localization(const TransformedModel& model, const SblOptions& options) {
    SblState state = initial_sbl_state(model, options);
    LocalizationResult result;

    std::vector<CMatrix> z_prev;
    for (const auto& z : state.z) z_prev.push_back(z.mean);

    for (int it = 0; it < options.max_iterations; ++it) {
        const ConvergenceCheck check = sbl_iteration(model, state, options, z_prev);
        if (options.trace) {
            options.trace({state.iteration, state.gamma_hat, state.lambda_hat.minCoeff(), state.lambda_hat.maxCoeff(),
                           state.epsilon_prime, check.metric});
        }
        if (check.converged) {
            result.converged = true;
            result.degenerate = check.degenerate;
            break;
        }
        for (std::size_t l = 0; l < state.z.size(); ++l) z_prev[l] = state.z[l].mean;
    }

    result.iterations_used = state.iteration;
    result.lambda_hat = state.lambda_hat;
    result.gamma_hat = state.gamma_hat;
    for (const auto& z : state.z) result.z_estimate.push_back(z.mean);
    result.active_grid_indices = detect_active(state.lambda_hat, options.detection);
    result.state = std::move(state);
    return result;
}

}  // namespace nfjcl
