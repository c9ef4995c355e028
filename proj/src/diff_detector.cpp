#include "nfjcl/diff_detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nfjcl {

PrunedModel prune(const BlockDictionary& dict, const std::vector<int>& active_grid_indices, const CMatrix& Y) {
    if (active_grid_indices.empty()) throw ModelError("prune: empty active set");
    PrunedModel pruned;
    pruned.active_grid_indices = active_grid_indices;
    pruned.dictionary = select_columns(dict, active_grid_indices);
    auto transform = std::make_shared<const BlockTransform>(unitary_transform(pruned.dictionary.blocks));
    pruned.model = transform_observation(std::move(transform), Y);
    return pruned;
}

SymbolBeliefs::SymbolBeliefs(int num_users, int block_length, int alphabet_size)
    : num_users_(num_users),
      block_length_(block_length),
      weights_(RMatrix::Zero(static_cast<Eigen::Index>(num_users) * (block_length - 1), alphabet_size)) {}

Eigen::Index SymbolBeliefs::index(int k, int n) const {
    if (k < 0 || k >= num_users_ || n < 1 || n >= block_length_) {
        throw ModelError("SymbolBeliefs: (k, n) out of range");
    }
    return static_cast<Eigen::Index>(k) * (block_length_ - 1) + (n - 1);
}

GaussianVecMessage forward_to_delta(const GaussianVecMessage& q, const GaussianVecMessage& from_next_delta) {
    return gaussian_product(q, from_next_delta);
}

GaussianVecMessage forward_from_prev(const GaussianVecMessage& q, const GaussianVecMessage& from_delta) {
    const Eigen::Index K = q.length();
    const Eigen::Index N = q.snapshots();
    GaussianVecMessage out = GaussianVecMessage::uninformative(K, N);
    for (Eigen::Index n = 1; n < N; ++n) {
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto g = gaussian_product({q.mean(k, n - 1), q.variance(k, n - 1)},
                                            {from_delta.mean(k, n - 1), from_delta.variance(k, n - 1)});
            out.mean(k, n) = g.mean;
            out.var(k, n) = g.var;
        }
    }
    return out;
}

double symbol_log_likelihood(ScalarGaussian z_fwd, ScalarGaussian z_prev, Complex q) {
    const double v = z_fwd.var + std::norm(q) * z_prev.var;
    return -std::log(kPi * v) - std::norm(z_fwd.mean - q * z_prev.mean) / v;
}

std::vector<RMatrix> symbol_log_likelihoods(const std::vector<GaussianVecMessage>& fwd,
                                            const std::vector<GaussianVecMessage>& fwd_prev,
                                            const Constellation& constellation) {
    std::vector<RMatrix> out;
    out.reserve(fwd.size());
    const auto& alphabet = constellation.symbols();
    for (std::size_t l = 0; l < fwd.size(); ++l) {
        const Eigen::Index K = fwd[l].length();
        const Eigen::Index N = fwd[l].snapshots();
        RMatrix table(K * (N - 1), static_cast<Eigen::Index>(alphabet.size()));
        for (Eigen::Index k = 0; k < K; ++k) {
            for (Eigen::Index n = 1; n < N; ++n) {
                const ScalarGaussian a{fwd[l].mean(k, n), fwd[l].variance(k, n)};
                const ScalarGaussian b{fwd_prev[l].mean(k, n), fwd_prev[l].variance(k, n)};
                for (std::size_t qi = 0; qi < alphabet.size(); ++qi) {
                    table(k * (N - 1) + n - 1, static_cast<Eigen::Index>(qi)) = symbol_log_likelihood(a, b, alphabet[qi]);
                }
            }
        }
        out.push_back(std::move(table));
    }
    return out;
}

void normalize_log_weights(Eigen::Ref<RVector> row) {
    const double peak = row.maxCoeff();
    if (!std::isfinite(peak)) throw NumericalError("symbol weights: non-finite log-likelihood");
    row = (row.array() - peak).exp();
    row /= row.sum();
}

namespace {

SymbolBeliefs combine_log_tables(const std::vector<RMatrix>& log_lik, std::size_t skip, int K, int N) {
    if (log_lik.empty()) throw ModelError("symbol weights: no blocks");
    SymbolBeliefs out(K, N, static_cast<int>(log_lik.front().cols()));
    RMatrix& acc = out.table();
    for (std::size_t l = 0; l < log_lik.size(); ++l) {
        if (l != skip) acc += log_lik[l];
    }
    for (Eigen::Index i = 0; i < acc.rows(); ++i) {
        RVector row = acc.row(i).transpose();
        normalize_log_weights(row);
        acc.row(i) = row.transpose();
    }
    return out;
}

}  // namespace

SymbolBeliefs symbol_weights(const std::vector<RMatrix>& log_lik, int num_users, int block_length) {
    return combine_log_tables(log_lik, log_lik.size(), num_users, block_length);
}

SymbolBeliefs extrinsic_weights(const std::vector<RMatrix>& log_lik, std::size_t l, int num_users,
                                int block_length) {
    if (l >= log_lik.size()) throw ModelError("extrinsic_weights: block out of range");
    return combine_log_tables(log_lik, l, num_users, block_length);
}

RVector mixture_weights(const Eigen::Ref<const RVector>& xi, const Constellation& constellation) {
    RVector alpha(xi.size());
    for (Eigen::Index q = 0; q < xi.size(); ++q) {
        alpha(q) = xi(q) * std::norm(constellation.symbol(static_cast<std::size_t>(q)));
    }
    return alpha / alpha.sum();
}

ScalarGaussian backward_to_zn(const Eigen::Ref<const RVector>& alpha, ScalarGaussian z_prev,
                              const Constellation& constellation, double variance_floor) {
    Complex mean(0.0, 0.0);
    double second = 0.0;
    for (Eigen::Index q = 0; q < alpha.size(); ++q) {
        const Complex s = constellation.symbol(static_cast<std::size_t>(q));
        const Complex component = s * z_prev.mean;
        mean += alpha(q) * component;
        second += alpha(q) * (std::norm(component) + std::norm(s) * z_prev.var);
    }
    return {mean, std::max(second - std::norm(mean), variance_floor)};
}

ScalarGaussian backward_to_zprev(const Eigen::Ref<const RVector>& alpha, ScalarGaussian z_fwd,
                                 const Constellation& constellation, double variance_floor) {
    Complex mean(0.0, 0.0);
    double second = 0.0;
    for (Eigen::Index q = 0; q < alpha.size(); ++q) {
        const Complex s = constellation.symbol(static_cast<std::size_t>(q));
        const Complex component = z_fwd.mean / s;
        mean += alpha(q) * component;
        second += alpha(q) * (std::norm(component) + z_fwd.var / std::norm(s));
    }
    return {mean, std::max(second - std::norm(mean), variance_floor)};
}

GaussianVecMessage combine_z_belief(const GaussianVecMessage& q, const GaussianVecMessage& from_next_delta,
                                    const GaussianVecMessage& from_delta) {
    const Eigen::Index K = q.length();
    const Eigen::Index N = q.snapshots();
    GaussianVecMessage out{CMatrix(K, N), RMatrix(K, N)};
    for (Eigen::Index n = 0; n < N; ++n) {
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto g = gaussian_product({q.mean(k, n), q.variance(k, n)},
                                            {from_next_delta.mean(k, n), from_next_delta.variance(k, n)},
                                            {from_delta.mean(k, n), from_delta.variance(k, n)});
            out.mean(k, n) = g.mean;
            out.var(k, n) = g.var;
        }
    }
    return out;
}

Eigen::MatrixXi hard_decide(const SymbolBeliefs& psi) {
    const int K = psi.num_users();
    const int N = psi.block_length();
    Eigen::MatrixXi out(K, std::max(N - 1, 0));
    for (int k = 0; k < K; ++k) {
        for (int n = 1; n < N; ++n) {
            const auto row = psi.row(k, n);
            Eigen::Index best = 0;
            for (Eigen::Index q = 1; q < row.size(); ++q) {
                if (row(q) > row(best)) best = q;
            }
            out(k, n - 1) = static_cast<int>(best);
        }
    }
    return out;
}

std::vector<std::uint8_t> demodulate_bits(const Eigen::MatrixXi& symbol_indices, const Constellation& constellation) {
    const int bps = constellation.bits_per_symbol();
    const auto K = static_cast<int>(symbol_indices.rows());
    const auto D = static_cast<int>(symbol_indices.cols());
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(K) * static_cast<std::size_t>(D) * static_cast<std::size_t>(bps));
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) {
            const auto& label = constellation.bits(static_cast<std::size_t>(symbol_indices(k, d)));
            for (int b = 0; b < bps; ++b) bits[bit_index(k, d, b, D + 1, bps)] = label[static_cast<std::size_t>(b)];
        }
    }
    return bits;
}

double mean_symbol_entropy(const SymbolBeliefs& psi) {
    const RMatrix& t = psi.table();
    if (t.rows() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double w = t.data()[i];
        if (w > 0.0) total -= w * std::log2(w);
    }
    return total / static_cast<double>(t.rows());
}

std::string format_trace(const DetectorTraceRecord& rec) {
    std::ostringstream os;
    os.precision(9);
    os << "detector iter=" << rec.iteration << " gamma=" << rec.gamma_hat << " metric=" << rec.metric
       << " mean_entropy=" << rec.mean_entropy;
    return os.str();
}

DetectorWarmStart warm_start_from(const LocalizationResult& stage1, const std::vector<int>& active_grid_indices,
                                  double initial_variance) {
    if (!(initial_variance > 0.0) || !std::isfinite(initial_variance)) {
        throw ModelError("warm_start_from: initial variance must be positive and finite");
    }
    DetectorWarmStart warm;
    warm.gamma_hat = stage1.gamma_hat;
    const auto K = static_cast<Eigen::Index>(active_grid_indices.size());
    for (const auto& z : stage1.z_estimate) {
        GaussianVecMessage sub{CMatrix(K, z.cols()), RMatrix::Constant(K, z.cols(), initial_variance)};
        for (Eigen::Index j = 0; j < K; ++j) sub.mean.row(j) = z.row(active_grid_indices[static_cast<std::size_t>(j)]);
        warm.q.push_back(std::move(sub));
    }
    return warm;
}

DetectionResult run_detection(const PrunedModel& pruned, const DetectorWarmStart& warm,
                              const Constellation& constellation, const DetectorOptions& options) {
    const TransformedModel& model = pruned.model;
    const BlockTransform& T = *model.transform;
    const std::size_t L = model.num_blocks();
    const Eigen::Index R = model.rows();
    const Eigen::Index K = model.cols();
    const Eigen::Index N = model.snapshots();
    const int Ki = static_cast<int>(K);
    const int Ni = static_cast<int>(N);
    if (warm.q.size() != L) throw ModelError("run_detection: warm start has the wrong block count");
    if (N < 2) throw ModelError("run_detection: need at least two snapshots");

    DetectorState s;
    s.gamma_hat = warm.gamma_hat;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& wq = warm.q[l];
        if (wq.length() != K || wq.snapshots() != N) throw ModelError("run_detection: warm start shape mismatch");
        s.q.push_back({wq.mean, wq.full_variance()});
        s.e.push_back(GaussianVecMessage::zeros(R, N, 1.0));
        s.p.push_back(GaussianVecMessage::zeros(R, N, 1.0));
        s.h.push_back(GaussianVecMessage::zeros(R, N, 1.0));
        s.bwd.push_back(GaussianVecMessage::uninformative(K, N));
        s.bwd_next.push_back(GaussianVecMessage::uninformative(K, N));
        s.z.push_back(combine_z_belief(s.q.back(), s.bwd_next.back(), s.bwd.back()));
        s.fwd.push_back(GaussianVecMessage::uninformative(K, N));
        s.fwd_prev.push_back(GaussianVecMessage::uninformative(K, N));
        s.xi.emplace_back(Ki, Ni, static_cast<int>(constellation.size()));
        s.alpha.emplace_back(Ki, Ni, static_cast<int>(constellation.size()));
    }

    DetectionResult result;
    std::vector<CMatrix> z_prev;
    for (const auto& z : s.z) z_prev.push_back(z.mean);

    auto y_block = [&](std::size_t l) { return model.y_bar.middleRows(static_cast<Eigen::Index>(l) * R, R); };

    for (int it = 0; it < options.max_iterations; ++it) {
        // 11-12: forward messages into the differential factors.
        for (std::size_t l = 0; l < L; ++l) {
            s.fwd[l] = forward_to_delta(s.q[l], s.bwd_next[l]);
            s.fwd_prev[l] = forward_from_prev(s.q[l], s.bwd[l]);
        }
        // 13: symbol beliefs.
        const auto log_lik = symbol_log_likelihoods(s.fwd, s.fwd_prev, constellation);
        result.psi = symbol_weights(log_lik, Ki, Ni);
        // 14-15: extrinsic weights and the EP-projected backward messages.
        for (std::size_t l = 0; l < L; ++l) {
            s.xi[l] = extrinsic_weights(log_lik, l, Ki, Ni);
            for (int k = 0; k < Ki; ++k) {
                for (int n = 1; n < Ni; ++n) {
                    const RVector alpha = mixture_weights(s.xi[l].row(k, n).transpose(), constellation);
                    s.alpha[l].row(k, n) = alpha.transpose();
                    const auto to_zn = backward_to_zn(alpha, {s.fwd_prev[l].mean(k, n), s.fwd_prev[l].var(k, n)},
                                                      constellation, options.variance_floor);
                    s.bwd[l].mean(k, n) = to_zn.mean;
                    s.bwd[l].var(k, n) = to_zn.var;
                    const auto to_prev = backward_to_zprev(alpha, {s.fwd[l].mean(k, n), s.fwd[l].var(k, n)},
                                                           constellation, options.variance_floor);
                    s.bwd_next[l].mean(k, n - 1) = to_prev.mean;
                    s.bwd_next[l].var(k, n - 1) = to_prev.var;
                }
            }
        }
        // 16-18: z belief and the UAMP output side.
        for (std::size_t l = 0; l < L; ++l) {
            s.z[l] = combine_z_belief(s.q[l], s.bwd_next[l], s.bwd[l]);
            s.p[l] = update_p(T.phi[l], T.phi_abs2[l], s.z[l], s.e[l].mean);
            s.h[l] = update_h_belief(s.p[l], y_block(l), s.gamma_hat);
        }
        // 19: noise precision.
        s.gamma_hat = update_gamma(s.h, model.y_bar);
        // 20-21: e and q.
        for (std::size_t l = 0; l < L; ++l) {
            s.e[l] = update_e(s.p[l], y_block(l), s.gamma_hat);
            s.q[l] = update_q(T.phi[l], T.phi_abs2[l], s.z[l], s.e[l]);
        }
        ++s.iteration;

        if (options.check_invariants) {
            for (std::size_t l = 0; l < L; ++l) {
                require_positive_variance(s.z[l].var, "stage-2 z belief");
                require_positive_variance(s.q[l].var, "stage-2 q message");
                require_positive_variance(s.e[l].var, "stage-2 e message");
                require_nonnegative_variance(s.h[l].var, "stage-2 h belief");
                require_positive_variance(s.bwd[l].var.rightCols(N - 1), "delta -> z message");
                require_positive_variance(s.bwd_next[l].var.leftCols(N - 1), "delta -> z_prev message");
            }
            if (!(s.gamma_hat > 0.0) || !std::isfinite(s.gamma_hat)) throw NumericalError("stage-2 gamma left (0, inf)");
        }

        std::vector<CMatrix> z_curr;
        for (const auto& z : s.z) z_curr.push_back(z.mean);
        const auto check = check_convergence(z_prev, z_curr, options.xi);
        if (options.trace) options.trace({s.iteration, s.gamma_hat, check.metric, mean_symbol_entropy(result.psi)});
        z_prev = std::move(z_curr);
        if (check.converged) {
            result.converged = true;
            break;
        }
    }

    result.iterations_used = s.iteration;
    result.decisions = hard_decide(result.psi);
    result.state = std::move(s);
    return result;
}

}  // namespace nfjcl
