#include "nfjcl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nfjcl {

PreparedDictionary prepare_dictionary(const ScenarioConfig& cfg, ResponseModel model) {
    PreparedDictionary prepared;
    prepared.dictionary = build_dictionary(cfg, model);
    prepared.transform = std::make_shared<const BlockTransform>(unitary_transform(prepared.dictionary.blocks));
    return prepared;
}

LocalizationResult localize(const PreparedDictionary& prepared, const CMatrix& Y, const SblOptions& options) {
    return run_localization(transform_observation(prepared.transform, Y), options);
}

OmpResult omp_localize(const BlockDictionary& dict, const CMatrix& Y, int K, double ridge) {
    const Eigen::Index R = dict.rows_per_block();
    const Eigen::Index M = dict.num_columns();
    const std::size_t L = dict.num_blocks();
    if (K < 1 || K > M) throw ConfigError("omp_localize: K out of range");
    if (Y.rows() != R * static_cast<Eigen::Index>(L)) throw ModelError("omp_localize: observation has wrong row count");

    std::vector<CMatrix> residual;
    for (std::size_t l = 0; l < L; ++l) residual.push_back(Y.middleRows(static_cast<Eigen::Index>(l) * R, R));

    OmpResult result;
    std::vector<bool> taken(static_cast<std::size_t>(M), false);
    for (int round = 0; round < K; ++round) {
        RVector score = RVector::Zero(M);
        for (std::size_t l = 0; l < L; ++l) {
            CMatrix corr;
            corr.noalias() = dict.blocks[l].adjoint() * residual[l];
            score += corr.cwiseAbs2().rowwise().sum();
        }
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < M; ++m) {
            if (!taken[static_cast<std::size_t>(m)] && score(m) > best_score) {
                best_score = score(m);
                best = static_cast<int>(m);
            }
        }
        taken[static_cast<std::size_t>(best)] = true;
        result.selected_grid_indices.push_back(best);

        // Joint least squares on the current support, block by block.
        const auto k = static_cast<Eigen::Index>(result.selected_grid_indices.size());
        result.z_estimate.clear();
        for (std::size_t l = 0; l < L; ++l) {
            CMatrix A(R, k);
            for (Eigen::Index j = 0; j < k; ++j) A.col(j) = dict.blocks[l].col(result.selected_grid_indices[static_cast<std::size_t>(j)]);
            const auto Yl = Y.middleRows(static_cast<Eigen::Index>(l) * R, R);
            CMatrix gram = A.adjoint() * A;
            gram.diagonal().array() += ridge;
            CMatrix coeffs = gram.ldlt().solve(A.adjoint() * Yl);
            residual[l] = Yl - A * coeffs;
            result.z_estimate.push_back(std::move(coeffs));
        }
    }
    return result;
}

Eigen::MatrixXi omp_demodulate(const std::vector<CMatrix>& z_estimate, const Constellation& constellation) {
    if (z_estimate.empty()) throw ModelError("omp_demodulate: no blocks");
    const Eigen::Index K = z_estimate.front().rows();
    const Eigen::Index N = z_estimate.front().cols();
    Eigen::MatrixXi out(K, std::max<Eigen::Index>(N - 1, 0));
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index n = 1; n < N; ++n) {
            Complex sum(0.0, 0.0);
            int used = 0;
            for (const auto& z : z_estimate) {
                if (std::abs(z(k, n - 1)) < kRatioFloor) continue;
                sum += z(k, n) / z(k, n - 1);
                ++used;
            }
            const Complex ratio = used > 0 ? sum / static_cast<double>(used) : Complex(0.0, 0.0);
            out(k, n - 1) = static_cast<int>(constellation.nearest_index(ratio));
        }
    }
    return out;
}

LocalizationResult ff_mismatch_pipeline(const ScenarioConfig& cfg, const CMatrix& Y, const SblOptions& options) {
    return localize(prepare_dictionary(cfg, ResponseModel::FarField), Y, options);
}

}  // namespace nfjcl
