#pragma once

#include <memory>
#include <vector>

#include "nfjcl/constellation.hpp"
#include "nfjcl/sbl_localizer.hpp"
#include "nfjcl/system_model.hpp"

namespace nfjcl {

/// A dictionary together with its (observation-independent) SVD factors.
struct PreparedDictionary {
    BlockDictionary dictionary;
    std::shared_ptr<const BlockTransform> transform;
};

PreparedDictionary prepare_dictionary(const ScenarioConfig& cfg, ResponseModel model);

/// Stage 1 on an arbitrary prepared dictionary. The proposed method and the
/// far-field ablation both go through here.
LocalizationResult localize(const PreparedDictionary& prepared, const CMatrix& Y, const SblOptions& options);

struct OmpResult {
    std::vector<int> selected_grid_indices;  // selection order
    std::vector<CMatrix> z_estimate;         // per block, K x N, rows in selection order
};

inline constexpr double kOmpRidge = 1e-10;
inline constexpr double kRatioFloor = 1e-9;

/// Simultaneous OMP: one shared support across every block and snapshot.
OmpResult omp_localize(const BlockDictionary& dict, const CMatrix& Y, int K, double ridge = kOmpRidge);

/// Averaged-ratio differential demodulation followed by nearest-point
/// decisions. Ratios whose denominator is below kRatioFloor are skipped.
/// Returns K x (N-1) constellation indices.
Eigen::MatrixXi omp_demodulate(const std::vector<CMatrix>& z_estimate, const Constellation& constellation);

/// Stage 1 with a far-field dictionary applied to near-field data.
LocalizationResult ff_mismatch_pipeline(const ScenarioConfig& cfg, const CMatrix& Y, const SblOptions& options);

}  // namespace nfjcl
