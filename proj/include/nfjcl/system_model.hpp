#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "nfjcl/constellation.hpp"
#include "nfjcl/geometry.hpp"
#include "nfjcl/types.hpp"

namespace nfjcl {

using Rng = std::mt19937_64;

/// Per-BS steering matrices H_l (R x M). Together they form the block
/// diagonal dictionary; the stacked matrix is never materialized.
struct BlockDictionary {
    std::vector<CMatrix> blocks;
    std::vector<Position2D> grid_positions;
    ResponseModel model = ResponseModel::NearField;

    std::size_t num_blocks() const { return blocks.size(); }
    Eigen::Index rows_per_block() const { return blocks.empty() ? 0 : blocks.front().rows(); }
    Eigen::Index num_columns() const { return blocks.empty() ? 0 : blocks.front().cols(); }
};

BlockDictionary build_dictionary(const ScenarioConfig& cfg, ResponseModel model = ResponseModel::NearField);

/// Dictionary restricted to `columns` (in the given order), same grid labels.
BlockDictionary select_columns(const BlockDictionary& dict, const std::vector<int>& columns);

/// Index map between the grid-major ordering (entry m*L + l) and the
/// BS-major ordering (entry l*M + m).
class PermutationMap {
public:
    PermutationMap(std::size_t num_grid, std::size_t num_blocks);

    std::size_t size() const { return forward_.size(); }
    const std::vector<std::size_t>& forward() const { return forward_; }
    const std::vector<std::size_t>& inverse() const { return inverse_; }

    CVector permute(const CVector& x_bar) const;
    CVector unpermute(const CVector& z) const;

private:
    std::vector<std::size_t> forward_;
    std::vector<std::size_t> inverse_;
};

struct GroundTruth {
    std::vector<int> user_grid_indices;  // 0-based grid indices, one per user
    CMatrix gains;                       // K x L
    CMatrix symbols;                     // K x N, column 0 is the reference symbol
    std::vector<std::uint8_t> info_bits; // K x (N-1) x bits_per_symbol, user-major
    int bits_per_symbol = 2;

    int num_users() const { return static_cast<int>(symbols.rows()); }
    int block_length() const { return static_cast<int>(symbols.cols()); }
};

std::size_t bit_index(int k, int n_data, int b, int block_length, int bits_per_symbol);

/// Column 0 is the constellation reference; column n >= 1 carries the n-th
/// group of bits of each user.
CMatrix encode_differential(const std::vector<std::uint8_t>& bits, const Constellation& constellation, int K,
                            int N);

/// Running product along each row; this is the phase sequence actually on air.
CMatrix cumulative_symbols(const CMatrix& symbols);

CMatrix draw_gains(int K, int L, Rng& rng);
std::vector<std::uint8_t> draw_bits(std::size_t count, Rng& rng);
std::vector<int> draw_user_indices(int M, int K, Rng& rng);

/// Draws a full ground truth (positions, gains, bits, symbols).
GroundTruth draw_ground_truth(const ScenarioConfig& cfg, const Constellation& constellation, Rng& rng);

/// BS-major sparse signal: block l occupies rows [l*M, (l+1)*M).
CMatrix assemble_z(const GroundTruth& truth, Eigen::Index M, Eigen::Index L);

/// Y = blockdiag(H_l) * Z.
CMatrix apply_dictionary(const BlockDictionary& dict, const CMatrix& Z);

/// SNR is the received signal power per entry of Y, per user, over the noise
/// variance: gamma = K * 10^(snr_db/10) / (||H Z||_F^2 / (R L N)).
double snr_to_noise_precision(const BlockDictionary& dict, const CMatrix& Z, int K, double snr_db);

/// Y = H Z + V with V ~ CN(0, 1/gamma) per entry; gamma = +inf means no noise.
CMatrix synthesize(const BlockDictionary& dict, const CMatrix& Z, double gamma, Rng& rng);

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng);

/// Per-block SVD factors. Depends on the dictionary only, so it is shared
/// across every observation drawn from the same scenario.
struct BlockTransform {
    std::vector<CMatrix> phi;             // Sigma_l V_l^H, R x M
    std::vector<RMatrix> phi_abs2;        // |Phi_l|^2 elementwise
    std::vector<CMatrix> u_h;             // U_l^H, R x R
    std::vector<RVector> singular_values;

    std::size_t num_blocks() const { return phi.size(); }
    Eigen::Index rows() const { return phi.empty() ? 0 : phi.front().rows(); }
    Eigen::Index cols() const { return phi.empty() ? 0 : phi.front().cols(); }
};

BlockTransform unitary_transform(const std::vector<CMatrix>& blocks);

struct TransformedModel {
    std::shared_ptr<const BlockTransform> transform;
    CMatrix y_bar;  // RL x N, block l is U_l^H Y_l

    std::size_t num_blocks() const { return transform->num_blocks(); }
    Eigen::Index rows() const { return transform->rows(); }
    Eigen::Index cols() const { return transform->cols(); }
    Eigen::Index snapshots() const { return y_bar.cols(); }
    auto y_block(std::size_t l) const {
        return y_bar.middleRows(static_cast<Eigen::Index>(l) * rows(), rows());
    }
};

TransformedModel transform_observation(std::shared_ptr<const BlockTransform> transform, const CMatrix& Y);

}  // namespace nfjcl
