#include "nfjcl/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/SVD>

namespace nfjcl {

BlockDictionary build_dictionary(const ScenarioConfig& cfg, ResponseModel model) {
    validate(cfg);
    BlockDictionary dict;
    dict.model = model;
    dict.grid_positions = grid_points(cfg);
    const auto M = static_cast<Eigen::Index>(dict.grid_positions.size());
    for (const auto& array : build_arrays(cfg)) {
        CMatrix H(cfg.num_antennas, M);
        for (Eigen::Index m = 0; m < M; ++m) {
            H.col(m) = array_response(model, dict.grid_positions[static_cast<std::size_t>(m)], array,
                                      cfg.wavelength)
                           .values;
        }
        dict.blocks.push_back(std::move(H));
    }
    return dict;
}

BlockDictionary select_columns(const BlockDictionary& dict, const std::vector<int>& columns) {
    BlockDictionary out;
    out.model = dict.model;
    for (int c : columns) {
        if (c < 0 || c >= dict.num_columns()) throw ModelError("column index out of range");
        out.grid_positions.push_back(dict.grid_positions[static_cast<std::size_t>(c)]);
    }
    for (const auto& H : dict.blocks) {
        CMatrix sub(H.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = H.col(columns[j]);
        out.blocks.push_back(std::move(sub));
    }
    return out;
}

PermutationMap::PermutationMap(std::size_t num_grid, std::size_t num_blocks)
    : forward_(num_grid * num_blocks), inverse_(num_grid * num_blocks) {
    for (std::size_t m = 0; m < num_grid; ++m) {
        for (std::size_t l = 0; l < num_blocks; ++l) {
            const std::size_t x_idx = m * num_blocks + l;
            const std::size_t z_idx = l * num_grid + m;
            forward_[x_idx] = z_idx;
            inverse_[z_idx] = x_idx;
        }
    }
}

CVector PermutationMap::permute(const CVector& x_bar) const {
    if (static_cast<std::size_t>(x_bar.size()) != size()) throw ModelError("permute: length mismatch");
    CVector z(x_bar.size());
    for (std::size_t i = 0; i < size(); ++i) z(static_cast<Eigen::Index>(forward_[i])) = x_bar(static_cast<Eigen::Index>(i));
    return z;
}

CVector PermutationMap::unpermute(const CVector& z) const {
    if (static_cast<std::size_t>(z.size()) != size()) throw ModelError("unpermute: length mismatch");
    CVector x(z.size());
    for (std::size_t i = 0; i < size(); ++i) x(static_cast<Eigen::Index>(inverse_[i])) = z(static_cast<Eigen::Index>(i));
    return x;
}

std::size_t bit_index(int k, int n_data, int b, int block_length, int bits_per_symbol) {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(block_length - 1) + static_cast<std::size_t>(n_data)) *
               static_cast<std::size_t>(bits_per_symbol) +
           static_cast<std::size_t>(b);
}

CMatrix encode_differential(const std::vector<std::uint8_t>& bits, const Constellation& constellation, int K,
                            int N) {
    if (K < 1 || N < 2) throw ModelError("encode_differential: need K >= 1 and N >= 2");
    const int bps = constellation.bits_per_symbol();
    const std::size_t expected = static_cast<std::size_t>(K) * static_cast<std::size_t>(N - 1) * static_cast<std::size_t>(bps);
    if (bits.size() != expected) throw ModelError("encode_differential: bit count mismatch");

    CMatrix symbols(K, N);
    for (int k = 0; k < K; ++k) {
        symbols(k, 0) = constellation.reference();
        for (int n = 1; n < N; ++n) {
            const auto idx = constellation.index_of_bits(&bits[bit_index(k, n - 1, 0, N, bps)]);
            symbols(k, n) = constellation.symbol(idx);
        }
    }
    return symbols;
}

CMatrix cumulative_symbols(const CMatrix& symbols) {
    CMatrix out(symbols.rows(), symbols.cols());
    for (Eigen::Index k = 0; k < symbols.rows(); ++k) {
        Complex acc(1.0, 0.0);
        for (Eigen::Index n = 0; n < symbols.cols(); ++n) {
            acc *= symbols(k, n);
            // Renormalise so long frames do not drift off the unit circle.
            acc /= std::abs(acc);
            out(k, n) = acc;
        }
    }
    return out;
}

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
    CMatrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            out(i, j) = Complex(re, im);
        }
    }
    return out;
}

CMatrix draw_gains(int K, int L, Rng& rng) { return complex_gaussian(K, L, 1.0, rng); }

std::vector<std::uint8_t> draw_bits(std::size_t count, Rng& rng) {
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    return bits;
}

std::vector<int> draw_user_indices(int M, int K, Rng& rng) {
    if (K > M) throw ModelError("more users than grid points");
    // Partial Fisher-Yates; keeps draw order (user k gets the k-th draw).
    std::vector<int> pool(static_cast<std::size_t>(M));
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < K; ++k) {
        std::uniform_int_distribution<int> pick(k, M - 1);
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    return {pool.begin(), pool.begin() + K};
}

GroundTruth draw_ground_truth(const ScenarioConfig& cfg, const Constellation& constellation, Rng& rng) {
    const int K = cfg.num_users;
    const int N = cfg.block_length;
    const int L = static_cast<int>(cfg.num_bs());
    GroundTruth truth;
    truth.bits_per_symbol = constellation.bits_per_symbol();
    truth.user_grid_indices = draw_user_indices(static_cast<int>(cfg.num_grid_points()), K, rng);
    truth.gains = draw_gains(K, L, rng);
    truth.info_bits = draw_bits(static_cast<std::size_t>(K) * static_cast<std::size_t>(N - 1) *
                                    static_cast<std::size_t>(truth.bits_per_symbol),
                                rng);
    truth.symbols = encode_differential(truth.info_bits, constellation, K, N);
    return truth;
}

CMatrix assemble_z(const GroundTruth& truth, Eigen::Index M, Eigen::Index L) {
    const int K = truth.num_users();
    if (static_cast<int>(truth.user_grid_indices.size()) != K || truth.gains.rows() != K || truth.gains.cols() != L) {
        throw ModelError("assemble_z: ground truth shape mismatch");
    }
    std::set<int> seen;
    for (int m : truth.user_grid_indices) {
        if (m < 0 || m >= M) throw ModelError("assemble_z: user grid index out of range");
        if (!seen.insert(m).second) throw ModelError("assemble_z: duplicate user grid index");
    }
    const CMatrix phase = cumulative_symbols(truth.symbols);
    CMatrix Z = CMatrix::Zero(M * L, truth.block_length());
    for (Eigen::Index l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            Z.row(l * M + truth.user_grid_indices[static_cast<std::size_t>(k)]) = truth.gains(k, l) * phase.row(k);
        }
    }
    return Z;
}

CMatrix apply_dictionary(const BlockDictionary& dict, const CMatrix& Z) {
    const Eigen::Index R = dict.rows_per_block();
    const Eigen::Index M = dict.num_columns();
    const auto L = static_cast<Eigen::Index>(dict.num_blocks());
    if (Z.rows() != M * L) throw ModelError("apply_dictionary: Z has wrong row count");
    CMatrix Y(R * L, Z.cols());
    for (Eigen::Index l = 0; l < L; ++l) {
        Y.middleRows(l * R, R).noalias() = dict.blocks[static_cast<std::size_t>(l)] * Z.middleRows(l * M, M);
    }
    return Y;
}

double snr_to_noise_precision(const BlockDictionary& dict, const CMatrix& Z, int K, double snr_db) {
    if (!std::isfinite(snr_db)) throw ModelError("snr_db must be finite");
    const CMatrix HZ = apply_dictionary(dict, Z);
    const double power = HZ.squaredNorm() / static_cast<double>(HZ.size());
    if (!(power > 0.0)) throw ModelError("zero signal energy; SNR undefined");
    return static_cast<double>(K) * std::pow(10.0, snr_db / 10.0) / power;
}

CMatrix synthesize(const BlockDictionary& dict, const CMatrix& Z, double gamma, Rng& rng) {
    CMatrix Y = apply_dictionary(dict, Z);
    if (std::isinf(gamma)) return Y;
    if (!(gamma > 0.0)) throw ModelError("noise precision must be positive");
    Y += complex_gaussian(Y.rows(), Y.cols(), 1.0 / gamma, rng);
    return Y;
}

BlockTransform unitary_transform(const std::vector<CMatrix>& blocks) {
    BlockTransform t;
    for (const auto& H : blocks) {
        if (H.size() == 0 || H.squaredNorm() == 0.0) throw NumericalError("unitary_transform: empty or zero block");
        Eigen::BDCSVD<CMatrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success) throw NumericalError("unitary_transform: SVD failed");
        const RVector& s = svd.singularValues();
        const Eigen::Index r = s.size();
        CMatrix phi = CMatrix::Zero(H.rows(), H.cols());
        // Rows beyond min(R, M) stay zero: those directions of U carry noise only.
        phi.topRows(r) = s.asDiagonal() * svd.matrixV().adjoint();
        t.phi_abs2.push_back(phi.cwiseAbs2());
        t.phi.push_back(std::move(phi));
        t.u_h.push_back(svd.matrixU().adjoint());
        t.singular_values.push_back(s);
    }
    return t;
}

TransformedModel transform_observation(std::shared_ptr<const BlockTransform> transform, const CMatrix& Y) {
    const Eigen::Index R = transform->rows();
    const auto L = static_cast<Eigen::Index>(transform->num_blocks());
    if (Y.rows() != R * L) throw ModelError("transform_observation: observation has wrong row count");
    TransformedModel model{std::move(transform), CMatrix(Y.rows(), Y.cols())};
    for (Eigen::Index l = 0; l < L; ++l) {
        model.y_bar.middleRows(l * R, R).noalias() = model.transform->u_h[static_cast<std::size_t>(l)] * Y.middleRows(l * R, R);
    }
    return model;
}

}  // namespace nfjcl
