#include "nfjcl/oracles.hpp"

#include <cmath>
#include <limits>

#include "nfjcl/system_model.hpp"

namespace nfjcl {

namespace {

CMatrix precision_matrix(const CMatrix& phi, const RVector& lambda, double gamma) {
    if (lambda.size() != phi.cols()) throw ModelError("lmmse_oracle: lambda has wrong length");
    CMatrix A = gamma * (phi.adjoint() * phi);
    A.diagonal().real() += lambda;
    return A;
}

}  // namespace

LmmseResult lmmse_oracle(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ModelError("lmmse_oracle: gamma must be finite and positive");
    const CMatrix A = precision_matrix(phi, lambda, gamma);
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("lmmse_oracle: precision matrix not positive definite");
    LmmseResult out;
    out.mean = llt.solve(gamma * (phi.adjoint() * y_bar));
    const CMatrix inv = llt.solve(CMatrix::Identity(A.rows(), A.cols()));
    out.variance = inv.diagonal().real();
    return out;
}

CMatrix lmmse_oracle_augmented(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar) {
    const Eigen::Index R = phi.rows();
    const Eigen::Index M = phi.cols();
    CMatrix S = CMatrix::Zero(R + M, R + M);
    S.topLeftCorner(R, R).diagonal().setConstant(Complex(1.0 / gamma, 0.0));
    S.topRightCorner(R, M) = phi;
    S.bottomLeftCorner(M, R) = phi.adjoint();
    S.bottomRightCorner(M, M).diagonal().real() = -lambda;
    CMatrix rhs = CMatrix::Zero(R + M, y_bar.cols());
    rhs.topRows(R) = y_bar;
    const CMatrix sol = S.fullPivLu().solve(rhs);
    return sol.bottomRows(M);
}

double normal_equation_residual(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar,
                                const CMatrix& mu) {
    return (precision_matrix(phi, lambda, gamma) * mu - gamma * (phi.adjoint() * y_bar)).norm();
}

SymbolBeliefs exhaustive_symbol_posterior(const ToyInstance& toy, const Constellation& constellation) {
    if (toy.blocks.empty()) throw ConfigError("exhaustive posterior: no blocks");
    const auto L = static_cast<Eigen::Index>(toy.blocks.size());
    const Eigen::Index R = toy.blocks.front().rows();
    const auto K = static_cast<int>(toy.blocks.front().cols());
    const auto N = static_cast<int>(toy.Y.cols());
    if (K < 1 || K > kExhaustiveMaxUsers || N < 2 || N > kExhaustiveMaxLength)
        throw ConfigError("exhaustive posterior: toy size out of range");
    if (toy.gains.rows() != K || toy.gains.cols() != L || toy.Y.rows() != R * L)
        throw ModelError("exhaustive posterior: inconsistent dimensions");

    const auto Q = static_cast<int>(constellation.size());
    const int slots = K * (N - 1);
    std::size_t count = 1;
    for (int i = 0; i < slots; ++i) count *= static_cast<std::size_t>(Q);

    // With gamma = inf every hypothesis but the noiseless fit is impossible;
    // a huge finite precision gives the same argmax and keeps the arithmetic finite.
    const double gamma = std::isfinite(toy.gamma) ? toy.gamma : 1e12;

    std::vector<double> log_post(count);
    std::vector<int> digits(static_cast<std::size_t>(slots));
    CMatrix symbols(K, N);
    for (std::size_t h = 0; h < count; ++h) {
        std::size_t rem = h;
        for (int i = 0; i < slots; ++i) {
            digits[static_cast<std::size_t>(i)] = static_cast<int>(rem % static_cast<std::size_t>(Q));
            rem /= static_cast<std::size_t>(Q);
        }
        for (int k = 0; k < K; ++k) {
            symbols(k, 0) = constellation.reference();
            for (int n = 1; n < N; ++n)
                symbols(k, n) = constellation.symbol(static_cast<std::size_t>(digits[static_cast<std::size_t>(k * (N - 1) + n - 1)]));
        }
        const CMatrix s = cumulative_symbols(symbols);
        double ll = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) {
            const CMatrix z = toy.gains.col(l).asDiagonal() * s;
            ll -= gamma * (toy.Y.middleRows(l * R, R) - toy.blocks[static_cast<std::size_t>(l)] * z).squaredNorm();
        }
        log_post[h] = ll;
    }

    double peak = -std::numeric_limits<double>::infinity();
    for (double v : log_post) peak = std::max(peak, v);
    SymbolBeliefs psi(K, N, Q);
    psi.table().setZero();
    double total = 0.0;
    for (std::size_t h = 0; h < count; ++h) {
        const double w = std::exp(log_post[h] - peak);
        total += w;
        std::size_t rem = h;
        for (int i = 0; i < slots; ++i) {
            const int q = static_cast<int>(rem % static_cast<std::size_t>(Q));
            rem /= static_cast<std::size_t>(Q);
            psi.row(i / (N - 1), i % (N - 1) + 1)(q) += w;
        }
    }
    psi.table() /= total;
    return psi;
}

double mean_total_variation(const SymbolBeliefs& a, const SymbolBeliefs& b) {
    if (a.table().rows() != b.table().rows() || a.table().cols() != b.table().cols())
        throw ModelError("mean_total_variation: shape mismatch");
    if (a.table().rows() == 0) return 0.0;
    return 0.5 * (a.table() - b.table()).cwiseAbs().rowwise().sum().mean();
}

}  // namespace nfjcl
