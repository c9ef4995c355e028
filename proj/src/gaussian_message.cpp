#include "nfjcl/gaussian_message.hpp"

#include <cmath>
#include <string>

namespace nfjcl {

GaussianVecMessage GaussianVecMessage::zeros(Eigen::Index length, Eigen::Index snapshots, double variance,
                                             bool shared_variance) {
    return {CMatrix::Zero(length, snapshots),
            RMatrix::Constant(length, shared_variance ? 1 : snapshots, variance)};
}

GaussianVecMessage GaussianVecMessage::uninformative(Eigen::Index length, Eigen::Index snapshots) {
    return zeros(length, snapshots, kInf);
}

RMatrix GaussianVecMessage::full_variance() const {
    if (var.cols() == mean.cols()) return var;
    return var.col(0).replicate(1, mean.cols());
}

void require_positive_variance(const RMatrix& var, const char* what) {
    for (Eigen::Index i = 0; i < var.size(); ++i) {
        const double v = var.data()[i];
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NumericalError(std::string("non-positive or non-finite variance in ") + what);
        }
    }
}

void require_nonnegative_variance(const RMatrix& var, const char* what) {
    for (Eigen::Index i = 0; i < var.size(); ++i) {
        const double v = var.data()[i];
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw NumericalError(std::string("negative or non-finite variance in ") + what);
        }
    }
}

ScalarGaussian gaussian_product(ScalarGaussian a, ScalarGaussian b) {
    if (std::isinf(b.var)) return a;
    if (std::isinf(a.var)) return b;
    const double var = 1.0 / (1.0 / a.var + 1.0 / b.var);
    return {var * (a.mean / a.var + b.mean / b.var), var};
}

ScalarGaussian gaussian_product(ScalarGaussian a, ScalarGaussian b, ScalarGaussian c) {
    return gaussian_product(gaussian_product(a, b), c);
}

GaussianVecMessage gaussian_product(const GaussianVecMessage& a, const GaussianVecMessage& b) {
    if (a.length() != b.length() || a.snapshots() != b.snapshots()) {
        throw NumericalError("gaussian_product: shape mismatch");
    }
    GaussianVecMessage out{CMatrix(a.length(), a.snapshots()), RMatrix(a.length(), a.snapshots())};
    for (Eigen::Index n = 0; n < a.snapshots(); ++n) {
        for (Eigen::Index i = 0; i < a.length(); ++i) {
            const auto g = gaussian_product({a.mean(i, n), a.variance(i, n)}, {b.mean(i, n), b.variance(i, n)});
            out.mean(i, n) = g.mean;
            out.var(i, n) = g.var;
        }
    }
    return out;
}

}  // namespace nfjcl
