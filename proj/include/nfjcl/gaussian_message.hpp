#pragma once

#include <limits>

#include "nfjcl/types.hpp"

namespace nfjcl {

/// Diagonal complex Gaussian messages for a bundle of snapshots: column n of
/// `mean` is the message mean for snapshot n. `var` has either one column per
/// snapshot or a single column shared by all of them; the localizer relies on
/// the latter because its variances never depend on n.
///
/// An infinite variance marks an absent (uninformative) message.
struct GaussianVecMessage {
    CMatrix mean;
    RMatrix var;

    static GaussianVecMessage zeros(Eigen::Index length, Eigen::Index snapshots, double variance,
                                    bool shared_variance = false);
    static GaussianVecMessage uninformative(Eigen::Index length, Eigen::Index snapshots);

    Eigen::Index length() const { return mean.rows(); }
    Eigen::Index snapshots() const { return mean.cols(); }
    bool shared_variance() const { return var.cols() == 1 && mean.cols() != 1; }
    double variance(Eigen::Index i, Eigen::Index n) const { return var(i, var.cols() == 1 ? 0 : n); }

    /// Expands a shared variance column to one column per snapshot.
    RMatrix full_variance() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Throws NumericalError unless every variance is finite and > 0.
void require_positive_variance(const RMatrix& var, const char* what);
/// Same, but zero is allowed (deterministic rows of a rank-deficient transform).
void require_nonnegative_variance(const RMatrix& var, const char* what);

/// Product of two scalar Gaussians (precision sum). An infinite variance on
/// either side returns the other operand unchanged.
struct ScalarGaussian {
    Complex mean;
    double var;
};
ScalarGaussian gaussian_product(ScalarGaussian a, ScalarGaussian b);
ScalarGaussian gaussian_product(ScalarGaussian a, ScalarGaussian b, ScalarGaussian c);

/// Elementwise product of two messages with full (per-snapshot) variances.
GaussianVecMessage gaussian_product(const GaussianVecMessage& a, const GaussianVecMessage& b);

}  // namespace nfjcl
