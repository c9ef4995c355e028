#pragma once

#include <vector>

#include "nfjcl/constellation.hpp"
#include "nfjcl/diff_detector.hpp"
#include "nfjcl/types.hpp"

namespace nfjcl {

struct LmmseResult {
    CMatrix mean;      // M x N
    RVector variance;  // M, shared by all snapshots
};

/// Dense posterior of z under y = Phi z + CN(0, 1/gamma), z ~ CN(0, diag(1/lambda)).
/// Solves (gamma Phi^H Phi + diag(lambda)) mu = gamma Phi^H y; the variance is
/// the diagonal of the explicit inverse.
LmmseResult lmmse_oracle(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar);

/// Same posterior mean via the augmented (saddle point) system
///   [ I/gamma   Phi     ] [ r  ]   [ y ]
///   [ Phi^H   -diag(lam)] [ mu ] = [ 0 ].
CMatrix lmmse_oracle_augmented(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar);

/// ||(gamma Phi^H Phi + diag(lambda)) mu - gamma Phi^H y||_F.
double normal_equation_residual(const CMatrix& phi, const RVector& lambda, double gamma, const CMatrix& y_bar,
                                const CMatrix& mu);

/// Toy detection problem with every nuisance parameter known.
struct ToyInstance {
    std::vector<CMatrix> blocks;  // H_l restricted to the users, R x K each
    CMatrix gains;                // K x L
    CMatrix Y;                    // RL x N
    double gamma = 1.0;           // may be +inf only if Y is exactly noiseless
};

inline constexpr int kExhaustiveMaxUsers = 2;
inline constexpr int kExhaustiveMaxLength = 3;

/// Exact symbol marginals by enumerating all |A|^(K(N-1)) hypotheses.
/// User order follows the columns of `blocks`.
SymbolBeliefs exhaustive_symbol_posterior(const ToyInstance& toy, const Constellation& constellation);

/// Mean over (k, n) of the total-variation distance between two belief tables.
double mean_total_variation(const SymbolBeliefs& a, const SymbolBeliefs& b);

}  // namespace nfjcl
