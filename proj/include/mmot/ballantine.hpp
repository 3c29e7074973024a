#pragma once

#include "mmot/core.hpp"

#include <optional>

namespace mmot {

/// Factors are symmetric positive definite and multiply left-to-right to the
/// factored matrix.
struct PDFactorization {
  std::vector<Matrix2> factors;
  double product_residual = 0.0;  // max-norm of (product - M), relative to M
};

/// Membership of a 2x2 real matrix with positive determinant in the set of
/// products of two symmetric positive definite matrices: equivalent to being
/// diagonalizable with both eigenvalues real and positive.
/// Throws std::invalid_argument when det(M) <= 0.
bool in_r2(const Matrix2& M);

/// Membership in the set of products of three symmetric positive definite
/// matrices: positive trace, or a large enough antisymmetric part,
///   (M21 - M12)^2 > 4 det(M).
/// Throws std::invalid_argument when det(M) <= 0.
bool in_r3(const Matrix2& M);

/// Splits M = P1 * P2 with P1, P2 symmetric positive definite, using the
/// eigendecomposition M = S D S^{-1}: P1 = S D S', P2 = (S S')^{-1}.
/// Throws std::invalid_argument unless in_r2(M).
PDFactorization factor_pd2(const Matrix2& M);

/// Splits M = M1 * M2 * M3 with all factors symmetric positive definite.
/// Searches a deterministic coarse grid of candidates P (rotation angle and
/// eigenvalue ratio) for one with P^{-1} M in r2, falling back to a seeded
/// random search. Throws std::invalid_argument unless in_r3(M).
PDFactorization factor_pd3(const Matrix2& M, unsigned seed = 0);

/// A matrix M in r2 with det(F + M) = 0, following the determinant-sum
/// identity case split on the entries of F. The optional lambda pins the
/// free parameter of the diagonal a > d >= 0 branch; when absent it is grown
/// automatically until the r2 conditions hold with margin.
/// Throws Infeasible when F is a nonnegative multiple of the identity
/// (no singular companion with positive determinant exists).
Matrix2 singular_companion(const Matrix2& F,
                           std::optional<double> lambda = std::nullopt);

}  // namespace mmot
