#pragma once

#include "mmot/core.hpp"

#include <functional>
#include <utility>

namespace mmot {

/// f(x) = 0.5 x'A x + b.x + c0 with A symmetric.
struct QuadraticForm {
  Matrix A;
  Vector b;
  double c0 = 0.0;

  double operator()(const Vector& x) const {
    return 0.5 * x.dot(A * x) + b.dot(x) + c0;
  }

  Eigen::Index dim() const { return A.rows(); }
};

/// Symmetry check relative to the matrix scale.
bool is_symmetric(const Matrix& A, double rel_tol = 1e-12);

/// Positive definiteness via the smallest eigenvalue of the symmetric part,
/// thresholded relative to max(1, |trace|).
bool is_positive_definite(const Matrix& A, double threshold = 1e-10);

/// Legendre transform of a quadratic form with positive definite A:
///   f*(y) = 0.5 (y-b)' A^{-1} (y-b) - c0,
/// returned in expanded quadratic-form coefficients.
/// Throws std::invalid_argument when A fails the definiteness threshold.
QuadraticForm legendre(const QuadraticForm& f);

/// Axis-aligned evaluation grid: points lo[d] + i*step along each axis d,
/// for every i with lo[d] + i*step <= hi[d] (up to rounding).
struct GridSpec {
  Vector lo;
  Vector hi;
  double step = 0.0;

  std::vector<Eigen::Index> axis_counts() const;
  long long point_count() const;
};

struct GridSupResult {
  double value;
  Vector argmax;
};

/// Exhaustive maximization over the grid, visiting points in lexicographic
/// order and keeping the first strict maximum, so the reported argmax is the
/// lexicographically smallest one. Throws on empty grids.
template <typename F>
GridSupResult grid_sup(F&& objective, const GridSpec& grid) {
  const auto counts = grid.axis_counts();
  const Eigen::Index n = grid.lo.size();
  for (Eigen::Index d = 0; d < n; ++d) {
    if (counts[d] <= 0) throw std::invalid_argument("grid_sup: empty grid");
  }
  std::vector<Eigen::Index> it(n, 0);
  Vector x(n);
  GridSupResult best;
  bool first = true;
  while (true) {
    for (Eigen::Index d = 0; d < n; ++d) x[d] = grid.lo[d] + double(it[d]) * grid.step;
    double v = objective(x);
    if (first || v > best.value) {
      best.value = v;
      best.argmax = x;
      first = false;
    }
    Eigen::Index d = n - 1;
    while (d >= 0) {
      if (++it[d] < counts[d]) break;
      it[d] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return best;
}

GridSupResult grid_sup(const std::function<double(const Vector&)>& objective,
                       const GridSpec& grid);

/// Both sides of the 2x2 determinant-sum identity
///   |A+B| = |A| + |B| + trace(adj(A) B),
/// returned as (lhs, rhs).
std::pair<double, double> det_sum(const Matrix2& A, const Matrix2& B);

Matrix2 adjugate2(const Matrix2& A);

}  // namespace mmot
