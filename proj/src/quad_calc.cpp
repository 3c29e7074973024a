#include "mmot/quad_calc.hpp"

#include <cmath>

namespace mmot {

bool is_symmetric(const Matrix& A, double rel_tol) {
  if (A.rows() != A.cols()) return false;
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_positive_definite(const Matrix& A, double threshold) {
  if (A.rows() != A.cols()) return false;
  Matrix S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) return false;
  double cut = threshold * std::max(1.0, std::abs(S.trace()));
  return es.eigenvalues().minCoeff() > cut;
}

QuadraticForm legendre(const QuadraticForm& f) {
  if (!is_symmetric(f.A)) {
    throw std::invalid_argument("legendre: matrix is not symmetric");
  }
  if (!is_positive_definite(f.A)) {
    throw std::invalid_argument("legendre: matrix is not positive definite");
  }
  Matrix Ainv = f.A.llt().solve(Matrix::Identity(f.A.rows(), f.A.cols()));
  Ainv = 0.5 * (Ainv + Ainv.transpose());
  Vector bi = Ainv * f.b;
  return QuadraticForm{Ainv, -bi, 0.5 * f.b.dot(bi) - f.c0};
}

std::vector<Eigen::Index> GridSpec::axis_counts() const {
  if (!(step > 0.0) || lo.size() != hi.size()) return {};
  std::vector<Eigen::Index> counts(lo.size());
  for (Eigen::Index d = 0; d < lo.size(); ++d) {
    double span = hi[d] - lo[d];
    if (span < 0) return std::vector<Eigen::Index>(lo.size(), 0);
    double ratio = span / step;
    counts[d] = static_cast<Eigen::Index>(std::floor(ratio * (1.0 + 1e-12) + 1e-9)) + 1;
  }
  return counts;
}

long long GridSpec::point_count() const {
  auto counts = axis_counts();
  if (counts.empty()) return 0;
  long long p = 1;
  for (auto c : counts) {
    if (c <= 0) return 0;
    p *= static_cast<long long>(c);
  }
  return p;
}

GridSupResult grid_sup(const std::function<double(const Vector&)>& objective,
                       const GridSpec& grid) {
  return grid_sup<const std::function<double(const Vector&)>&>(objective, grid);
}

Matrix2 adjugate2(const Matrix2& A) {
  Matrix2 adj;
  adj << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
  return adj;
}

std::pair<double, double> det_sum(const Matrix2& A, const Matrix2& B) {
  double lhs = (A + B).determinant();
  double rhs = A.determinant() + B.determinant() + (adjugate2(A) * B).trace();
  return {lhs, rhs};
}

}  // namespace mmot
