#include "mmot/ballantine.hpp"

#include "mmot/quad_calc.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace mmot {

namespace {

constexpr double kDiagTol = 1e-10;  // repeated-eigenvalue diagonalizability

double max_norm(const Matrix2& M) { return M.cwiseAbs().maxCoeff(); }

void require_positive_det(const Matrix2& M, const char* who) {
  if (!(M.determinant() > 0.0)) {
    throw std::invalid_argument(std::string(who) +
                                ": determinant must be positive");
  }
}

struct EigenPair2 {
  double lambda1, lambda2;  // lambda1 >= lambda2, both real
  Vector2 v1, v2;           // unit eigenvectors
};

// Unit null vector of a (numerically) rank-one 2x2 matrix: orthogonal to the
// larger row. Falls back to e1 when the matrix is essentially zero.
Vector2 null_vector2(const Matrix2& R) {
  Vector2 r0 = R.row(0), r1 = R.row(1);
  Vector2 r = r0.norm() >= r1.norm() ? r0 : r1;
  if (r.norm() == 0.0) return Vector2(1.0, 0.0);
  Vector2 v(-r[1], r[0]);
  return v / v.norm();
}

// Real spectral data for a matrix already known to have real distinct
// eigenvalues (discriminant checked by the caller).
EigenPair2 real_eigen2(const Matrix2& M) {
  double tr = M.trace();
  double det = M.determinant();
  double disc = tr * tr - 4.0 * det;
  double root = std::sqrt(std::max(disc, 0.0));
  double l1 = 0.5 * (tr + root);
  double l2 = 0.5 * (tr - root);
  EigenPair2 out;
  out.lambda1 = l1;
  out.lambda2 = l2;
  out.v1 = null_vector2(M - l1 * Matrix2::Identity());
  out.v2 = null_vector2(M - l2 * Matrix2::Identity());
  return out;
}

}  // namespace

bool in_r2(const Matrix2& M) {
  require_positive_det(M, "in_r2");
  double scale = std::max(1.0, max_norm(M));
  if (is_symmetric(M)) {
    // symmetric: always diagonalizable, eigenvalues real; det > 0 means same
    // sign, positive trace picks the positive pair
    return M.trace() > 0.0;
  }
  double tr = M.trace();
  double disc = tr * tr - 4.0 * M.determinant();
  double disc_tol = kDiagTol * scale * scale;
  if (disc > disc_tol) return tr > 0.0;  // real distinct eigenvalues
  if (disc < -disc_tol) return false;    // complex pair
  // repeated eigenvalue: diagonalizable only as a scalar matrix
  double lambda = 0.5 * tr;
  return lambda > 0.0 &&
         max_norm(M - lambda * Matrix2::Identity()) <= kDiagTol * scale;
}

bool in_r3(const Matrix2& M) {
  require_positive_det(M, "in_r3");
  double anti = M(1, 0) - M(0, 1);
  return M.trace() > 0.0 || anti * anti > 4.0 * M.determinant();
}

PDFactorization factor_pd2(const Matrix2& M) {
  if (!in_r2(M)) {
    throw std::invalid_argument("factor_pd2: matrix is not a product of two "
                                "positive definite matrices");
  }
  Matrix2 S;
  Matrix2 D = Matrix2::Zero();
  if (is_symmetric(M)) {
    Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (M + M.transpose()));
    S = es.eigenvectors();
    D(0, 0) = es.eigenvalues()[0];
    D(1, 1) = es.eigenvalues()[1];
  } else {
    EigenPair2 ep = real_eigen2(M);
    S.col(0) = ep.v1;
    S.col(1) = ep.v2;
    D(0, 0) = ep.lambda1;
    D(1, 1) = ep.lambda2;
  }
  Matrix2 P1 = S * D * S.transpose();
  Matrix2 SSt = S * S.transpose();
  Matrix2 P2 = SSt.inverse();
  P1 = 0.5 * (P1 + P1.transpose());
  P2 = 0.5 * (P2 + P2.transpose());
  PDFactorization out;
  out.factors = {P1, P2};
  out.product_residual = max_norm(P1 * P2 - M) / std::max(1e-300, max_norm(M));
  return out;
}

namespace {

Matrix2 rotation(double theta) {
  Matrix2 R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

Matrix2 spd_from(double theta, double ratio) {
  Matrix2 R = rotation(theta);
  Matrix2 D = Matrix2::Zero();
  D(0, 0) = 1.0;
  D(1, 1) = ratio;
  return R * D * R.transpose();
}

// in_r2 with margin, so the downstream eigendecomposition stays
// well-conditioned
bool in_r2_with_margin(const Matrix2& M, double margin) {
  if (!(M.determinant() > 0.0)) return false;
  double scale = std::max(1.0, max_norm(M));
  double tr = M.trace();
  double disc = tr * tr - 4.0 * M.determinant();
  return tr > margin * scale && disc > margin * scale * scale;
}

// Rebalances consecutive factors by positive scalars (which preserves both
// definiteness and the product) so no single factor dominates the norms.
void balance_triple(std::vector<Matrix2>& f) {
  for (int pass = 0; pass < 4; ++pass) {
    for (size_t k = 0; k + 1 < f.size(); ++k) {
      double a = max_norm(f[k]);
      double b = max_norm(f[k + 1]);
      double s = std::sqrt(b / a);
      f[k] *= s;
      f[k + 1] /= s;
    }
  }
}

double spd_condition(const Matrix2& P) {
  const double h = 0.5 * P.trace();
  const double d = std::sqrt(std::max(h * h - P.determinant(), 0.0));
  if (!(h - d > 0.0)) return std::numeric_limits<double>::infinity();
  return (h + d) / (h - d);
}

// Downstream algebra cancels the factors against each other, so rounding
// noise grows with their condition numbers; rank candidates by the worst one.
double factor_score(const PDFactorization& f) {
  double score = 0.0;
  for (const auto& p : f.factors) score = std::max(score, spd_condition(p));
  return score;
}

// Snap the last factor so the product meets M to machine precision. The
// symmetrized solve only moves it by the current residual, which keeps it
// positive definite whenever that perturbation is small against its spectrum.
PDFactorization refine_product(PDFactorization f, const Matrix2& M) {
  const Matrix2 lead = f.factors[0] * f.factors[1];
  const Matrix2 solved = lead.inverse() * M;
  const Matrix2 sym = 0.5 * (solved + solved.transpose());
  const double res =
      max_norm(lead * sym - M) / std::max(1e-300, max_norm(M));
  if (res < f.product_residual && sym.trace() > 0.0 && sym.determinant() > 0.0) {
    f.factors[2] = sym;
    f.product_residual = res;
  }
  return f;
}

}  // namespace

PDFactorization factor_pd3(const Matrix2& M, unsigned seed) {
  if (!in_r3(M)) {
    throw std::invalid_argument("factor_pd3: matrix is not a product of three "
                                "positive definite matrices");
  }
  if (in_r2(M)) {
    PDFactorization two = factor_pd2(M);
    PDFactorization out;
    out.factors = {two.factors[0], two.factors[1], Matrix2::Identity()};
    out.product_residual = two.product_residual;
    return out;
  }

  auto try_candidate = [&](const Matrix2& P,
                           double margin) -> std::optional<PDFactorization> {
    Matrix2 rest = P.inverse() * M;
    if (!in_r2_with_margin(rest, margin)) return std::nullopt;
    PDFactorization two = factor_pd2(rest);
    PDFactorization out;
    out.factors = {P, two.factors[0], two.factors[1]};
    balance_triple(out.factors);
    Matrix2 prod = out.factors[0] * out.factors[1] * out.factors[2];
    out.product_residual = max_norm(prod - M) / std::max(1e-300, max_norm(M));
    if (out.product_residual > 1e-8) return std::nullopt;
    return out;
  };

  // Scan the whole comfortable-margin grid and keep the best-conditioned
  // splitting rather than the first one; only fall back to thinner margins
  // (and then random probing) when nothing comfortable exists.
  const int n_theta = 24;
  std::optional<PDFactorization> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= 32; ++it) {
    double ratio = std::pow(10.0, -4.0 + 0.25 * it);
    for (int ia = 0; ia < n_theta; ++ia) {
      double theta = M_PI * ia / n_theta;
      if (auto hit = try_candidate(spd_from(theta, ratio), 1e-3)) {
        const double score = factor_score(*hit);
        if (score < best_score) {
          best_score = score;
          best = *hit;
        }
      }
    }
  }
  if (best) return refine_product(*best, M);

  for (int it = 0; it <= 32; ++it) {
    double ratio = std::pow(10.0, -4.0 + 0.25 * it);
    for (int ia = 0; ia < n_theta; ++ia) {
      double theta = M_PI * ia / n_theta;
      if (auto hit = try_candidate(spd_from(theta, ratio), 1e-8))
        return refine_product(*hit, M);
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, M_PI);
  std::uniform_real_distribution<double> expo(-6.0, 6.0);
  for (int it = 0; it < 200000; ++it) {
    Matrix2 P = spd_from(ang(rng), std::pow(10.0, expo(rng)));
    if (auto hit = try_candidate(P, 1e-8)) return refine_product(*hit, M);
  }
  throw std::invalid_argument("factor_pd3: no splitting found");
}

Matrix2 singular_companion(const Matrix2& F, std::optional<double> lambda) {
  const double a = F(0, 0), b = F(0, 1), c = F(1, 0), d = F(1, 1);
  const double detF = F.determinant();
  const double e = 1.0, h = 2.0;  // fixed distinct positive eigenvalues

  if (c != 0.0) {
    double f = (detF + e * h + d * e + a * h) / c;
    Matrix2 M;
    M << e, f, 0.0, h;
    return M;
  }
  if (b != 0.0) {
    double g = (detF + e * h + d * e + a * h) / b;
    Matrix2 M;
    M << e, 0.0, g, h;
    return M;
  }

  // diagonal F
  if (a < 0.0) return -a * Matrix2::Identity();   // F + M = diag(0, d - a)
  if (d < 0.0) return -d * Matrix2::Identity();   // F + M = diag(a - d, 0)
  if (a == d) {
    throw Infeasible("no singular companion with positive determinant exists "
                     "for a nonnegative multiple of the identity");
  }

  // a, d >= 0 distinct; reduce to a > d by conjugating with the axis swap,
  // which preserves both membership and singularity
  if (d > a) {
    Matrix2 J;
    J << 0.0, 1.0, 1.0, 0.0;
    Matrix2 sub = singular_companion(J * F * J, lambda);
    return J * sub * J;
  }

  auto lambda_matrix = [&](double lam) {
    Matrix2 M;
    M(0, 0) = a * d / (a - d) + lam;
    M(0, 1) = d * d / (a - d) + (a + d) / (2.0 * a) * lam;
    M(1, 0) = -a * a / (a - d) - lam;
    M(1, 1) = -a * d / (a - d) - (a + d) / (2.0 * a) * lam;
    return M;
  };

  if (lambda) return lambda_matrix(*lambda);

  double lam = 16.0 * std::max(1.0, a / (a - d)) * 4.0;
  for (int it = 0; it < 200; ++it) {
    Matrix2 M = lambda_matrix(lam);
    double tr = M.trace();
    if (tr > 0.0 && tr * tr > 4.0 * M.determinant() + 1e-6 && in_r2(M)) {
      return M;
    }
    lam *= 2.0;
  }
  throw Infeasible("singular_companion: parameter growth failed");
}

}  // namespace mmot
