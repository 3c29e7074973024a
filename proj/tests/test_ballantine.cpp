#include <doctest.h>

#include <cmath>
#include <random>

#include "mmot/ballantine.hpp"
#include "mmot/quad_calc.hpp"

using namespace mmot;

namespace {

Matrix2 mat(double a, double b, double c, double d) {
  Matrix2 m;
  m << a, b, c, d;
  return m;
}

Matrix2 random_matrix(std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return mat(u(rng), u(rng), u(rng), u(rng));
}

Matrix2 random_spd2(std::mt19937_64& rng) {
  Matrix2 g = random_matrix(rng, 1.0);
  return g * g.transpose() + 0.15 * Matrix2::Identity();
}

void check_factorization(const PDFactorization& f, const Matrix2& M,
                         size_t n_factors) {
  REQUIRE(f.factors.size() == n_factors);
  Matrix2 prod = Matrix2::Identity();
  for (const auto& p : f.factors) {
    CHECK(is_symmetric(p, 1e-10));
    CHECK(is_positive_definite(p));
    prod = prod * p;
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  CHECK((prod - M).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  CHECK(f.product_residual <= 1e-8);
}

}  // namespace

TEST_SUITE("ballantine") {

TEST_CASE("two-factor membership on hand matrices") {
  CHECK(in_r2(mat(2, 0, 0, 3)));
  CHECK(in_r2(mat(3, 1, 0, 1)));
  CHECK_FALSE(in_r2(mat(-1, 3, 0, -1)));   // negative eigenvalues
  CHECK_FALSE(in_r2(mat(1, 1, 0, 1)));     // Jordan block
  CHECK_THROWS_AS(in_r2(mat(1, 0, 0, -1)), std::invalid_argument);
}

TEST_CASE("three-factor membership on hand matrices") {
  CHECK(in_r3(mat(-1, 3, 0, -1)));  // (0-3)^2 = 9 > 4 det = 4
  CHECK(in_r3(Matrix2::Identity()));
  CHECK_FALSE(in_r3(mat(-1, 1, 0, -1)));  // tr < 0 and (0-1)^2 = 1 < 4
  CHECK_THROWS_AS(in_r3(mat(0, 1, 1, 0)), std::invalid_argument);
}

TEST_CASE("two-factor split of symmetric matrices is (M, I)") {
  Matrix2 M = mat(2, 0, 0, 2);
  PDFactorization f = factor_pd2(M);
  check_factorization(f, M, 2);
  CHECK((f.factors[0] - M).norm() <= 1e-12);
  CHECK((f.factors[1] - Matrix2::Identity()).norm() <= 1e-12);

  std::mt19937_64 rng(12);
  Matrix2 S = random_spd2(rng);
  PDFactorization g = factor_pd2(S);
  CHECK((g.factors[0] - S).norm() <= 1e-10 * S.norm());
  CHECK((g.factors[1] - Matrix2::Identity()).norm() <= 1e-10);
}

TEST_CASE("two-factor split of a nonsymmetric member") {
  Matrix2 M = mat(3, 1, 0, 1);
  PDFactorization f = factor_pd2(M);
  check_factorization(f, M, 2);
  CHECK(f.product_residual <= 1e-10);
}

TEST_CASE("two-factor split rejects non-members") {
  CHECK_THROWS_AS(factor_pd2(mat(-1, 3, 0, -1)), std::invalid_argument);
}

TEST_CASE("three-factor split covers the two-factor case with identity") {
  Matrix2 S = mat(2, 0.3, 0.3, 1.5);
  PDFactorization f = factor_pd3(S);
  check_factorization(f, S, 3);

  Matrix2 M = mat(3, 1, 0, 1);
  PDFactorization g = factor_pd3(M);
  check_factorization(g, M, 3);
  CHECK((g.factors[2] - Matrix2::Identity()).norm() <= 1e-12);
}

TEST_CASE("three-factor split of the negative-trace member") {
  Matrix2 M = mat(-1, 3, 0, -1);
  PDFactorization f = factor_pd3(M);
  check_factorization(f, M, 3);
}

TEST_CASE("three-factor split rejects non-members") {
  CHECK_THROWS_AS(factor_pd3(mat(-1, 1, 0, -1)), std::invalid_argument);
}

TEST_CASE("membership and factorization agree over random matrices") {
  std::mt19937_64 rng(2025);
  int n2 = 0, n3 = 0;
  for (int t = 0; t < 500; ++t) {
    Matrix2 M = random_matrix(rng);
    if (M.determinant() <= 1e-6) {
      --t;
      continue;
    }
    if (in_r2(M)) {
      check_factorization(factor_pd2(M), M, 2);
      ++n2;
    }
    if (in_r3(M)) {
      check_factorization(factor_pd3(M), M, 3);
      ++n3;
    }
  }
  CHECK(n2 > 20);
  CHECK(n3 > n2);
}

TEST_CASE("products of positive definite factors pass the membership tests") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    Matrix2 P1 = random_spd2(rng);
    Matrix2 P2 = random_spd2(rng);
    Matrix2 P3 = random_spd2(rng);
    CHECK(in_r2(P1 * P2));
    CHECK(in_r3(P1 * P2 * P3));
  }
}

TEST_CASE("singular companion hand cases") {
  Matrix2 F1 = mat(0, 0, 1, 0);
  Matrix2 M1 = singular_companion(F1);
  CHECK((M1 - mat(1, 2, 0, 2)).norm() <= 1e-12);
  CHECK(std::abs((F1 + M1).determinant()) <= 1e-12);

  Matrix2 F2 = mat(-1, 0, 0, 0);
  Matrix2 M2 = singular_companion(F2);
  CHECK((M2 - Matrix2::Identity()).norm() <= 1e-12);

  Matrix2 F3 = mat(2, 0, 0, 1);
  Matrix2 M3 = singular_companion(F3, 40.0);
  CHECK((M3 - mat(42, 31, -44, -32)).norm() <= 1e-12);
  CHECK(M3.trace() == doctest::Approx(10.0));
  CHECK(M3.determinant() == doctest::Approx(20.0));
  CHECK(std::abs((F3 + M3).determinant()) <= 1e-9);
  CHECK(in_r2(M3));
}

TEST_CASE("singular companion rejects nonnegative multiples of the identity") {
  CHECK_THROWS_AS(singular_companion(1.5 * Matrix2::Identity()), Infeasible);
  CHECK_THROWS_AS(singular_companion(Matrix2::Zero()), Infeasible);
  CHECK_THROWS_AS(singular_companion(Matrix2::Identity()), Infeasible);
}

TEST_CASE("singular companion accepts negative multiples of the identity") {
  Matrix2 F = -2.0 * Matrix2::Identity();
  Matrix2 M = singular_companion(F);
  CHECK(std::abs((F + M).determinant()) <= 1e-9 * M.cwiseAbs().maxCoeff());
  CHECK(in_r2(M));
}

TEST_CASE("singular companion postconditions over random maps") {
  std::mt19937_64 rng(404);
  for (int t = 0; t < 500; ++t) {
    Matrix2 F = random_matrix(rng);
    const double offdiag = std::abs(F(0, 1)) + std::abs(F(1, 0));
    const double diagdiff = std::abs(F(0, 0) - F(1, 1));
    if (offdiag + diagdiff <= 1e-6) {
      --t;
      continue;
    }
    Matrix2 M = singular_companion(F);
    const double scale =
        std::max(1.0, std::max(F.cwiseAbs().maxCoeff(), M.cwiseAbs().maxCoeff()));
    CHECK(std::abs((F + M).determinant()) <= 1e-9 * scale * scale);
    CHECK(in_r2(M));
  }
}

TEST_CASE("diagonal proof branches of the companion") {
  // a < 0: -a I works; d < 0 mirrors it; d > a >= 0 goes through axis swap.
  for (Matrix2 F : {mat(-3, 0, 0, 5), mat(4, 0, 0, -2), mat(1, 0, 0, 3),
                    mat(0, 0, 0, 2), mat(3, 0, 0, 0)}) {
    Matrix2 M = singular_companion(F);
    const double scale =
        std::max(1.0, std::max(F.cwiseAbs().maxCoeff(), M.cwiseAbs().maxCoeff()));
    CHECK(std::abs((F + M).determinant()) <= 1e-9 * scale * scale);
    CHECK(in_r2(M));
  }
}

}  // TEST_SUITE
