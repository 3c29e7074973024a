#include "mmot/construct.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mmot/ballantine.hpp"
#include "mmot/cyclic_cost.hpp"

namespace mmot {
namespace {

Box bounding_box(const Matrix& points) {
  Box b;
  b.lo = points.colwise().minCoeff().transpose();
  b.hi = points.colwise().maxCoeff().transpose();
  return b;
}

DiscreteMeasure make_measure(Matrix points, Vector weights) {
  DiscreteMeasure mu;
  mu.points = std::move(points);
  mu.weights = std::move(weights);
  mu.box = bounding_box(mu.points);
  return mu;
}

Potential quadratic(const Matrix& Q) {
  QuadraticPotential u;
  u.Q = 0.5 * (Q + Q.transpose());
  u.l = Vector::Zero(Q.rows());
  u.c0 = 0.0;
  return u;
}

void check_package(const CounterexamplePackage& pkg) {
  auto errs = validate_instance(*pkg.instance);
  if (errs.empty()) errs = validate_plan(pkg.plan);
  if (!errs.empty())
    throw std::runtime_error("constructed package is inconsistent: " + errs.front());
}

// Magnitude in [floor, 1] with a random sign, bounded away from zero so
// partner samples stay distinguishable.
double signed_offset(std::mt19937_64& rng, double floor) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double mag = floor + (1.0 - floor) * u01(rng);
  return rng() % 2 == 0 ? mag : -mag;
}

}  // namespace

CounterexamplePackage dirac_package(double radius, int grid_points, int n) {
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points per axis");
  if (n < 1) throw std::invalid_argument("dimension must be positive");

  const double step = 2.0 * radius / grid_points;
  std::vector<Vector> inside;
  std::vector<int> digit(n, 0);
  while (true) {
    Vector p(n);
    for (int d = 0; d < n; ++d) p[d] = -radius + (digit[d] + 0.5) * step;
    if (p.norm() < radius) inside.push_back(p);
    int d = n - 1;
    while (d >= 0 && ++digit[d] == grid_points) digit[d--] = 0;
    if (d < 0) break;
  }
  if (inside.empty())
    throw std::invalid_argument("no cell centers fall inside the ball");

  const int K = static_cast<int>(inside.size());
  Matrix pts(K, n);
  for (int i = 0; i < K; ++i) pts.row(i) = inside[i].transpose();
  Vector w = Vector::Constant(K, 1.0 / K);

  auto inst = std::make_shared<Instance>();
  inst->m = 4;
  inst->n = n;
  inst->map = AffineMap::scaled_identity(n, 1.0);
  DiscreteMeasure ball = make_measure(pts, w);
  DiscreteMeasure origin = make_measure(Matrix::Zero(1, n), Vector::Ones(1));
  inst->marginals = {ball, origin, ball, origin};

  CounterexamplePackage pkg;
  pkg.kind = "dirac";
  pkg.instance = inst;
  pkg.plan.instance = inst;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      pkg.plan.entries.push_back({{i, 0, j, 0}, w[i] * w[j]});

  for (int k = 0; k < 4; ++k) {
    TabulatedPotential t;
    t.values = Vector::Zero(inst->marginals[k].size());
    pkg.potentials.u.push_back(t);
  }

  pkg.expected_support_dim = 2 * n;
  pkg.support_params = 2 * n;
  pkg.support_point = [n](const Vector& p) {
    std::vector<Vector> tup(4, Vector::Zero(n));
    tup[0] = p.segment(0, n);
    tup[2] = p.segment(n, n);
    return tup;
  };
  check_package(pkg);
  return pkg;
}

CounterexamplePackage linear_map_package(const Matrix2& F, int n_samples,
                                         unsigned seed) {
  if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");

  const Matrix2 M = singular_companion(F);
  const Matrix2 Minv = M.inverse();
  PDFactorization fact = factor_pd2(Minv);
  const double s = std::sqrt(fact.factors[1].norm() / fact.factors[0].norm());
  const Matrix2 M1 = s * fact.factors[0];
  const Matrix2 M2 = fact.factors[1] / s;
  const Matrix2 A = Minv * F + Matrix2::Identity();

  Eigen::JacobiSVD<Matrix2> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector2 v = svd.matrixV().col(1);   // null direction of A
  const Vector2 kn = svd.matrixU().col(1);  // null direction of A^T

  // sum of the four forms dominates the surplus everywhere; each pairing is
  // tight exactly on the contact set parametrized below.
  const Matrix2 I2 = Matrix2::Identity();
  const Matrix2 Q1 =
      (I2 - v * v.transpose()) + F.transpose() * M2 * M1 * M2 * F + F.transpose() * M2 * F;
  const Matrix2 Q2 = A * A.transpose() + M1;
  const Matrix2 Q3 = M1.inverse() + M2;
  const Matrix2 Q4 = M2.inverse();

  auto tuple_at = [=](double t, const Vector2& y) {
    std::vector<Vector> tup(4);
    const Vector2 x = t * v + A.transpose() * y;
    const Vector2 z = M1 * (y + M2 * (F * x));
    const Vector2 w = M2 * (z + F * x);
    tup[0] = x;
    tup[1] = y;
    tup[2] = z;
    tup[3] = w;
    return tup;
  };

  const int pairs = (n_samples + 1) / 2;
  const int N = 2 * pairs;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);

  Matrix X(pairs, 2), Y(N, 2), Z(N, 2), W(N, 2);
  for (int p = 0; p < pairs; ++p) {
    const double t = u11(rng);
    Vector2 y;
    y << u11(rng), u11(rng);
    const Vector2 y2 = y + signed_offset(rng, 0.05) * kn;

    auto base = tuple_at(t, y);
    // The partner reuses the base first coordinate verbatim: k spans the
    // kernel of A^T, so both parameter choices project to the same x.
    auto other = tuple_at(t, y2);
    other[0] = base[0];

    X.row(p) = base[0].transpose();
    Y.row(2 * p) = base[1].transpose();
    Z.row(2 * p) = base[2].transpose();
    W.row(2 * p) = base[3].transpose();
    Y.row(2 * p + 1) = other[1].transpose();
    Z.row(2 * p + 1) = other[2].transpose();
    W.row(2 * p + 1) = other[3].transpose();
  }

  auto inst = std::make_shared<Instance>();
  inst->m = 4;
  inst->n = 2;
  inst->map = AffineMap{F, Vector::Zero(2)};
  inst->marginals = {make_measure(X, Vector::Constant(pairs, 2.0 / N)),
                     make_measure(Y, Vector::Constant(N, 1.0 / N)),
                     make_measure(Z, Vector::Constant(N, 1.0 / N)),
                     make_measure(W, Vector::Constant(N, 1.0 / N))};

  CounterexamplePackage pkg;
  pkg.kind = "linear_map";
  pkg.instance = inst;
  pkg.plan.instance = inst;
  for (int p = 0; p < pairs; ++p) {
    pkg.plan.entries.push_back({{p, 2 * p, 2 * p, 2 * p}, 1.0 / N});
    pkg.plan.entries.push_back({{p, 2 * p + 1, 2 * p + 1, 2 * p + 1}, 1.0 / N});
  }

  pkg.potentials.u = {quadratic(Q1), quadratic(Q2), quadratic(Q3), quadratic(Q4)};
  pkg.expected_support_dim = 3;
  pkg.support_params = 3;
  pkg.support_point = [tuple_at](const Vector& p) {
    Vector2 y;
    y << p[1], p[2];
    return tuple_at(p[0], y);
  };

  pkg.details["F"] = F;
  pkg.details["M"] = M;
  pkg.details["M1"] = M1;
  pkg.details["M2"] = M2;
  pkg.details["A"] = A;
  pkg.details["null_A"] = v;
  pkg.details["null_At"] = kn;
  check_package(pkg);
  return pkg;
}

CounterexamplePackage chain_package(int m, int n_samples, unsigned seed) {
  if (m < 5) throw std::invalid_argument("chain construction needs at least 5 marginals");
  if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");

  Matrix2 M;
  M << -1.0, 3.0, 0.0, -1.0;
  PDFactorization fact = factor_pd3(M);
  const Matrix2 M1 = fact.factors[0];
  const Matrix2 M2 = fact.factors[1];
  const Matrix2 M3 = fact.factors[2];
  const Matrix2 I2 = Matrix2::Identity();

  std::vector<Matrix> Q(m, Matrix(2, 2));
  Q[0] = M3 * M2 * M3 + M3 * M2 * M1 * M2 * M3 + M3 + (m - 5) * I2;
  Q[0](1, 1) += 3.0;  // Young pairing of the off-diagonal coupling 3*x2[0]*x1[1]
  Q[1] = M1;
  Q[1](0, 0) += 3.0;
  Q[2] = M1.inverse() + M2;
  Q[3] = M2.inverse() + M3;
  Q[4] = m == 5 ? Matrix(M3.inverse()) : Matrix(M3.inverse() + I2);
  for (int k = 5; k + 1 < m; ++k) Q[k] = 2.0 * I2;
  if (m > 5) Q[m - 1] = I2;

  auto tuple_at = [=](const Vector2& x1, double free) {
    std::vector<Vector> tup(m);
    tup[0] = x1;
    Vector2 x2;
    x2 << x1[1], free;
    tup[1] = x2;
    tup[2] = M1 * (x2 + M2 * M3 * x1);
    tup[3] = M2 * (Vector2(tup[2]) + M3 * x1);
    tup[4] = M3 * (Vector2(tup[3]) + x1);
    for (int k = 5; k < m; ++k) tup[k] = tup[k - 1] + x1;
    return tup;
  };

  const int pairs = (n_samples + 1) / 2;
  const int N = 2 * pairs;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);

  Matrix first(pairs, 2);
  std::vector<Matrix> rest(m - 1, Matrix(N, 2));
  std::vector<std::vector<Vector>> tuples;
  tuples.reserve(N);
  for (int p = 0; p < pairs; ++p) {
    Vector2 x1;
    x1 << u11(rng), u11(rng);
    const double f1 = u11(rng);
    const double f2 = f1 + signed_offset(rng, 0.05);
    auto base = tuple_at(x1, f1);
    auto other = tuple_at(x1, f2);

    first.row(p) = x1.transpose();
    for (int k = 1; k < m; ++k) {
      rest[k - 1].row(2 * p) = base[k].transpose();
      rest[k - 1].row(2 * p + 1) = other[k].transpose();
    }
  }

  auto inst = std::make_shared<Instance>();
  inst->m = m;
  inst->n = 2;
  inst->map = AffineMap::scaled_identity(2, 1.0);
  inst->marginals.push_back(make_measure(first, Vector::Constant(pairs, 2.0 / N)));
  for (int k = 1; k < m; ++k)
    inst->marginals.push_back(make_measure(rest[k - 1], Vector::Constant(N, 1.0 / N)));

  CounterexamplePackage pkg;
  pkg.kind = "chain";
  pkg.instance = inst;
  pkg.plan.instance = inst;
  for (int p = 0; p < pairs; ++p) {
    for (int half = 0; half < 2; ++half) {
      PlanEntry e;
      e.idx.assign(m, 2 * p + half);
      e.idx[0] = p;
      e.mass = 1.0 / N;
      pkg.plan.entries.push_back(std::move(e));
    }
  }

  for (int k = 0; k < m; ++k) pkg.potentials.u.push_back(quadratic(Q[k]));
  pkg.expected_support_dim = 3;
  pkg.support_params = 3;
  pkg.support_point = [tuple_at](const Vector& p) {
    Vector2 x1;
    x1 << p[0], p[1];
    return tuple_at(x1, p[2]);
  };

  pkg.details["M"] = M;
  pkg.details["M1"] = M1;
  pkg.details["M2"] = M2;
  pkg.details["M3"] = M3;
  check_package(pkg);
  return pkg;
}

std::shared_ptr<const Instance> regular_instance(int grid_points, double lambda,
                                                 int n, unsigned seed) {
  if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points");
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  if (n < 1) throw std::invalid_argument("dimension must be positive");

  long K = 1;
  for (int d = 0; d < n; ++d) K *= grid_points;
  Matrix pts(K, n);
  std::vector<int> digit(n, 0);
  for (long i = 0; i < K; ++i) {
    for (int d = 0; d < n; ++d)
      pts(i, d) = -1.0 + (2.0 * digit[d] + 1.0) / grid_points;
    int d = n - 1;
    while (d >= 0 && ++digit[d] == grid_points) digit[d--] = 0;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.25, 0.25);
  // Shrinking the perturbation with the grid keeps every marginal an
  // approximation of the same uniform limit; a fixed amplitude would make
  // the split mass of exact solutions grow instead of vanish.
  const double scale = 1.0 / (grid_points * grid_points);
  // Two density draws, not four: the second marginal deviates, the others
  // share a profile. Coordinates 2 and 4 never interact in the cyclic
  // surplus, so independent deviations in both would leave the conditional
  // coupling between them unconstrained and no exact solution would be
  // unique at any grid size.
  std::vector<std::vector<double>> a(2, std::vector<double>(n));
  std::vector<std::vector<double>> b(2, std::vector<double>(n));
  for (int s = 0; s < 2; ++s)
    for (int d = 0; d < n; ++d) {
      a[s][d] = amp(rng);
      b[s][d] = amp(rng);
    }

  auto inst = std::make_shared<Instance>();
  inst->m = 4;
  inst->n = n;
  inst->map = AffineMap::scaled_identity(n, lambda);
  for (int k = 0; k < 4; ++k) {
    const int s = k == 1 ? 1 : 0;
    Vector w(K);
    for (long i = 0; i < K; ++i) {
      double v = 1.0;
      for (int d = 0; d < n; ++d) {
        const double p = pts(i, d);
        v *= 1.0 + scale * (a[s][d] * p + b[s][d] * std::sin(std::numbers::pi * p));
      }
      w[i] = v;
    }
    w /= w.sum();
    DiscreteMeasure mu = make_measure(pts, w);
    mu.box.lo = Vector::Constant(n, -1.0);
    mu.box.hi = Vector::Constant(n, 1.0);
    inst->marginals.push_back(std::move(mu));
  }
  return inst;
}

namespace {

// Tabulated potentials are usable here when their values are pinned to the
// evaluation grid itself, in the lexicographic order grid_sup visits.
std::function<double(const Vector&)> grid_evaluator(const Potential& u,
                                                    const GridSpec& grid) {
  if (evaluable_anywhere(u))
    return [&u](const Vector& p) { return eval_potential(u, p); };
  const auto& tab = std::get<TabulatedPotential>(u);
  if (tab.values.size() != grid.point_count())
    throw std::invalid_argument(
        "tabulated potential does not match the evaluation grid");
  const auto counts = grid.axis_counts();
  return [&tab, &grid, counts](const Vector& p) {
    Eigen::Index flat = 0;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
      const auto i =
          static_cast<Eigen::Index>(std::lround((p[d] - grid.lo[d]) / grid.step));
      flat = flat * counts[d] + i;
    }
    return tab.values[flat];
  };
}

}  // namespace

double effective_surplus(const Vector& x, const Vector& y, const Potential& u3,
                         const Potential& u4, const AffineMap& F,
                         const GridSpec& zgrid, const GridSpec& wgrid) {
  const auto eval3 = grid_evaluator(u3, zgrid);
  const auto eval4 = grid_evaluator(u4, wgrid);
  const Vector fx = F(x);
  auto outer = [&](const Vector& z) {
    auto inner = [&](const Vector& w) { return (z + fx).dot(w) - eval4(w); };
    return y.dot(z) - eval3(z) + grid_sup(inner, wgrid).value;
  };
  return x.dot(y) + grid_sup(outer, zgrid).value;
}

}  // namespace mmot
