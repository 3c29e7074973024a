// End-to-end acceptance run: each numbered block checks one gating property
// of the library at its stated tolerance and prints a single PASS/FAIL line.
// The process exits nonzero when any block fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmot/ballantine.hpp"
#include "mmot/certify.hpp"
#include "mmot/construct.hpp"
#include "mmot/cyclic_cost.hpp"
#include "mmot/diagnose.hpp"
#include "mmot/io.hpp"
#include "mmot/quad_calc.hpp"
#include "mmot/solve.hpp"

using namespace mmot;

namespace {

struct Check {
  std::vector<std::string> fails;
  std::ostringstream info;

  void require(bool ok, const std::string& what) {
    if (!ok) fails.push_back(what);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------- block 1

void check_factorization_suite(Check& chk) {
  Matrix2 T{{-1.0, 3.0}, {0.0, -1.0}};
  chk.require(in_r3(T), "reference matrix must be a three factor product");
  chk.require(!in_r2(T), "reference matrix must not be a two factor product");

  PDFactorization f = factor_pd3(T);
  chk.require(f.factors.size() == 3, "three factors expected");
  for (const auto& p : f.factors) {
    chk.require(is_symmetric(p), "factor must be symmetric");
    chk.require(is_positive_definite(p), "factor must be positive definite");
  }
  const double res = (f.factors[0] * f.factors[1] * f.factors[2] - T).norm();
  chk.require(res <= 1e-8, "product residual above 1e-8");

  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int n_members = 0, n_out = 0;
  double worst = res;
  int done = 0;
  while (done < 500) {
    Matrix2 M{{u(rng), u(rng)}, {u(rng), u(rng)}};
    if (std::abs(M.determinant()) <= 1e-6) continue;
    ++done;
    if (M.determinant() < 0.0) {
      bool threw = false;
      try {
        (void)in_r3(M);
      } catch (const std::invalid_argument&) {
        threw = true;
      }
      chk.require(threw, "negative determinant must be rejected");
      continue;
    }
    if (in_r3(M)) {
      ++n_members;
      PDFactorization g = factor_pd3(M);
      bool good = g.factors.size() == 3;
      Matrix2 prod = Matrix2::Identity();
      for (const auto& p : g.factors) {
        good = good && is_symmetric(p) && is_positive_definite(p);
        prod = prod * p;
      }
      const double r = (prod - M).norm() / std::max(1.0, M.norm());
      worst = std::max(worst, r);
      chk.require(good && r <= 1e-8, "member failed to factor within 1e-8");
    } else {
      ++n_out;
      bool threw = false;
      try {
        (void)factor_pd3(M);
      } catch (const std::invalid_argument&) {
        threw = true;
      }
      chk.require(threw, "non member must be rejected by the factorizer");
    }
  }
  chk.info << "500 matrices, " << n_members << " factored, " << n_out
           << " rejected, max residual " << fmt(worst);
}

// ---------------------------------------------------------------- block 2

void check_companion_suite(Check& chk) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int per_case[3] = {0, 0, 0};
  double worst = 0.0;
  int done = 0;
  while (done < 500) {
    Matrix2 F;
    const int branch = done % 3;
    if (branch == 0) {  // generic, nonzero lower left entry
      F << u(rng), u(rng), u(rng), u(rng);
      if (std::abs(F(1, 0)) < 0.05) continue;
    } else if (branch == 1) {  // upper triangular, nonzero upper right
      F << u(rng), u(rng), 0.0, u(rng);
      if (std::abs(F(0, 1)) < 0.05) continue;
    } else {  // diagonal with distinct entries
      F << u(rng), 0.0, 0.0, u(rng);
      if (std::abs(F(0, 0) - F(1, 1)) < 0.05) continue;
    }
    ++done;
    ++per_case[branch];

    const Matrix2 M = singular_companion(F);
    const Matrix2 S = F + M;
    const double scale = std::max(1.0, S.squaredNorm());
    const double d = std::abs(S.determinant());
    worst = std::max(worst, d / scale);
    chk.require(d <= 1e-9 * scale, "companion sum determinant above tolerance");
    chk.require(in_r2(M), "companion must be a two factor product");
  }

  bool threw = false;
  try {
    (void)singular_companion(Matrix2{{1.5, 0.0}, {0.0, 1.5}});
  } catch (const Infeasible&) {
    threw = true;
  }
  chk.require(threw, "positive multiple of the identity must be rejected");
  chk.info << per_case[0] << "/" << per_case[1] << "/" << per_case[2]
           << " per branch, max relative det " << fmt(worst);
}

// ---------------------------------------------------------------- block 3

void certify_package(Check& chk, const CounterexamplePackage& pkg,
                     int points_per_axis, double& worst_violation,
                     double& worst_residual, double& worst_gap,
                     long long& total_checked) {
  CheckGrid grid = CheckGrid::uniform(*pkg.instance, points_per_axis, 2.0);
  Certificate cert = certify(pkg.plan, pkg.potentials, *pkg.instance, grid, 1e-8);
  worst_violation = std::max(worst_violation, cert.max_feasibility_violation);
  worst_residual = std::max(worst_residual, cert.support_equality_residual);
  worst_gap = std::max(worst_gap, std::abs(cert.duality_gap));
  total_checked += cert.n_points_checked;
  chk.require(cert.max_feasibility_violation <= 1e-9,
              pkg.kind + ": dual feasibility violated beyond 1e-9");
  chk.require(cert.support_equality_residual <= 1e-9,
              pkg.kind + ": support equality residual above 1e-9");
  chk.require(std::abs(cert.duality_gap) <= 1e-8,
              pkg.kind + ": duality gap above 1e-8");
  chk.require(cert.verdict == "optimal", pkg.kind + ": verdict not optimal");
  chk.require(!monge_test(pkg.plan), pkg.kind + ": plan must not be a graph");
  chk.require(support_dimension(pkg.plan) == 3,
              pkg.kind + ": support dimension must be exactly 3");
}

void check_linear_map_certificates(Check& chk) {
  std::vector<Matrix2> Fs = {Matrix2{{0.0, -1.0}, {1.0, 0.0}}};
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  while (Fs.size() < 3) {
    Matrix2 F{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const double off = std::max(std::abs(F(0, 1)), std::abs(F(1, 0)));
    if (off < 0.1 || std::abs(F(1, 0)) < 0.05) continue;  // keep away from multiples of I
    Fs.push_back(F);
  }

  double worst_violation = -1e30, worst_residual = 0.0, worst_gap = 0.0;
  long long total = 0;
  for (size_t i = 0; i < Fs.size(); ++i) {
    auto pkg = linear_map_package(Fs[i], 500, unsigned(100 + i));
    certify_package(chk, pkg, 8, worst_violation, worst_residual, worst_gap, total);
  }
  chk.info << "3 maps, " << total << " tuples, violation " << fmt(worst_violation)
           << ", residual " << fmt(worst_residual) << ", gap " << fmt(worst_gap);
}

// ---------------------------------------------------------------- block 4

struct BlockGrid {
  Vector lo = Vector::Zero(2);
  double step = 0.0;
  int npts = 0;

  GridSpec spec() const {
    GridSpec g;
    g.lo = lo;
    g.hi = lo + Vector::Constant(2, step * (npts - 1));
    g.step = step;
    return g;
  }
  int flat(const Vector& w) const {
    const int i0 = int(std::lround((w[0] - lo[0]) / step));
    const int i1 = int(std::lround((w[1] - lo[1]) / step));
    return i0 * npts + i1;
  }
};

// sup over x3..xm of the reduced objective for fixed (x1, x2), computed two
// ways: exactly from the strictly concave quadratic, and by a stagewise
// grid maximization over block grids centered at the exact optimizer.
struct ReducedSup {
  double exact = 0.0;
  double grid = 0.0;
  double tolerance = 0.0;  // snapping error bound: lam_max * blocks * step^2 / 4
};

ReducedSup reduced_sup(const std::vector<Potential>& u, const Vector& x1,
                       const Vector& x2, int npts, double half_width) {
  const int m = int(u.size());
  const int B = m - 2;  // blocks for x3..xm
  Matrix H = Matrix::Zero(2 * B, 2 * B);
  Vector g = Vector::Zero(2 * B);
  for (int j = 0; j < B; ++j) {
    const auto& q = std::get<QuadraticPotential>(u[size_t(j + 2)]);
    H.block(2 * j, 2 * j, 2, 2) = -q.Q;
    if (j + 1 < B) {
      H.block(2 * j, 2 * (j + 1), 2, 2) = Matrix::Identity(2, 2);
      H.block(2 * (j + 1), 2 * j, 2, 2) = Matrix::Identity(2, 2);
    }
  }
  g.segment(0, 2) = x2;
  g.segment(2 * (B - 1), 2) += x1;

  const Vector xi = H.fullPivLu().solve(-g);
  ReducedSup out;
  out.exact = 0.5 * g.dot(xi);

  const double step = 2.0 * half_width / (npts - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(-H);
  out.tolerance = eig.eigenvalues().maxCoeff() * double(B) * step * step / 4.0;

  // centered near the optimizer but offset by a sub-step fraction, so the
  // true maximizer falls strictly between nodes and the bound is exercised
  std::vector<BlockGrid> grids(static_cast<size_t>(B));
  for (int j = 0; j < B; ++j) {
    grids[size_t(j)].lo =
        xi.segment(2 * j, 2).array() - half_width + 0.3 * step;
    grids[size_t(j)].step = step;
    grids[size_t(j)].npts = npts;
  }

  // backward pass: value-to-go tabulated on each block grid
  std::vector<double> next;
  for (int j = B - 1; j >= 0; --j) {
    const GridSpec spec = grids[size_t(j)].spec();
    std::vector<double> table(size_t(spec.point_count()));
    const auto& down = grids[size_t(j + 1 < B ? j + 1 : 0)];
    Eigen::Index flat = 0;
    auto fill = [&](const Vector& w) {
      double v = -eval_potential(u[size_t(j + 2)], w);
      if (j == B - 1) {
        v += w.dot(x1);
      } else {
        auto link = [&](const Vector& z) {
          return w.dot(z) + next[size_t(down.flat(z))];
        };
        v += grid_sup(link, down.spec()).value;
      }
      table[size_t(flat++)] = v;
      return v;
    };
    (void)grid_sup(fill, spec);  // visits every node in flat-index order
    next = std::move(table);
  }
  auto top = [&](const Vector& z) {
    return x2.dot(z) + next[size_t(grids[0].flat(z))];
  };
  out.grid = grid_sup(top, grids[0].spec()).value;
  return out;
}

void check_chain_certificates(Check& chk) {
  double worst_violation = -1e30, worst_residual = 0.0, worst_gap = 0.0;
  long long total = 0;
  for (int m : {5, 6}) {
    auto pkg = chain_package(m, 500, unsigned(200 + m));
    certify_package(chk, pkg, 6, worst_violation, worst_residual, worst_gap, total);
  }

  // adding a sixth marginal shifts the reduced two variable objective by
  // exactly |x1|^2 / 2
  auto p5 = chain_package(5, 4, 1);
  auto p6 = chain_package(6, 4, 1);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_identity = 0.0, worst_snap = 0.0, tol_sum = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vector x1(2), x2(2);
    x1 << u(rng), u(rng);
    x2 << u(rng), u(rng);
    ReducedSup r5 = reduced_sup(p5.potentials.u, x1, x2, 17, 0.45);
    ReducedSup r6 = reduced_sup(p6.potentials.u, x1, x2, 17, 0.45);
    tol_sum = r5.tolerance + r6.tolerance;

    chk.require(r5.grid <= r5.exact + 1e-9 && r5.exact - r5.grid <= r5.tolerance,
                "grid maximization drifted from the exact supremum (m=5)");
    chk.require(r6.grid <= r6.exact + 1e-9 && r6.exact - r6.grid <= r6.tolerance,
                "grid maximization drifted from the exact supremum (m=6)");
    worst_snap = std::max({worst_snap, r5.exact - r5.grid, r6.exact - r6.grid});

    const double target = 0.5 * x1.squaredNorm();
    chk.require(std::abs(r6.exact - r5.exact - target) <= 1e-9,
                "exact reduction must gain |x1|^2/2 per extra marginal");
    const double grid_err = std::abs(r6.grid - r5.grid - target);
    worst_identity = std::max(worst_identity, grid_err);
    chk.require(grid_err <= tol_sum, "grid reduction outside curvature tolerance");
  }
  chk.info << total << " tuples, violation " << fmt(worst_violation)
           << ", residual " << fmt(worst_residual) << ", gap " << fmt(worst_gap)
           << "; reduction err " << fmt(worst_identity) << " (tol "
           << fmt(tol_sum) << ", snap " << fmt(worst_snap) << ")";
}

// ---------------------------------------------------------------- block 5

void check_degenerate_ball(Check& chk) {
  auto pkg = dirac_package(1.0, 8);
  double moments = 0.0;
  for (int k : {0, 2}) {
    const auto& mu = pkg.instance->marginals[size_t(k)];
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      moments += mu.weights[i] * mu.point(i).squaredNorm();
  }
  const double expected = 2.0 * moments;  // both detours pass through the origin

  double lo = 1e30, hi = -1e30;
  for (unsigned seed = 0; seed < 20; ++seed) {
    Plan p = random_feasible_plan(pkg.instance, seed);
    const double c = plan_objective(p, ObjectiveKind::Cost);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  chk.require(hi - lo <= 1e-10, "plan costs spread beyond 1e-10");
  chk.require(std::abs(lo - expected) <= 1e-10,
              "cost must equal twice the sum of second moments");

  ProbeResult probe = uniqueness_probe(pkg.instance);
  chk.require(!probe.unique, "probe must flag the optimizer as non unique");
  chk.info << "20 plans within " << fmt(hi - lo) << " of " << fmt(expected)
           << ", probe spread " << fmt(probe.max_distance);
}

// ---------------------------------------------------------------- block 6

void check_graph_regime(Check& chk) {
  for (double lambda : {1.0, 2.0}) {
    double prev = 1e30;
    double final_split = 1e30;
    for (int g : {4, 6, 8}) {
      auto inst = regular_instance(g, lambda, 1, 0);
      LpSolution sol = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
      const double split = split_mass(sol.plan);
      chk.require(split < prev, "split mass must strictly decrease with the grid");
      prev = split;
      final_split = split;

      ProbeResult probe = uniqueness_probe(inst);
      chk.require(probe.unique, "probe must report a unique optimizer");
      if (g == 8)
        chk.info << "lambda " << lambda << ": split " << fmt(split)
                 << ", probe spread " << fmt(probe.max_distance) << "; ";
    }
    chk.require(final_split <= 0.05, "split mass above 0.05 at the finest grid");
  }
}

// ---------------------------------------------------------------- block 7

void check_solver_cross_validation(Check& chk) {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  double worst_rel = 0.0, worst_dual = 0.0, worst_ident = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = std::make_shared<Instance>();
    inst->m = 4;
    inst->n = 2;
    inst->map = AffineMap::scaled_identity(2, 1.0);
    for (int k = 0; k < 4; ++k) {
      DiscreteMeasure mu;
      mu.points = Matrix(2, 2);
      for (int i = 0; i < 2; ++i) {
        mu.points(i, 0) = u(rng);
        mu.points(i, 1) = u(rng);
      }
      mu.weights = Vector::Constant(2, 0.5);
      mu.box.lo = Vector::Constant(2, 0.5);
      mu.box.hi = Vector::Constant(2, 2.5);
      inst->marginals.push_back(mu);
    }

    LpSolution mn = exact_lp(inst, ObjectiveKind::Cost, Sense::Min);
    LpSolution mx = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
    worst_dual = std::max({worst_dual, std::abs(mn.objective - mn.dual_objective),
                           std::abs(mx.objective - mx.dual_objective)});
    chk.require(worst_dual <= 1e-8, "primal and dual values must agree to 1e-8");

    const double ident =
        std::abs(mn.objective + 2.0 * mx.objective - separable_moment(*inst));
    worst_ident = std::max(worst_ident, ident);
    chk.require(ident <= 1e-8, "cost plus twice surplus must hit the constant");

    CostTensor t = build_tensor(*inst, ObjectiveKind::Cost);
    double tlo = t.data[0], thi = t.data[0];
    for (double v : t.data) {
      tlo = std::min(tlo, v);
      thi = std::max(thi, v);
    }
    SinkhornOptions opt;
    opt.epsilon = 1e-3 * (thi - tlo);
    SinkhornResult r = sinkhorn_mm(*inst, ObjectiveKind::Cost, opt);
    const double rel = std::abs(r.objective - mn.objective) /
                       std::max(1.0, std::abs(mn.objective));
    worst_rel = std::max(worst_rel, rel);
    chk.require(rel <= 0.01, "entropic objective more than 1% from exact");
  }
  chk.info << "5 instances, entropic gap " << fmt(worst_rel) << ", dual gap "
           << fmt(worst_dual) << ", identity " << fmt(worst_ident);
}

// ---------------------------------------------------------------- block 8

void check_quadratic_calculus(Check& chk) {
  std::mt19937_64 rng(888);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto random_quadratic = [&](int n) {
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = u(rng);
    QuadraticForm f;
    f.A = G * G.transpose() + 0.3 * Matrix::Identity(n, n);
    f.b = Vector(n);
    for (int i = 0; i < n; ++i) f.b[i] = u(rng);
    f.c0 = u(rng);
    return f;
  };

  double worst_bi = 0.0, worst_fy = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 3;
    QuadraticForm f = random_quadratic(n);
    QuadraticForm ff = legendre(legendre(f));
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    worst_bi = std::max(worst_bi, std::abs(ff(x) - f(x)));

    QuadraticForm fs = legendre(f);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = u(rng);
    chk.require(f(x) + fs(y) - x.dot(y) >= -1e-9, "conjugate inequality violated");
    const Vector grad = f.A * x + f.b;
    worst_fy = std::max(worst_fy, std::abs(f(x) + fs(grad) - x.dot(grad)));
  }
  chk.require(worst_bi <= 1e-9, "double conjugation drifted beyond 1e-9");
  chk.require(worst_fy <= 1e-9, "equality at the gradient beyond 1e-9");

  double worst_det = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix2 A{{u(rng), u(rng)}, {u(rng), u(rng)}};
    Matrix2 B{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const auto [lhs, rhs] = det_sum(A, B);
    const double scale = std::max(1.0, std::abs(lhs));
    worst_det = std::max(worst_det, std::abs(lhs - rhs) / scale);
  }
  chk.require(worst_det <= 1e-12, "determinant sum identity beyond 1e-12");
  chk.info << "biconjugacy " << fmt(worst_bi) << ", gradient equality "
           << fmt(worst_fy) << ", det identity " << fmt(worst_det);
}

struct Block {
  const char* name;
  void (*body)(Check&);
  double limit_s;  // 0 = no stated budget
};

}  // namespace

int main() {
  const Block blocks[] = {
      {"three factor membership and factorization", check_factorization_suite, 10.0},
      {"singular companion construction", check_companion_suite, 5.0},
      {"linear map certificates", check_linear_map_certificates, 120.0},
      {"chain certificates and reduction", check_chain_certificates, 300.0},
      {"degenerate ball instance", check_degenerate_ball, 0.0},
      {"graph regime refinement", check_graph_regime, 0.0},
      {"solver cross validation", check_solver_cross_validation, 0.0},
      {"quadratic calculus suites", check_quadratic_calculus, 0.0},
  };

  bool all_pass = true;
  for (size_t i = 0; i < std::size(blocks); ++i) {
    Check chk;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      blocks[i].body(chk);
    } catch (const std::exception& e) {
      chk.fails.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (blocks[i].limit_s > 0.0 && secs > blocks[i].limit_s) {
      std::ostringstream over;
      over << "runtime " << fmt(secs) << "s above budget " << blocks[i].limit_s << "s";
      chk.fails.push_back(over.str());
    }

    const bool pass = chk.fails.empty();
    all_pass = all_pass && pass;
    std::printf("[%s] %zu %s (%.1fs)", pass ? "PASS" : "FAIL", i + 1,
                blocks[i].name, secs);
    if (!chk.info.str().empty()) std::printf(" %s", chk.info.str().c_str());
    if (!pass) {
      std::string joined;
      for (size_t k = 0; k < chk.fails.size() && k < 4; ++k) {
        if (k) joined += "; ";
        joined += chk.fails[k];
      }
      std::printf(" -- %s", joined.c_str());
    }
    std::printf("\n");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
