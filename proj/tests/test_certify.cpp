#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "mmot/certify.hpp"
#include "mmot/construct.hpp"
#include "mmot/cyclic_cost.hpp"
#include "mmot/solve.hpp"

using namespace mmot;

namespace {

std::shared_ptr<Instance> tiny_instance(unsigned seed, int pts = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  auto inst = std::make_shared<Instance>();
  inst->m = 4;
  inst->n = 2;
  inst->map = AffineMap::scaled_identity(2, 1.0);
  for (int k = 0; k < 4; ++k) {
    DiscreteMeasure mu;
    mu.points = Matrix(pts, 2);
    for (int i = 0; i < pts; ++i) {
      mu.points(i, 0) = u(rng);
      mu.points(i, 1) = u(rng);
    }
    mu.weights = Vector::Constant(pts, 1.0 / pts);
    mu.box.lo = Vector::Constant(2, 0.5);
    mu.box.hi = Vector::Constant(2, 2.5);
    inst->marginals.push_back(mu);
  }
  return inst;
}

PotentialSet zero_potentials(const Instance& inst) {
  PotentialSet pots;
  for (int k = 0; k < inst.m; ++k) {
    QuadraticPotential q;
    q.Q = Matrix::Zero(inst.n, inst.n);
    q.l = Vector::Zero(inst.n);
    q.c0 = 0.0;
    pots.u.push_back(q);
  }
  return pots;
}

PotentialSet duals_as_potentials(const Instance& inst, const LpSolution& sol) {
  PotentialSet pots;
  for (int k = 0; k < inst.m; ++k) {
    TabulatedPotential t;
    t.values = sol.duals[k];
    pots.u.push_back(t);
  }
  return pots;
}

double max_surplus_on(const Instance& inst, const CheckGrid& grid) {
  CostTensor b = build_tensor(inst, ObjectiveKind::Surplus);
  (void)grid;
  return *std::max_element(b.data.begin(), b.data.end());
}

}  // namespace

TEST_SUITE("certify") {

TEST_CASE("a constant majorant is feasible, zeros are not") {
  auto inst = tiny_instance(1);
  CheckGrid grid = CheckGrid::supports(*inst);
  const double bmax = max_surplus_on(*inst, grid);

  PotentialSet pots = zero_potentials(*inst);
  std::get<QuadraticPotential>(pots.u[0]).c0 = bmax;
  FeasibilityResult ok = feasibility_violation(pots, *inst, grid);
  CHECK(ok.max_violation <= 1e-12);
  CHECK(ok.n_checked == 16);

  PotentialSet zeros = zero_potentials(*inst);
  // points live in [1,2]^2, so b > 0 somewhere
  FeasibilityResult bad = feasibility_violation(zeros, *inst, grid);
  CHECK(bad.max_violation > 1.0);
}

TEST_CASE("brute and chain sweeps agree exactly") {
  auto inst = tiny_instance(2, 3);
  PotentialSet pots = zero_potentials(*inst);
  std::get<QuadraticPotential>(pots.u[2]).Q = Matrix::Identity(2, 2);
  CheckGrid grid = CheckGrid::uniform(*inst, 4, 1.5);

  FeasibilityOptions brute;
  brute.method = FeasibilityOptions::Method::Brute;
  FeasibilityOptions chain;
  chain.method = FeasibilityOptions::Method::Chain;
  FeasibilityResult rb = feasibility_violation(pots, *inst, grid, brute);
  FeasibilityResult rc = feasibility_violation(pots, *inst, grid, chain);
  CHECK(rb.max_violation == doctest::Approx(rc.max_violation).epsilon(1e-12));
  CHECK(rb.n_checked == rc.n_checked);
}

TEST_CASE("feasibility sweep respects the tuple cap") {
  auto inst = tiny_instance(3, 3);
  PotentialSet pots = zero_potentials(*inst);
  CheckGrid grid = CheckGrid::uniform(*inst, 8);
  FeasibilityOptions opt;
  opt.cap = 100;
  CHECK_THROWS_AS(feasibility_violation(pots, *inst, grid, opt), CapExceeded);
}

TEST_CASE("support residual flags a perturbed plan point") {
  auto pkg = linear_map_package(Matrix2{{0, -1}, {1, 0}}, 20, 5);
  CHECK(support_equality_residual(pkg.plan, pkg.potentials) <= 1e-9);

  Plan off = pkg.plan;
  off.entries[0].idx[3] = (off.entries[0].idx[3] + 1) % int(pkg.instance->marginals[3].size());
  CHECK(support_equality_residual(off, pkg.potentials) > 1e-6);
}

TEST_CASE("duality gap of constant potentials on the dirac instance") {
  auto pkg = dirac_package(1.0, 4);
  const auto& inst = *pkg.instance;
  CheckGrid grid = CheckGrid::supports(inst);
  const double bmax = max_surplus_on(inst, grid);

  PotentialSet pots = zero_potentials(inst);
  std::get<QuadraticPotential>(pots.u[0]).c0 = bmax;
  const double bplan = plan_objective(pkg.plan, ObjectiveKind::Surplus);
  CHECK(duality_gap(pkg.plan, pots) == doctest::Approx(bmax - bplan).epsilon(1e-12));
  CHECK(duality_gap(pkg.plan, pots) >= -1e-12);
}

TEST_CASE("lp duals certify their own plan") {
  auto inst = tiny_instance(4);
  LpSolution sol = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
  PotentialSet pots = duals_as_potentials(*inst, sol);

  CheckGrid grid = CheckGrid::supports(*inst);
  Certificate cert = certify(sol.plan, pots, *inst, grid);
  CHECK(cert.max_feasibility_violation <= 1e-9);
  CHECK(cert.support_equality_residual <= 1e-9);
  CHECK(std::abs(cert.duality_gap) <= 1e-8);
  CHECK(cert.verdict == "optimal");
  CHECK(cert.n_points_checked == 16);
}

TEST_CASE("exact support equality plus feasibility forces a zero gap") {
  // gap = sum_k int u_k d mu_k - int b d plan; when projections match the
  // marginals and equality holds on the support the sums telescope.
  auto inst = tiny_instance(6);
  LpSolution sol = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
  PotentialSet pots = duals_as_potentials(*inst, sol);
  const double res = support_equality_residual(sol.plan, pots);
  if (res <= 1e-12) CHECK(std::abs(duality_gap(sol.plan, pots)) <= 1e-10);
}

TEST_CASE("gap is bounded below by the negative violation") {
  auto inst = tiny_instance(8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 10; ++t) {
    PotentialSet pots = zero_potentials(*inst);
    for (int k = 0; k < 4; ++k) {
      auto& q = std::get<QuadraticPotential>(pots.u[k]);
      q.c0 = u(rng);
      q.l = Vector::Constant(2, u(rng));
    }
    Plan plan = random_feasible_plan(inst, 100 + t);
    const double gap = duality_gap(plan, pots);
    const double viol =
        feasibility_violation(pots, *inst, CheckGrid::supports(*inst)).max_violation;
    CHECK(gap >= -viol * plan.total_mass() - 1e-12);
  }
}

TEST_CASE("verdict is optimal only within tolerance") {
  auto inst = tiny_instance(9);
  LpSolution sol = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
  PotentialSet pots = duals_as_potentials(*inst, sol);
  Certificate good = certify(sol.plan, pots, *inst, CheckGrid::supports(*inst));
  CHECK(good.verdict == "optimal");

  auto& u0 = std::get<TabulatedPotential>(pots.u[0]);
  u0.values[0] -= 1e-3;  // breaks feasibility or support equality
  Certificate bad = certify(sol.plan, pots, *inst, CheckGrid::supports(*inst));
  CHECK(bad.verdict == "not-certified");
}

TEST_CASE("uniform check grids scale the marginal boxes") {
  auto inst = tiny_instance(10);
  CheckGrid g1 = CheckGrid::uniform(*inst, 3);
  REQUIRE(g1.points.size() == 4);
  CHECK(g1.points[0].rows() == 9);
  CHECK_FALSE(g1.at_supports);
  CHECK(g1.tuple_count() == 9LL * 9 * 9 * 9);

  CheckGrid g2 = CheckGrid::uniform(*inst, 3, 2.0);
  // twice the box: corners move away from the center
  CHECK(g2.points[0].col(0).minCoeff() < g1.points[0].col(0).minCoeff());

  CheckGrid gs = CheckGrid::supports(*inst);
  CHECK(gs.at_supports);
  CHECK(gs.tuple_count() == 16);
}

}  // TEST_SUITE
