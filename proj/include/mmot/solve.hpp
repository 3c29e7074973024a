#pragma once

#include "mmot/core.hpp"
#include "mmot/cyclic_cost.hpp"

namespace mmot {

enum class Sense { Min, Max };

struct LpOptions {
  long long var_cap = 100'000;
  double pivot_tol = 1e-9;   // entering-column reduced-cost threshold (scaled)
  double ratio_tol = 1e-11;  // minimum pivot element magnitude
  long long max_iters = 5'000'000;
  int refactor_every = 128;
};

struct LpSolution {
  Plan plan;
  std::vector<Vector> duals;  // one value per support point, per marginal
  double objective = 0.0;       // in the caller's orientation
  double dual_objective = 0.0;  // sum of duals integrated against marginals
  long long iterations = 0;
};

/// Exact optimum of the flattened transportation problem by a two-phase dense
/// revised simplex with Bland's rule. One marginal-sum row per support point,
/// minus one redundant row per marginal after the first. Returned duals
/// satisfy sum_k u_k <= c on every tuple for Min (>= b for Max), with
/// equality on basic tuples, so they certify the reported objective.
LpSolution exact_lp(std::shared_ptr<const Instance> inst, ObjectiveKind kind,
                    Sense sense, const LpOptions& opt = {});

/// Same solver with a caller-supplied per-tuple objective (flattened
/// row-major over the product of supports).
LpSolution exact_lp_custom(std::shared_ptr<const Instance> inst,
                           const std::vector<double>& objective, Sense sense,
                           const LpOptions& opt = {});

struct SinkhornOptions {
  double epsilon = 1e-2;
  long long max_iters = 200'000;  // full sweeps over the m axes
  double stop_tol = 1e-9;         // max L1 marginal mismatch of the plan
  long long tensor_cap = 10'000'000;
};

struct SinkhornResult {
  std::vector<double> plan;        // dense, row-major over support tuples
  std::vector<Vector> potentials;  // scaled duals, one vector per marginal
  double marginal_residual = 0.0;
  long long iterations = 0;
  bool converged = false;
  double objective = 0.0;  // plan integrated against cost or surplus
};

/// Entropic smoothing by cyclic scaling in the log domain; the plan is
/// proportional to exp((sum_k potentials_k - c) / epsilon) with c the cost
/// tensor (the negated surplus when kind == Surplus). Stops when every
/// marginal of the plan matches within stop_tol in L1.
SinkhornResult sinkhorn_mm(const Instance& inst, ObjectiveKind kind,
                           const SinkhornOptions& opt = {});

/// Projects a nonnegative dense tensor with slightly wrong marginals onto the
/// transportation polytope: scale each axis down to its target, then add a
/// product-measure correction carrying the missing mass. The L1 change is at
/// most twice the input's total marginal error. Requires every per-marginal
/// L1 error below half the smallest marginal weight.
Plan round_to_feasible(std::shared_ptr<const Instance> inst,
                       const std::vector<double>& tensor);

/// A reproducible exactly-feasible plan: scales a seeded positive random
/// tensor to the marginals, then rounds.
Plan random_feasible_plan(std::shared_ptr<const Instance> inst, unsigned seed);

}  // namespace mmot
