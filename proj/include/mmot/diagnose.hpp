#pragma once

#include "mmot/core.hpp"
#include "mmot/solve.hpp"

namespace mmot {

/// Mass that refuses to ride a graph over the first marginal: per group of
/// entries sharing their first index, everything except the heaviest tuple.
/// Duplicate tuples are merged before grouping.
double split_mass(const Plan& plan);

/// True when the plan is a graph over the first marginal up to tol of mass.
bool monge_test(const Plan& plan, double tol = 1e-9);

/// Affine dimension of the support tuples embedded in R^(m*n): the number of
/// singular values of the centered point matrix above rel_tol times the
/// largest. Zero for a single point.
int support_dimension(const Plan& plan, double rel_tol = 1e-6);

/// L1 distance between two plans over the same index space.
double plan_l1_distance(const Plan& a, const Plan& b);

struct ProbeOptions {
  int n_probes = 5;
  unsigned seed = 0;
  double tol = 1e-6;           // max allowed L1 spread between probe optima
  double perturbation = 1e-9;  // relative to the objective range
  double monge_tol = 1e-9;     // split mass allowed by the graph test
  ObjectiveKind kind = ObjectiveKind::Surplus;
  Sense sense = Sense::Max;
  LpOptions lp;  // pivot_tol is clamped below the perturbation scale
};

struct ProbeResult {
  bool unique = false;
  double max_distance = 0.0;
};

/// Optimizer-uniqueness probe: re-solves the instance under tiny random
/// objective perturbations and reports the largest pairwise L1 distance
/// between the optima (base solve included). Degenerate problems scatter.
ProbeResult uniqueness_probe(std::shared_ptr<const Instance> inst,
                             const ProbeOptions& opt = {});

struct Diagnostics {
  bool is_monge = false;
  double split = 0.0;
  int support_dim = 0;
  std::string unique_verdict = "skipped";  // unique | degenerate | skipped
  double max_plan_distance = 0.0;
};

/// Bundles the plan-shape measurements with the uniqueness probe. Passing
/// n_probes == 0 skips the probe (instances too large for the exact solver).
Diagnostics diagnose(const Plan& plan, const ProbeOptions& opt = {});

}  // namespace mmot
