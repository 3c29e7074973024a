#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mmot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

/// Thrown when a requested computation would exceed a declared size cap.
struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when input data is structurally valid but the problem it describes
/// has no solution (hypothesis failures, unnormalized marginals, ...).
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Default numeric tolerances, overridable per call.
struct Tolerances {
  double weight_sum = 1e-12;      // |sum of weights - 1|
  double point_distinct = 1e-12;  // min pairwise distance between support points
  double box_slack = 1e-12;       // slack when testing box membership
  double plan_mass = 1e-10;       // |total plan mass - 1|
  double plan_marginal = 1e-8;    // L1 mismatch between projection and marginal
  double symmetry = 1e-12;        // relative asymmetry of quadratic-form matrices
};

struct Box {
  Vector lo;
  Vector hi;

  bool contains(const Vector& p, double slack = 1e-12) const;

  /// Box with the same center and side lengths multiplied by factor.
  Box scaled(double factor) const;
};

/// Finitely supported probability measure. One support point per row.
struct DiscreteMeasure {
  Matrix points;
  Vector weights;
  Box box;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  Vector point(Eigen::Index i) const { return points.row(i).transpose(); }
};

/// x -> linear * x + offset.
struct AffineMap {
  Matrix linear;
  Vector offset;

  Vector operator()(const Vector& x) const { return linear * x + offset; }

  static AffineMap scaled_identity(Eigen::Index n, double scale = 1.0);
};

/// A multi-marginal transport problem: m marginals in dimension n and the
/// map F closing the cycle x1 -> x2 -> ... -> xm -> F(x1).
struct Instance {
  int m = 0;
  int n = 0;
  std::vector<DiscreteMeasure> marginals;
  AffineMap map;
};

struct PlanEntry {
  std::vector<int> idx;  // one support index per marginal
  double mass = 0.0;
};

/// Sparse coupling of the instance's marginals.
struct Plan {
  std::shared_ptr<const Instance> instance;
  std::vector<PlanEntry> entries;

  double total_mass() const;
};

/// f(x) = 0.5 x'Q x + l.x + c0, evaluable anywhere.
struct QuadraticPotential {
  Matrix Q;
  Vector l;
  double c0 = 0.0;

  double operator()(const Vector& x) const;
};

/// Values pinned to the support points of one marginal, in support order.
struct TabulatedPotential {
  Vector values;
};

using Potential = std::variant<QuadraticPotential, TabulatedPotential>;

/// One dual potential per marginal.
struct PotentialSet {
  std::vector<Potential> u;
};

/// Machine-checkable optimality evidence for a (plan, potentials) pair.
struct Certificate {
  double max_feasibility_violation = 0.0;
  double support_equality_residual = 0.0;
  double duality_gap = 0.0;
  long long n_points_checked = 0;
  std::string verdict;  // "optimal" or "not-certified"
};

// -- validation ---------------------------------------------------------

/// Returns an empty vector when valid, otherwise one message per violation.
std::vector<std::string> validate_measure(const DiscreteMeasure& mu,
                                          const Tolerances& tol = {});

/// Checks shapes, marginal validity and that F maps dimension n to n.
std::vector<std::string> validate_instance(const Instance& inst,
                                           const Tolerances& tol = {});

/// Checks index ranges, positive masses, total mass and all projections.
std::vector<std::string> validate_plan(const Plan& plan,
                                       const Tolerances& tol = {});

// -- operations ---------------------------------------------------------

/// Projection of the plan onto marginal k (0-based). Keeps every support
/// point of that marginal; weight j is the total mass of entries with
/// idx[k] == j.
DiscreteMeasure plan_marginal(const Plan& plan, int k);

/// True when the potential can be evaluated at arbitrary points (quadratic)
/// rather than only at support points (tabulated).
bool evaluable_anywhere(const Potential& p);

/// Evaluate at an arbitrary point; throws for tabulated potentials.
double eval_potential(const Potential& p, const Vector& x);

/// Evaluate at support point j of the owning marginal; works for both kinds.
double eval_potential_at_support(const Potential& p, const DiscreteMeasure& mu,
                                 Eigen::Index j);

}  // namespace mmot
