#pragma once

#include "mmot/core.hpp"

namespace mmot {

/// Per-marginal evaluation points for the dual feasibility check.
/// `at_supports` marks grids that coincide with the marginal supports, which
/// is what makes tabulated potentials evaluable.
struct CheckGrid {
  std::vector<Matrix> points;  // one row per grid point, per marginal
  bool at_supports = false;

  long long tuple_count() const;

  /// The marginal supports themselves.
  static CheckGrid supports(const Instance& inst);

  /// points_per_axis^n lattice over each marginal's box scaled by box_scale.
  static CheckGrid uniform(const Instance& inst, int points_per_axis,
                           double box_scale = 1.0);
};

struct FeasibilityOptions {
  long long cap = 4'000'000'000'000LL;  // tuples examined, either method
  long long brute_threshold = 20'000'000;
  enum class Method { Auto, Brute, Chain } method = Method::Auto;
};

struct FeasibilityResult {
  double max_violation = 0.0;  // max over tuples of b - sum_k u_k
  long long n_checked = 0;
};

/// Maximum of b - sum_k u_k over the product of the per-marginal grids
/// (positive means the dual constraint is violated somewhere). The chain
/// method conditions on the first coordinate and runs an exact stagewise
/// maximization along the cycle; it visits the same product exhaustively at
/// a cost linear in grid sizes per stage.
FeasibilityResult feasibility_violation(const PotentialSet& pot,
                                        const Instance& inst,
                                        const CheckGrid& grid,
                                        const FeasibilityOptions& opt = {});

/// Max over plan entries of |b - sum_k u_k|; zero exactly on an optimal pair.
double support_equality_residual(const Plan& plan, const PotentialSet& pot);

/// sum_k integral(u_k d mu_k) - integral(b d plan).
double duality_gap(const Plan& plan, const PotentialSet& pot);

/// Bundles the three checks; verdict is "optimal" iff the violation and the
/// support residual are both within tol.
Certificate certify(const Plan& plan, const PotentialSet& pot,
                    const Instance& inst, const CheckGrid& grid,
                    double tol = 1e-8, const FeasibilityOptions& opt = {});

}  // namespace mmot
