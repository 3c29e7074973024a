#pragma once

#include "mmot/core.hpp"

namespace mmot {

/// c(x1..xm) = sum_{k<m} |xk - xk+1|^2 + |xm - F(x1)|^2.
double eval_cost(const std::vector<Vector>& xs, const AffineMap& F);

/// b(x1..xm) = sum_{k<m} xk.xk+1 + xm.F(x1).
double eval_surplus(const std::vector<Vector>& xs, const AffineMap& F);

/// The coordinate-separable part linking cost and surplus:
///   |x1|^2 + |F(x1)|^2 + 2 sum_{1<k<m} |xk|^2 + 2 |xm|^2.
double separable_part(const std::vector<Vector>& xs, const AffineMap& F);

/// c + 2b - separable_part; identically zero in exact arithmetic.
double cost_surplus_identity(const std::vector<Vector>& xs, const AffineMap& F);

/// Integral of the separable part against the marginals. Any feasible plan's
/// cost c* and surplus b* satisfy c* + 2 b* = this constant.
double separable_moment(const Instance& inst);

enum class ObjectiveKind { Cost, Surplus };

/// Dense row-major tensor over the product of marginal supports
/// (leading index slowest).
struct CostTensor {
  std::vector<Eigen::Index> shape;
  std::vector<double> data;
  ObjectiveKind kind = ObjectiveKind::Cost;

  long long size() const { return static_cast<long long>(data.size()); }
  double& at(const std::vector<int>& idx);
  double at(const std::vector<int>& idx) const;
};

/// Materializes the cost or surplus over all support tuples.
/// Throws CapExceeded when the tuple count exceeds cap (use the streaming
/// certificate paths for larger products).
CostTensor build_tensor(const Instance& inst, ObjectiveKind kind,
                        long long cap = 10'000'000);

/// Cost (or surplus) of a sparse plan under the instance's cyclic objective.
double plan_objective(const Plan& plan, ObjectiveKind kind);

}  // namespace mmot
