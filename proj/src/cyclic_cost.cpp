#include "mmot/cyclic_cost.hpp"

namespace mmot {

namespace {

void check_tuple(const std::vector<Vector>& xs, const AffineMap& F) {
  if (xs.size() < 2) throw std::invalid_argument("need at least two points");
  const Eigen::Index n = xs[0].size();
  for (const auto& x : xs) {
    if (x.size() != n) throw std::invalid_argument("mixed point dimensions");
  }
  if (F.linear.cols() != n) throw std::invalid_argument("map dimension mismatch");
}

}  // namespace

double eval_cost(const std::vector<Vector>& xs, const AffineMap& F) {
  check_tuple(xs, F);
  const size_t m = xs.size();
  double c = 0.0;
  for (size_t k = 0; k + 1 < m; ++k) c += (xs[k] - xs[k + 1]).squaredNorm();
  c += (xs[m - 1] - F(xs[0])).squaredNorm();
  return c;
}

double eval_surplus(const std::vector<Vector>& xs, const AffineMap& F) {
  check_tuple(xs, F);
  const size_t m = xs.size();
  double b = 0.0;
  for (size_t k = 0; k + 1 < m; ++k) b += xs[k].dot(xs[k + 1]);
  b += xs[m - 1].dot(F(xs[0]));
  return b;
}

double separable_part(const std::vector<Vector>& xs, const AffineMap& F) {
  check_tuple(xs, F);
  const size_t m = xs.size();
  double s = xs[0].squaredNorm() + F(xs[0]).squaredNorm();
  for (size_t k = 1; k + 1 < m; ++k) s += 2.0 * xs[k].squaredNorm();
  s += 2.0 * xs[m - 1].squaredNorm();
  return s;
}

double cost_surplus_identity(const std::vector<Vector>& xs, const AffineMap& F) {
  return eval_cost(xs, F) + 2.0 * eval_surplus(xs, F) - separable_part(xs, F);
}

double separable_moment(const Instance& inst) {
  double s = 0.0;
  for (int k = 0; k < inst.m; ++k) {
    const DiscreteMeasure& mu = inst.marginals[k];
    double factor = (k == 0 || k == inst.m - 1) ? 1.0 : 2.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      Vector p = mu.point(j);
      double term = factor * p.squaredNorm();
      if (k == 0) term += inst.map(p).squaredNorm();
      if (k == inst.m - 1) term += p.squaredNorm();  // second copy for xm
      s += mu.weights[j] * term;
    }
  }
  return s;
}

double& CostTensor::at(const std::vector<int>& idx) {
  long long flat = 0;
  for (size_t k = 0; k < idx.size(); ++k) flat = flat * shape[k] + idx[k];
  return data[static_cast<size_t>(flat)];
}

double CostTensor::at(const std::vector<int>& idx) const {
  return const_cast<CostTensor*>(this)->at(idx);
}

CostTensor build_tensor(const Instance& inst, ObjectiveKind kind, long long cap) {
  long long total = 1;
  for (const auto& mu : inst.marginals) {
    total *= static_cast<long long>(mu.size());
    if (total > cap) {
      throw CapExceeded("tensor would hold " + std::to_string(total) +
                        "+ entries, cap is " + std::to_string(cap));
    }
  }
  CostTensor t;
  t.kind = kind;
  for (const auto& mu : inst.marginals) t.shape.push_back(mu.size());
  t.data.resize(static_cast<size_t>(total));

  const int m = inst.m;
  std::vector<int> idx(m, 0);
  std::vector<Vector> xs(m);
  for (int k = 0; k < m; ++k) xs[k] = inst.marginals[k].point(0);
  for (long long flat = 0; flat < total; ++flat) {
    t.data[static_cast<size_t>(flat)] =
        kind == ObjectiveKind::Cost ? eval_cost(xs, inst.map)
                                    : eval_surplus(xs, inst.map);
    int k = m - 1;
    while (k >= 0) {
      if (++idx[k] < inst.marginals[k].size()) {
        xs[k] = inst.marginals[k].point(idx[k]);
        break;
      }
      idx[k] = 0;
      xs[k] = inst.marginals[k].point(0);
      --k;
    }
  }
  return t;
}

double plan_objective(const Plan& plan, ObjectiveKind kind) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  const Instance& inst = *plan.instance;
  double total = 0.0;
  std::vector<Vector> xs(inst.m);
  for (const auto& e : plan.entries) {
    for (int k = 0; k < inst.m; ++k) xs[k] = inst.marginals[k].point(e.idx[k]);
    total += e.mass * (kind == ObjectiveKind::Cost ? eval_cost(xs, inst.map)
                                                   : eval_surplus(xs, inst.map));
  }
  return total;
}

}  // namespace mmot
