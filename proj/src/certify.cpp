#include "mmot/certify.hpp"

#include "mmot/cyclic_cost.hpp"

#include <cmath>

namespace mmot {

long long CheckGrid::tuple_count() const {
  long long p = 1;
  for (const auto& P : points) {
    if (P.rows() == 0) return 0;
    p *= static_cast<long long>(P.rows());
    if (p < 0) return std::numeric_limits<long long>::max();
  }
  return p;
}

CheckGrid CheckGrid::supports(const Instance& inst) {
  CheckGrid g;
  g.at_supports = true;
  for (const auto& mu : inst.marginals) g.points.push_back(mu.points);
  return g;
}

CheckGrid CheckGrid::uniform(const Instance& inst, int points_per_axis,
                             double box_scale) {
  if (points_per_axis < 2) {
    throw std::invalid_argument("need at least two points per axis");
  }
  CheckGrid g;
  const int n = inst.n;
  for (const auto& mu : inst.marginals) {
    Box box = mu.box.scaled(box_scale);
    long long rows = 1;
    for (int d = 0; d < n; ++d) rows *= points_per_axis;
    Matrix P(rows, n);
    std::vector<int> it(n, 0);
    for (long long r = 0; r < rows; ++r) {
      for (int d = 0; d < n; ++d) {
        double t = double(it[d]) / double(points_per_axis - 1);
        P(r, d) = box.lo[d] + t * (box.hi[d] - box.lo[d]);
      }
      int d = n - 1;
      while (d >= 0 && ++it[d] == points_per_axis) it[d--] = 0;
    }
    g.points.push_back(P);
  }
  return g;
}

namespace {

// Values of each potential on its grid, plus the pairwise dot tables that
// make b a sum of table lookups along the cycle.
struct Tables {
  std::vector<Vector> u;       // u[k][i]
  std::vector<Matrix> link;    // link[k](i,j) = p_k,i . p_{k+1,j}, k < m-1
  Matrix closing;              // closing(i,j) = p_{m-1},i . F(p_0,j)
};

Tables build_tables(const PotentialSet& pot, const Instance& inst,
                    const CheckGrid& grid) {
  const int m = inst.m;
  if (static_cast<int>(pot.u.size()) != m) {
    throw std::invalid_argument("potential count does not match m");
  }
  if (static_cast<int>(grid.points.size()) != m) {
    throw std::invalid_argument("grid count does not match m");
  }
  Tables t;
  t.u.resize(m);
  for (int k = 0; k < m; ++k) {
    const Matrix& P = grid.points[k];
    Vector vals(P.rows());
    if (const auto* q = std::get_if<QuadraticPotential>(&pot.u[k])) {
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        vals[i] = (*q)(P.row(i).transpose());
      }
    } else if (grid.at_supports) {
      const auto& tab = std::get<TabulatedPotential>(pot.u[k]);
      if (tab.values.size() != P.rows()) {
        throw std::invalid_argument("tabulated potential size mismatch");
      }
      vals = tab.values;
    } else {
      throw std::invalid_argument(
          "tabulated potential cannot be evaluated off-support");
    }
    t.u[k] = vals;
  }
  t.link.resize(m - 1);
  for (int k = 0; k + 1 < m; ++k) {
    t.link[k] = grid.points[k] * grid.points[k + 1].transpose();
  }
  Matrix F0 = grid.points[0] * inst.map.linear.transpose();
  F0.rowwise() += inst.map.offset.transpose();
  t.closing = grid.points[m - 1] * F0.transpose();
  return t;
}

double brute_max(const Tables& t) {
  const int m = static_cast<int>(t.u.size());
  std::vector<Eigen::Index> sizes(m);
  for (int k = 0; k < m; ++k) sizes[k] = t.u[k].size();
  std::vector<Eigen::Index> idx(m, 0);
  // partial[k] = contribution of links/potentials strictly before marginal k
  std::vector<double> partial(m + 1, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  int level = 0;
  while (true) {
    if (level == m) {
      double v = partial[m] + t.closing(idx[m - 1], idx[0]);
      if (v > best) best = v;
      --level;
      ++idx[level];
    } else if (idx[level] == sizes[level]) {
      idx[level] = 0;
      if (level == 0) break;
      --level;
      ++idx[level];
    } else {
      double add = -t.u[level][idx[level]];
      if (level > 0) add += t.link[level - 1](idx[level - 1], idx[level]);
      partial[level + 1] = partial[level] + add;
      ++level;
    }
  }
  return best;
}

double chain_max(const Tables& t) {
  const int m = static_cast<int>(t.u.size());
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i0 = 0; i0 < t.u[0].size(); ++i0) {
    // value[j] = best partial score ending at point j of marginal k
    Vector value = (t.link[0].row(i0).transpose() - t.u[1]).eval();
    for (int k = 2; k < m; ++k) {
      Vector next(t.u[k].size());
      for (Eigen::Index j = 0; j < next.size(); ++j) {
        next[j] = (value + t.link[k - 1].col(j)).maxCoeff() - t.u[k][j];
      }
      value.swap(next);
    }
    double v = (value + t.closing.col(i0)).maxCoeff() - t.u[0][i0];
    if (v > best) best = v;
  }
  return best;
}

}  // namespace

FeasibilityResult feasibility_violation(const PotentialSet& pot,
                                        const Instance& inst,
                                        const CheckGrid& grid,
                                        const FeasibilityOptions& opt) {
  long long tuples = grid.tuple_count();
  if (tuples == 0) throw std::invalid_argument("empty check grid");
  if (tuples > opt.cap) {
    throw CapExceeded("feasibility check over " + std::to_string(tuples) +
                      " tuples exceeds cap " + std::to_string(opt.cap));
  }
  Tables t = build_tables(pot, inst, grid);
  bool brute = opt.method == FeasibilityOptions::Method::Brute ||
               (opt.method == FeasibilityOptions::Method::Auto &&
                tuples <= opt.brute_threshold);
  FeasibilityResult res;
  res.n_checked = tuples;
  res.max_violation = brute ? brute_max(t) : chain_max(t);
  return res;
}

double support_equality_residual(const Plan& plan, const PotentialSet& pot) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  const Instance& inst = *plan.instance;
  double worst = 0.0;
  std::vector<Vector> xs(inst.m);
  for (const auto& e : plan.entries) {
    double su = 0.0;
    for (int k = 0; k < inst.m; ++k) {
      xs[k] = inst.marginals[k].point(e.idx[k]);
      su += eval_potential_at_support(pot.u[k], inst.marginals[k], e.idx[k]);
    }
    worst = std::max(worst, std::abs(eval_surplus(xs, inst.map) - su));
  }
  return worst;
}

double duality_gap(const Plan& plan, const PotentialSet& pot) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  const Instance& inst = *plan.instance;
  double dual = 0.0;
  for (int k = 0; k < inst.m; ++k) {
    const DiscreteMeasure& mu = inst.marginals[k];
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      dual += mu.weights[j] * eval_potential_at_support(pot.u[k], mu, j);
    }
  }
  return dual - plan_objective(plan, ObjectiveKind::Surplus);
}

Certificate certify(const Plan& plan, const PotentialSet& pot,
                    const Instance& inst, const CheckGrid& grid, double tol,
                    const FeasibilityOptions& opt) {
  FeasibilityResult feas = feasibility_violation(pot, inst, grid, opt);
  Certificate cert;
  cert.max_feasibility_violation = feas.max_violation;
  cert.n_points_checked = feas.n_checked;
  cert.support_equality_residual = support_equality_residual(plan, pot);
  cert.duality_gap = duality_gap(plan, pot);
  bool ok = cert.max_feasibility_violation <= tol &&
            cert.support_equality_residual <= tol;
  cert.verdict = ok ? "optimal" : "not-certified";
  return cert;
}

}  // namespace mmot
