#include "mmot/solve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mmot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Equality rows of the flattened transportation polytope. Each marginal
// contributes one row per support point; the row sums of any feasible tensor
// over marginal k equal its weights. Those blocks are linearly dependent
// (each forces total mass one), so every marginal after the first drops its
// last row to leave a full-rank system.
struct RowStructure {
  std::vector<int> sizes;
  std::vector<int> row_off;
  int R = 0;
  long long P = 1;

  explicit RowStructure(const Instance& inst) {
    const int m = inst.m;
    sizes.resize(m);
    row_off.resize(m);
    for (int k = 0; k < m; ++k) sizes[k] = static_cast<int>(inst.marginals[k].size());
    row_off[0] = 0;
    R = sizes[0];
    for (int k = 1; k < m; ++k) {
      row_off[k] = R;
      R += sizes[k] - 1;
    }
    for (int k = 0; k < m; ++k) P *= sizes[k];
  }

  // Constraint rows touched by flattened tuple t (all coefficients are one).
  void column(long long t, std::vector<int>& rows) const {
    const int m = static_cast<int>(sizes.size());
    rows.clear();
    int idx_first = 0;
    for (int k = m - 1; k >= 1; --k) {
      const int ik = static_cast<int>(t % sizes[k]);
      t /= sizes[k];
      if (ik < sizes[k] - 1) rows.push_back(row_off[k] + ik);
    }
    idx_first = static_cast<int>(t);
    rows.push_back(idx_first);
  }

  Vector rhs(const Instance& inst) const {
    Vector b(R);
    b.segment(0, sizes[0]) = inst.marginals[0].weights;
    for (int k = 1; k < static_cast<int>(sizes.size()); ++k)
      b.segment(row_off[k], sizes[k] - 1) = inst.marginals[k].weights.head(sizes[k] - 1);
    return b;
  }
};

struct CoreResult {
  std::vector<long long> basic;  // variable index per basis position
  Vector xB;
  Vector y;  // duals of the minimization problem
  long long iters = 0;
};

// Two-phase revised simplex, minimize cost.x subject to the incidence rows,
// x >= 0. Bland's rule (lowest eligible variable index enters, lowest-index
// basic variable leaves on ties) guarantees termination under degeneracy.
// Artificial variables carry indices P..P+R-1 and never re-enter.
CoreResult simplex_min(const RowStructure& rs, const std::vector<double>& cost,
                       const Vector& rhs, const LpOptions& opt) {
  const int R = rs.R;
  const long long P = rs.P;

  std::vector<long long> basic(R);
  std::vector<char> is_basic(static_cast<size_t>(P), 0);
  Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(R, R);
  Vector xB = rhs;
  for (int r = 0; r < R; ++r) basic[r] = P + r;

  double cmax = 1.0;
  for (double c : cost) cmax = std::max(cmax, std::abs(c));

  std::vector<int> rows;
  Vector d(R), y(R);
  long long iters = 0;
  int since_refactor = 0;

  auto refactor = [&]() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(R, R);
    for (int r = 0; r < R; ++r) {
      if (basic[r] >= P) {
        B(static_cast<int>(basic[r] - P), r) = 1.0;
      } else {
        rs.column(basic[r], rows);
        for (int rr : rows) B(rr, r) = 1.0;
      }
    }
    Binv = B.partialPivLu().inverse();
    xB = Binv * rhs;
    for (int r = 0; r < R; ++r) xB[r] = std::max(xB[r], 0.0);
    since_refactor = 0;
  };

  auto direction = [&](long long j) {
    if (j >= P) {
      d = Binv.col(static_cast<int>(j - P));
      return;
    }
    rs.column(j, rows);
    d = Binv.col(rows[0]);
    for (size_t i = 1; i < rows.size(); ++i) d += Binv.col(rows[i]);
  };

  auto run_phase = [&](bool phase1) {
    const double enter_tol =
        opt.pivot_tol * (phase1 ? 1.0 : (1.0 + cmax));
    auto var_cost = [&](long long j) {
      if (j >= P) return phase1 ? 1.0 : 0.0;
      return phase1 ? 0.0 : cost[static_cast<size_t>(j)];
    };
    for (;;) {
      if (iters >= opt.max_iters)
        throw std::runtime_error("simplex exceeded the iteration limit");
      y.setZero();
      for (int r = 0; r < R; ++r)
        if (var_cost(basic[r]) != 0.0) y += var_cost(basic[r]) * Binv.row(r).transpose();

      long long enter = -1;
      for (long long j = 0; j < P; ++j) {
        if (is_basic[static_cast<size_t>(j)]) continue;
        rs.column(j, rows);
        double rc = var_cost(j);
        for (int r : rows) rc -= y[r];
        if (rc < -enter_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;

      direction(enter);
      int leave = -1;
      double best_ratio = kInf;
      for (int r = 0; r < R; ++r) {
        if (d[r] <= opt.ratio_tol) continue;
        const double ratio = xB[r] / d[r];
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (leave < 0 || basic[r] < basic[leave]))) {
          best_ratio = ratio;
          leave = r;
        }
      }
      if (leave < 0) throw std::runtime_error("simplex detected an unbounded ray");

      const double theta = std::max(best_ratio, 0.0);
      const double piv = d[leave];
      if (basic[leave] < P) is_basic[static_cast<size_t>(basic[leave])] = 0;
      is_basic[static_cast<size_t>(enter)] = 1;
      basic[leave] = enter;
      Binv.row(leave) /= piv;
      for (int r = 0; r < R; ++r) {
        if (r == leave) continue;
        if (d[r] != 0.0) Binv.row(r) -= d[r] * Binv.row(leave);
        xB[r] = std::max(xB[r] - theta * d[r], 0.0);
      }
      xB[leave] = theta;
      ++iters;
      if (++since_refactor >= opt.refactor_every) refactor();
    }
  };

  run_phase(true);
  refactor();

  double artificial_mass = 0.0;
  for (int r = 0; r < R; ++r)
    if (basic[r] >= P) artificial_mass += xB[r];
  if (artificial_mass > 1e-9 * (1.0 + rhs.cwiseAbs().sum()))
    throw Infeasible("phase one kept artificial mass; the marginal rows are inconsistent");

  // Swap any zero-level artificial out of the basis so phase two prices
  // against real columns only. The rows are independent, so a pivot exists.
  for (int r = 0; r < R; ++r) {
    if (basic[r] < P) continue;
    for (long long j = 0; j < P; ++j) {
      if (is_basic[static_cast<size_t>(j)]) continue;
      direction(j);
      if (std::abs(d[r]) <= opt.ratio_tol) continue;
      basic[r] = j;
      is_basic[static_cast<size_t>(j)] = 1;
      Binv.row(r) /= d[r];
      for (int rr = 0; rr < R; ++rr)
        if (rr != r && d[rr] != 0.0) Binv.row(rr) -= d[rr] * Binv.row(r);
      break;
    }
  }
  refactor();

  run_phase(false);
  refactor();

  y.setZero();
  for (int r = 0; r < R; ++r) {
    const double cb = basic[r] < P ? cost[static_cast<size_t>(basic[r])] : 0.0;
    if (cb != 0.0) y += cb * Binv.row(r).transpose();
  }
  return {std::move(basic), std::move(xB), std::move(y), iters};
}

LpSolution finish_lp(std::shared_ptr<const Instance> inst, const RowStructure& rs,
                     const std::vector<double>& min_cost, Sense sense,
                     const LpOptions& opt) {
  const Vector rhs = rs.rhs(*inst);
  CoreResult core = simplex_min(rs, min_cost, rhs, opt);

  LpSolution out;
  out.iterations = core.iters;

  std::vector<std::pair<long long, double>> kept;
  for (int r = 0; r < rs.R; ++r) {
    if (core.basic[r] >= rs.P || core.xB[r] <= 0.0) continue;
    kept.emplace_back(core.basic[r], core.xB[r]);
  }
  std::sort(kept.begin(), kept.end());

  out.plan.instance = inst;
  const int m = inst->m;
  for (auto& [t, mass] : kept) {
    PlanEntry e;
    e.idx.resize(m);
    long long rest = t;
    for (int k = m - 1; k >= 0; --k) {
      e.idx[k] = static_cast<int>(rest % rs.sizes[k]);
      rest /= rs.sizes[k];
    }
    e.mass = mass;
    out.plan.entries.push_back(std::move(e));
    out.objective += mass * min_cost[static_cast<size_t>(t)];
  }
  if (sense == Sense::Max) out.objective = -out.objective;

  const double dual_sign = sense == Sense::Max ? -1.0 : 1.0;
  out.duals.resize(m);
  for (int k = 0; k < m; ++k) {
    const int nk = rs.sizes[k];
    out.duals[k] = Vector::Zero(nk);
    const int present = k == 0 ? nk : nk - 1;
    for (int j = 0; j < present; ++j)
      out.duals[k][j] = dual_sign * core.y[rs.row_off[k] + j];
    out.dual_objective += out.duals[k].dot(inst->marginals[k].weights);
  }
  return out;
}

void check_instance(const Instance& inst) {
  auto errs = validate_instance(inst);
  if (!errs.empty()) throw std::invalid_argument(errs.front());
}

// Streaming log-sum-exp accumulators, one slot per support point of one axis.
struct LogAccum {
  Vector mx, s;
  void reset(int n) {
    mx = Vector::Constant(n, -kInf);
    s = Vector::Zero(n);
  }
  void add(int j, double v) {
    if (v == -kInf) return;
    if (v <= mx[j]) {
      s[j] += std::exp(v - mx[j]);
    } else {
      s[j] = s[j] * std::exp(mx[j] - v) + 1.0;
      mx[j] = v;
    }
  }
  double value(int j) const { return mx[j] == -kInf ? -kInf : mx[j] + std::log(s[j]); }
};

struct IpfpState {
  std::vector<Vector> psi;
  double residual = kInf;
  long long sweeps = 0;
  bool converged = false;
};

// Cyclic marginal fitting in the log domain: after updating axis k the plan
// exp(logk[t] + sum_l psi_l) matches marginal k exactly. The residual is the
// largest L1 marginal mismatch measured after a full sweep.
IpfpState ipfp_log(const Instance& inst, const std::vector<double>& logk,
                   long long max_sweeps, double tol) {
  const int m = inst.m;
  std::vector<int> sizes(m);
  for (int k = 0; k < m; ++k) sizes[k] = static_cast<int>(inst.marginals[k].size());

  IpfpState st;
  st.psi.resize(m);
  for (int k = 0; k < m; ++k) st.psi[k] = Vector::Zero(sizes[k]);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < sizes[k]; ++j)
      if (inst.marginals[k].weights[j] == 0.0) st.psi[k][j] = -kInf;

  std::vector<int> idx(m);
  LogAccum acc;
  std::vector<Vector> marg(m);

  auto tuple_log = [&](long long t) {
    double v = logk[static_cast<size_t>(t)];
    for (int k = 0; k < m; ++k) v += st.psi[k][idx[k]];
    return v;
  };
  auto advance = [&]() {
    for (int k = m - 1; k >= 0; --k) {
      if (++idx[k] < sizes[k]) return true;
      idx[k] = 0;
    }
    return false;
  };

  for (long long sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int k = 0; k < m; ++k) {
      acc.reset(sizes[k]);
      std::fill(idx.begin(), idx.end(), 0);
      long long t = 0;
      do {
        acc.add(idx[k], tuple_log(t));
        ++t;
      } while (advance());
      for (int j = 0; j < sizes[k]; ++j) {
        const double w = inst.marginals[k].weights[j];
        if (w == 0.0) {
          st.psi[k][j] = -kInf;
          continue;
        }
        const double lse = acc.value(j);
        if (lse == -kInf)
          throw std::runtime_error("scaling drove a required support point to zero mass");
        st.psi[k][j] += std::log(w) - lse;
      }
    }
    ++st.sweeps;

    for (int k = 0; k < m; ++k) marg[k] = Vector::Zero(sizes[k]);
    std::fill(idx.begin(), idx.end(), 0);
    long long t = 0;
    do {
      const double v = tuple_log(t);
      if (v != -kInf) {
        const double p = std::exp(v);
        for (int k = 0; k < m; ++k) marg[k][idx[k]] += p;
      }
      ++t;
    } while (advance());
    st.residual = 0.0;
    for (int k = 0; k < m; ++k)
      st.residual = std::max(
          st.residual, (marg[k] - inst.marginals[k].weights).cwiseAbs().sum());
    if (st.residual <= tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

std::vector<double> dense_plan(const Instance& inst, const std::vector<double>& logk,
                               const std::vector<Vector>& psi) {
  const int m = inst.m;
  std::vector<int> sizes(m);
  for (int k = 0; k < m; ++k) sizes[k] = static_cast<int>(inst.marginals[k].size());
  std::vector<double> p(logk.size());
  std::vector<int> idx(m, 0);
  long long t = 0;
  for (;;) {
    double v = logk[static_cast<size_t>(t)];
    for (int k = 0; k < m; ++k) v += psi[k][idx[k]];
    p[static_cast<size_t>(t)] = v == -kInf ? 0.0 : std::exp(v);
    ++t;
    int k = m - 1;
    for (; k >= 0; --k) {
      if (++idx[k] < sizes[k]) break;
      idx[k] = 0;
    }
    if (k < 0) break;
  }
  return p;
}

}  // namespace

LpSolution exact_lp_custom(std::shared_ptr<const Instance> inst,
                           const std::vector<double>& objective, Sense sense,
                           const LpOptions& opt) {
  check_instance(*inst);
  RowStructure rs(*inst);
  if (rs.P > opt.var_cap)
    throw CapExceeded("flattened variable count exceeds the solver cap");
  if (static_cast<long long>(objective.size()) != rs.P)
    throw std::invalid_argument("objective length does not match the support product");

  if (sense == Sense::Min) return finish_lp(inst, rs, objective, sense, opt);
  std::vector<double> neg(objective.size());
  for (size_t i = 0; i < objective.size(); ++i) neg[i] = -objective[i];
  return finish_lp(inst, rs, neg, sense, opt);
}

LpSolution exact_lp(std::shared_ptr<const Instance> inst, ObjectiveKind kind,
                    Sense sense, const LpOptions& opt) {
  check_instance(*inst);
  CostTensor tensor = build_tensor(*inst, kind, opt.var_cap);
  return exact_lp_custom(inst, tensor.data, sense, opt);
}

SinkhornResult sinkhorn_mm(const Instance& inst, ObjectiveKind kind,
                           const SinkhornOptions& opt) {
  check_instance(inst);
  if (opt.epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  CostTensor tensor = build_tensor(inst, kind, opt.tensor_cap);

  // The scaled kernel minimizes cost; a surplus objective is maximized, so
  // its kernel takes the negated values.
  const double sign = kind == ObjectiveKind::Surplus ? 1.0 : -1.0;
  std::vector<double> logk(tensor.data.size());
  for (size_t i = 0; i < logk.size(); ++i) logk[i] = sign * tensor.data[i] / opt.epsilon;

  IpfpState st = ipfp_log(inst, logk, opt.max_iters, opt.stop_tol);

  SinkhornResult out;
  out.plan = dense_plan(inst, logk, st.psi);
  out.marginal_residual = st.residual;
  out.iterations = st.sweeps;
  out.converged = st.converged;
  out.potentials.resize(inst.m);
  for (int k = 0; k < inst.m; ++k) out.potentials[k] = opt.epsilon * st.psi[k];
  for (size_t i = 0; i < out.plan.size(); ++i)
    out.objective += out.plan[i] * tensor.data[i];
  return out;
}

Plan round_to_feasible(std::shared_ptr<const Instance> inst,
                       const std::vector<double>& tensor) {
  check_instance(*inst);
  const int m = inst->m;
  std::vector<int> sizes(m);
  long long total = 1;
  for (int k = 0; k < m; ++k) {
    sizes[k] = static_cast<int>(inst->marginals[k].size());
    total *= sizes[k];
  }
  if (static_cast<long long>(tensor.size()) != total)
    throw std::invalid_argument("tensor length does not match the support product");

  std::vector<double> p = tensor;
  for (double v : p)
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("tensor entries must be finite and nonnegative");

  std::vector<int> idx(m, 0);
  auto for_each_tuple = [&](auto&& fn) {
    std::fill(idx.begin(), idx.end(), 0);
    long long t = 0;
    for (;;) {
      fn(t);
      ++t;
      int k = m - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < sizes[k]) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
  };

  auto marginals_of = [&](const std::vector<double>& q) {
    std::vector<Vector> marg(m);
    for (int k = 0; k < m; ++k) marg[k] = Vector::Zero(sizes[k]);
    for_each_tuple([&](long long t) {
      for (int k = 0; k < m; ++k) marg[k][idx[k]] += q[static_cast<size_t>(t)];
    });
    return marg;
  };

  double min_w = kInf;
  for (int k = 0; k < m; ++k) min_w = std::min(min_w, inst->marginals[k].weights.minCoeff());
  auto marg0 = marginals_of(p);
  for (int k = 0; k < m; ++k) {
    const double worst =
        (marg0[k] - inst->marginals[k].weights).cwiseAbs().maxCoeff();
    if (worst >= 0.5 * min_w)
      throw std::invalid_argument(
          "tensor marginals are too far from the targets to round");
  }

  // Scale one axis at a time down to its target; later scalings only shrink
  // earlier marginals further, so afterwards every marginal is <= its target
  // pointwise and the deficits sum to the same missing mass on each axis.
  for (int k = 0; k < m; ++k) {
    auto marg = marginals_of(p);
    Vector scale(sizes[k]);
    for (int j = 0; j < sizes[k]; ++j) {
      const double r = marg[k][j];
      const double w = inst->marginals[k].weights[j];
      scale[j] = r > w && r > 0.0 ? w / r : 1.0;
    }
    for_each_tuple([&](long long t) { p[static_cast<size_t>(t)] *= scale[idx[k]]; });
  }

  auto marg = marginals_of(p);
  std::vector<Vector> deficit(m);
  double delta = 0.0;
  for (int k = 0; k < m; ++k) {
    deficit[k] = (inst->marginals[k].weights - marg[k]).cwiseMax(0.0);
    delta = std::max(delta, deficit[k].sum());
  }
  if (delta > 0.0) {
    for_each_tuple([&](long long t) {
      double add = delta;
      for (int k = 0; k < m; ++k) add *= deficit[k][idx[k]] / delta;
      p[static_cast<size_t>(t)] += add;
    });
  }

  Plan out;
  out.instance = inst;
  for_each_tuple([&](long long t) {
    if (p[static_cast<size_t>(t)] <= 0.0) return;
    PlanEntry e;
    e.idx = idx;
    e.mass = p[static_cast<size_t>(t)];
    out.entries.push_back(std::move(e));
  });
  return out;
}

Plan random_feasible_plan(std::shared_ptr<const Instance> inst, unsigned seed) {
  check_instance(*inst);
  long long total = 1;
  for (const auto& mu : inst->marginals) total *= static_cast<long long>(mu.size());
  if (total > 10'000'000) throw CapExceeded("support product exceeds the sampling cap");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> logk(static_cast<size_t>(total));
  for (auto& v : logk) v = std::log(u(rng));

  IpfpState st = ipfp_log(*inst, logk, 2000, 1e-13);
  return round_to_feasible(inst, dense_plan(*inst, logk, st.psi));
}

}  // namespace mmot
