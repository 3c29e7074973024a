#include "mmot/core.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace mmot {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

bool Box::contains(const Vector& p, double slack) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index d = 0; d < p.size(); ++d) {
    if (p[d] < lo[d] - slack || p[d] > hi[d] + slack) return false;
  }
  return true;
}

Box Box::scaled(double factor) const {
  Vector c = 0.5 * (lo + hi);
  Vector h = 0.5 * factor * (hi - lo);
  return Box{c - h, c + h};
}

AffineMap AffineMap::scaled_identity(Eigen::Index n, double scale) {
  return AffineMap{scale * Matrix::Identity(n, n), Vector::Zero(n)};
}

double Plan::total_mass() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.mass;
  return s;
}

double QuadraticPotential::operator()(const Vector& x) const {
  return 0.5 * x.dot(Q * x) + l.dot(x) + c0;
}

std::vector<std::string> validate_measure(const DiscreteMeasure& mu,
                                          const Tolerances& tol) {
  std::vector<std::string> bad;
  const Eigen::Index N = mu.size();
  const Eigen::Index n = mu.dim();
  if (N == 0) {
    bad.push_back("measure has no support points");
    return bad;
  }
  if (mu.weights.size() != N) {
    bad.push_back("weights/points size mismatch");
    return bad;
  }
  if (mu.box.lo.size() != n || mu.box.hi.size() != n) {
    bad.push_back("box dimension does not match point dimension");
    return bad;
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    if (!(mu.weights[i] >= 0.0)) {
      bad.push_back("negative weight at index " + std::to_string(i));
    }
  }
  double s = mu.weights.sum();
  if (std::abs(s - 1.0) > tol.weight_sum) {
    bad.push_back("weights sum to " + fmt(s) + ", expected 1");
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    if (!mu.box.contains(mu.point(i), tol.box_slack)) {
      bad.push_back("point " + std::to_string(i) + " outside its box");
    }
  }
  // Duplicates are rejected, never merged.
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      double d = (mu.points.row(i) - mu.points.row(j)).cwiseAbs().maxCoeff();
      if (d <= tol.point_distinct) {
        bad.push_back("points " + std::to_string(i) + " and " +
                      std::to_string(j) + " coincide within tolerance");
      }
    }
  }
  return bad;
}

std::vector<std::string> validate_instance(const Instance& inst,
                                           const Tolerances& tol) {
  std::vector<std::string> bad;
  if (inst.m < 2) bad.push_back("m must be at least 2");
  if (inst.n < 1) bad.push_back("n must be at least 1");
  if (static_cast<int>(inst.marginals.size()) != inst.m) {
    bad.push_back("expected " + std::to_string(inst.m) + " marginals, got " +
                  std::to_string(inst.marginals.size()));
    return bad;
  }
  if (inst.map.linear.rows() != inst.n || inst.map.linear.cols() != inst.n ||
      inst.map.offset.size() != inst.n) {
    bad.push_back("F must map dimension n to dimension n");
  }
  for (int k = 0; k < inst.m; ++k) {
    if (inst.marginals[k].dim() != inst.n) {
      bad.push_back("marginal " + std::to_string(k) + " has wrong dimension");
      continue;
    }
    for (auto& msg : validate_measure(inst.marginals[k], tol)) {
      bad.push_back("marginal " + std::to_string(k) + ": " + msg);
    }
  }
  return bad;
}

std::vector<std::string> validate_plan(const Plan& plan,
                                       const Tolerances& tol) {
  std::vector<std::string> bad;
  if (!plan.instance) {
    bad.push_back("plan has no instance");
    return bad;
  }
  const Instance& inst = *plan.instance;
  for (size_t e = 0; e < plan.entries.size(); ++e) {
    const PlanEntry& pe = plan.entries[e];
    if (static_cast<int>(pe.idx.size()) != inst.m) {
      bad.push_back("entry " + std::to_string(e) + " has wrong arity");
      continue;
    }
    if (!(pe.mass > 0.0)) {
      bad.push_back("entry " + std::to_string(e) + " has non-positive mass");
    }
    for (int k = 0; k < inst.m; ++k) {
      if (pe.idx[k] < 0 || pe.idx[k] >= inst.marginals[k].size()) {
        bad.push_back("entry " + std::to_string(e) + " index out of range");
        break;
      }
    }
  }
  if (!bad.empty()) return bad;

  double s = plan.total_mass();
  if (std::abs(s - 1.0) > tol.plan_mass) {
    bad.push_back("total mass " + fmt(s) + ", expected 1");
  }
  for (int k = 0; k < inst.m; ++k) {
    Vector proj = Vector::Zero(inst.marginals[k].size());
    for (const auto& pe : plan.entries) proj[pe.idx[k]] += pe.mass;
    double err = (proj - inst.marginals[k].weights).cwiseAbs().sum();
    if (err > tol.plan_marginal) {
      bad.push_back("projection onto marginal " + std::to_string(k) +
                    " off by " + fmt(err));
    }
  }
  return bad;
}

DiscreteMeasure plan_marginal(const Plan& plan, int k) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  const Instance& inst = *plan.instance;
  if (k < 0 || k >= inst.m) throw std::invalid_argument("marginal index out of range");
  DiscreteMeasure out = inst.marginals[k];
  out.weights = Vector::Zero(out.size());
  for (const auto& pe : plan.entries) out.weights[pe.idx[k]] += pe.mass;
  return out;
}

bool evaluable_anywhere(const Potential& p) {
  return std::holds_alternative<QuadraticPotential>(p);
}

double eval_potential(const Potential& p, const Vector& x) {
  if (const auto* q = std::get_if<QuadraticPotential>(&p)) return (*q)(x);
  throw std::invalid_argument("tabulated potential cannot be evaluated off-support");
}

double eval_potential_at_support(const Potential& p, const DiscreteMeasure& mu,
                                 Eigen::Index j) {
  if (const auto* q = std::get_if<QuadraticPotential>(&p)) return (*q)(mu.point(j));
  const auto& t = std::get<TabulatedPotential>(p);
  if (t.values.size() != mu.size()) {
    throw std::invalid_argument("tabulated potential size does not match support");
  }
  return t.values[j];
}

}  // namespace mmot
