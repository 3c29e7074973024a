#include "mmot/diagnose.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

namespace mmot {
namespace {

std::map<std::vector<int>, double> merged_entries(const Plan& plan) {
  std::map<std::vector<int>, double> merged;
  for (const auto& e : plan.entries) merged[e.idx] += e.mass;
  return merged;
}

}  // namespace

double split_mass(const Plan& plan) {
  struct Group {
    double total = 0.0;
    double heaviest = 0.0;
  };
  std::map<int, Group> groups;
  for (const auto& [idx, mass] : merged_entries(plan)) {
    Group& g = groups[idx[0]];
    g.total += mass;
    g.heaviest = std::max(g.heaviest, mass);
  }
  double split = 0.0;
  for (const auto& [key, g] : groups) split += g.total - g.heaviest;
  return split;
}

bool monge_test(const Plan& plan, double tol) { return split_mass(plan) <= tol; }

int support_dimension(const Plan& plan, double rel_tol) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  const Instance& inst = *plan.instance;
  auto merged = merged_entries(plan);
  const int K = static_cast<int>(merged.size());
  if (K < 2) return 0;

  const int dim = inst.m * inst.n;
  Matrix pts(K, dim);
  int row = 0;
  for (const auto& [idx, mass] : merged) {
    for (int k = 0; k < inst.m; ++k)
      pts.block(row, k * inst.n, 1, inst.n) = inst.marginals[k].points.row(idx[k]);
    ++row;
  }
  pts.rowwise() -= pts.colwise().mean();

  Eigen::JacobiSVD<Matrix> svd(pts);
  const Vector sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int count = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * sv[0]) ++count;
  return count;
}

double plan_l1_distance(const Plan& a, const Plan& b) {
  std::map<std::vector<int>, double> diff = merged_entries(a);
  for (const auto& e : b.entries) diff[e.idx] -= e.mass;
  double d = 0.0;
  for (const auto& [idx, mass] : diff) d += std::abs(mass);
  return d;
}

ProbeResult uniqueness_probe(std::shared_ptr<const Instance> inst,
                             const ProbeOptions& opt) {
  if (opt.n_probes < 1) throw std::invalid_argument("need at least one probe");
  if (!inst) throw std::invalid_argument("probe needs an instance");
  CostTensor tensor = build_tensor(*inst, opt.kind, opt.lp.var_cap);

  double lo = tensor.data[0], hi = tensor.data[0];
  for (double v : tensor.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mag = opt.perturbation * std::max(1.0, hi - lo);

  LpOptions lp = opt.lp;
  // Pricing must not swallow the perturbations, or every probe lands on the
  // basis Bland's rule visits first.
  lp.pivot_tol = std::min(lp.pivot_tol, 1e-4 * opt.perturbation);

  std::vector<Plan> optima;
  optima.push_back(exact_lp_custom(inst, tensor.data, opt.sense, lp).plan);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  std::vector<double> perturbed(tensor.data.size());
  for (int p = 0; p < opt.n_probes; ++p) {
    for (size_t t = 0; t < perturbed.size(); ++t)
      perturbed[t] = tensor.data[t] + mag * u11(rng);
    optima.push_back(exact_lp_custom(inst, perturbed, opt.sense, lp).plan);
  }

  ProbeResult out;
  for (size_t i = 0; i < optima.size(); ++i)
    for (size_t j = i + 1; j < optima.size(); ++j)
      out.max_distance = std::max(out.max_distance,
                                  plan_l1_distance(optima[i], optima[j]));
  out.unique = out.max_distance <= opt.tol;
  return out;
}

Diagnostics diagnose(const Plan& plan, const ProbeOptions& opt) {
  Diagnostics d;
  d.split = split_mass(plan);
  d.is_monge = d.split <= opt.monge_tol;
  d.support_dim = support_dimension(plan);
  if (opt.n_probes > 0) {
    ProbeResult probe = uniqueness_probe(plan.instance, opt);
    d.unique_verdict = probe.unique ? "unique" : "degenerate";
    d.max_plan_distance = probe.max_distance;
  }
  return d;
}

}  // namespace mmot
