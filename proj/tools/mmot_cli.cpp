#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "mmot/ballantine.hpp"
#include "mmot/certify.hpp"
#include "mmot/construct.hpp"
#include "mmot/core.hpp"
#include "mmot/cyclic_cost.hpp"
#include "mmot/diagnose.hpp"
#include "mmot/io.hpp"
#include "mmot/solve.hpp"

namespace {

using namespace mmot;

// Rows separated by ';', entries by ','. "1,2;3,4" is [[1,2],[3,4]].
Matrix parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream row_stream(text);
  std::string row;
  while (std::getline(row_stream, row, ';')) {
    std::vector<double> cells;
    std::istringstream cell_stream(row);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("unparseable matrix entry: " + cell);
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size())
        throw std::invalid_argument("unparseable matrix entry: " + cell);
      cells.push_back(v);
    }
    if (!rows.empty() && cells.size() != rows.front().size())
      throw std::invalid_argument("matrix rows have unequal lengths");
    if (cells.empty()) throw std::invalid_argument("empty matrix row");
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw std::invalid_argument("empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

Matrix2 parse_matrix2(const std::string& text) {
  Matrix m = parse_matrix(text);
  if (m.rows() != 2 || m.cols() != 2)
    throw std::invalid_argument("expected a 2x2 matrix");
  return m;
}

PotentialSet tabulated_set(const std::vector<Vector>& duals) {
  PotentialSet out;
  for (const auto& v : duals) out.u.push_back(TabulatedPotential{v});
  return out;
}

Plan plan_from_dense(std::shared_ptr<const Instance> inst,
                     const std::vector<double>& data) {
  Plan plan;
  plan.instance = inst;
  const int m = inst->m;
  std::vector<int> sizes(m), idx(m, 0);
  for (int k = 0; k < m; ++k) sizes[k] = static_cast<int>(inst->marginals[k].size());
  long long t = 0;
  for (;;) {
    if (data[static_cast<size_t>(t)] > 0.0)
      plan.entries.push_back({idx, data[static_cast<size_t>(t)]});
    ++t;
    int k = m - 1;
    for (; k >= 0; --k) {
      if (++idx[k] < sizes[k]) break;
      idx[k] = 0;
    }
    if (k < 0) break;
  }
  return plan;
}

std::string matrix_line(const Matrix& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += ";";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
    }
  }
  return out;
}

std::string stem_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

void write_package_files(const CounterexamplePackage& pkg, const std::string& out,
                         const std::string& plan_out, const std::string& pots_out,
                         const std::string& pkg_out) {
  save_instance(*pkg.instance, out);
  if (!plan_out.empty()) save_plan(pkg.plan, plan_out);
  if (!pots_out.empty()) save_potentials(pkg.potentials, pots_out);
  if (!pkg_out.empty()) save_package(pkg, pkg_out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete multi-marginal transport with a cyclic quadratic cost"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "construct instances, plans, and potentials");
  gen->require_subcommand(1);
  std::string gen_out, gen_plan_out, gen_pots_out, gen_pkg_out;
  unsigned gen_seed = 0;

  auto add_gen_common = [&](CLI::App* sub, bool packaged) {
    sub->add_option("-o,--output", gen_out, "instance JSON path")->required();
    if (packaged) {
      sub->add_option("--plan", gen_plan_out, "also write the packaged plan CSV");
      sub->add_option("--potentials", gen_pots_out, "also write the packaged potentials JSON");
      sub->add_option("--package", gen_pkg_out, "also write the construction data JSON");
    }
  };

  auto* g_dirac = gen->add_subcommand(
      "dirac", "two point masses pinned at the origin, two discrete balls");
  double dirac_radius = 1.0;
  int dirac_grid = 8;
  int dirac_dim = 2;
  g_dirac->add_option("--radius", dirac_radius, "ball radius");
  g_dirac->add_option("--grid", dirac_grid, "lattice points per axis");
  g_dirac->add_option("--dim", dirac_dim, "ambient dimension");
  add_gen_common(g_dirac, true);

  auto* g_p42 = gen->add_subcommand(
      "prop42", "four plane marginals from a linear closing map");
  std::string p42_matrix = "0,-1;1,0";
  int p42_samples = 200;
  g_p42->add_option("--F,--matrix", p42_matrix, "closing map, rows 'a,b;c,d'");
  g_p42->add_option("--samples", p42_samples, "tuples to sample on the contact set");
  g_p42->add_option("--seed", gen_seed, "sampling seed");
  add_gen_common(g_p42, true);

  auto* g_p43 = gen->add_subcommand(
      "prop43", "five or more plane marginals with the identity closing map");
  int p43_m = 5;
  int p43_samples = 200;
  g_p43->add_option("--m", p43_m, "number of marginals (>= 5)");
  g_p43->add_option("--samples", p43_samples, "tuples to sample on the contact set");
  g_p43->add_option("--seed", gen_seed, "sampling seed");
  add_gen_common(g_p43, true);

  auto* g_reg = gen->add_subcommand(
      "regular", "four marginals with smooth densities on [-1,1]^n, map x -> lambda x");
  int reg_grid = 8;
  int reg_dim = 1;
  double reg_lambda = 1.0;
  g_reg->add_option("--grid", reg_grid, "cell centers per axis");
  g_reg->add_option("--dim", reg_dim, "ambient dimension");
  g_reg->add_option("--lambda", reg_lambda, "scale of the closing map");
  g_reg->add_option("--seed", gen_seed, "density seed");
  add_gen_common(g_reg, false);

  // ---- solve --------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "compute an optimal or smoothed plan");
  solve->require_subcommand(1);
  std::string solve_in, solve_out, solve_duals, solve_objective = "surplus";

  auto* s_lp = solve->add_subcommand("lp", "exact optimum by simplex");
  long long lp_cap = 100'000;
  s_lp->add_option("-i,--instance", solve_in)->required();
  s_lp->add_option("-o,--output", solve_out, "plan CSV path")->required();
  s_lp->add_option("--duals", solve_duals, "write LP duals as tabulated potentials");
  s_lp->add_option("--objective", solve_objective, "surplus (maximized) or cost (minimized)")
      ->check(CLI::IsMember({"surplus", "cost"}));
  s_lp->add_option("--var-cap", lp_cap, "largest allowed flattened variable count");

  auto* s_sk = solve->add_subcommand("sinkhorn", "entropic smoothing");
  double sk_eps = 1e-2;
  long long sk_iters = 200'000;
  double sk_tol = 1e-9;
  s_sk->add_option("-i,--instance", solve_in)->required();
  s_sk->add_option("-o,--output", solve_out, "plan CSV path")->required();
  s_sk->add_option("--duals", solve_duals, "write scaled potentials");
  s_sk->add_option("--objective", solve_objective, "surplus or cost kernel")
      ->check(CLI::IsMember({"surplus", "cost"}));
  s_sk->add_option("-e,--epsilon", sk_eps, "smoothing strength");
  s_sk->add_option("--max-iters", sk_iters, "sweep limit");
  s_sk->add_option("--tol", sk_tol, "marginal L1 stopping tolerance");

  // ---- certify ------------------------------------------------------------
  auto* certify_cmd = app.add_subcommand(
      "certify", "check potentials dominate the surplus and meet the plan");
  std::string cert_in, cert_plan, cert_pots, cert_out, cert_expect, cert_method = "auto";
  int cert_grid_points = 0;
  double cert_box_scale = 1.0, cert_tol = 1e-8;
  certify_cmd->add_option("-i,--instance", cert_in)->required();
  certify_cmd->add_option("-p,--plan", cert_plan)->required();
  certify_cmd->add_option("-u,--potentials", cert_pots)->required();
  certify_cmd->add_option("-o,--output", cert_out, "certificate JSON path")->required();
  certify_cmd->add_option("--grid-points", cert_grid_points,
                          "check lattice per axis (0 = support points only)");
  certify_cmd->add_option("--box-scale", cert_box_scale, "inflate marginal boxes");
  certify_cmd->add_option("--tol", cert_tol, "verdict tolerance");
  certify_cmd->add_option("--method", cert_method, "feasibility sweep")
      ->check(CLI::IsMember({"auto", "brute", "chain"}));
  certify_cmd->add_option("--expect", cert_expect,
                          "exit 3 unless the verdict matches (e.g. optimal)");

  // ---- diagnose -----------------------------------------------------------
  auto* diag_cmd = app.add_subcommand("diagnose", "plan shape and uniqueness probe");
  std::string diag_in, diag_plan, diag_out, diag_objective = "surplus";
  int diag_probes = 5;
  unsigned diag_seed = 0;
  double diag_tol = 1e-6;
  double diag_monge_tol = 1e-9;
  diag_cmd->add_option("-i,--instance", diag_in)->required();
  diag_cmd->add_option("-p,--plan", diag_plan)->required();
  diag_cmd->add_option("-o,--output", diag_out, "diagnostics JSON path")->required();
  diag_cmd->add_option("--probes", diag_probes, "perturbed re-solves");
  diag_cmd->add_option("--seed", diag_seed, "perturbation seed");
  diag_cmd->add_option("--tol", diag_tol, "uniqueness distance tolerance");
  diag_cmd->add_option("--monge-tol", diag_monge_tol, "split mass allowed by the graph test");
  diag_cmd->add_option("--objective", diag_objective, "surplus or cost")
      ->check(CLI::IsMember({"surplus", "cost"}));

  // ---- ballantine ---------------------------------------------------------
  auto* ball = app.add_subcommand("ballantine", "2x2 factorization toolkit");
  ball->require_subcommand(1);
  std::string ball_matrix;
  unsigned ball_seed = 0;
  double ball_lambda = 0.0;

  auto* b_r2 = ball->add_subcommand("in-r2", "product of two symmetric PD factors?");
  b_r2->add_option("--matrix", ball_matrix)->required();
  auto* b_r3 = ball->add_subcommand("in-r3", "product of three symmetric PD factors?");
  b_r3->add_option("--matrix", ball_matrix)->required();
  auto* b_f2 = ball->add_subcommand("factor2", "split into two symmetric PD factors");
  b_f2->add_option("--matrix", ball_matrix)->required();
  auto* b_f3 = ball->add_subcommand("factor3", "split into three symmetric PD factors");
  b_f3->add_option("--matrix", ball_matrix)->required();
  b_f3->add_option("--seed", ball_seed, "fallback search seed");
  auto* b_l41 = ball->add_subcommand("lemma41",
                                     "companion M with F+M singular and M factorable");
  b_l41->add_option("--matrix", ball_matrix)->required();
  auto* lam_opt = b_l41->add_option("--lambda", ball_lambda, "force the diagonal-case scale");

  // ---- report -------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "solve instances and tabulate");
  std::vector<std::string> report_in;
  std::string report_out;
  report_cmd->add_option("-i,--instance", report_in, "instance JSON paths")
      ->required()
      ->expected(-1);
  report_cmd->add_option("-o,--output", report_out, "report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (g_dirac->parsed()) {
      auto pkg = dirac_package(dirac_radius, dirac_grid, dirac_dim);
      write_package_files(pkg, gen_out, gen_plan_out, gen_pots_out, gen_pkg_out);
    } else if (g_p42->parsed()) {
      auto pkg = linear_map_package(parse_matrix2(p42_matrix), p42_samples, gen_seed);
      write_package_files(pkg, gen_out, gen_plan_out, gen_pots_out, gen_pkg_out);
    } else if (g_p43->parsed()) {
      auto pkg = chain_package(p43_m, p43_samples, gen_seed);
      write_package_files(pkg, gen_out, gen_plan_out, gen_pots_out, gen_pkg_out);
    } else if (g_reg->parsed()) {
      save_instance(*regular_instance(reg_grid, reg_lambda, reg_dim, gen_seed), gen_out);
    } else if (s_lp->parsed()) {
      auto inst = load_instance(solve_in);
      const bool surplus = solve_objective == "surplus";
      LpOptions opt;
      opt.var_cap = lp_cap;
      auto sol = exact_lp(inst, surplus ? ObjectiveKind::Surplus : ObjectiveKind::Cost,
                          surplus ? Sense::Max : Sense::Min, opt);
      save_plan(sol.plan, solve_out);
      if (!solve_duals.empty()) save_potentials(tabulated_set(sol.duals), solve_duals);
      std::printf("objective %.17g dual %.17g iterations %lld\n", sol.objective,
                  sol.dual_objective, sol.iterations);
    } else if (s_sk->parsed()) {
      auto inst = load_instance(solve_in);
      const bool surplus = solve_objective == "surplus";
      SinkhornOptions opt;
      opt.epsilon = sk_eps;
      opt.max_iters = sk_iters;
      opt.stop_tol = sk_tol;
      auto res = sinkhorn_mm(*inst, surplus ? ObjectiveKind::Surplus : ObjectiveKind::Cost, opt);
      save_plan(plan_from_dense(inst, res.plan), solve_out);
      if (!solve_duals.empty())
        save_potentials(tabulated_set(res.potentials), solve_duals);
      std::printf("objective %.17g residual %.3g sweeps %lld%s\n", res.objective,
                  res.marginal_residual, res.iterations,
                  res.converged ? "" : " (not converged)");
    } else if (certify_cmd->parsed()) {
      auto inst = load_instance(cert_in);
      Plan plan = load_plan(cert_plan, inst);
      PotentialSet pots = load_potentials(cert_pots);
      CheckGrid grid = cert_grid_points > 0
                           ? CheckGrid::uniform(*inst, cert_grid_points, cert_box_scale)
                           : CheckGrid::supports(*inst);
      FeasibilityOptions fopt;
      if (cert_method == "brute") fopt.method = FeasibilityOptions::Method::Brute;
      if (cert_method == "chain") fopt.method = FeasibilityOptions::Method::Chain;
      Certificate cert = certify(plan, pots, *inst, grid, cert_tol, fopt);
      save_certificate(cert, cert_out);
      std::printf("violation %.3g residual %.3g gap %.3g checked %lld verdict %s\n",
                  cert.max_feasibility_violation, cert.support_equality_residual,
                  cert.duality_gap, cert.n_points_checked, cert.verdict.c_str());
      if (!cert_expect.empty() && cert.verdict != cert_expect) {
        std::fprintf(stderr, "expected verdict %s, got %s\n", cert_expect.c_str(),
                     cert.verdict.c_str());
        return 3;
      }
    } else if (diag_cmd->parsed()) {
      auto inst = load_instance(diag_in);
      Plan plan = load_plan(diag_plan, inst);
      ProbeOptions opt;
      opt.n_probes = diag_probes;
      opt.seed = diag_seed;
      opt.tol = diag_tol;
      opt.monge_tol = diag_monge_tol;
      opt.kind = diag_objective == "surplus" ? ObjectiveKind::Surplus : ObjectiveKind::Cost;
      opt.sense = diag_objective == "surplus" ? Sense::Max : Sense::Min;
      Diagnostics d = diagnose(plan, opt);
      save_diagnostics(d, diag_out);
      std::printf("monge %s split %.17g dim %d probe %s spread %.3g\n",
                  d.is_monge ? "true" : "false", d.split, d.support_dim,
                  d.unique_verdict.c_str(), d.max_plan_distance);
    } else if (b_r2->parsed() || b_r3->parsed()) {
      const Matrix2 m = parse_matrix2(ball_matrix);
      const bool in = b_r2->parsed() ? in_r2(m) : in_r3(m);
      std::printf("%s\n", in ? "true" : "false");
    } else if (b_f2->parsed() || b_f3->parsed()) {
      const Matrix2 m = parse_matrix2(ball_matrix);
      PDFactorization f = b_f2->parsed() ? factor_pd2(m) : factor_pd3(m, ball_seed);
      for (size_t i = 0; i < f.factors.size(); ++i)
        std::printf("factor%zu %s\n", i + 1, matrix_line(f.factors[i]).c_str());
      std::printf("residual %.3g\n", f.product_residual);
    } else if (b_l41->parsed()) {
      const Matrix2 f = parse_matrix2(ball_matrix);
      const Matrix2 m = lam_opt->count() > 0
                            ? singular_companion(f, ball_lambda)
                            : singular_companion(f);
      std::printf("companion %s\n", matrix_line(m).c_str());
      std::printf("in_r2 %s det_F_plus_M %.3g\n", in_r2(m) ? "true" : "false",
                  std::abs((f + m).determinant()));
    } else if (report_cmd->parsed()) {
      std::vector<ReportRow> rows;
      for (const auto& path : report_in) {
        auto inst = load_instance(path);
        auto sol = exact_lp(inst, ObjectiveKind::Surplus, Sense::Max);
        ReportRow r;
        r.id = stem_of(path);
        r.m = inst->m;
        r.n = inst->n;
        r.objective = sol.objective;
        r.gap = std::abs(sol.dual_objective - sol.objective);
        r.split = split_mass(sol.plan);
        r.support_dim = support_dimension(sol.plan);
        rows.push_back(std::move(r));
      }
      save_report(rows, report_out);
    }
    return 0;
  } catch (const CapExceeded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
