#include "mmot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mmot {
namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("nonfinite value in output");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

// Streaming writer so field order is fixed by the call sites, not by a map.
class JsonWriter {
 public:
  JsonWriter& begin_object() {
    pre_value();
    out_ += '{';
    stack_.push_back(true);
    return *this;
  }
  JsonWriter& end_object() {
    out_ += '}';
    stack_.pop_back();
    return *this;
  }
  JsonWriter& begin_array() {
    pre_value();
    out_ += '[';
    stack_.push_back(true);
    return *this;
  }
  JsonWriter& end_array() {
    out_ += ']';
    stack_.pop_back();
    return *this;
  }
  JsonWriter& key(const std::string& k) {
    if (!stack_.back()) out_ += ',';
    stack_.back() = false;
    out_ += escape(k);
    out_ += ':';
    after_key_ = true;
    return *this;
  }
  JsonWriter& value(double v) {
    pre_value();
    out_ += fmt_double(v);
    return *this;
  }
  JsonWriter& value(long long v) {
    pre_value();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(int v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(bool v) {
    pre_value();
    out_ += v ? "true" : "false";
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    pre_value();
    out_ += escape(v);
    return *this;
  }
  JsonWriter& value(const Vector& v) {
    begin_array();
    for (int i = 0; i < v.size(); ++i) value(v[i]);
    return end_array();
  }
  JsonWriter& value(const Matrix& mat) {
    begin_array();
    for (int i = 0; i < mat.rows(); ++i) value(Vector(mat.row(i).transpose()));
    return end_array();
  }
  std::string str() const { return out_ + "\n"; }

 private:
  void pre_value() {
    if (after_key_) {
      after_key_ = false;
      return;
    }
    if (!stack_.empty()) {
      if (!stack_.back()) out_ += ',';
      stack_.back() = false;
    }
  }
  std::string out_;
  std::vector<bool> stack_;  // "no element written yet" per open scope
  bool after_key_ = false;
};

Vector vec_from(const json& a) {
  if (!a.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

Matrix mat_from(const json& a) {
  if (!a.is_array() || a.empty())
    throw std::invalid_argument("expected a nonempty JSON array of rows");
  const size_t cols = a[0].size();
  Matrix m(a.size(), cols);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != cols) throw std::invalid_argument("ragged matrix rows");
    for (size_t j = 0; j < cols; ++j) m(static_cast<int>(i), static_cast<int>(j)) = a[i][j].get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  JsonWriter w;
  w.begin_object();
  w.key("m").value(inst.m);
  w.key("n").value(inst.n);
  w.key("F").begin_object();
  w.key("matrix").value(inst.map.linear);
  w.key("offset").value(inst.map.offset);
  w.end_object();
  w.key("marginals").begin_array();
  for (const auto& mu : inst.marginals) {
    w.begin_object();
    w.key("points").value(mu.points);
    w.key("weights").value(mu.weights);
    w.key("box").begin_object();
    w.key("lo").value(mu.box.lo);
    w.key("hi").value(mu.box.hi);
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

Instance instance_from_json(const std::string& text) {
  const json j = json::parse(text);
  Instance inst;
  inst.m = j.at("m").get<int>();
  inst.n = j.at("n").get<int>();
  inst.map.linear = mat_from(j.at("F").at("matrix"));
  inst.map.offset = vec_from(j.at("F").at("offset"));
  for (const auto& mj : j.at("marginals")) {
    DiscreteMeasure mu;
    mu.points = mat_from(mj.at("points"));
    mu.weights = vec_from(mj.at("weights"));
    mu.box.lo = vec_from(mj.at("box").at("lo"));
    mu.box.hi = vec_from(mj.at("box").at("hi"));
    inst.marginals.push_back(std::move(mu));
  }
  auto errs = validate_instance(inst);
  if (!errs.empty()) throw std::invalid_argument(errs.front());
  return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
  write_text_file(path, instance_to_json(inst));
}

std::shared_ptr<const Instance> load_instance(const std::string& path) {
  return std::make_shared<Instance>(instance_from_json(read_text_file(path)));
}

std::string plan_to_csv(const Plan& plan) {
  if (!plan.instance) throw std::invalid_argument("plan has no instance");
  std::string out;
  for (int k = 1; k <= plan.instance->m; ++k) out += "i" + std::to_string(k) + ",";
  out += "mass\n";
  for (const auto& e : plan.entries) {
    for (int idx : e.idx) out += std::to_string(idx) + ",";
    out += fmt_double(e.mass) + "\n";
  }
  return out;
}

Plan plan_from_csv(const std::string& text, std::shared_ptr<const Instance> inst) {
  Plan plan;
  plan.instance = inst;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == 'i') continue;
    PlanEntry e;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> parts;
    while (std::getline(cells, cell, ',')) parts.push_back(cell);
    if (static_cast<int>(parts.size()) != inst->m + 1)
      throw std::invalid_argument("plan row has wrong column count: " + line);
    try {
      for (int k = 0; k < inst->m; ++k) e.idx.push_back(std::stoi(parts[k]));
      e.mass = std::stod(parts.back());
    } catch (const std::exception&) {
      throw std::invalid_argument("unparseable plan row: " + line);
    }
    plan.entries.push_back(std::move(e));
  }
  auto errs = validate_plan(plan);
  if (!errs.empty()) throw std::invalid_argument(errs.front());
  return plan;
}

void save_plan(const Plan& plan, const std::string& path) {
  write_text_file(path, plan_to_csv(plan));
}

Plan load_plan(const std::string& path, std::shared_ptr<const Instance> inst) {
  return plan_from_csv(read_text_file(path), std::move(inst));
}

std::string potentials_to_json(const PotentialSet& pots) {
  JsonWriter w;
  w.begin_object();
  w.key("potentials").begin_array();
  for (const auto& u : pots.u) {
    w.begin_object();
    if (const auto* q = std::get_if<QuadraticPotential>(&u)) {
      w.key("type").value(std::string("quadratic"));
      w.key("Q").value(q->Q);
      w.key("l").value(q->l);
      w.key("c0").value(q->c0);
    } else {
      const auto& t = std::get<TabulatedPotential>(u);
      w.key("type").value(std::string("tabulated"));
      w.key("values").value(t.values);
    }
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

PotentialSet potentials_from_json(const std::string& text) {
  const json j = json::parse(text);
  PotentialSet out;
  for (const auto& pj : j.at("potentials")) {
    const std::string type = pj.at("type").get<std::string>();
    if (type == "quadratic") {
      QuadraticPotential q;
      q.Q = mat_from(pj.at("Q"));
      q.l = vec_from(pj.at("l"));
      q.c0 = pj.at("c0").get<double>();
      if (q.Q.rows() != q.Q.cols() || q.l.size() != q.Q.rows())
        throw std::invalid_argument("quadratic potential has mismatched shapes");
      out.u.push_back(std::move(q));
    } else if (type == "tabulated") {
      TabulatedPotential t;
      t.values = vec_from(pj.at("values"));
      out.u.push_back(std::move(t));
    } else {
      throw std::invalid_argument("unknown potential type: " + type);
    }
  }
  return out;
}

void save_potentials(const PotentialSet& pots, const std::string& path) {
  write_text_file(path, potentials_to_json(pots));
}

PotentialSet load_potentials(const std::string& path) {
  return potentials_from_json(read_text_file(path));
}

std::string certificate_to_json(const Certificate& cert) {
  JsonWriter w;
  w.begin_object();
  w.key("violation").value(cert.max_feasibility_violation);
  w.key("residual").value(cert.support_equality_residual);
  w.key("gap").value(cert.duality_gap);
  w.key("n_checked").value(cert.n_points_checked);
  w.key("verdict").value(cert.verdict);
  w.end_object();
  return w.str();
}

Certificate certificate_from_json(const std::string& text) {
  const json j = json::parse(text);
  Certificate cert;
  cert.max_feasibility_violation = j.at("violation").get<double>();
  cert.support_equality_residual = j.at("residual").get<double>();
  cert.duality_gap = j.at("gap").get<double>();
  cert.n_points_checked = j.at("n_checked").get<long long>();
  cert.verdict = j.at("verdict").get<std::string>();
  return cert;
}

void save_certificate(const Certificate& cert, const std::string& path) {
  write_text_file(path, certificate_to_json(cert));
}

Certificate load_certificate(const std::string& path) {
  return certificate_from_json(read_text_file(path));
}

std::string diagnostics_to_json(const Diagnostics& diag) {
  JsonWriter w;
  w.begin_object();
  w.key("is_monge").value(diag.is_monge);
  w.key("split_mass").value(diag.split);
  w.key("support_dim").value(diag.support_dim);
  w.key("unique_verdict").value(diag.unique_verdict);
  w.key("max_plan_distance").value(diag.max_plan_distance);
  w.end_object();
  return w.str();
}

void save_diagnostics(const Diagnostics& diag, const std::string& path) {
  write_text_file(path, diagnostics_to_json(diag));
}

std::string package_to_json(const CounterexamplePackage& pkg) {
  JsonWriter w;
  w.begin_object();
  w.key("kind").value(pkg.kind);
  w.key("expected_support_dim").value(pkg.expected_support_dim);
  w.key("support_params").value(pkg.support_params);
  w.key("details").begin_object();
  for (const auto& [name, mat] : pkg.details) w.key(name).value(mat);
  w.end_object();
  w.end_object();
  return w.str();
}

void save_package(const CounterexamplePackage& pkg, const std::string& path) {
  write_text_file(path, package_to_json(pkg));
}

std::string report_to_csv(const std::vector<ReportRow>& rows) {
  std::string out = "instance_id,m,n,objective,gap,split_mass,support_dim\n";
  for (const auto& r : rows) {
    out += r.id + "," + std::to_string(r.m) + "," + std::to_string(r.n) + "," +
           fmt_double(r.objective) + "," + fmt_double(r.gap) + "," +
           fmt_double(r.split) + "," + std::to_string(r.support_dim) + "\n";
  }
  return out;
}

void save_report(const std::vector<ReportRow>& rows, const std::string& path) {
  write_text_file(path, report_to_csv(rows));
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open file for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("failed writing file: " + path);
}

}  // namespace mmot
