#pragma once

#include <string>
#include <vector>

#include "mmot/construct.hpp"
#include "mmot/core.hpp"
#include "mmot/diagnose.hpp"

namespace mmot {

// Serialization with deterministic output: fixed key order and %.17g floats,
// so rerunning a command reproduces its files byte for byte. Parsing accepts
// any standard JSON; malformed or inconsistent content raises
// std::invalid_argument (or the parser's own exception).

std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& inst, const std::string& path);
std::shared_ptr<const Instance> load_instance(const std::string& path);

/// One row per entry: m zero-based indices then the mass.
std::string plan_to_csv(const Plan& plan);
Plan plan_from_csv(const std::string& text, std::shared_ptr<const Instance> inst);
void save_plan(const Plan& plan, const std::string& path);
Plan load_plan(const std::string& path, std::shared_ptr<const Instance> inst);

std::string potentials_to_json(const PotentialSet& pots);
PotentialSet potentials_from_json(const std::string& text);
void save_potentials(const PotentialSet& pots, const std::string& path);
PotentialSet load_potentials(const std::string& path);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

std::string diagnostics_to_json(const Diagnostics& diag);
void save_diagnostics(const Diagnostics& diag, const std::string& path);

/// Construction data of a package: kind, contact-set dimension, and the
/// matrices behind the potentials. The instance, plan, and potentials go to
/// their own files.
std::string package_to_json(const CounterexamplePackage& pkg);
void save_package(const CounterexamplePackage& pkg, const std::string& path);

struct ReportRow {
  std::string id;
  int m = 0;
  int n = 0;
  double objective = 0.0;
  double gap = 0.0;
  double split = 0.0;
  int support_dim = 0;
};
std::string report_to_csv(const std::vector<ReportRow>& rows);
void save_report(const std::vector<ReportRow>& rows, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mmot
