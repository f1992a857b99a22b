#pragma once

// JSON-configured pipelines: flow, then estimate monitor, then blow-up
// analysis, or a standalone Poincare-ratio search. Unknown keys are
// rejected. Schema: docs/config.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinchflow/equivariant_flow.hpp"
#include "pinchflow/homogeneous_flows.hpp"
#include "pinchflow/io.hpp"

namespace pinchflow {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

enum class ScenarioMode { hyperparallel, clifford, equivariant, poincare, monitor, rescale };
enum class FlowModel { hyperparallel, clifford, equivariant };

const char* to_string(ScenarioMode m);
const char* to_string(FlowModel m);

struct FlowConfig {
  FlowModel model = FlowModel::equivariant;
  double horizon = 10.0;
  // hyperparallel
  double rho0 = 1.0;
  // clifford: r0 = cos(phi0); split defaults to params.m
  double phi0 = 0.5;
  int split = 0;
  // equivariant
  ShapeDescriptor shape;
  SymmetryType sym{1, 4};
  int N = 512;
  double singular_threshold = 1e6;
  double c_cur = 0.01;
  long max_steps = 2'000'000;
};

struct MonitorConfig {
  std::vector<double> eta{0.005, 0.01, 0.02};
  std::vector<double> frontier_eta{0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2};
  std::vector<double> lp_p;  ///< empty: no L^p records
  double lp_sigma = 0.0;
  double lp_eta = 0.01;
};

struct PoincareConfig {
  double eta = 0.01;
  int budget = 200;
};

/// Every field is optional; each present one becomes a named check.
struct AssertionConfig {
  std::optional<double> extinction_time_rel_tol;
  bool preservation = false;
  bool decay = false;
  bool kato = false;
  bool time_bound = false;
  std::optional<double> gradient_ceiling;  ///< on sup |grad A|^2/(H^4+K^2)
  std::optional<double> hessian_ceiling;   ///< on sup |grad^2 A|^2/(H^6+K^3)
  std::optional<double> gradient_growth_min;
  bool frontier_finite = false;
  bool lp_satisfied = false;
  std::optional<std::string> blowup_type;
  std::optional<int> best_k;
  std::optional<double> type_I_functional;
  double type_I_functional_rel_tol = 0.05;
  std::optional<double> neck_ratio_max;
  double neck_H2_over_K_min = 1e4;
  bool gamma_positive = false;
  std::optional<double> ray_ratio_max;
  bool multiplicity_gap = false;
  bool clifford_outside_class = false;
};

struct ScenarioConfig {
  std::string name;
  ScenarioMode mode = ScenarioMode::equivariant;
  PinchingParams params;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  double snapshot_growth = 1.1;
  double snapshot_dt = 0.0;
  std::optional<FlowConfig> flow;
  std::optional<MonitorConfig> monitor;
  bool rescale = false;
  std::optional<PoincareConfig> poincare;
  AssertionConfig assertions;
  json source;  ///< the document as given
};

/// Throws ConfigError on schema violations (unknown keys included),
/// InadmissibleError or RangeError on bad parameters.
ScenarioConfig parse_scenario(const json& doc);

/// Reads and parses; Error(io) when unreadable, ConfigError on malformed JSON.
ScenarioConfig load_scenario(const std::string& path);

/// Fills keys missing from `config` with the values in `flags` (same
/// nesting). A flag that disagrees with a value present in the config is a
/// ConfigError.
json merge_flags(json config, const json& flags);

struct AssertionOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::optional<FlowTrace> trace;
  std::optional<BlowupRecord> blowup;
  json report;
  std::string summary;
  std::vector<AssertionOutcome> assertions;

  bool passed() const;
  /// Name of the first failing assertion, empty when all pass.
  std::string first_failure() const;
};

/// `jobs` is forwarded to the Poincare search.
ScenarioResult run_scenario(const ScenarioConfig& config, int jobs = 1);

/// trace.csv (flows), rescaled.csv (blow-up records), report.json and
/// summary.txt under `dir`, created if needed. Throws Error(io).
void write_artifacts(const ScenarioResult& result, const std::string& dir);

}  // namespace pinchflow
