#include "pinchflow/scenario.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pinchflow/error.hpp"

namespace pinchflow {

const char* to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::hyperparallel: return "hyperparallel";
    case ScenarioMode::clifford: return "clifford";
    case ScenarioMode::equivariant: return "equivariant";
    case ScenarioMode::poincare: return "poincare";
    case ScenarioMode::monitor: return "monitor";
    case ScenarioMode::rescale: return "rescale";
  }
  return "?";
}

const char* to_string(FlowModel m) {
  switch (m) {
    case FlowModel::hyperparallel: return "hyperparallel";
    case FlowModel::clifford: return "clifford";
    case FlowModel::equivariant: return "equivariant";
  }
  return "?";
}

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Object reader that remembers which keys were looked at; finish() rejects
// the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(where(k) + " must be a number");
    return v.get<double>();
  }

  std::optional<double> opt_number(const std::string& k) {
    if (!has(k)) return std::nullopt;
    return number(k, 0.0);
  }

  long integer(const std::string& k, long def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(where(k) + " must be an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(where(k) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(where(k) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(where(k) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(k) + " must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  Reader object(const std::string& k) {
    has(k);
    return Reader(j_.at(k), where(k));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k));
    }
  }

  std::string where(const std::string& k = "") const {
    if (k.empty()) return path_.empty() ? "document" : "'" + path_ + "'";
    return "'" + (path_.empty() ? k : path_ + "." + k) + "'";
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ScenarioMode parse_mode(const std::string& s) {
  for (auto m : {ScenarioMode::hyperparallel, ScenarioMode::clifford, ScenarioMode::equivariant,
                 ScenarioMode::poincare, ScenarioMode::monitor, ScenarioMode::rescale}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

FlowModel parse_model(const std::string& s) {
  for (auto m : {FlowModel::hyperparallel, FlowModel::clifford, FlowModel::equivariant}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown flow model '" + s + "'");
}

bool is_flow_mode(ScenarioMode m) {
  return m == ScenarioMode::hyperparallel || m == ScenarioMode::clifford || m == ScenarioMode::equivariant;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

ShapeDescriptor parse_shape(Reader r) {
  ShapeDescriptor s;
  s.kind = parse_shape_kind(r.string("kind", "geodesic_sphere"));
  s.rho0 = r.number("rho0", s.rho0);
  s.phi0 = r.number("phi0", s.phi0);
  s.amplitude = r.number("amplitude", s.amplitude);
  s.mode = static_cast<int>(r.integer("mode", s.mode));
  s.neck_ratio = r.number("neck_ratio", s.neck_ratio);
  s.bulge_ratio = r.number("bulge_ratio", s.bulge_ratio);
  s.taper = r.number("taper", s.taper);
  s.scale = r.number("scale", s.scale);
  r.finish();
  return s;
}

FlowConfig parse_flow(Reader r, ScenarioMode mode, const PinchingParams& p) {
  FlowConfig f;
  if (is_flow_mode(mode)) {
    f.model = parse_model(to_string(mode));
    if (r.has("model")) {
      require(parse_model(r.string("model", "")) == f.model,
              std::string("'flow.model' contradicts mode '") + to_string(mode) + "'");
    }
  } else {
    require(r.has("model"), "'flow.model' is required in mode " + std::string(to_string(mode)));
    f.model = parse_model(r.string("model", ""));
  }
  f.horizon = r.number("horizon", f.horizon);
  require(f.horizon > 0.0, "'flow.horizon' must be positive");
  const double sqK = std::sqrt(p.K);

  switch (f.model) {
    case FlowModel::hyperparallel:
      f.rho0 = r.number("rho0", f.rho0);
      require(f.rho0 * sqK > 0.0 && f.rho0 * sqK < M_PI, "'flow.rho0' must lie in (0, pi/sqrt(K))");
      break;
    case FlowModel::clifford: {
      const bool has_r0 = r.has("r0"), has_phi0 = r.has("phi0");
      require(!(has_r0 && has_phi0), "'flow.r0' and 'flow.phi0' are mutually exclusive");
      if (has_r0) {
        const double r0 = r.number("r0", 0.0);
        require(r0 > 0.0 && r0 < 1.0, "'flow.r0' must lie in (0, 1)");
        f.phi0 = std::acos(r0);
      } else {
        f.phi0 = r.number("phi0", f.phi0);
        require(f.phi0 > 0.0 && f.phi0 < M_PI / 2, "'flow.phi0' must lie in (0, pi/2)");
      }
      f.split = static_cast<int>(r.integer("split", p.m));
      require(f.split >= 1 && f.split < p.n, "'flow.split' must lie in [1, n-1]");
      break;
    }
    case FlowModel::equivariant: {
      if (r.has("shape")) f.shape = parse_shape(r.object("shape"));
      f.sym = {1, p.n};
      if (r.has("symmetry")) {
        const auto s = r.numbers("symmetry", {});
        require(s.size() == 2 && s[0] == std::floor(s[0]) && s[1] == std::floor(s[1]) && s[0] >= 1 && s[1] >= 1,
                "'flow.symmetry' must be [p, q] with positive integers");
        f.sym = {static_cast<int>(s[0]), static_cast<int>(s[1])};
      }
      require(f.sym.n() == p.n, fmt("'flow.symmetry' gives n = %d but params.n = %d", f.sym.n(), p.n));
      f.N = static_cast<int>(r.integer("N", f.N));
      require(f.N >= 16, "'flow.N' must be at least 16");
      f.singular_threshold = r.number("singular_threshold", f.singular_threshold);
      require(f.singular_threshold > 1.0, "'flow.singular_threshold' must exceed 1");
      f.c_cur = r.number("c_cur", f.c_cur);
      require(f.c_cur > 0.0, "'flow.c_cur' must be positive");
      f.max_steps = r.integer("max_steps", f.max_steps);
      require(f.max_steps > 0, "'flow.max_steps' must be positive");
      break;
    }
  }
  r.finish();
  return f;
}

void require_eta(const PinchingParams& p, double eta, const std::string& key) {
  const double eta0 = eta0_closed_form(p.n, p.m, p.alpha);
  if (!(eta > 0.0 && eta < eta0)) throw RangeError(fmt("'%s' = %g must lie in (0, eta0 = %.6g)", key.c_str(), eta, eta0));
}

MonitorConfig parse_monitor(Reader r, const PinchingParams& p) {
  MonitorConfig c;
  c.eta = r.numbers("eta", c.eta);
  require(!c.eta.empty(), "'monitor.eta' must not be empty");
  for (double e : c.eta) require_eta(p, e, "monitor.eta");
  c.frontier_eta = r.numbers("frontier_eta", c.frontier_eta);
  for (std::size_t i = 0; i < c.frontier_eta.size(); ++i) {
    require(c.frontier_eta[i] > 0.0 && (i == 0 || c.frontier_eta[i] > c.frontier_eta[i - 1]),
            "'monitor.frontier_eta' must be positive and strictly increasing");
  }
  if (r.has("lp")) {
    Reader lp = r.object("lp");
    c.lp_p = lp.numbers("p", {});
    for (double q : c.lp_p) require(q >= 1.0, "'monitor.lp.p' entries must be >= 1");
    c.lp_sigma = lp.number("sigma", c.lp_sigma);
    require(c.lp_sigma >= 0.0 && c.lp_sigma < 1.0, "'monitor.lp.sigma' must lie in [0, 1)");
    c.lp_eta = lp.number("eta", c.lp_eta);
    require_eta(p, c.lp_eta, "monitor.lp.eta");
    lp.finish();
  }
  r.finish();
  return c;
}

PoincareConfig parse_poincare(Reader r, const PinchingParams& p) {
  PoincareConfig c;
  c.eta = r.number("eta", c.eta);
  c.budget = static_cast<int>(r.integer("budget", c.budget));
  r.finish();
  require(p.n >= 3, "mode poincare needs n >= 3");
  const double top = 1.0 / (p.n - p.m + p.alpha) - 1.0 / (p.n - p.m + 1);
  if (!(c.eta > 0.0 && c.eta < top)) throw RangeError(fmt("'poincare.eta' = %g must lie in (0, %.6g)", c.eta, top));
  require(c.budget >= 1, "'poincare.budget' must be positive");
  return c;
}

AssertionConfig parse_assertions(Reader r, const ScenarioConfig& c) {
  AssertionConfig a;
  const bool has_monitor = c.monitor.has_value();
  const bool has_rescale = c.rescale;
  const bool poincare = c.mode == ScenarioMode::poincare;
  auto need = [&](bool ok, const char* key, const char* what) {
    require(ok, std::string("assertion '") + key + "' needs " + what);
  };

  a.extinction_time_rel_tol = r.opt_number("extinction_time_rel_tol");
  if (a.extinction_time_rel_tol) {
    const bool sphere = c.flow && (c.flow->model == FlowModel::hyperparallel ||
                                   (c.flow->model == FlowModel::equivariant &&
                                    c.flow->shape.kind == ShapeKind::geodesic_sphere && c.flow->sym.p == 1));
    need(sphere, "extinction_time_rel_tol", "a geodesic-sphere flow");
  }
  for (auto [key, field] : {std::pair{"preservation", &a.preservation}, {"decay", &a.decay}, {"kato", &a.kato},
                            {"time_bound", &a.time_bound}, {"frontier_finite", &a.frontier_finite},
                            {"lp_satisfied", &a.lp_satisfied}}) {
    *field = r.boolean(key, false);
    if (*field) need(has_monitor, key, "the monitor stage");
  }
  a.gradient_ceiling = r.opt_number("gradient_ceiling");
  a.hessian_ceiling = r.opt_number("hessian_ceiling");
  a.gradient_growth_min = r.opt_number("gradient_growth_min");
  if (a.gradient_ceiling || a.hessian_ceiling || a.gradient_growth_min) need(has_monitor, "gradient_ceiling", "the monitor stage");
  if (a.lp_satisfied) need(!c.monitor->lp_p.empty(), "lp_satisfied", "'monitor.lp.p'");

  if (r.has("blowup_type")) {
    a.blowup_type = r.string("blowup_type", "");
    need(has_rescale, "blowup_type", "mode rescale");
    require(*a.blowup_type == "I" || *a.blowup_type == "II", "'assertions.blowup_type' must be \"I\" or \"II\"");
  }
  if (r.has("best_k")) {
    a.best_k = static_cast<int>(r.integer("best_k", 0));
    need(has_rescale, "best_k", "mode rescale");
  }
  if (r.has("type_I_functional")) {
    Reader f = r.object("type_I_functional");
    a.type_I_functional = f.number("value", 0.5);
    a.type_I_functional_rel_tol = f.number("rel_tol", a.type_I_functional_rel_tol);
    f.finish();
    need(has_rescale, "type_I_functional", "mode rescale");
  }
  if (r.has("neck_ratio")) {
    Reader f = r.object("neck_ratio");
    a.neck_ratio_max = f.number("max", 0.02);
    a.neck_H2_over_K_min = f.number("H2_over_K_min", a.neck_H2_over_K_min);
    f.finish();
    need(has_rescale, "neck_ratio", "mode rescale");
  }
  a.gamma_positive = r.boolean("gamma_positive", false);
  a.ray_ratio_max = r.opt_number("ray_ratio_max");
  a.multiplicity_gap = r.boolean("multiplicity_gap", false);
  if (a.gamma_positive || a.ray_ratio_max || a.multiplicity_gap) need(poincare, "gamma_positive", "mode poincare");
  a.clifford_outside_class = r.boolean("clifford_outside_class", false);
  if (a.clifford_outside_class) need(c.flow && c.flow->model == FlowModel::clifford, "clifford_outside_class", "a clifford flow");
  r.finish();
  return a;
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc) {
  Reader r(doc, "");
  ScenarioConfig c;
  c.source = doc;
  if (r.has("schema_version")) {
    require(r.integer("schema_version", 0) == kConfigSchemaVersion,
            fmt("'schema_version' must be %d", kConfigSchemaVersion));
  }
  require(r.has("mode"), "'mode' is required");
  c.mode = parse_mode(r.string("mode", ""));
  c.name = r.string("name", to_string(c.mode));

  require(r.has("params"), "'params' is required");
  {
    Reader p = r.object("params");
    require(p.has("n"), "'params.n' is required");
    c.params.n = static_cast<int>(p.integer("n", 0));
    c.params.m = static_cast<int>(p.integer("m", 1));
    c.params.alpha = p.number("alpha", 0.5);
    c.params.K = p.number("K", 1.0);
    c.params.V = p.number("V", c.params.V);
    c.params.Theta = p.number("Theta", c.params.Theta);
    p.finish();
    require_admissible(c.params);
    require(c.params.V > 0.0 && c.params.Theta > 0.0, "'params.V' and 'params.Theta' must be positive");
  }

  const long seed = r.integer("seed", 0);
  require(seed >= 0, "'seed' must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.output_dir = r.string("output_dir", "out/" + c.name);
  require(!c.output_dir.empty(), "'output_dir' must not be empty");
  if (r.has("snapshot")) {
    Reader s = r.object("snapshot");
    c.snapshot_growth = s.number("growth", c.snapshot_growth);
    c.snapshot_dt = s.number("dt", c.snapshot_dt);
    s.finish();
    require(c.snapshot_growth > 1.0, "'snapshot.growth' must exceed 1");
    require(c.snapshot_dt >= 0.0, "'snapshot.dt' must be non-negative");
  }

  const bool poincare = c.mode == ScenarioMode::poincare;
  if (poincare) {
    require(!r.has("flow"), "mode poincare takes no 'flow' section");
    c.poincare = r.has("poincare") ? parse_poincare(r.object("poincare"), c.params)
                                   : parse_poincare(Reader(json::object(), "poincare"), c.params);
  } else {
    require(!r.has("poincare"), "'poincare' section needs mode poincare");
    if (r.has("flow")) {
      c.flow = parse_flow(r.object("flow"), c.mode, c.params);
    } else {
      require(is_flow_mode(c.mode), "'flow' is required in mode " + std::string(to_string(c.mode)));
      c.flow = parse_flow(Reader(json::object(), "flow"), c.mode, c.params);
    }
  }

  const bool monitored = c.mode == ScenarioMode::monitor || c.mode == ScenarioMode::rescale;
  if (r.has("monitor")) {
    require(monitored, "'monitor' section needs mode monitor or rescale");
    c.monitor = parse_monitor(r.object("monitor"), c.params);
  } else if (c.mode == ScenarioMode::monitor) {
    c.monitor = parse_monitor(Reader(json::object(), "monitor"), c.params);
  }
  c.rescale = c.mode == ScenarioMode::rescale;

  if (r.has("assertions")) c.assertions = parse_assertions(r.object("assertions"), c);
  r.finish();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_scenario(doc);
}

json merge_flags(json config, const json& flags) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : flags.items()) {
    if (!config.contains(k)) {
      config[k] = v;
    } else if (v.is_object() && config[k].is_object()) {
      config[k] = merge_flags(config[k], v);
    } else if (config[k] != v) {
      throw ConfigError("flag for '" + k + "' = " + v.dump() + " conflicts with config value " + config[k].dump());
    }
  }
  return config;
}

bool ScenarioResult::passed() const {
  for (const auto& a : assertions)
    if (!a.passed) return false;
  return true;
}

std::string ScenarioResult::first_failure() const {
  for (const auto& a : assertions)
    if (!a.passed) return a.name;
  return {};
}

namespace {

struct FlowOutcome {
  FlowTrace trace;
  json info;
  std::string summary;
  double reference_T = std::numeric_limits<double>::quiet_NaN();
  double observed_T = std::numeric_limits<double>::quiet_NaN();
  double min_g = std::numeric_limits<double>::quiet_NaN();
};

FlowOutcome run_flow(const ScenarioConfig& c) {
  const FlowConfig& f = *c.flow;
  const PinchingParams& p = c.params;
  FlowOutcome out;
  OdeOptions ode;
  ode.growth_factor = c.snapshot_growth;
  ode.snapshot_dt = c.snapshot_dt;
  std::ostringstream s;
  out.info["model"] = to_string(f.model);

  switch (f.model) {
    case FlowModel::hyperparallel: {
      auto run = hyperparallel_flow(f.rho0, p, f.horizon, ode);
      out.trace = std::move(run.trace);
      out.reference_T = hyperparallel_extinction_time(p.n, p.K, f.rho0);
      if (run.extinct) out.observed_T = run.extinction_time;
      out.info["rho0"] = f.rho0;
      s << fmt("flow: hyperparallel, rho0 = %.6g\n", f.rho0);
      break;
    }
    case FlowModel::clifford: {
      auto run = clifford_flow(p, f.split, f.phi0, f.horizon, ode);
      out.trace = std::move(run.trace);
      out.info["phi0"] = f.phi0;
      out.info["r0"] = std::cos(f.phi0);
      out.info["split"] = f.split;
      out.info["minimal_phi"] = clifford_minimal_phi(p.n, f.split);
      out.info["collapsed"] = run.collapsed;
      out.info["collapse_time"] = number(run.collapsed ? run.collapse_time : NAN);
      double min_g = INFINITY;
      for (const auto& snap : out.trace.snapshots)
        for (const auto& g : snap.geometry)
          min_g = std::min(min_g, g_m_alpha(g.H, g.A_norm_sq, p.n, p.m, p.alpha, p.K));
      out.min_g = min_g;
      out.info["min_g_m_alpha"] = number(min_g);
      s << fmt("flow: clifford S^%d(r) x S^%d(s), r0 = %.6g (minimal torus at r^2 = %.6g)\n", f.split,
               p.n - f.split, std::cos(f.phi0), double(f.split) / p.n);
      if (run.collapsed) s << fmt("  collapse at t = %.10g\n", run.collapse_time);
      s << fmt("  min g_{m,alpha} along the trace = %.6g\n", min_g);
      break;
    }
    case FlowModel::equivariant: {
      EquivariantScenario sc;
      sc.shape = f.shape;
      sc.sym = f.sym;
      sc.params = p;
      sc.N = f.N;
      sc.horizon = f.horizon;
      sc.singular_threshold = f.singular_threshold;
      sc.snapshot_growth = c.snapshot_growth;
      sc.snapshot_dt = c.snapshot_dt;
      sc.max_steps = f.max_steps;
      sc.policy.c_cur = f.c_cur;
      auto run = pinchflow::run(sc);
      out.trace = std::move(run.trace);
      out.info["shape"] = to_string(f.shape.kind);
      out.info["symmetry"] = {f.sym.p, f.sym.q};
      out.info["N"] = f.N;
      out.info["steps"] = run.steps;
      out.info["regrids"] = run.regrids;
      out.info["initial_class"] = run.initial_class;
      if (f.shape.kind == ShapeKind::geodesic_sphere && f.sym.p == 1) {
        out.reference_T = hyperparallel_extinction_time(p.n, p.K, f.shape.rho0);
        out.observed_T = out.trace.singular_time;
      }
      s << fmt("flow: equivariant %s, SO(%d) x SO(%d), N = %d, %ld steps, %ld regrids\n",
               to_string(f.shape.kind), f.sym.p, f.sym.q, f.N, run.steps, run.regrids);
      s << fmt("  initial data: V_measured = %.6g, Theta_measured = %.6g, max g = %.6g, in class: %s\n",
               run.initial_class.V_measured, run.initial_class.Theta_measured, run.initial_class.max_g,
               run.initial_class.in_class ? "yes" : "no");
      break;
    }
  }
  const FlowTrace& tr = out.trace;
  out.info["terminal"] = to_string(tr.terminal);
  out.info["terminal_time"] = number(tr.terminal_time);
  out.info["singular_time"] = number(tr.singular_time);
  out.info["snapshots"] = tr.snapshots.size();
  out.info["message"] = tr.message;
  s << fmt("  terminal: %s at t = %.10g, %zu snapshots, final max|A|^2 = %.6g\n", to_string(tr.terminal),
           tr.terminal_time, tr.snapshots.size(), tr.snapshots.empty() ? NAN : tr.snapshots.back().max_A2());
  if (std::isfinite(out.reference_T)) {
    const double rel = std::abs(out.observed_T - out.reference_T) / out.reference_T;
    out.info["reference_extinction_time"] = number(out.reference_T);
    out.info["observed_extinction_time"] = number(out.observed_T);
    out.info["extinction_time_rel_err"] = number(rel);
    s << fmt("extinction time: observed %.12g, closed form %.12g, relative error %.3g\n", out.observed_T,
             out.reference_T, rel);
  }
  out.summary = s.str();
  return out;
}

class Checks {
 public:
  void add(std::string name, bool ok, std::string detail) {
    list.push_back({std::move(name), ok, std::move(detail)});
  }
  void status(const std::string& name, CheckStatus st, const std::string& detail) {
    add(name, st == CheckStatus::pass, std::string(to_string(st)) + "; " + detail);
  }
  std::vector<AssertionOutcome> list;
};

const char* status_word(CheckStatus s) { return to_string(s); }

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& c, int jobs) {
  ScenarioResult res;
  res.config = c;
  const PinchingParams& p = c.params;
  const AssertionConfig& a = c.assertions;
  Checks checks;
  std::ostringstream s;
  json& rep = res.report;
  rep["schema_version"] = kReportSchemaVersion;
  rep["name"] = c.name;
  rep["mode"] = to_string(c.mode);
  rep["params"] = p;
  rep["seed"] = c.seed;
  rep["config"] = c.source;

  s << "scenario " << c.name << " (mode " << to_string(c.mode) << ")\n";
  s << fmt("params: n = %d, m = %d, alpha = %g, K = %g, V = %g, Theta = %g\n", p.n, p.m, p.alpha, p.K, p.V,
           p.Theta);

  if (c.mode == ScenarioMode::poincare) {
    const auto& pc = *c.poincare;
    const auto cert = min_ratio(p, pc.eta, pc.budget, c.seed, jobs);
    const auto gap = multiplicity_gap_check(p, pc.eta);
    rep["certificate"] = cert;
    rep["multiplicity"] = gap;
    s << fmt("poincare ratio search: eta = %g, budget = %d, seed = %llu\n", pc.eta, pc.budget,
             static_cast<unsigned long long>(c.seed));
    s << fmt("  gamma_hat = %.10g (feasible witness: %s)\n", cert.gamma_hat, cert.feasible ? "yes" : "no");
    s << "  witness:";
    for (double x : cert.minimizer) s << fmt(" %.6g", x);
    s << fmt("\n  f = %.3g, g = %.3g, W = %.6g\n", cert.minimizer_f, cert.minimizer_g, cert.minimizer_W);
    for (const auto& ray : cert.unconstrained_ray)
      s << fmt("  clifford ray t = %g: ratio %.3g, g = %.3g\n", ray.t, ray.ratio, ray.g);
    s << "  multiplicity gap: " << (gap.pass ? "holds" : "violated") << "\n";
    if (a.gamma_positive)
      checks.add("gamma_positive", cert.gamma_hat > 0.0 && cert.feasible,
                 fmt("gamma_hat = %.6g, feasible = %s", cert.gamma_hat, cert.feasible ? "true" : "false"));
    if (a.ray_ratio_max) {
      const double r = cert.unconstrained_ray.back().ratio;
      checks.add("ray_ratio", r < *a.ray_ratio_max, fmt("ratio at t = 1e3 is %.3g (max %.3g)", r, *a.ray_ratio_max));
    }
    if (a.multiplicity_gap) checks.add("multiplicity_gap", gap.pass, gap.pass ? "no l satisfies both" : "violated");
  } else {
    FlowOutcome flow = run_flow(c);
    rep["flow"] = flow.info;
    s << flow.summary;
    const FlowTrace& tr = flow.trace;

    if (a.extinction_time_rel_tol) {
      const double rel = std::abs(flow.observed_T - flow.reference_T) / flow.reference_T;
      checks.add("extinction_time", rel <= *a.extinction_time_rel_tol,
                 fmt("relative error %.3g (tolerance %.3g)", rel, *a.extinction_time_rel_tol));
    }
    if (a.clifford_outside_class)
      checks.add("clifford_outside_class", flow.min_g > 0.0, fmt("min g_{m,alpha} = %.6g", flow.min_g));

    if (c.monitor) {
      const auto& mc = *c.monitor;
      const auto er = check_estimates(tr, p, mc.eta);
      const auto frontier = convexity_frontier(tr, mc.frontier_eta);
      rep["estimates"] = er;
      rep["frontier"] = frontier;
      json lps = json::array();
      bool lp_ok = !mc.lp_p.empty();
      std::string lp_note;
      for (double q : mc.lp_p) {
        if (!tr.has_area) {
          lp_ok = false;
          lp_note = "trace carries no area weights";
          break;
        }
        const auto rec = lp_decay(tr, p, q, mc.lp_sigma, mc.lp_eta);
        lp_ok = lp_ok && rec.satisfied;
        lps.push_back(rec);
      }
      rep["lp"] = lps;

      s << "estimates:\n";
      s << fmt("  preservation  %-14s max g/(max|A|^2+K) = %.3g\n", status_word(er.preservation.status),
               er.preservation.max_relative);
      s << fmt("  decay         %-14s worst sup/(1.02 bound) = %.4g\n", status_word(er.decay.status),
               er.decay.worst_quotient);
      for (const auto& e : er.cylindrical) s << fmt("  cylindrical   eta = %-8g C_fit = %.4g\n", e.eta, e.C_fit);
      s << fmt("  gradient      %-14s crude sup = %.4g, growth of max|A|^2 = %.3g\n",
               status_word(er.gradient.status), er.gradient.crude_sup, er.gradient.A2_growth);
      s << fmt("  hessian       %-14s sup = %.4g\n", status_word(er.hessian.status), er.hessian.sup);
      s << fmt("  kato          %-14s min ratio - 3/(n+2) = %.3g\n", status_word(er.kato.status), er.kato.margin);
      s << fmt("  time bound    %-14s e^{2nKT} = %.6g vs 1 + 2n/Lambda0 = %.6g%s\n",
               status_word(er.time_bound.status), er.time_bound.lhs, er.time_bound.rhs,
               er.time_bound.theta_sq_holds ? "" : " (Theta^2 variant fails)");
      s << "  convexity frontier:";
      for (const auto& fp : frontier) s << fmt(" h(%g) = %.4g", fp.eta, fp.h);
      s << "\n";
      for (const auto& l : lps)
        s << fmt("  L^p decay     p = %-6g satisfied = %s, fitted rate %.4g vs bound %.4g\n", l["p"].get<double>(),
                 l["satisfied"].get<bool>() ? "yes" : "no", l["fitted_rate"].is_null() ? NAN : l["fitted_rate"].get<double>(),
                 l["bound_rate"].get<double>());

      if (a.preservation) checks.status("preservation", er.preservation.status, fmt("max relative g = %.3g", er.preservation.max_relative));
      if (a.decay) checks.status("decay", er.decay.status, fmt("worst quotient %.4g", er.decay.worst_quotient));
      if (a.kato) checks.status("kato", er.kato.status, fmt("margin %.3g", er.kato.margin));
      if (a.time_bound) checks.status("time_bound", er.time_bound.status, fmt("lhs %.6g, rhs %.6g", er.time_bound.lhs, er.time_bound.rhs));
      if (a.gradient_ceiling)
        checks.add("gradient_ceiling", er.gradient.status == CheckStatus::pass && er.gradient.crude_sup < *a.gradient_ceiling,
                   fmt("crude sup %.4g (ceiling %.4g)", er.gradient.crude_sup, *a.gradient_ceiling));
      if (a.hessian_ceiling)
        checks.add("hessian_ceiling", er.hessian.status == CheckStatus::pass && er.hessian.sup < *a.hessian_ceiling,
                   fmt("sup %.4g (ceiling %.4g)", er.hessian.sup, *a.hessian_ceiling));
      if (a.gradient_growth_min)
        checks.add("gradient_growth", er.gradient.A2_growth >= *a.gradient_growth_min,
                   fmt("max|A|^2 grew by %.3g (min %.3g)", er.gradient.A2_growth, *a.gradient_growth_min));
      if (a.frontier_finite) {
        bool ok = !frontier.empty();
        for (std::size_t i = 0; i < frontier.size(); ++i)
          ok = ok && std::isfinite(frontier[i].h) && (i == 0 || frontier[i].h <= frontier[i - 1].h);
        checks.add("frontier_finite", ok, "h finite and nonincreasing on the frontier grid");
      }
      if (a.lp_satisfied) checks.add("lp_satisfied", lp_ok, lp_note.empty() ? "all L^p records dominated" : lp_note);
    }

    if (c.rescale) {
      BlowupRecord b = classify_type(tr);
      if (b.type == BlowupType::type_I) {
        b = rescale_type_I(tr, p.m);
      } else if (b.type == BlowupType::type_II) {
        rep["type_II_points"] = pick_type_II_points(tr);
      }
      rep["blowup"] = b;
      s << fmt("blow-up: type %s, T = %.10g, sup (T-t)max|A|^2 = %.6g, last-decade increase %.3g\n", to_string(b.type),
               b.T, b.functional_sup, b.last_decade_increase);
      if (!b.functional.empty()) s << fmt("  final (T-t)max|A|^2 = %.6g\n", b.functional.back());
      if (!b.rescaled.empty())
        s << fmt("  best model k = %d (distance %.4g), final neck ratio %.4g, %zu competing maxima\n", b.best_k,
                 b.rescaled.back().model_distance, b.rescaled.back().neck_ratio, b.competing.size());
      if (!b.message.empty()) s << "  " << b.message << "\n";

      if (a.blowup_type)
        checks.add("blowup_type", *a.blowup_type == to_string(b.type), std::string("classified as ") + to_string(b.type));
      if (a.best_k) checks.add("best_k", b.best_k == *a.best_k, fmt("best model k = %d", b.best_k));
      if (a.type_I_functional) {
        const double v = b.functional.empty() ? NAN : b.functional.back();
        const double rel = std::abs(v - *a.type_I_functional) / *a.type_I_functional;
        checks.add("type_I_functional", rel <= a.type_I_functional_rel_tol,
                   fmt("final value %.6g, target %.6g, relative error %.3g", v, *a.type_I_functional, rel));
      }
      if (a.neck_ratio_max) {
        bool seen = false, ok = true;
        double worst = 0.0;
        for (const auto& x : b.rescaled) {
          if (x.max_H2_over_K < a.neck_H2_over_K_min) continue;
          seen = true;
          worst = std::max(worst, x.neck_ratio);
          ok = ok && x.neck_ratio <= *a.neck_ratio_max;
        }
        checks.add("neck_ratio", seen && ok,
                   seen ? fmt("max neck ratio %.4g beyond H^2/K = %.3g (max %.3g)", worst, a.neck_H2_over_K_min, *a.neck_ratio_max)
                        : fmt("max H^2/K never reached %.3g", a.neck_H2_over_K_min));
      }
      res.blowup = std::move(b);
    }
    res.trace = std::move(flow.trace);
  }

  res.assertions = checks.list;
  json asr = json::array();
  if (!res.assertions.empty()) s << "assertions:\n";
  for (const auto& x : res.assertions) {
    asr.push_back({{"name", x.name}, {"passed", x.passed}, {"detail", x.detail}});
    s << "  " << (x.passed ? "PASS " : "FAIL ") << x.name << ": " << x.detail << "\n";
  }
  rep["assertions"] = asr;
  rep["passed"] = res.passed();
  s << "result: " << (res.passed() ? "PASS" : "FAIL") << "\n";
  res.summary = s.str();
  return res;
}

void write_artifacts(const ScenarioResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory '" + dir + "': " + ec.message());
  auto put = [&](const std::string& name, auto&& writer) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    writer(out);
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
  };
  if (r.trace) put("trace.csv", [&](std::ostream& o) { write_trace_csv(o, *r.trace); });
  if (r.blowup && !r.blowup->rescaled.empty()) put("rescaled.csv", [&](std::ostream& o) { o << rescaled_csv(*r.blowup); });
  put("report.json", [&](std::ostream& o) { o << r.report.dump(2) << '\n'; });
  put("summary.txt", [&](std::ostream& o) { o << r.summary; });
}

}  // namespace pinchflow
