#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinchflow/pinchflow.h"

namespace {

using json = nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

bool is_config_status(pf_status s) {
  return s == PF_CONFIG || s == PF_INADMISSIBLE || s == PF_RANGE || s == PF_INVALID_ARGUMENT || s == PF_IO;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  pf_free_string(s);
  return out;
}

struct Outcome {
  int code = kExitPass;
  std::string out;
  std::string err;
};

Outcome error_outcome(pf_status s, const std::string& context) {
  Outcome o;
  o.code = is_config_status(s) ? kExitConfig : kExitAssertion;
  const std::string msg = pf_last_error();
  o.err = "pinchflow: " + context + ": " + (msg.empty() ? pf_status_name(s) : msg) + "\n";
  return o;
}

// Loads (config file or empty document) + flags, runs, writes artifacts.
Outcome run_one(const std::optional<std::string>& path, const json& flags, int jobs,
                const std::optional<std::string>& out_dir) {
  const std::string label = path ? *path : "flags";
  const std::string flag_text = flags.dump();
  pf_scenario* sc = nullptr;
  pf_status s = path ? pf_scenario_from_file(path->c_str(), flag_text.c_str(), &sc)
                     : pf_scenario_from_json("{}", flag_text.c_str(), &sc);
  if (s != PF_OK) return error_outcome(s, label);

  pf_result* r = nullptr;
  s = pf_scenario_run(sc, jobs, &r);
  pf_scenario_free(sc);
  if (s != PF_OK) return error_outcome(s, label);

  Outcome o;
  char* text = nullptr;
  pf_result_summary(r, &text);
  o.out = take(text);
  s = pf_result_write(r, out_dir ? out_dir->c_str() : nullptr);
  if (s != PF_OK) {
    Outcome e = error_outcome(s, label);
    e.out = o.out;
    pf_result_free(r);
    return e;
  }
  int passed = 0;
  pf_result_passed(r, &passed);
  if (!passed) {
    char* name = nullptr;
    pf_result_first_failure(r, &name);
    o.code = kExitAssertion;
    o.err = "pinchflow: " + label + ": assertion failed: " + take(name) + "\n";
  }
  pf_result_free(r);
  return o;
}

int report(const Outcome& o) {
  std::fputs(o.out.c_str(), stdout);
  std::fputs(o.err.c_str(), stderr);
  return o.code;
}

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pinchflow: pinched mean curvature flow in spheres"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "run scenario config files");
  std::vector<std::string> configs;
  std::optional<std::uint64_t> run_seed;
  run->add_option("config", configs, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (single config only)");
  run->add_option("--seed", run_seed, "seed");

  struct Common {
    std::optional<std::string> config;
    std::optional<int> n, m;
    std::optional<double> alpha, K;
  };
  auto common = [&](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "config file supplying further keys")->check(CLI::ExistingFile);
    sub->add_option("--n", c.n, "dimension");
    sub->add_option("--m", c.m, "pinching index");
    sub->add_option("--alpha", c.alpha, "pinching slack in (0,1)");
    sub->add_option("--K", c.K, "ambient curvature");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto params_of = [](const Common& c) {
    json p = json::object();
    put(p, "n", c.n);
    put(p, "m", c.m);
    put(p, "alpha", c.alpha);
    put(p, "K", c.K);
    return p;
  };

  auto* poincare = app.add_subcommand("verify-poincare", "search for the Poincare ratio infimum");
  Common pc;
  std::optional<double> eta;
  std::optional<int> budget;
  std::optional<std::uint64_t> seed;
  common(poincare, pc);
  poincare->add_option("--eta", eta, "eta");
  poincare->add_option("--budget", budget, "number of multistarts");
  poincare->add_option("--seed", seed, "seed");

  auto* clifford = app.add_subcommand("clifford", "flow a generalized Clifford torus");
  Common cc;
  std::optional<double> r0, c_horizon;
  common(clifford, cc);
  clifford->add_option("--r0", r0, "initial radius of the S^m factor, in (0,1)");
  clifford->add_option("--horizon", c_horizon, "final time");

  auto* sphere = app.add_subcommand("sphere", "flow a geodesic sphere");
  Common sc;
  std::optional<double> rho0, s_horizon;
  common(sphere, sc);
  sphere->add_option("--rho0", rho0, "initial geodesic radius");
  sphere->add_option("--horizon", s_horizon, "final time");

  for (auto* sub : {run, poincare, clifford, sphere}) sub->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed()) {
    if (out_dir && configs.size() > 1) {
      std::fputs("pinchflow: --out needs a single config\n", stderr);
      return kExitConfig;
    }
    json flags = json::object();
    put(flags, "seed", run_seed);
    std::vector<Outcome> results(configs.size());
    if (configs.size() == 1) {
      results[0] = run_one(configs[0], flags, jobs, out_dir);
    } else {
      const int workers = std::min<int>(jobs, static_cast<int>(configs.size()));
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < configs.size(); i += workers) results[i] = run_one(configs[i], flags, 1, out_dir);
        });
      }
      for (auto& t : pool) t.join();
    }
    int code = kExitPass;
    for (const auto& o : results) {
      const int c = report(o);
      if (c == kExitConfig || (c == kExitAssertion && code == kExitPass)) code = c;
    }
    return code;
  }

  json flags = json::object();
  const Common* c = nullptr;
  if (poincare->parsed()) {
    c = &pc;
    flags["mode"] = "poincare";
    json p = json::object();
    put(p, "eta", eta);
    put(p, "budget", budget);
    if (!p.empty()) flags["poincare"] = p;
    put(flags, "seed", seed);
  } else if (clifford->parsed()) {
    c = &cc;
    flags["mode"] = "clifford";
    json f = json::object();
    put(f, "r0", r0);
    put(f, "horizon", c_horizon);
    if (!f.empty()) flags["flow"] = f;
  } else {
    c = &sc;
    flags["mode"] = "hyperparallel";
    json f = json::object();
    put(f, "rho0", rho0);
    put(f, "horizon", s_horizon);
    if (!f.empty()) flags["flow"] = f;
  }
  const json p = params_of(*c);
  if (!p.empty()) flags["params"] = p;
  return report(run_one(c->config, flags, jobs, out_dir));
}
