#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "pinchflow/error.hpp"
#include "pinchflow/pinchflow.h"
#include "pinchflow/scenario.hpp"

struct pf_scenario {
  pinchflow::ScenarioConfig config;
};

struct pf_result {
  pinchflow::ScenarioResult result;
};

namespace {

thread_local std::string last_error;

pf_status map_code(pinchflow::ErrorCode c) {
  using pinchflow::ErrorCode;
  switch (c) {
    case ErrorCode::invalid_argument: return PF_INVALID_ARGUMENT;
    case ErrorCode::inadmissible: return PF_INADMISSIBLE;
    case ErrorCode::out_of_range: return PF_RANGE;
    case ErrorCode::config: return PF_CONFIG;
    case ErrorCode::io: return PF_IO;
    case ErrorCode::numerical: return PF_NUMERICAL;
    case ErrorCode::assertion: return PF_ASSERTION;
    case ErrorCode::not_applicable: return PF_NOT_APPLICABLE;
  }
  return PF_INTERNAL;
}

pf_status fail(pf_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

template <class F>
pf_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const pinchflow::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(PF_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PF_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PF_INTERNAL, e.what());
  } catch (...) {
    return fail(PF_INTERNAL, "unknown exception");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

pinchflow::json parse_flags(const char* flags) {
  if (!flags) return pinchflow::json::object();
  try {
    auto j = pinchflow::json::parse(flags);
    if (!j.is_object()) throw pinchflow::ConfigError("flags must be a JSON object");
    return j;
  } catch (const pinchflow::json::parse_error& e) {
    throw pinchflow::ConfigError(std::string("malformed flags JSON: ") + e.what());
  }
}

pinchflow::json parse_doc(const char* text, const char* what) {
  try {
    return pinchflow::json::parse(text);
  } catch (const pinchflow::json::parse_error& e) {
    throw pinchflow::ConfigError(std::string("malformed JSON in ") + what + ": " + e.what());
  }
}

#define PF_REQUIRE(cond, msg) \
  if (!(cond)) return fail(PF_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* pf_version(void) { return "1.0.0"; }

const char* pf_status_name(pf_status s) {
  switch (s) {
    case PF_OK: return "ok";
    case PF_INVALID_ARGUMENT: return "invalid argument";
    case PF_INADMISSIBLE: return "inadmissible parameters";
    case PF_RANGE: return "out of range";
    case PF_CONFIG: return "configuration error";
    case PF_IO: return "i/o error";
    case PF_NUMERICAL: return "numerical failure";
    case PF_ASSERTION: return "assertion failed";
    case PF_NOT_APPLICABLE: return "not applicable";
    case PF_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pf_last_error(void) { return last_error.c_str(); }

void pf_free_string(char* s) { std::free(s); }

pf_status pf_scenario_from_file(const char* path, const char* flags, pf_scenario** out) {
  PF_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::FILE* f = std::fopen(path, "rb");
    if (!f) return fail(PF_IO, std::string("cannot read config '") + path + "'");
    std::string text;
    char buf[4096];
    for (std::size_t k; (k = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, k);
    std::fclose(f);
    auto doc = pinchflow::merge_flags(parse_doc(text.c_str(), path), parse_flags(flags));
    *out = new pf_scenario{pinchflow::parse_scenario(doc)};
    return PF_OK;
  });
}

pf_status pf_scenario_from_json(const char* text, const char* flags, pf_scenario** out) {
  PF_REQUIRE(text && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto doc = pinchflow::merge_flags(parse_doc(text, "config"), parse_flags(flags));
    *out = new pf_scenario{pinchflow::parse_scenario(doc)};
    return PF_OK;
  });
}

pf_status pf_scenario_output_dir(const pf_scenario* sc, char** out) {
  PF_REQUIRE(sc && out, "null argument");
  return guarded([&] {
    *out = dup(sc->config.output_dir);
    return PF_OK;
  });
}

pf_status pf_scenario_name(const pf_scenario* sc, char** out) {
  PF_REQUIRE(sc && out, "null argument");
  return guarded([&] {
    *out = dup(sc->config.name);
    return PF_OK;
  });
}

void pf_scenario_free(pf_scenario* sc) { delete sc; }

pf_status pf_scenario_run(const pf_scenario* sc, int jobs, pf_result** out) {
  PF_REQUIRE(sc && out, "null argument");
  PF_REQUIRE(jobs >= 1, "jobs must be >= 1");
  *out = nullptr;
  return guarded([&] {
    *out = new pf_result{pinchflow::run_scenario(sc->config, jobs)};
    return PF_OK;
  });
}

pf_status pf_result_passed(const pf_result* r, int* passed) {
  PF_REQUIRE(r && passed, "null argument");
  *passed = r->result.passed() ? 1 : 0;
  return PF_OK;
}

pf_status pf_result_first_failure(const pf_result* r, char** out) {
  PF_REQUIRE(r && out, "null argument");
  return guarded([&] {
    *out = dup(r->result.first_failure());
    return PF_OK;
  });
}

pf_status pf_result_summary(const pf_result* r, char** out) {
  PF_REQUIRE(r && out, "null argument");
  return guarded([&] {
    *out = dup(r->result.summary);
    return PF_OK;
  });
}

pf_status pf_result_report_json(const pf_result* r, char** out) {
  PF_REQUIRE(r && out, "null argument");
  return guarded([&] {
    *out = dup(r->result.report.dump(2) + "\n");
    return PF_OK;
  });
}

pf_status pf_result_trace_csv(const pf_result* r, char** out) {
  PF_REQUIRE(r && out, "null argument");
  *out = nullptr;
  if (!r->result.trace) return fail(PF_NOT_APPLICABLE, "scenario produced no trace");
  return guarded([&] {
    *out = dup(pinchflow::trace_csv(*r->result.trace));
    return PF_OK;
  });
}

pf_status pf_result_write(const pf_result* r, const char* dir) {
  PF_REQUIRE(r, "null argument");
  return guarded([&] {
    pinchflow::write_artifacts(r->result, dir ? std::string(dir) : r->result.config.output_dir);
    return PF_OK;
  });
}

void pf_result_free(pf_result* r) { delete r; }

pf_status pf_admissible(int n, int m, double alpha, int* ok) {
  PF_REQUIRE(ok, "null argument");
  return guarded([&] {
    pinchflow::PinchingParams p;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    *ok = pinchflow::admissible(p) ? 1 : 0;
    return PF_OK;
  });
}

pf_status pf_sphere_extinction_time(int n, double K, double rho0, double* T) {
  PF_REQUIRE(T, "null argument");
  PF_REQUIRE(n >= 2 && K > 0.0 && rho0 > 0.0, "need n >= 2, K > 0, rho0 > 0");
  return guarded([&] {
    *T = pinchflow::hyperparallel_extinction_time(n, K, rho0);
    return PF_OK;
  });
}

pf_status pf_pinching_report_json(const double* lambda, int n, int m, double alpha, double K, double eta,
                                  char** out) {
  PF_REQUIRE(lambda && out && n >= 2, "null argument or n < 2");
  return guarded([&] {
    pinchflow::PinchingParams p;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    p.K = K;
    const pinchflow::ShapeSpectrum s(std::vector<double>(lambda, lambda + n));
    pinchflow::json j = pinchflow::pinching_report(s, p, eta);
    *out = dup(j.dump());
    return PF_OK;
  });
}

pf_status pf_poincare_ratio(const double* lambda, int n, int m, double alpha, double eta, double K,
                            double* ratio) {
  PF_REQUIRE(lambda && ratio && n >= 2, "null argument or n < 2");
  return guarded([&] {
    pinchflow::PinchingParams p;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    *ratio = pinchflow::poincare_ratio(std::span<const double>(lambda, static_cast<std::size_t>(n)), p, eta, K);
    return PF_OK;
  });
}

pf_status pf_min_ratio_json(int n, int m, double alpha, double eta, int budget, uint64_t seed, int jobs,
                            char** out) {
  PF_REQUIRE(out, "null argument");
  PF_REQUIRE(jobs >= 1, "jobs must be >= 1");
  return guarded([&] {
    pinchflow::PinchingParams p;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    pinchflow::json j = pinchflow::min_ratio(p, eta, budget, seed, jobs);
    *out = dup(j.dump(2));
    return PF_OK;
  });
}

const char* pf_trace_csv_header(void) { return pinchflow::kTraceCsvHeader; }

}  // extern "C"
