#include "pinchflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace pinchflow {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& out, const FlowTrace& tr) {
  out << kTraceCsvHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : tr.snapshots) {
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      const auto& g = s.geometry[i];
      const bool prof = i < s.profile.size();
      const double row[] = {s.t,
                            i < s.sigma.size() ? s.sigma[i] : nan,
                            prof ? s.profile[i][0] : nan,
                            prof ? s.profile[i][1] : nan,
                            prof ? s.profile[i][2] : nan,
                            g.kappa,
                            g.lam_a,
                            g.lam_b,
                            g.H,
                            g.A_norm_sq,
                            g.grad_A_sq,
                            g.hess_A_sq};
      for (std::size_t c = 0; c < std::size(row); ++c) {
        if (c) out << ',';
        out << format_double(row[c]);
      }
      out << '\n';
    }
  }
}

std::string trace_csv(const FlowTrace& tr) {
  std::ostringstream s;
  write_trace_csv(s, tr);
  return s.str();
}

std::string rescaled_csv(const BlowupRecord& r) {
  std::ostringstream out;
  const std::size_t n = r.rescaled.empty() ? 0 : r.rescaled.front().normalized.size();
  out << "t,snapshot,index,best_k,model_distance,neck_ratio";
  for (std::size_t i = 0; i < n; ++i) out << ",normalized_" << i;
  out << '\n';
  for (const auto& s : r.rescaled) {
    out << format_double(s.t) << ',' << s.snapshot << ',' << s.index << ',' << s.best_k << ','
        << format_double(s.model_distance) << ',' << format_double(s.neck_ratio);
    for (double v : s.normalized) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

namespace {

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

template <class T>
json list(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x);
  return a;
}

}  // namespace

void to_json(json& j, const PinchingParams& p) {
  j = {{"n", p.n}, {"m", p.m}, {"alpha", p.alpha}, {"K", p.K}, {"V", number(p.V)}, {"Theta", number(p.Theta)}};
}

void to_json(json& j, const PinchingReport& r) {
  j = {{"strict_margin", number(r.strict_margin)},
       {"g_m_alpha", number(r.g_m_alpha)},
       {"f_eta", number(r.f_eta)},
       {"f_m_eta", number(r.f_m_eta)},
       {"in_U", r.in_U}};
}

void to_json(json& j, const Coefficients& c) {
  j = {{"n", c.n},           {"m", c.m},         {"alpha", c.alpha}, {"eta", c.eta},
       {"a_m", number(c.a_m)}, {"b_m", number(c.b_m)}, {"a", number(c.a)}, {"b", number(c.b)},
       {"eta0", number(c.eta0)}, {"delta", number(c.delta)}, {"beta", number(c.beta)}, {"C0", number(c.C0)}};
}

void to_json(json& j, const ClassCVerdict& v) {
  j = {{"V_measured", number(v.V_measured)},
       {"Theta_measured", number(v.Theta_measured)},
       {"max_g", number(v.max_g)},
       {"in_class", v.in_class}};
}

void to_json(json& j, const Witness& w) {
  j = {{"t", number(w.t)}, {"snapshot", w.snapshot}, {"index", w.index}};
}

void to_json(json& j, const ClassCBounds& b) {
  j = {{"Lambda0", number(b.Lambda0)},
       {"lambda0", number(b.lambda0)},
       {"T_lower", number(b.T_lower)},
       {"Lambda0_theta_sq", number(b.Lambda0_theta_sq)},
       {"lambda0_theta_sq", number(b.lambda0_theta_sq)},
       {"T_lower_theta_sq", number(b.T_lower_theta_sq)}};
}

void to_json(json& j, const PreservationCheck& c) {
  j = {{"status", to_string(c.status)},
       {"initially_in_class", c.initially_in_class},
       {"max_g", number(c.max_g)},
       {"max_relative", number(c.max_relative)},
       {"where", c.where}};
}

void to_json(json& j, const DecayCheck& c) {
  j = {{"status", to_string(c.status)},
       {"t", numbers(c.t)},
       {"sup_ratio", numbers(c.sup_ratio)},
       {"bound", numbers(c.bound)},
       {"worst_quotient", number(c.worst_quotient)},
       {"fitted_exponent", number(c.fitted_exponent)},
       {"bound_exponent", number(c.bound_exponent)},
       {"where", c.where}};
}

void to_json(json& j, const CylindricalEntry& e) {
  j = {{"eta", e.eta}, {"C_fit", number(e.C_fit)}, {"C_eta", number(e.C_eta)}, {"where", e.where}};
}

void to_json(json& j, const GradientEntry& e) {
  j = {{"eta", e.eta}, {"sup", number(e.sup)}, {"where", e.where}};
}

void to_json(json& j, const GradientCheck& c) {
  j = {{"status", to_string(c.status)},
       {"t_start", number(c.t_start)},
       {"A2_growth", number(c.A2_growth)},
       {"min_G0", number(c.min_G0)},
       {"per_eta", list(c.per_eta)},
       {"crude_sup", number(c.crude_sup)},
       {"crude_where", c.crude_where}};
}

void to_json(json& j, const HessianCheck& c) {
  j = {{"status", to_string(c.status)}, {"sup", number(c.sup)}, {"where", c.where}};
}

void to_json(json& j, const KatoCheck& c) {
  j = {{"status", to_string(c.status)},
       {"min_ratio", number(c.min_ratio)},
       {"margin", number(c.margin)},
       {"where", c.where}};
}

void to_json(json& j, const TimeBoundCheck& c) {
  j = {{"status", to_string(c.status)},
       {"bounds", c.bounds},
       {"singular", c.singular},
       {"T_obs", number(c.T_obs)},
       {"lhs", number(c.lhs)},
       {"rhs", number(c.rhs)},
       {"theta_sq_holds", c.theta_sq_holds},
       {"theta_variants_diverge", c.singular && c.status == CheckStatus::pass && !c.theta_sq_holds}};
}

void to_json(json& j, const EstimateReport& r) {
  j = {{"preservation", r.preservation}, {"decay", r.decay},       {"cylindrical", list(r.cylindrical)},
       {"gradient", r.gradient},         {"hessian", r.hessian},   {"kato", r.kato},
       {"time_bound", r.time_bound}};
}

void to_json(json& j, const FrontierPoint& f) {
  j = {{"eta", f.eta}, {"h_raw", number(f.h_raw)}, {"h", number(f.h)}, {"h_finite", std::isfinite(f.h)},
       {"where", f.where}};
}

void to_json(json& j, const LpRecord& r) {
  j = {{"p", r.p},
       {"sigma", r.sigma},
       {"eta", r.eta},
       {"t", numbers(r.t)},
       {"norm", numbers(r.norm)},
       {"fitted_rate", number(r.fitted_rate)},
       {"bound_rate", number(r.bound_rate)},
       {"C_min", number(r.C_min)},
       {"vacuous", r.vacuous},
       {"satisfied", r.satisfied}};
}

void to_json(json& j, const RescaledSpectrum& s) {
  j = {{"t", number(s.t)},
       {"snapshot", s.snapshot},
       {"index", s.index},
       {"rescaled", numbers(s.rescaled)},
       {"normalized", numbers(s.normalized)},
       {"distances", numbers(s.distances)},
       {"best_k", s.best_k},
       {"model_distance", number(s.model_distance)},
       {"max_H2_over_K", number(s.max_H2_over_K)},
       {"neck_ratio", number(s.neck_ratio)}};
}

void to_json(json& j, const BlowupRecord& r) {
  j = {{"type", to_string(r.type)},
       {"T", number(r.T)},
       {"t", numbers(r.t)},
       {"functional", numbers(r.functional)},
       {"functional_sup", number(r.functional_sup)},
       {"decades", number(r.decades)},
       {"last_decade_increase", number(r.last_decade_increase)},
       {"rescaled", list(r.rescaled)},
       {"competing", list(r.competing)},
       {"best_k", r.best_k},
       {"message", r.message}};
}

void to_json(json& j, const PickedPoint& p) {
  j = {{"j", p.j},         {"T_j", number(p.T_j)}, {"t", number(p.t)}, {"snapshot", p.snapshot},
       {"index", p.index}, {"A2", number(p.A2)},   {"r", number(p.r)}};
}

void to_json(json& j, const RaySample& r) {
  j = {{"t", r.t},
       {"lambda", numbers(r.lambda)},
       {"W", number(r.W)},
       {"C_norm_sq", number(r.C_norm_sq)},
       {"ratio", number(r.ratio)},
       {"f", number(r.f)},
       {"g", number(r.g)},
       {"lambda_hat", numbers(r.lambda_hat)},
       {"g_hat", number(r.g_hat)}};
}

void to_json(json& j, const GammaCertificate& c) {
  j = {{"params", {{"n", c.params.n}, {"m", c.params.m}, {"alpha", c.params.alpha}, {"eta", c.eta}}},
       {"gamma_hat", number(c.gamma_hat)},
       {"minimizer", numbers(c.minimizer)},
       {"minimizer_f", number(c.minimizer_f)},
       {"minimizer_g", number(c.minimizer_g)},
       {"minimizer_W", number(c.minimizer_W)},
       {"feasible", c.feasible},
       {"budget", c.budget},
       {"seed", c.seed},
       {"unconstrained_ray", list(c.unconstrained_ray)}};
}

void to_json(json& j, const MultiplicityRow& r) {
  j = {{"ell", r.ell},
       {"first_margin", number(r.first_margin)},
       {"second_margin", number(r.second_margin)},
       {"first_holds", r.first_holds},
       {"second_holds", r.second_holds}};
}

void to_json(json& j, const MultiplicityVerdict& v) {
  j = {{"rows", list(v.rows)}, {"pass", v.pass}};
}

}  // namespace pinchflow
