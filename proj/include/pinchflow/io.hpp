#pragma once

// CSV and JSON export. Doubles go out with 17 significant digits in CSV;
// JSON uses the shortest round-tripping form. Non-finite values are "nan",
// "inf", "-inf" in CSV and null in JSON.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "pinchflow/curvature_algebra.hpp"
#include "pinchflow/equivariant_flow.hpp"
#include "pinchflow/estimate_monitor.hpp"
#include "pinchflow/poincare_verifier.hpp"
#include "pinchflow/singularity_rescaler.hpp"
#include "pinchflow/trace.hpp"

namespace pinchflow {

using json = nlohmann::json;

inline constexpr const char* kTraceCsvHeader =
    "t,sigma,a,b,z,kappa,lam_a,lam_b,H,A_norm_sq,grad_A_sq,hess_A_sq";

/// printf("%.17g")
std::string format_double(double x);

/// One row per grid point per snapshot. Traces without a profile leave
/// sigma, a, b, z as nan.
void write_trace_csv(std::ostream& out, const FlowTrace& trace);
std::string trace_csv(const FlowTrace& trace);

/// Per-snapshot rescaled spectra: t, snapshot, index, best_k, model_distance,
/// neck_ratio, then normalized_0..normalized_{n-1}.
std::string rescaled_csv(const BlowupRecord& record);

/// Finite doubles as numbers, the rest as null.
json number(double x);

void to_json(json& j, const PinchingParams& p);
void to_json(json& j, const PinchingReport& r);
void to_json(json& j, const Coefficients& c);
void to_json(json& j, const ClassCVerdict& v);
void to_json(json& j, const Witness& w);
void to_json(json& j, const ClassCBounds& b);
void to_json(json& j, const PreservationCheck& c);
void to_json(json& j, const DecayCheck& c);
void to_json(json& j, const CylindricalEntry& e);
void to_json(json& j, const GradientEntry& e);
void to_json(json& j, const GradientCheck& c);
void to_json(json& j, const HessianCheck& c);
void to_json(json& j, const KatoCheck& c);
void to_json(json& j, const TimeBoundCheck& c);
void to_json(json& j, const EstimateReport& r);
void to_json(json& j, const FrontierPoint& f);
void to_json(json& j, const LpRecord& r);
void to_json(json& j, const RescaledSpectrum& s);
void to_json(json& j, const BlowupRecord& r);
void to_json(json& j, const PickedPoint& p);
void to_json(json& j, const RaySample& r);
void to_json(json& j, const GammaCertificate& c);
void to_json(json& j, const MultiplicityRow& r);
void to_json(json& j, const MultiplicityVerdict& v);

}  // namespace pinchflow
