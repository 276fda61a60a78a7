#pragma once

// Text forms of curves, spectra, evidence and reconstruction results.
//
// Numbers are written in shortest round-trip form so a file read back
// reproduces the doubles exactly; non-finite values are spelled "nan",
// "inf" and "-inf" (as JSON strings inside JSON documents).

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "superres/curve.hpp"
#include "superres/evidence.hpp"
#include "superres/fitting.hpp"
#include "superres/reconstruction.hpp"
#include "superres/spectrum.hpp"

namespace superres {

using Json = nlohmann::ordered_json;

std::string format_number(double v);
/// Throws IoError on anything but a complete number or nan/inf spelling.
double parse_number(std::string_view text);

/// Columns delta1_rad,g_value and sigma when the curve has one; an
/// unreliable sigma is written as nan.
std::string curve_csv(const CorrelationCurve& curve);
/// Fixed detectors are assumed at the magic positions of `order`.
CorrelationCurve curve_from_csv(std::string_view text, int order);

Json to_json(const CorrelationCurve& curve);
CorrelationCurve curve_from_json(const Json& j);

Json to_json(const ModulationSpectrum& spectrum);
ModulationSpectrum spectrum_from_json(const Json& j);

Json to_json(const EvidenceTable& table);
EvidenceTable evidence_from_json(const Json& j);

Json to_json(const GateDecision& decision);
Json to_json(const Candidate& candidate);
Json to_json(const ApertureReport& report);
Json to_json(const ReconstructionReport& report);

/// m,r_moving,r_total
std::string aperture_csv(std::span<const ApertureReport> reports);

/// One row per fitted harmonic: m,f,sigma_f,A,sigma_A,accepted,reason.
std::string decisions_csv(std::span<const std::pair<int, std::vector<GateDecision>>> by_order);

}  // namespace superres
