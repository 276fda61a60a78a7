#pragma once

// End-to-end workflows behind the command-line tool.
//
// Pure stages (make_curves, analyze_curves, reconstruct) take a Config and
// return values; the cmd_* wrappers read and write files under
// config.out_dir. Every file is written atomically, reports carry no
// timestamps, and each command leaves manifest.<command>.json with the
// exact configuration needed to rerun it.
//
// Layout of out_dir:
//   curve_m<m>.bin            exact curves with bootstrap replicates
//   curve_m<m>.csv|json       plot export
//   frames.bin                frame stack (simulation.save_frames)
//   spectra.json              fitted and gated spectra, per-order failures
//   evidence.json
//   table1.csv|json           every fitted harmonic with its gate decision
//   reconstruction.json
//   aperture.csv|json
//   report.json               summary written by `report`

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "superres/config.hpp"
#include "superres/curve.hpp"
#include "superres/evidence.hpp"
#include "superres/fitting.hpp"
#include "superres/reconstruction.hpp"

namespace superres {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct CommandOutcome {
  /// 0 ok, 3 empty evidence, 4 a fit failed (outputs are still written).
  int exit_code = 0;
  std::vector<std::string> messages;
  std::vector<std::filesystem::path> outputs;
};

/// Monte Carlo or analytic curves for config.orders. Throws ConfigError
/// without a geometry.
std::vector<CorrelationCurve> make_curves(const Config& config);

struct OrderAnalysis {
  int order = 0;
  ModulationSpectrum fitted;
  ModulationSpectrum gated;
  std::vector<GateDecision> decisions;
  std::string error;  // empty when the fit succeeded
  std::string diagnostics;
};

struct Analysis {
  std::vector<OrderAnalysis> orders;
  EvidenceTable evidence;
  std::vector<std::string> warnings;

  bool fit_failed() const;
  std::vector<ModulationSpectrum> gated() const;
};

/// Fits and gates every curve; a failing order is recorded and skipped.
Analysis analyze_curves(std::span<const CorrelationCurve> curves, const Config& config);

/// search + disambiguate + apertures for the measured orders. Throws
/// EmptyEvidenceError when nothing is Present.
ReconstructionReport reconstruct(const EvidenceTable& evidence,
                                 std::span<const ModulationSpectrum> gated, const Config& config);

CommandOutcome cmd_simulate(const Config& config);
CommandOutcome cmd_analyze(const Config& config);
CommandOutcome cmd_reconstruct(const Config& config);
CommandOutcome cmd_aperture(const Config& config);
/// simulate, analyze, reconstruct and aperture in one go, plus report.json.
CommandOutcome cmd_report(const Config& config);

}  // namespace superres
