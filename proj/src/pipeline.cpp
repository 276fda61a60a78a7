#include "superres/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>

#include "superres/correlation.hpp"
#include "superres/errors.hpp"
#include "superres/io.hpp"
#include "superres/serialization.hpp"
#include "superres/speckle.hpp"

namespace superres {

bool Analysis::fit_failed() const {
  return std::any_of(orders.begin(), orders.end(), [](const OrderAnalysis& o) { return !o.error.empty(); });
}

std::vector<ModulationSpectrum> Analysis::gated() const {
  std::vector<ModulationSpectrum> out;
  for (const auto& o : orders) {
    if (o.error.empty()) out.push_back(o.gated);
  }
  return out;
}

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes into out_dir and remembers what it wrote.
class Outputs {
 public:
  Outputs(const Config& config, CommandOutcome& outcome) : dir_(config.out_dir), outcome_(outcome) {}

  fs::path path(const std::string& name) const { return dir_ / name; }

  void text(const std::string& name, std::string_view contents) {
    write_file_atomic(path(name), contents);
    outcome_.outputs.push_back(path(name));
  }

  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

  void curve(const std::string& name, const CorrelationCurve& c) {
    write_curve(path(name), c);
    outcome_.outputs.push_back(path(name));
  }

  void frames(const std::string& name, const FrameStack& stack) {
    write_frame_stack(path(name), stack);
    outcome_.outputs.push_back(path(name));
  }

 private:
  fs::path dir_;
  CommandOutcome& outcome_;
};

void write_manifest(const Config& config, std::string_view command, const std::string& started,
                    const CommandOutcome& outcome) {
  Json j;
  j["tool"] = "superres";
  j["version"] = std::string(kToolVersion);
  j["command"] = std::string(command);
  j["seed"] = config.seed;
  j["config"] = emit_config(config);
  j["outputs"] = Json::array();
  for (const auto& p : outcome.outputs) j["outputs"].push_back(p.generic_string());
  j["exit_code"] = outcome.exit_code;
  j["started_utc"] = started;
  j["finished_utc"] = utc_now();
  write_file_atomic(config.out_dir / ("manifest." + std::string(command) + ".json"), j.dump(2) + "\n");
}

std::string curve_stem(int order) { return "curve_m" + std::to_string(order); }

SpeckleRun speckle_run(const Config& c) {
  SpeckleRun run;
  run.geometry = c.geometry();
  run.weights = c.weights;
  run.frames = c.frames;
  run.seed = c.seed;
  run.pixels = ScanGrid::periodic(c.pixels);
  run.quantization_bits = c.quantization_bits;
  run.threads = c.threads;
  return run;
}

void write_curves(std::span<const CorrelationCurve> curves, const Config& config, Outputs& out) {
  for (const auto& c : curves) {
    const std::string stem = curve_stem(c.order);
    out.curve(stem + ".bin", c);
    if (config.format == OutputFormat::json) {
      out.json(stem + ".json", to_json(c));
    } else {
      out.text(stem + ".csv", curve_csv(c));
    }
  }
}

std::string frequency_list(const ModulationSpectrum& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.harmonics.size(); ++i) {
    out += (i ? ", " : "") + std::to_string(static_cast<int>(s.harmonics[i].frequency));
  }
  return out + "}";
}

Json analysis_json(const Analysis& a) {
  Json j = Json::array();
  for (const auto& o : a.orders) {
    Json row;
    row["m"] = o.order;
    if (!o.error.empty()) {
      row["error"] = o.error;
      row["diagnostics"] = o.diagnostics;
    } else {
      row["A0"] = to_json(o.fitted)["A0"];
      row["sigma_A0"] = to_json(o.fitted)["sigma_A0"];
      row["harmonics"] = Json::array();
      for (const auto& d : o.decisions) row["harmonics"].push_back(to_json(d));
    }
    j.push_back(row);
  }
  return j;
}

void write_analysis(const Analysis& a, const Config& config, Outputs& out) {
  Json spectra;
  spectra["fitted"] = Json::array();
  spectra["gated"] = Json::array();
  spectra["failures"] = Json::array();
  std::vector<std::pair<int, std::vector<GateDecision>>> table;
  for (const auto& o : a.orders) {
    if (!o.error.empty()) {
      spectra["failures"].push_back({{"m", o.order}, {"error", o.error}, {"diagnostics", o.diagnostics}});
      continue;
    }
    spectra["fitted"].push_back(to_json(o.fitted));
    spectra["gated"].push_back(to_json(o.gated));
    table.emplace_back(o.order, o.decisions);
  }
  out.json("spectra.json", spectra);
  out.json("evidence.json", to_json(a.evidence));
  if (config.format == OutputFormat::json) {
    out.json("table1.json", analysis_json(a));
  } else {
    out.text("table1.csv", decisions_csv(table));
  }
}

void note_analysis(const Analysis& a, CommandOutcome& outcome) {
  for (const auto& w : a.warnings) outcome.messages.push_back("warning: " + w);
  for (const auto& o : a.orders) {
    if (o.error.empty()) {
      outcome.messages.push_back("m=" + std::to_string(o.order) + ": accepted f = " + frequency_list(o.gated));
    } else {
      outcome.messages.push_back("m=" + std::to_string(o.order) + ": fit failed: " + o.error);
    }
  }
  if (a.fit_failed()) outcome.exit_code = 4;
}

std::vector<ApertureReport> apertures_for(std::span<const int> orders) {
  std::vector<ApertureReport> out;
  for (int m : orders) out.push_back(aperture_report(m));
  return out;
}

void note_reconstruction(const ReconstructionReport& r, CommandOutcome& outcome) {
  outcome.messages.push_back(std::to_string(r.result.candidates.size()) + " candidate geometr" +
                             (r.result.candidates.size() == 1 ? "y" : "ies"));
  for (const auto& c : r.result.candidates) {
    std::ostringstream line;
    line << "  x = (";
    for (std::size_t i = 0; i < c.geometry.gaps().size(); ++i) line << (i ? "," : "") << c.geometry.gaps()[i];
    line << ")";
    if (r.ranked) line << "  chi2 = " << format_number(c.score) << (c.joint_best ? "  [best]" : "");
    outcome.messages.push_back(line.str());
  }
  if (!r.note.empty()) outcome.messages.push_back("note: " + r.note);
}

}  // namespace

std::vector<CorrelationCurve> make_curves(const Config& config) {
  validate(config);
  if (config.gaps.empty()) {
    throw ConfigError("invalid configuration:\n  geometry.x: required to simulate");
  }
  if (config.mode == SimulationMode::analytic) {
    std::vector<CorrelationCurve> out;
    for (int m : config.orders) {
      out.push_back(g_m_analytic(config.geometry(),
                                 DetectorArray::at_magic_positions(m, ScanGrid::periodic(config.pixels)),
                                 config.weights));
    }
    return out;
  }
  EstimatorOptions est;
  est.bootstrap = config.bootstrap;
  est.max_blocks = config.max_blocks;
  est.seed = config.seed;
  est.threads = config.threads;
  return simulate_curves(speckle_run(config), config.orders, est);
}

Analysis analyze_curves(std::span<const CorrelationCurve> curves, const Config& config) {
  Analysis a;
  if (curves.empty()) a.warnings.push_back("no curves to analyze; evidence is empty");
  const FitOptions options = config.fit_options();
  for (const auto& curve : curves) {
    OrderAnalysis o;
    o.order = curve.order;
    try {
      o.fitted = config.fit == FitKind::fixed_frequency ? fit_fixed(curve, curve.order, options)
                                                        : fit_free(curve, curve.order, options);
      o.decisions = gate_decisions(o.fitted, config.gate);
      o.gated = gate(o.fitted, config.gate);
    } catch (const FitError& e) {
      o.error = e.what();
      o.diagnostics = e.diagnostics();
    } catch (const CoverageError& e) {
      o.error = e.what();
    }
    a.orders.push_back(std::move(o));
  }
  const auto gated = a.gated();
  a.evidence = aggregate(gated);
  return a;
}

ReconstructionReport reconstruct(const EvidenceTable& evidence, std::span<const ModulationSpectrum> gated,
                                 const Config& config) {
  ReconstructionReport r;
  r.result = search(evidence, config.search);
  if (!r.result.candidates.empty()) {
    try {
      r.result = disambiguate(std::move(r.result), gated);
      r.ranked = true;
    } catch (const DegenerateError& e) {
      r.note = std::string("candidates not ranked: ") + e.what();
    }
  }
  if (!r.result.exhaustive) {
    r.note += std::string(r.note.empty() ? "" : "; ") +
              "search bounds cut the enumeration, candidates may be incomplete";
  }
  r.apertures = apertures_for(evidence.orders_measured);
  return r;
}

CommandOutcome cmd_simulate(const Config& config) {
  const std::string started = utc_now();
  validate(config);
  CommandOutcome outcome;
  Outputs out(config, outcome);
  const auto curves = make_curves(config);
  write_curves(curves, config, out);
  if (config.save_frames && config.mode == SimulationMode::monte_carlo) {
    FrameStack stack = sample_frames(speckle_run(config));
    if (config.quantization_bits > 0) {
      QuantizeReport q;
      stack = quantize(stack, config.quantization_bits, &q);
      if (q.heavily_clipped) {
        outcome.messages.push_back("warning: quantization uses few levels (" + std::to_string(q.levels_used) +
                                   "), correlations are biased");
      }
    }
    out.frames("frames.bin", stack);
  }
  for (const auto& c : curves) {
    outcome.messages.push_back("m=" + std::to_string(c.order) + ": " + std::to_string(c.size()) + " points" +
                               (c.sigma.empty() ? "" : c.sigma_reliable ? ", sigma from bootstrap"
                                                                        : ", sigma unreliable (too few frames)"));
  }
  write_manifest(config, "simulate", started, outcome);
  return outcome;
}

CommandOutcome cmd_analyze(const Config& config) {
  const std::string started = utc_now();
  validate(config);
  CommandOutcome outcome;
  Outputs out(config, outcome);
  std::vector<CorrelationCurve> curves;
  std::vector<std::string> missing;
  for (int m : config.orders) {
    const std::string stem = curve_stem(m);
    CorrelationCurve c;
    if (fs::exists(out.path(stem + ".bin"))) {
      c = read_curve(out.path(stem + ".bin"));
    } else if (fs::exists(out.path(stem + ".csv"))) {
      c = curve_from_csv(read_file(out.path(stem + ".csv")), m);
    } else if (fs::exists(out.path(stem + ".json"))) {
      try {
        c = curve_from_json(Json::parse(read_file(out.path(stem + ".json"))));
      } catch (const nlohmann::json::exception& e) {
        throw IoError(out.path(stem + ".json").string() + ": " + e.what());
      }
    } else {
      missing.push_back(std::to_string(m));
      continue;
    }
    if (c.order != m) {
      throw IoError(stem + " holds order " + std::to_string(c.order) + ", expected " + std::to_string(m));
    }
    curves.push_back(std::move(c));
  }
  Analysis a = analyze_curves(curves, config);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ",") + m;
    a.warnings.insert(a.warnings.begin(), "no curve file for m = " + list + " in " + config.out_dir.string());
  }
  write_analysis(a, config, out);
  note_analysis(a, outcome);
  write_manifest(config, "analyze", started, outcome);
  return outcome;
}

CommandOutcome cmd_reconstruct(const Config& config) {
  const std::string started = utc_now();
  validate(config);
  CommandOutcome outcome;
  Outputs out(config, outcome);
  EvidenceTable evidence;
  std::vector<ModulationSpectrum> gated;
  try {
    evidence = evidence_from_json(Json::parse(read_file(out.path("evidence.json"))));
    const Json spectra = Json::parse(read_file(out.path("spectra.json")));
    for (const auto& s : spectra.at("gated")) gated.push_back(spectrum_from_json(s));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("cannot read analysis results: ") + e.what());
  }
  try {
    const auto report = reconstruct(evidence, gated, config);
    out.json("reconstruction.json", to_json(report));
    note_reconstruction(report, outcome);
  } catch (const EmptyEvidenceError& e) {
    outcome.exit_code = 3;
    outcome.messages.push_back(std::string("error: ") + e.what());
  }
  write_manifest(config, "reconstruct", started, outcome);
  return outcome;
}

CommandOutcome cmd_aperture(const Config& config) {
  const std::string started = utc_now();
  validate(config);
  CommandOutcome outcome;
  Outputs out(config, outcome);
  const auto reports = apertures_for(config.aperture_orders);
  if (config.format == OutputFormat::json) {
    Json j = Json::array();
    for (const auto& r : reports) j.push_back(to_json(r));
    out.json("aperture.json", j);
  } else {
    out.text("aperture.csv", aperture_csv(reports));
  }
  for (const auto& r : reports) {
    outcome.messages.push_back("m=" + std::to_string(r.order) + "  r_moving=" + format_number(r.r_moving) +
                               "  r_total=" + format_number(r.r_total));
  }
  write_manifest(config, "aperture", started, outcome);
  return outcome;
}

CommandOutcome cmd_report(const Config& config) {
  const std::string started = utc_now();
  validate(config);
  CommandOutcome outcome;
  Outputs out(config, outcome);

  const auto curves = make_curves(config);
  write_curves(curves, config, out);
  const Analysis a = analyze_curves(curves, config);
  write_analysis(a, config, out);
  note_analysis(a, outcome);

  Json report;
  report["x"] = config.gaps;
  report["seed"] = config.seed;
  report["mode"] = config.mode == SimulationMode::analytic ? "analytic" : "monte_carlo";
  report["frames"] = config.frames;
  report["orders"] = config.orders;
  report["analysis"] = analysis_json(a);
  report["evidence"] = to_json(a.evidence);
  report["reconstruction"] = nullptr;
  const SourceGeometry truth = canonical(config.geometry());
  Json truth_json{{"x", truth.gaps()}, {"rank", nullptr}};
  try {
    const auto gated = a.gated();
    const auto r = reconstruct(a.evidence, gated, config);
    out.json("reconstruction.json", to_json(r));
    note_reconstruction(r, outcome);
    report["reconstruction"] = to_json(r);
    for (std::size_t i = 0; i < r.result.candidates.size(); ++i) {
      if (r.result.candidates[i].geometry == truth) truth_json["rank"] = i + 1;
    }
  } catch (const EmptyEvidenceError& e) {
    outcome.exit_code = 3;
    outcome.messages.push_back(std::string("error: ") + e.what());
  }
  report["truth"] = truth_json;

  const auto apertures = apertures_for(config.aperture_orders);
  report["apertures"] = Json::array();
  for (const auto& r : apertures) report["apertures"].push_back(to_json(r));
  if (config.format == OutputFormat::json) {
    out.json("aperture.json", report["apertures"]);
  } else {
    out.text("aperture.csv", aperture_csv(apertures));
  }
  if (config.scene) {
    const PhysicalScene& s = *config.scene;
    report["scene"] = {{"wavelength_m", s.wavelength_m},
                       {"distance_m", s.distance_m},
                       {"d_m", s.lattice_constant_m},
                       {"far_field", s.far_field(config.geometry())}};
    if (!s.far_field(config.geometry())) {
      outcome.messages.push_back("warning: detector distance is not far field for this geometry");
    }
  }
  out.json("report.json", report);
  write_manifest(config, "report", started, outcome);
  return outcome;
}

}  // namespace superres
