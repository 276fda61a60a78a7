#include "superres/serialization.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "superres/correlation.hpp"
#include "superres/errors.hpp"

namespace superres {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

double number_of(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number(j.get<std::string>());
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw IoError("expected a number, got " + j.dump());
}

std::vector<double> numbers_of(const Json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number_of(v));
  return out;
}

Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto at = line.find(sep);
    out.push_back(trim(line.substr(0, at)));
    if (at == std::string_view::npos) return out;
    line.remove_prefix(at + 1);
  }
}

/// Wraps a JSON access so schema mistakes surface as IoError.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_number(std::string_view text) {
  text = trim(text);
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw IoError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string curve_csv(const CorrelationCurve& curve) {
  validate(curve);
  const bool with_sigma = !curve.sigma.empty();
  std::string out = with_sigma ? "delta1_rad,g_value,sigma\n" : "delta1_rad,g_value\n";
  for (std::size_t p = 0; p < curve.size(); ++p) {
    out += format_number(curve.delta1[p]);
    out += ',';
    out += format_number(curve.values[p]);
    if (with_sigma) {
      out += ',';
      out += format_number(curve.sigma_reliable ? curve.sigma[p] : std::numeric_limits<double>::quiet_NaN());
    }
    out += '\n';
  }
  return out;
}

CorrelationCurve curve_from_csv(std::string_view text, int order) {
  CorrelationCurve curve;
  curve.order = order;
  curve.fixed_deltas = magic_positions(order);
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty curve file");
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "delta1_rad" || header[1] != "g_value" ||
      (header.size() == 3 && header[2] != "sigma") || header.size() > 3) {
    throw IoError("curve header must be delta1_rad,g_value[,sigma], got '" + line + "'");
  }
  const bool with_sigma = header.size() == 3;
  bool any_nan_sigma = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                    " columns");
    }
    curve.delta1.push_back(parse_number(cells[0]));
    curve.values.push_back(parse_number(cells[1]));
    if (with_sigma) {
      curve.sigma.push_back(parse_number(cells[2]));
      any_nan_sigma |= std::isnan(curve.sigma.back());
    }
  }
  curve.sigma_reliable = !any_nan_sigma;
  return curve;
}

Json to_json(const CorrelationCurve& curve) {
  validate(curve);
  Json j;
  j["m"] = curve.order;
  j["fixed_deltas"] = numbers(curve.fixed_deltas);
  j["delta1_rad"] = numbers(curve.delta1);
  j["g_value"] = numbers(curve.values);
  j["sigma"] = curve.sigma.empty() ? Json(nullptr) : numbers(curve.sigma);
  j["sigma_reliable"] = curve.sigma_reliable;
  return j;
}

CorrelationCurve curve_from_json(const Json& j) {
  return guarded("curve", [&] {
    CorrelationCurve c;
    c.order = j.at("m").get<int>();
    c.fixed_deltas = numbers_of(j.at("fixed_deltas"));
    c.delta1 = numbers_of(j.at("delta1_rad"));
    c.values = numbers_of(j.at("g_value"));
    if (!j.at("sigma").is_null()) c.sigma = numbers_of(j.at("sigma"));
    c.sigma_reliable = j.at("sigma_reliable").get<bool>();
    validate(c);
    return c;
  });
}

Json to_json(const ModulationSpectrum& s) {
  Json j;
  j["m"] = s.order;
  j["kind"] = std::string(to_string(s.kind));
  j["A0"] = number(s.offset);
  j["sigma_A0"] = number(s.sigma_offset);
  j["residual_rms"] = number(s.residual_rms);
  j["harmonics"] = Json::array();
  for (const auto& h : s.harmonics) {
    j["harmonics"].push_back({{"kappa", h.kappa},
                              {"f", number(h.frequency)},
                              {"sigma_f", number(h.sigma_frequency)},
                              {"A", number(h.amplitude)},
                              {"sigma_A", number(h.sigma_amplitude)}});
  }
  return j;
}

ModulationSpectrum spectrum_from_json(const Json& j) {
  return guarded("spectrum", [&] {
    ModulationSpectrum s;
    s.order = j.at("m").get<int>();
    const auto kind = fit_kind_from_string(j.value("kind", std::string("fourier")));
    if (!kind) throw IoError("unknown spectrum kind " + j.at("kind").dump());
    s.kind = *kind;
    s.offset = number_of(j.at("A0"));
    s.sigma_offset = j.contains("sigma_A0") ? number_of(j.at("sigma_A0")) : 0.0;
    s.residual_rms = j.contains("residual_rms") ? number_of(j.at("residual_rms")) : 0.0;
    for (const auto& h : j.at("harmonics")) {
      s.harmonics.push_back({h.at("kappa").get<int>(), number_of(h.at("f")),
                             h.contains("sigma_f") ? number_of(h.at("sigma_f")) : 0.0,
                             number_of(h.at("A")), number_of(h.at("sigma_A"))});
    }
    return s;
  });
}

Json to_json(const EvidenceTable& t) {
  Json j;
  j["span_hint"] = t.span_hint;
  j["rows"] = Json::array();
  for (const auto& r : t.rows) {
    j["rows"].push_back({{"f", r.frequency},
                         {"status", std::string(to_string(r.status))},
                         {"A", number(r.amplitude)},
                         {"sigma_A", number(r.sigma_amplitude)},
                         {"orders", r.present_orders},
                         {"absent_orders", r.absent_orders},
                         {"conflict", r.conflict}});
  }
  j["orders_measured"] = t.orders_measured;
  j["off_lattice"] = Json::array();
  for (const auto& [m, f] : t.off_lattice) j["off_lattice"].push_back({{"m", m}, {"f", f}});
  return j;
}

EvidenceTable evidence_from_json(const Json& j) {
  return guarded("evidence", [&] {
    EvidenceTable t;
    t.span_hint = j.at("span_hint").get<int>();
    for (const auto& r : j.at("rows")) {
      EvidenceRow row;
      row.frequency = r.at("f").get<int>();
      const auto status = presence_from_string(r.at("status").get<std::string>());
      if (!status) throw IoError("unknown status " + r.at("status").dump());
      row.status = *status;
      row.amplitude = number_of(r.at("A"));
      row.sigma_amplitude = number_of(r.at("sigma_A"));
      row.present_orders = r.at("orders").get<std::vector<int>>();
      row.absent_orders = r.value("absent_orders", std::vector<int>{});
      row.conflict = r.value("conflict", false);
      t.rows.push_back(row);
    }
    t.orders_measured = j.at("orders_measured").get<std::vector<int>>();
    if (j.contains("off_lattice")) {
      for (const auto& o : j.at("off_lattice")) t.off_lattice.emplace_back(o.at("m").get<int>(), o.at("f").get<int>());
    }
    return t;
  });
}

Json to_json(const GateDecision& d) {
  return {{"f", number(d.harmonic.frequency)},   {"sigma_f", number(d.harmonic.sigma_frequency)},
          {"A", number(d.harmonic.amplitude)},   {"sigma_A", number(d.harmonic.sigma_amplitude)},
          {"accepted", d.accepted},              {"f_int", d.frequency},
          {"reason", d.reason}};
}

Json to_json(const Candidate& c) {
  Json chi2 = Json::object();
  for (const auto& [m, v] : c.chi2_by_order) chi2[std::to_string(m)] = number(v);
  return {{"x", c.geometry.gaps()}, {"score", number(c.score)}, {"chi2_by_order", chi2},
          {"joint_best", c.joint_best}};
}

Json to_json(const ApertureReport& r) {
  return {{"m", r.order},
          {"r_moving", number(r.r_moving)},
          {"r_total", number(r.r_total)},
          {"moving_span", number(r.moving_span)},
          {"fixed_span", number(r.fixed_span)}};
}

Json to_json(const ReconstructionReport& r) {
  Json j;
  j["evidence"] = to_json(r.result.evidence);
  j["candidates"] = Json::array();
  for (const auto& c : r.result.candidates) j["candidates"].push_back(to_json(c));
  j["apertures"] = Json::array();
  for (const auto& a : r.apertures) j["apertures"].push_back(to_json(a));
  j["exhaustive"] = r.result.exhaustive;
  j["ranked"] = r.ranked;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string aperture_csv(std::span<const ApertureReport> reports) {
  std::string out = "m,r_moving,r_total\n";
  for (const auto& r : reports) {
    out += std::to_string(r.order) + ',' + format_number(r.r_moving) + ',' + format_number(r.r_total) + '\n';
  }
  return out;
}

std::string decisions_csv(std::span<const std::pair<int, std::vector<GateDecision>>> by_order) {
  std::string out = "m,f,sigma_f,A,sigma_A,accepted,reason\n";
  for (const auto& [m, decisions] : by_order) {
    for (const auto& d : decisions) {
      out += std::to_string(m) + ',' + format_number(d.harmonic.frequency) + ',' +
             format_number(d.harmonic.sigma_frequency) + ',' + format_number(d.harmonic.amplitude) + ',' +
             format_number(d.harmonic.sigma_amplitude) + ',' + (d.accepted ? "1" : "0") + ',' + d.reason + '\n';
    }
  }
  return out;
}

}  // namespace superres
