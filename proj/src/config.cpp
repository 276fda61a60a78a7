#include "superres/config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "superres/errors.hpp"
#include "superres/io.hpp"
#include "superres/serialization.hpp"
#include "toml.hpp"

namespace superres {

double PhysicalScene::wavenumber() const { return 2.0 * std::numbers::pi / wavelength_m; }

double PhysicalScene::theta_for_delta(double delta) const {
  const double s = delta / (wavenumber() * lattice_constant_m);
  return std::abs(s) <= 1.0 ? std::asin(s) : std::numeric_limits<double>::quiet_NaN();
}

bool PhysicalScene::far_field(const SourceGeometry& g) const {
  const double extent = static_cast<double>(g.source_count()) * g.span() * lattice_constant_m;
  return distance_m >= 10.0 * extent * extent / wavelength_m;
}

SourceGeometry Config::geometry() const { return SourceGeometry(gaps, d_microns * 1e-6); }

FitOptions Config::fit_options() const {
  FitOptions o;
  o.span_bound = span_bound;
  o.max_harmonics = max_harmonics;
  o.threads = threads == 0 ? 1 : threads;
  return o;
}

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"", {"seed", "orders", "geometry", "simulation", "fit", "gate", "search", "scene", "aperture", "output"}},
    {"geometry", {"x", "d_microns", "weights"}},
    {"simulation",
     {"mode", "frames", "pixels", "quantization_bits", "bootstrap", "max_blocks", "threads", "save_frames"}},
    {"fit", {"kind", "span_bound", "max_harmonics"}},
    {"gate", {"k_A", "sigma_f_max", "eps_int"}},
    {"search", {"max_sources", "max_span", "allow_unknown_span"}},
    {"scene", {"wavelength_m", "distance_m"}},
    {"aperture", {"orders"}},
    {"output", {"dir", "format"}},
};

/// Collects every problem before failing so one run reports them all.
class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {
    for (const auto& [section, keys] : kSchema) {
      const toml::table* t = section.empty() ? &root_ : root_[section].as_table();
      if (!section.empty() && root_.contains(section) && !t) {
        problems_.push_back(section + ": expected a table");
        continue;
      }
      if (!t) continue;
      for (const auto& [key, node] : *t) {
        if (!keys.contains(std::string(key.str()))) {
          problems_.push_back((section.empty() ? "" : section + ".") + std::string(key.str()) + ": unknown key");
        }
      }
    }
  }

  template <class T>
  void integer(const char* section, const char* key, T& out) {
    const toml::node* n = find(section, key);
    if (!n) return;
    const auto v = n->is_integer() ? n->value<std::int64_t>() : std::nullopt;
    if (!v || !std::in_range<T>(*v)) {
      fail(section, key, "expected an integer in range");
      return;
    }
    out = static_cast<T>(*v);
  }

  void real(const char* section, const char* key, double& out) {
    const toml::node* n = find(section, key);
    if (!n) return;
    if (!n->is_number()) {
      fail(section, key, "expected a number");
      return;
    }
    out = *n->value<double>();
  }

  void boolean(const char* section, const char* key, bool& out) {
    const toml::node* n = find(section, key);
    if (!n) return;
    if (!n->is_boolean()) {
      fail(section, key, "expected true or false");
      return;
    }
    out = *n->value<bool>();
  }

  std::optional<std::string> string(const char* section, const char* key) {
    const toml::node* n = find(section, key);
    if (!n) return std::nullopt;
    if (!n->is_string()) {
      fail(section, key, "expected a string");
      return std::nullopt;
    }
    return *n->value<std::string>();
  }

  void integers(const char* section, const char* key, std::vector<int>& out) {
    const toml::node* n = find(section, key);
    if (!n) return;
    const toml::array* a = n->as_array();
    std::vector<int> v;
    bool ok = a != nullptr;
    if (a) {
      for (const auto& e : *a) {
        const auto x = e.value<std::int64_t>();
        ok = ok && e.is_integer() && x && std::abs(*x) <= std::numeric_limits<int>::max();
        if (ok) v.push_back(static_cast<int>(*x));
      }
    }
    if (!ok) {
      fail(section, key, "expected an array of integers");
      return;
    }
    out = std::move(v);
  }

  void reals(const char* section, const char* key, std::vector<double>& out) {
    const toml::node* n = find(section, key);
    if (!n) return;
    const toml::array* a = n->as_array();
    std::vector<double> v;
    bool ok = a != nullptr;
    if (a) {
      for (const auto& e : *a) {
        ok = ok && e.is_number();
        if (ok) v.push_back(*e.value<double>());
      }
    }
    if (!ok) {
      fail(section, key, "expected an array of numbers");
      return;
    }
    out = std::move(v);
  }

  void seed(std::uint64_t& out) {
    const toml::node* n = find("", "seed");
    if (!n) return;
    if (n->is_integer() && *n->value<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(*n->value<std::int64_t>());
      return;
    }
    // values above 2^63 - 1 do not fit a TOML integer and travel as strings
    if (n->is_string()) {
      const std::string s = *n->value<std::string>();
      std::uint64_t v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec == std::errc{} && r.ptr == s.data() + s.size()) {
        out = v;
        return;
      }
    }
    fail("", "seed", "expected a non-negative 64-bit integer");
  }

  bool has(const char* section) const { return root_.contains(section); }

  void fail(const char* section, const char* key, const std::string& why) {
    problems_.push_back(dotted(section, key) + ": " + why);
  }

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string dotted(const char* section, const char* key) {
    return *section ? std::string(section) + "." + key : std::string(key);
  }

  const toml::node* find(const char* section, const char* key) const {
    const toml::table* t = *section ? root_[section].as_table() : &root_;
    return t ? t->get(key) : nullptr;
  }

  const toml::table& root_;
  std::vector<std::string> problems_;
};

[[noreturn]] void throw_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

std::string toml_float(double v) {
  std::string s = format_number(v);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

template <class T>
std::string toml_list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += toml_float(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s + "]";
}

std::string toml_string(const std::string& s) {
  // basic string; escape the two characters that need it
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Config parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid configuration: line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  Reader r(root);
  Config c;
  r.seed(c.seed);
  r.integers("", "orders", c.orders);

  r.integers("geometry", "x", c.gaps);
  r.real("geometry", "d_microns", c.d_microns);
  r.reals("geometry", "weights", c.weights);

  if (auto mode = r.string("simulation", "mode")) {
    if (*mode == "monte_carlo") {
      c.mode = SimulationMode::monte_carlo;
    } else if (*mode == "analytic") {
      c.mode = SimulationMode::analytic;
    } else {
      r.fail("simulation", "mode", "expected \"monte_carlo\" or \"analytic\"");
    }
  }
  r.integer("simulation", "frames", c.frames);
  r.integer("simulation", "pixels", c.pixels);
  r.integer("simulation", "quantization_bits", c.quantization_bits);
  r.integer("simulation", "bootstrap", c.bootstrap);
  r.integer("simulation", "max_blocks", c.max_blocks);
  r.integer("simulation", "threads", c.threads);
  r.boolean("simulation", "save_frames", c.save_frames);

  if (auto kind = r.string("fit", "kind")) {
    if (*kind == "free") {
      c.fit = FitKind::free_frequency;
    } else if (*kind == "fixed") {
      c.fit = FitKind::fixed_frequency;
    } else {
      r.fail("fit", "kind", "expected \"free\" or \"fixed\"");
    }
  }
  r.integer("fit", "span_bound", c.span_bound);
  r.integer("fit", "max_harmonics", c.max_harmonics);

  r.real("gate", "k_A", c.gate.k_amplitude);
  r.real("gate", "sigma_f_max", c.gate.sigma_frequency_max);
  r.real("gate", "eps_int", c.gate.integer_tolerance);

  r.integer("search", "max_sources", c.search.max_sources);
  r.integer("search", "max_span", c.search.max_span);
  r.boolean("search", "allow_unknown_span", c.search.allow_unknown_span);

  if (r.has("scene")) {
    PhysicalScene scene;
    r.real("scene", "wavelength_m", scene.wavelength_m);
    r.real("scene", "distance_m", scene.distance_m);
    scene.lattice_constant_m = c.d_microns * 1e-6;
    c.scene = scene;
  }
  r.integers("aperture", "orders", c.aperture_orders);

  if (auto dir = r.string("output", "dir")) c.out_dir = *dir;
  if (auto format = r.string("output", "format")) {
    if (*format == "csv") {
      c.format = OutputFormat::csv;
    } else if (*format == "json") {
      c.format = OutputFormat::json;
    } else {
      r.fail("output", "format", "expected \"csv\" or \"json\"");
    }
  }
  if (!r.problems().empty()) throw_problems(r.problems());
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  if (path.extension() == ".json") {
    try {
      return parse_config(nlohmann::json::parse(text).at("config").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + " is not a run manifest: " + e.what());
    }
  }
  return parse_config(text);
}

std::string emit_config(const Config& c) {
  std::ostringstream out;
  if (c.seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    out << "seed = " << c.seed << "\n";
  } else {
    out << "seed = \"" << c.seed << "\"\n";
  }
  out << "orders = " << toml_list(c.orders) << "\n\n";
  out << "[geometry]\nx = " << toml_list(c.gaps) << "\nd_microns = " << toml_float(c.d_microns)
      << "\nweights = " << toml_list(c.weights) << "\n\n";
  out << "[simulation]\nmode = \"" << (c.mode == SimulationMode::analytic ? "analytic" : "monte_carlo")
      << "\"\nframes = " << c.frames << "\npixels = " << c.pixels
      << "\nquantization_bits = " << c.quantization_bits << "\nbootstrap = " << c.bootstrap
      << "\nmax_blocks = " << c.max_blocks << "\nthreads = " << c.threads
      << "\nsave_frames = " << (c.save_frames ? "true" : "false") << "\n\n";
  out << "[fit]\nkind = \"" << (c.fit == FitKind::fixed_frequency ? "fixed" : "free")
      << "\"\nspan_bound = " << c.span_bound << "\nmax_harmonics = " << c.max_harmonics << "\n\n";
  out << "[gate]\nk_A = " << toml_float(c.gate.k_amplitude)
      << "\nsigma_f_max = " << toml_float(c.gate.sigma_frequency_max)
      << "\neps_int = " << toml_float(c.gate.integer_tolerance) << "\n\n";
  out << "[search]\nmax_sources = " << c.search.max_sources << "\nmax_span = " << c.search.max_span
      << "\nallow_unknown_span = " << (c.search.allow_unknown_span ? "true" : "false") << "\n\n";
  if (c.scene) {
    out << "[scene]\nwavelength_m = " << toml_float(c.scene->wavelength_m)
        << "\ndistance_m = " << toml_float(c.scene->distance_m) << "\n\n";
  }
  out << "[aperture]\norders = " << toml_list(c.aperture_orders) << "\n\n";
  out << "[output]\ndir = " << toml_string(c.out_dir.generic_string()) << "\nformat = \""
      << (c.format == OutputFormat::json ? "json" : "csv") << "\"\n";
  return out.str();
}

void validate(const Config& c) {
  std::vector<std::string> p;
  for (int x : c.gaps) {
    if (x < 1) p.push_back("geometry.x: gaps must be integers >= 1");
  }
  if (!(c.d_microns >= 0.0) || !std::isfinite(c.d_microns)) p.push_back("geometry.d_microns: must be >= 0");
  if (!c.weights.empty() && c.weights.size() != c.gaps.size() + 1) {
    p.push_back("geometry.weights: need one weight per source (" + std::to_string(c.gaps.size() + 1) + ")");
  }
  for (double w : c.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) p.push_back("geometry.weights: weights must be positive");
  }
  if (c.orders.empty()) p.push_back("orders: at least one order is needed");
  std::set<int> seen;
  for (int m : c.orders) {
    if (m < 3 || m > 12) p.push_back("orders: " + std::to_string(m) + " outside 3..12");
    if (!seen.insert(m).second) p.push_back("orders: " + std::to_string(m) + " repeated");
  }
  if (c.frames < 1) p.push_back("simulation.frames: must be >= 1");
  if (c.pixels < 4) p.push_back("simulation.pixels: must be >= 4");
  if (c.quantization_bits < 0 || c.quantization_bits > 16) {
    p.push_back("simulation.quantization_bits: 0 (off) or 1..16");
  }
  if (c.max_blocks < 1) p.push_back("simulation.max_blocks: must be >= 1");
  if (c.span_bound < 1 || c.span_bound > 62) p.push_back("fit.span_bound: must be in 1..62");
  if (c.max_harmonics < 1) p.push_back("fit.max_harmonics: must be >= 1");
  if (!(c.gate.k_amplitude >= 0.0)) p.push_back("gate.k_A: must be >= 0");
  if (!(c.gate.sigma_frequency_max > 0.0)) p.push_back("gate.sigma_f_max: must be > 0");
  if (!(c.gate.integer_tolerance > 0.0 && c.gate.integer_tolerance < 0.5)) {
    p.push_back("gate.eps_int: must be in (0, 0.5)");
  }
  if (c.search.max_sources < 2) p.push_back("search.max_sources: must be >= 2");
  if (c.search.max_span < 1 || c.search.max_span > 62) p.push_back("search.max_span: must be in 1..62");
  if (c.scene) {
    if (!(c.scene->wavelength_m > 0.0)) p.push_back("scene.wavelength_m: must be > 0");
    if (!(c.scene->distance_m > 0.0)) p.push_back("scene.distance_m: must be > 0");
    if (!(c.d_microns > 0.0)) p.push_back("geometry.d_microns: required when [scene] is given");
  }
  for (int m : c.aperture_orders) {
    if (m < 2) p.push_back("aperture.orders: " + std::to_string(m) + " below 2");
  }
  if (c.out_dir.empty()) p.push_back("output.dir: must not be empty");
  if (!p.empty()) throw_problems(p);
}

std::vector<int> parse_orders(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      throw ConfigError("--orders: expected \"a..b\" or a comma list, got '" + std::string(text) + "'");
    }
    return v;
  };
  std::vector<int> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const int lo = parse_int(text.substr(0, dots));
    const int hi = parse_int(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("--orders: empty range '" + std::string(text) + "'");
    for (int m = lo; m <= hi; ++m) out.push_back(m);
    return out;
  }
  std::string_view rest = text;
  for (;;) {
    const auto comma = rest.find(',');
    out.push_back(parse_int(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace superres
