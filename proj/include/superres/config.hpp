#pragma once

// Run configuration: one TOML document drives every command.
//
//   seed = 7
//   orders = [3, 4, 5, 6]
//   [geometry]   x = [1, 3], d_microns = 570.0, weights = [...]
//   [simulation] mode = "monte_carlo" | "analytic", frames, pixels,
//                quantization_bits, bootstrap, max_blocks, threads, save_frames
//   [fit]        kind = "free" | "fixed", span_bound, max_harmonics
//   [gate]       k_A, sigma_f_max, eps_int
//   [search]     max_sources, max_span, allow_unknown_span
//   [scene]      wavelength_m, distance_m   (optional)
//   [aperture]   orders
//   [output]     dir, format = "csv" | "json"
//
// Every key is optional; unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "superres/fitting.hpp"
#include "superres/geometry.hpp"
#include "superres/reconstruction.hpp"
#include "superres/spectrum.hpp"

namespace superres {

/// Physical units around the dimensionless delta coordinate.
struct PhysicalScene {
  double wavelength_m = 0.0;
  double distance_m = 0.0;
  double lattice_constant_m = 0.0;

  double wavenumber() const;
  /// sin(theta) = delta / (k d); NaN outside |sin| <= 1.
  double theta_for_delta(double delta) const;
  /// z >= 10 (N span d)^2 / lambda.
  bool far_field(const SourceGeometry& g) const;

  bool operator==(const PhysicalScene&) const = default;
};

enum class SimulationMode { monte_carlo, analytic };
enum class OutputFormat { csv, json };

struct Config {
  std::vector<int> gaps;
  double d_microns = 0.0;  // 0: unset
  std::vector<double> weights;

  std::uint64_t seed = 1;
  std::vector<int> orders{3, 4, 5, 6};

  SimulationMode mode = SimulationMode::monte_carlo;
  std::size_t frames = 1000;
  std::size_t pixels = 512;
  int quantization_bits = 0;
  std::size_t bootstrap = 200;
  std::size_t max_blocks = 1000;
  std::size_t threads = 0;
  bool save_frames = false;

  FitKind fit = FitKind::free_frequency;
  int span_bound = 20;
  std::size_t max_harmonics = 6;

  GatePolicy gate;
  SearchBounds search;
  std::optional<PhysicalScene> scene;  // lattice constant from d_microns
  std::vector<int> aperture_orders{2, 3, 4, 5, 6, 7, 8};

  std::filesystem::path out_dir = "out";
  OutputFormat format = OutputFormat::csv;

  bool operator==(const Config&) const = default;

  SourceGeometry geometry() const;
  FitOptions fit_options() const;
};

/// Throws ConfigError naming every offending key.
Config parse_config(std::string_view toml_text);
/// A .json path is read as a run manifest and its config snapshot used.
Config load_config(const std::filesystem::path& path);
std::string emit_config(const Config& config);
/// Range checks across keys; throws ConfigError listing every problem.
void validate(const Config& config);

/// "3..6" or "3,4,6". Throws ConfigError.
std::vector<int> parse_orders(std::string_view text);

}  // namespace superres
