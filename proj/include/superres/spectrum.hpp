#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace superres {

enum class FitKind {
  fourier,          // exact DFT of an analytic curve
  fixed_frequency,  // linear fit at f = kappa (m-1)
  free_frequency,   // nonlinear fit with free frequencies
};

std::string_view to_string(FitKind kind) noexcept;
std::optional<FitKind> fit_kind_from_string(std::string_view text) noexcept;

/// One modulation term A cos(f delta_1 + phase).
///
/// `kappa` is f / (m-1) when f is an integer multiple of m-1; a free fit
/// that lands on an accepted integer frequency off that lattice keeps
/// kappa = 0 so downstream consumers can tell it apart.
struct Harmonic {
  int kappa = 0;
  double frequency = 0.0;
  double sigma_frequency = 0.0;
  double amplitude = 0.0;
  double sigma_amplitude = 0.0;
};

struct ModulationSpectrum {
  int order = 0;
  double offset = 0.0;  // A_0
  double sigma_offset = 0.0;
  std::vector<Harmonic> harmonics;
  FitKind kind = FitKind::fourier;
  double residual_rms = 0.0;
  /// Largest amplitude found at integer frequencies outside the reported set
  /// (only filled by the Fourier analysis of analytic curves).
  double leakage = 0.0;

  const Harmonic* find_frequency(int f) const noexcept;
};

}  // namespace superres
