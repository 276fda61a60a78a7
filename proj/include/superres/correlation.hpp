#pragma once

// Exact g^(m) for independent thermal sources.
//
// For circular Gaussian fields the m-th intensity moment is the permanent
// of the mutual coherence matrix J_jk = sum_l w_l exp(i alpha_l (delta_k - delta_j)),
// so g^(m) = perm(J) / prod_j J_jj.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "superres/curve.hpp"
#include "superres/geometry.hpp"
#include "superres/permanent.hpp"
#include "superres/spectrum.hpp"

namespace superres {

/// Uniform sampling of the moving-detector phase delta_1.
struct ScanGrid {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
  bool include_stop = false;

  /// [0, 2 pi) with `count` samples, the layout the Fourier analysis needs.
  static ScanGrid periodic(std::size_t count);
  std::vector<double> points() const;
};

struct DetectorArray {
  int order = 2;
  std::vector<double> fixed_deltas;  // delta_2 .. delta_m
  ScanGrid scan;

  static DetectorArray at_magic_positions(int order, ScanGrid scan);
  /// Throws OrderError / DimensionError on an inconsistent array.
  void validate() const;
};

struct EngineOptions {
  std::size_t permanent_cap = kDefaultPermanentCap;
  /// Fourier magnitude below which a frequency counts as suppressed.
  double suppression_tolerance = 1e-9;
  std::size_t threads = 1;
};

/// delta_j = 2 pi (j-2)/(m-1), j = 2..m. Throws OrderError for m < 2.
std::vector<double> magic_positions(int order);

/// Empty `weights` means unit intensity for every source.
ComplexMatrix coherence_matrix(const SourceGeometry& g, std::span<const double> deltas,
                               std::span<const double> weights = {});

/// perm(J)/prod J_jj at one detector configuration (delta_1 first). The
/// imaginary part is numerical residue.
std::complex<double> g_m_point(const SourceGeometry& g, std::span<const double> deltas,
                               std::span<const double> weights = {},
                               const EngineOptions& options = {});

CorrelationCurve g_m_analytic(const SourceGeometry& g, const DetectorArray& detectors,
                              std::span<const double> weights = {},
                              const EngineOptions& options = {});

/// { f in F : (m-1) | f }. Empty for a single source. Throws OrderError for m < 3.
FrequencySet surviving_frequencies(const SourceGeometry& g, int order);

/// DFT of the analytic curve over [0, 2 pi) with detectors at the magic
/// positions; harmonics for the surviving frequencies, everything else
/// summarized in `leakage`. Throws AliasingError if samples < 4 (span+1).
ModulationSpectrum predicted_spectrum(const SourceGeometry& g, int order, std::size_t samples,
                                      std::span<const double> weights = {},
                                      const EngineOptions& options = {});

/// Equidistant array (all gaps 1) with every fixed detector at delta = 0;
/// reports harmonics l = 1..N-1 (kappa = f = l).
ModulationSpectrum regular_array_reference(std::size_t sources, int order, std::size_t samples,
                                           const EngineOptions& options = {});

/// sum_{j=2..m} exp(i lambda delta_j) at the magic positions.
std::complex<double> roots_of_unity_sum(long long lambda, int order);

}  // namespace superres
