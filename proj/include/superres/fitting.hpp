#pragma once

// Harmonic fits of g^(m)(delta_1) curves and the acceptance gate.
//
// Model: g(u) = A_0 + sum_i [c_i cos(f_i u) + s_i sin(f_i u)], with u the
// scan phase centered on the window, A_i = sqrt(c_i^2 + s_i^2). When the
// curve carries bootstrap replicates every replicate is refit from the
// point estimate and the spread of the refits gives sigma_A (projected on
// the fitted phase); sigma_f is the residual-scaled least-squares error,
// infinite when the refits lose the component. Without replicates both
// come from the least-squares covariance.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "superres/curve.hpp"
#include "superres/spectrum.hpp"

namespace superres {

struct FitOptions {
  /// Largest source span considered; bounds frequencies and kappa.
  int span_bound = 20;
  std::size_t max_harmonics = 6;
  double min_frequency = 0.5;
  double periodogram_step = 0.05;
  /// Components closer than this are unresolvable on a 2 pi window: new
  /// peaks are not taken near existing ones and converging pairs merge.
  double min_separation = 0.5;
  /// Stop adding components when the residual periodogram peak falls below
  /// this fraction of |A_0|.
  double amplitude_floor = 1e-6;
  /// With replicates: stop when the next peak is below this many bootstrap
  /// standard deviations of its own projection.
  double significance = 2.0;
  /// A replicate refit moving any frequency further than this is unstable.
  double replicate_jump = 0.5;
  /// Above this fraction of unstable refits sigma is reported as infinite.
  double max_unstable_fraction = 0.1;
  int max_evaluations = 2000;
  bool use_replicates = true;
  std::size_t threads = 1;
};

/// Linear fit on f = kappa (m-1), kappa = 1..span_bound/(m-1). Throws
/// CoverageError if the scan is shorter than one fundamental period and
/// FitError on a rank-deficient design.
ModulationSpectrum fit_fixed(const CorrelationCurve& curve, int order, const FitOptions& options = {});

/// Periodogram-initialized nonlinear fit with free frequencies. Throws
/// CoverageError as fit_fixed and FitError (with diagnostics) when the
/// optimizer does not converge.
ModulationSpectrum fit_free(const CorrelationCurve& curve, int order, const FitOptions& options = {});

struct GatePolicy {
  double k_amplitude = 2.5;
  double sigma_frequency_max = 0.1;
  double integer_tolerance = 0.15;
  /// Absolute floor relative to |A_0| for curves without noise.
  double min_relative_amplitude = 1e-6;

  bool operator==(const GatePolicy&) const = default;
};

struct GateDecision {
  Harmonic harmonic;  // as fitted
  bool accepted = false;
  int frequency = 0;  // rounded
  std::string reason;  // empty when accepted
};

std::vector<GateDecision> gate_decisions(const ModulationSpectrum& spectrum,
                                         const GatePolicy& policy = {});

/// Keeps accepted harmonics with integer frequencies and
/// kappa = f/(m-1) (0 when f is off the m-1 lattice).
ModulationSpectrum gate(const ModulationSpectrum& spectrum, const GatePolicy& policy = {});

/// d = lambda / ((m-1)(sin theta_j - sin theta_{j-1})), averaged over the
/// pairs (sin theta_j, sin theta_{j-1}). Throws DegenerateError on an empty
/// list or a zero separation.
double calibrate_d(std::span<const std::pair<double, double>> sin_pairs, double wavelength_m,
                   int order);

}  // namespace superres
