#pragma once

#include <cstddef>
#include <vector>

namespace superres {

/// Sampled g^(m)(delta_1) with optional per-sample uncertainty.
///
/// `sigma` is empty when no uncertainty is known. Monte Carlo estimates also
/// carry their bootstrap replicate curves so fits can propagate the
/// (strongly pixel-correlated) sampling error; analytic curves leave
/// `replicates` empty.
struct CorrelationCurve {
  int order = 0;
  std::vector<double> fixed_deltas;
  std::vector<double> delta1;
  std::vector<double> values;
  std::vector<double> sigma;
  /// False when the sigma column exists but came from too few frames.
  bool sigma_reliable = true;
  std::vector<std::vector<double>> replicates;

  std::size_t size() const noexcept { return values.size(); }
  bool has_sigma() const noexcept { return !sigma.empty() && sigma_reliable; }
};

/// Throws DimensionError if the column lengths disagree.
void validate(const CorrelationCurve& curve);

}  // namespace superres
