#pragma once

// Cross-order presence evidence for integer spatial frequencies.
//
// Order m can only see frequencies divisible by m-1. A frequency is
// Present when some order accepted it, Absent when some order could have
// seen it and none did, and Unknown when no measured order can see it.

#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "superres/spectrum.hpp"

namespace superres {

enum class Presence { present, absent, unknown };

std::string_view to_string(Presence p) noexcept;
std::optional<Presence> presence_from_string(std::string_view text) noexcept;

struct EvidenceRow {
  int frequency = 0;
  Presence status = Presence::unknown;
  double amplitude = 0.0;  // from the lowest accepting order
  double sigma_amplitude = 0.0;
  std::vector<int> present_orders;
  std::vector<int> absent_orders;
  /// Accepted at one order and missing at another; Present wins.
  bool conflict = false;
};

struct EvidenceTable {
  int span_hint = 0;
  std::vector<EvidenceRow> rows;  // f = 1..span_hint
  std::vector<int> orders_measured;
  /// Accepted frequencies that the order cannot see (not divisible by m-1);
  /// recorded, not used.
  std::vector<std::pair<int, int>> off_lattice;  // (order, f)

  /// Status for any f >= 1; beyond span_hint it follows from the orders.
  Presence status(int f) const;
  std::set<int> with_status(Presence p) const;
  bool has_conflicts() const;

  /// Table built directly from status sets (span_hint = max Present);
  /// orders are left empty, so f beyond the rows reads as Unknown.
  static EvidenceTable from_sets(const std::set<int>& present, const std::set<int>& absent);
};

/// Combines gated spectra from distinct orders. Throws OrderError if an
/// order repeats.
EvidenceTable aggregate(std::span<const ModulationSpectrum> gated);

}  // namespace superres
