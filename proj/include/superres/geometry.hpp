#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace superres {

/// One-dimensional source arrangement on a grid of pitch `d`.
///
/// Stored as the list of adjacent gaps in units of the lattice constant;
/// absolute positions are the prefix sums and are never stored. A single
/// source has an empty gap list. Values are immutable after construction.
class SourceGeometry {
 public:
  SourceGeometry() = default;
  /// Throws GeometryError if any gap is < 1.
  explicit SourceGeometry(std::vector<int> gaps, double lattice_constant_m = 0.0);
  SourceGeometry(std::initializer_list<int> gaps) : SourceGeometry(std::vector<int>(gaps)) {}

  const std::vector<int>& gaps() const noexcept { return gaps_; }
  std::size_t source_count() const noexcept { return gaps_.size() + 1; }
  /// Distance between the outermost sources, in units of d.
  int span() const noexcept { return span_; }
  /// Lattice constant in meters; metadata only (0 when unset).
  double lattice_constant() const noexcept { return lattice_constant_; }

  friend bool operator==(const SourceGeometry& a, const SourceGeometry& b) {
    return a.gaps_ == b.gaps_;
  }
  friend auto operator<=>(const SourceGeometry& a, const SourceGeometry& b) {
    return a.gaps_ <=> b.gaps_;
  }

 private:
  std::vector<int> gaps_;
  int span_ = 0;
  double lattice_constant_ = 0.0;
};

/// Source positions relative to the first source; starts at 0, strictly increasing.
using PhasePrefactors = std::vector<int>;

/// Pair separations with multiplicity: frequency -> count.
using FrequencyMultiset = std::map<int, int>;

/// Distinct positive pair separations, sorted.
using FrequencySet = std::set<int>;

PhasePrefactors phase_prefactors(const SourceGeometry& g);

/// All N(N-1)/2 pair distances. Throws GeometryError for a single source.
FrequencyMultiset pair_distances(const SourceGeometry& g);

/// Key set of pair_distances. Throws GeometryError for a single source.
FrequencySet distinct_frequencies(const SourceGeometry& g);

SourceGeometry reflect(const SourceGeometry& g);

/// Lexicographically smaller of the gap list and its reversal.
SourceGeometry canonical(const SourceGeometry& g);

/// Builds the gap list from sorted absolute positions (first may be nonzero).
SourceGeometry geometry_from_positions(std::span<const int> positions,
                                       double lattice_constant_m = 0.0);

/// Every gap list with `sources` entries-1 and gaps in [1, max_gap].
std::vector<SourceGeometry> enumerate_geometries(std::size_t sources, int max_gap);

}  // namespace superres
