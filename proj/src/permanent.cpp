#include "superres/permanent.hpp"

#include <bit>
#include <cstdint>
#include <string>

#include "superres/errors.hpp"

namespace superres {

complex permanent(const ComplexMatrix& m, std::size_t max_order) {
  const std::size_t n = m.size();
  if (n > max_order) {
    throw SizeError("permanent of a " + std::to_string(n) + "x" + std::to_string(n) +
                    " matrix exceeds the cap of " + std::to_string(max_order));
  }
  if (n > 30) {
    throw SizeError("permanent order beyond 30 is not representable");
  }
  if (n == 0) {
    return {1.0, 0.0};
  }

  // Ryser: perm = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij,
  // visiting the column subsets in Gray-code order so each step adds or
  // removes one column from the running row sums.
  std::vector<complex> row_sums(n, complex{});
  complex total{};
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < subsets; ++k) {
    const auto col = static_cast<std::size_t>(std::countr_zero(k));
    gray ^= std::uint64_t{1} << col;
    const bool added = (gray >> col) & 1U;
    for (std::size_t i = 0; i < n; ++i) {
      if (added) {
        row_sums[i] += m(i, col);
      } else {
        row_sums[i] -= m(i, col);
      }
    }
    complex prod = row_sums[0];
    for (std::size_t i = 1; i < n; ++i) {
      prod *= row_sums[i];
    }
    if (std::popcount(gray) & 1) {
      total -= prod;
    } else {
      total += prod;
    }
  }
  return (n & 1U) ? -total : total;
}

}  // namespace superres
