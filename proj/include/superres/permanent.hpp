#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace superres {

using complex = std::complex<double>;

/// Dense square complex matrix, row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}
  ComplexMatrix(std::size_t n, complex fill) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  complex& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  const complex& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
  std::span<const complex> row(std::size_t r) const { return {data_.data() + r * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<complex> data_;
};

inline constexpr std::size_t kDefaultPermanentCap = 12;

/// Permanent via Gray-code Ryser, O(2^n n).
///
/// Throws SizeError when n exceeds `max_order`. The empty matrix has
/// permanent 1.
complex permanent(const ComplexMatrix& m, std::size_t max_order = kDefaultPermanentCap);

}  // namespace superres
