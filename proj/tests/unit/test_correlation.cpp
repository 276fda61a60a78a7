#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "superres/correlation.hpp"
#include "superres/errors.hpp"
#include "unit/oracles.hpp"

using namespace superres;
using std::numbers::pi;

TEST_CASE("magic positions") {
  const auto m4 = magic_positions(4);
  REQUIRE(m4.size() == 3);
  CHECK(m4[0] == 0.0);
  CHECK(m4[1] == doctest::Approx(2 * pi / 3).epsilon(1e-15));
  CHECK(m4[2] == doctest::Approx(4 * pi / 3).epsilon(1e-15));
  CHECK(magic_positions(2) == std::vector<double>{0.0});
  const auto m3 = magic_positions(3);
  CHECK(m3[1] == doctest::Approx(pi).epsilon(1e-15));
  CHECK_THROWS_AS(magic_positions(1), OrderError);
}

TEST_CASE("coherence matrix entries") {
  SUBCASE("single source gives a constant matrix") {
    const std::vector<double> deltas{0.3, 1.7, -2.0};
    const std::vector<double> w{2.5};
    const auto j = coherence_matrix(SourceGeometry({}), deltas, w);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(j(r, c) - complex(2.5, 0.0)) < 1e-14);
  }
  SUBCASE("coincident detectors, two sources") {
    const std::vector<double> deltas{0.0, 0.0};
    const auto j = coherence_matrix(SourceGeometry({1}), deltas);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(j(r, c) - complex(2.0, 0.0)) < 1e-14);
  }
  SUBCASE("off-diagonal phase") {
    const double d = 0.83;
    const std::vector<double> deltas{d, 0.0};
    const auto j = coherence_matrix(SourceGeometry({1}), deltas);
    CHECK(std::abs(j(0, 1) - (1.0 + std::polar(1.0, -d))) < 1e-14);
    CHECK(std::abs(j(1, 0) - std::conj(j(0, 1))) < 1e-14);
  }
  SUBCASE("weights must match source count") {
    const std::vector<double> deltas{0.0, 1.0};
    const std::vector<double> w{1.0};
    CHECK_THROWS_AS(coherence_matrix(SourceGeometry({2}), deltas, w), DimensionError);
  }
}

TEST_CASE("g^(m) of a single thermal source is m!") {
  double factorial = 1.0;
  for (int m = 2; m <= 7; ++m) {
    factorial *= m;
    const auto curve = g_m_analytic(SourceGeometry({}),
                                    DetectorArray::at_magic_positions(m, ScanGrid::periodic(16)));
    for (double v : curve.values) CHECK(v == doctest::Approx(factorial).epsilon(1e-12));
  }
}

TEST_CASE("two-source second order curve is 1.5 + 0.5 cos") {
  const auto curve = g_m_analytic(SourceGeometry({1}),
                                  DetectorArray{2, {0.0}, ScanGrid::periodic(64)});
  for (std::size_t s = 0; s < curve.size(); ++s) {
    CHECK(curve.values[s] == doctest::Approx(1.5 + 0.5 * std::cos(curve.delta1[s])).epsilon(1e-13));
  }
}

TEST_CASE("analytic engine matches the Gaussian path-sum oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phase(-pi, pi);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  const std::vector<std::vector<int>> geometries{{1}, {3, 1}, {1, 2}, {2, 1, 1}};
  for (const auto& gaps : geometries) {
    const SourceGeometry g(gaps);
    for (int m = 2; m <= 4; ++m) {
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> deltas(static_cast<std::size_t>(m));
        for (auto& d : deltas) d = phase(rng);
        std::vector<double> w(g.source_count());
        for (auto& x : w) x = weight(rng);
        const double moment = oracle::gaussian_moment_by_paths(phase_prefactors(g), deltas, w);
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        const double expected = moment / std::pow(total, m);
        const auto got = g_m_point(g, deltas, w);
        CHECK(got.real() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(got.imag()) < 1e-10);
      }
    }
  }
}

TEST_CASE("coincident detectors: duplicated rows/columns give the higher moment") {
  // <I_a^2 I_b> with detectors 1 and 2 at the same phase equals the permanent
  // of J with a duplicated row/column; compare against the path-sum moment.
  const SourceGeometry g({2, 1});
  const std::vector<double> w{1.0, 0.7, 1.3};
  for (double a : {0.0, 0.4, 2.2}) {
    const std::vector<double> deltas{a, a, 1.1};
    const double expected = oracle::gaussian_moment_by_paths(phase_prefactors(g), deltas, w) /
                            std::pow(3.0, 3);
    const auto j = coherence_matrix(g, deltas, w);
    CHECK(std::abs(j(0, 2) - j(1, 2)) < 1e-14);
    CHECK(std::abs(j(0, 0) - j(0, 1)) < 1e-14);
    CHECK(g_m_point(g, deltas, w).real() == doctest::Approx(expected).epsilon(1e-12));
  }
  // one source, all detectors coincident: <I^m>/<I>^m = m!
  const std::vector<double> same{0.5, 0.5, 0.5, 0.5};
  CHECK(g_m_point(SourceGeometry({}), same).real() == doctest::Approx(24.0).epsilon(1e-13));
}

TEST_CASE("x=(3,1,4) at fifth order carries only frequencies 0, 4, 8") {
  const SourceGeometry g({3, 1, 4});
  const auto curve = g_m_analytic(g, DetectorArray::at_magic_positions(5, ScanGrid::periodic(64)));
  for (int q = 1; q < 32; ++q) {
    const double mag = std::abs(oracle::dft(curve.values, q));
    if (q == 4 || q == 8) {
      CHECK(mag > 1e-3);
    } else {
      CHECK(mag < 1e-9);
    }
  }
}

TEST_CASE("surviving frequencies") {
  CHECK(surviving_frequencies(SourceGeometry({3, 1, 4}), 4) == FrequencySet{3});
  // 5 = 1 + 4 is a pair distance of (3,1,4), so it survives at m = 6
  CHECK(surviving_frequencies(SourceGeometry({3, 1, 4}), 6) == FrequencySet{5});
  CHECK(surviving_frequencies(SourceGeometry({1, 3}), 6).empty());
  CHECK(surviving_frequencies(SourceGeometry({1, 3, 2}), 3) == FrequencySet{2, 4, 6});
  CHECK(surviving_frequencies(SourceGeometry({}), 3).empty());
  CHECK_THROWS_AS(surviving_frequencies(SourceGeometry({1}), 2), OrderError);
}

TEST_CASE("predicted spectrum") {
  SUBCASE("no multiples of 5 -> constant") {
    const auto s = predicted_spectrum(SourceGeometry({1, 3}), 6, 64);
    CHECK(s.harmonics.empty());
    CHECK(s.leakage < 1e-10);
  }
  SUBCASE("single source") {
    const auto s = predicted_spectrum(SourceGeometry({}), 4, 16);
    CHECK(s.offset == doctest::Approx(24.0).epsilon(1e-12));
    CHECK(s.harmonics.empty());
  }
  SUBCASE("ambiguous pair differs in relative amplitudes") {
    // Frozen values from an independent numpy permutation-sum evaluation.
    const auto a = predicted_spectrum(SourceGeometry({1, 3, 5}), 5, 64);
    const auto b = predicted_spectrum(SourceGeometry({1, 3, 1, 4}), 5, 64);
    REQUIRE(a.harmonics.size() == 2);
    REQUIRE(b.harmonics.size() == 2);
    CHECK(a.harmonics[0].frequency == 4.0);
    CHECK(a.harmonics[1].frequency == 8.0);
    CHECK(a.harmonics[0].kappa == 1);
    CHECK(a.harmonics[1].kappa == 2);
    CHECK(a.offset == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(a.harmonics[0].amplitude == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(a.harmonics[1].amplitude == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(b.offset == doctest::Approx(6.70464).epsilon(1e-10));
    CHECK(b.harmonics[0].amplitude == doctest::Approx(3.80928).epsilon(1e-10));
    CHECK(b.harmonics[1].amplitude == doctest::Approx(1.65888).epsilon(1e-10));
    const double rel_a = a.harmonics[0].amplitude / a.offset;
    const double rel_b = b.harmonics[0].amplitude / b.offset;
    CHECK(std::abs(rel_a - rel_b) > 0.1);
  }
  SUBCASE("aliasing guard") {
    CHECK_THROWS_AS(predicted_spectrum(SourceGeometry({3, 1, 4}), 5, 35), AliasingError);
    CHECK_NOTHROW(predicted_spectrum(SourceGeometry({3, 1, 4}), 5, 36));
  }
}

TEST_CASE("regular array reference amplitude ratios") {
  const auto n3 = regular_array_reference(3, 2, 64);
  REQUIRE(n3.harmonics.size() == 2);
  CHECK(n3.harmonics[0].amplitude / n3.harmonics[1].amplitude == doctest::Approx(2.0).epsilon(1e-12));

  const auto n2 = regular_array_reference(2, 2, 64);
  REQUIRE(n2.harmonics.size() == 1);
  CHECK(n2.harmonics[0].frequency == 1.0);
  CHECK(n2.leakage < 1e-12);

  const auto n4 = regular_array_reference(4, 2, 64);
  REQUIRE(n4.harmonics.size() == 3);
  CHECK(n4.harmonics[0].amplitude / n4.harmonics[2].amplitude == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(n4.harmonics[1].amplitude / n4.harmonics[2].amplitude == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("roots of unity sums") {
  CHECK(std::abs(roots_of_unity_sum(0, 5) - complex(4.0, 0.0)) < 1e-12);
  CHECK(std::abs(roots_of_unity_sum(1, 3)) < 1e-12);
  CHECK(std::abs(roots_of_unity_sum(6, 4) - complex(3.0, 0.0)) < 1e-12);
  for (int m = 2; m <= 8; ++m) {
    for (long long lambda = 0; lambda <= 4 * (m - 1); ++lambda) {
      const double expected = lambda % (m - 1) == 0 ? m - 1.0 : 0.0;
      CHECK(std::abs(roots_of_unity_sum(lambda, m) - complex(expected, 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("filtering theorem over small geometries") {
  int geometries = 0;
  double worst_suppressed = 0.0;
  double weakest_surviving = 1e300;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& g : enumerate_geometries(n, 4)) {
      ++geometries;
      const std::size_t samples = 4 * (static_cast<std::size_t>(g.span()) + 1);
      for (int m = 3; m <= 6; ++m) {
        const auto curve =
            g_m_analytic(g, DetectorArray::at_magic_positions(m, ScanGrid::periodic(samples)));
        const auto keep = surviving_frequencies(g, m);
        for (double v : curve.values) CHECK(v >= 0.0);
        for (int q = 1; q < static_cast<int>(samples / 2); ++q) {
          const double mag = std::abs(oracle::dft(curve.values, q));
          if (keep.count(q)) {
            weakest_surviving = std::min(weakest_surviving, mag);
          } else {
            worst_suppressed = std::max(worst_suppressed, mag);
          }
        }
      }
    }
  }
  CHECK(geometries == 341);
  CHECK(worst_suppressed < 1e-9);
  CHECK(weakest_surviving > 1e-6);
  MESSAGE("worst suppressed " << worst_suppressed << ", weakest surviving " << weakest_surviving);
}

TEST_CASE("spectrum magnitudes are reflection invariant") {
  for (std::size_t n = 2; n <= 4; ++n) {
    for (const auto& g : enumerate_geometries(n, 3)) {
      for (int m = 3; m <= 5; ++m) {
        const std::size_t samples = 4 * (static_cast<std::size_t>(g.span()) + 1);
        const auto a = predicted_spectrum(g, m, samples);
        const auto b = predicted_spectrum(reflect(g), m, samples);
        CHECK(a.offset == doctest::Approx(b.offset).epsilon(1e-10));
        REQUIRE(a.harmonics.size() == b.harmonics.size());
        for (std::size_t k = 0; k < a.harmonics.size(); ++k) {
          CHECK(std::abs(a.harmonics[k].amplitude - b.harmonics[k].amplitude) < 1e-10);
        }
      }
    }
  }
}
