#pragma once

// Monte Carlo pseudothermal experiment.
//
// Each frame draws one circular complex Gaussian amplitude per source and
// records |sum_l a_l exp(i alpha_l delta_p)|^2 on a row of pixels. g^(m)
// is then estimated the way a camera pipeline does it: normalized products
// of pixel intensities averaged over frames.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "superres/correlation.hpp"
#include "superres/curve.hpp"
#include "superres/geometry.hpp"

namespace superres {

inline constexpr std::size_t kDefaultPixels = 512;

struct SpeckleRun {
  SourceGeometry geometry;
  std::vector<double> weights;  // empty = unit intensity per source
  std::size_t frames = 1000;
  std::uint64_t seed = 0;
  ScanGrid pixels = ScanGrid::periodic(kDefaultPixels);
  int quantization_bits = 0;  // 0 = no quantization
  /// Optional multiplicative intensity envelope over delta (finite source
  /// size). Unset by default.
  std::function<double(double)> envelope;
  std::size_t threads = 0;

  /// Throws SizeError / DimensionError / GeometryError on an invalid run.
  void validate() const;
};

/// R x P intensities, frame-major.
struct FrameStack {
  std::size_t frames = 0;
  std::size_t pixels = 0;
  std::size_t sources = 0;
  std::uint64_t seed = 0;
  int bits = 0;  // 0 = continuous intensities
  std::vector<double> delta_axis;
  std::vector<double> intensities;

  std::span<const double> frame(std::size_t r) const {
    return {intensities.data() + r * pixels, pixels};
  }
  std::span<double> frame(std::size_t r) { return {intensities.data() + r * pixels, pixels}; }
};

/// Deterministic frame generator: frame r depends only on (seed, r).
class FrameSynthesizer {
 public:
  explicit FrameSynthesizer(const SpeckleRun& run);

  std::size_t pixels() const noexcept { return axis_.size(); }
  const std::vector<double>& delta_axis() const noexcept { return axis_; }
  void render(std::uint64_t frame, std::span<double> out) const;

 private:
  std::uint64_t seed_;
  std::vector<double> variance_;
  std::vector<double> axis_;
  std::vector<double> cos_table_;
  std::vector<double> sin_table_;
  std::vector<double> envelope_;
};

FrameStack sample_frames(const SpeckleRun& run);

struct QuantizeReport {
  int bits = 0;
  double scale = 1.0;  // gray level per unit intensity
  double zero_fraction = 0.0;
  std::size_t levels_used = 0;
  bool heavily_clipped = false;
};

/// Maps the stack maximum to 2^bits - 1 and rounds (half to even). Throws
/// SizeError unless 1 <= bits <= 16.
FrameStack quantize(const FrameStack& stack, int bits, QuantizeReport* report = nullptr);

struct MagicPixels {
  std::vector<std::size_t> indices;  // m-1 entries, delta_2 .. delta_m
  double max_error = 0.0;            // max |delta_pixel - delta_magic|
};

/// Nearest pixel to each magic position. `axis` must be increasing. Throws
/// CoverageError if a magic position lies more than half a pitch outside the
/// axis.
MagicPixels nearest_magic_pixels(std::span<const double> axis, int order);

struct EstimatorOptions {
  std::size_t bootstrap = 200;
  std::size_t max_blocks = 1000;
  /// Sigma is flagged unreliable below this many frame blocks.
  std::size_t min_reliable_blocks = 20;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool keep_replicates = true;
};

/// One correlation curve request: fixed detectors at given pixels.
struct Probe {
  int order = 0;
  std::vector<std::size_t> fixed_pixels;
};

/// Per-block sufficient statistics for a set of probes.
///
/// Frames are split into B contiguous blocks; for each block we keep the
/// frame count, sum_r I_p and, per probe, sum_r I_p prod_j I_fixed_j. The
/// ratio estimator and its block bootstrap need nothing else, so frames can
/// be streamed without materializing the stack.
class MomentBlocks {
 public:
  MomentBlocks(std::size_t frames, std::size_t pixels, std::vector<Probe> probes,
               std::size_t max_blocks);

  std::size_t blocks() const noexcept { return counts_.size(); }
  std::size_t pixels() const noexcept { return pixels_; }
  std::size_t frames() const noexcept { return frames_; }
  const std::vector<Probe>& probes() const noexcept { return probes_; }

  /// First frame of block b; block b covers [block_begin(b), block_begin(b+1)).
  std::size_t block_begin(std::size_t b) const noexcept;

  /// Adds one frame to block b. Not thread-safe for the same block.
  void add(std::size_t block, std::span<const double> intensity);

  /// Accumulates frames [0, frames) from `source`, blocks in parallel.
  void fill(const std::function<void(std::uint64_t, std::span<double>)>& source,
            std::size_t threads);

  /// Ratio estimate with block-bootstrap sigma. Throws DegenerateError when
  /// a pixel has zero mean intensity.
  CorrelationCurve curve(std::size_t probe, std::span<const double> delta_axis,
                         const EstimatorOptions& options) const;

 private:
  std::size_t frames_;
  std::size_t pixels_;
  std::vector<Probe> probes_;
  std::vector<double> counts_;
  std::vector<double> sum_intensity_;  // blocks x pixels
  std::vector<double> sum_product_;    // probes x blocks x pixels
};

/// Frame-averaged estimate over a stored stack. Throws DimensionError for
/// out-of-range pixels or an empty stack.
CorrelationCurve estimate_g_m(const FrameStack& stack, std::span<const std::size_t> fixed_pixels,
                              const EstimatorOptions& options = {});

/// Streams frames from `run` straight into moment blocks, one curve per
/// order with fixed detectors at the nearest magic pixels. Bit-identical to
/// estimate_g_m(sample_frames(run)) (after quantize when bits > 0).
std::vector<CorrelationCurve> simulate_curves(const SpeckleRun& run, std::span<const int> orders,
                                              const EstimatorOptions& options = {});

}  // namespace superres
