#include "superres/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "superres/errors.hpp"
#include "superres/parallel.hpp"
#include "superres/rng.hpp"
#include "superres/simd/kernels.hpp"

namespace superres {
namespace {

// Stream tags in the third Philox counter word.
constexpr std::uint32_t kFrameStream = 0;

std::uint32_t bootstrap_stream(int order) { return 1U + 2U * static_cast<std::uint32_t>(order); }

double max_intensity(const std::function<void(std::uint64_t, std::span<double>)>& source,
                     std::size_t frames, std::size_t pixels, std::size_t threads) {
  const std::size_t workers = std::min(frames, threads == 0 ? default_thread_count() : threads);
  std::vector<double> partial(std::max<std::size_t>(workers, 1), 0.0);
  parallel_for(workers, workers, [&](std::size_t wb, std::size_t we) {
    std::vector<double> buffer(pixels);
    for (std::size_t w = wb; w < we; ++w) {
      double peak = 0.0;
      for (std::size_t r = frames * w / workers; r < frames * (w + 1) / workers; ++r) {
        source(r, buffer);
        peak = std::max(peak, *std::max_element(buffer.begin(), buffer.end()));
      }
      partial[w] = peak;
    }
  });
  return *std::max_element(partial.begin(), partial.end());
}

double quantization_scale(int bits, double peak) {
  const double full_scale = std::ldexp(1.0, bits) - 1.0;
  return peak > 0.0 ? full_scale / peak : 1.0;
}

void require_bits(int bits) {
  if (bits < 1 || bits > 16) {
    throw SizeError("quantization depth must be 1..16 bits, got " + std::to_string(bits));
  }
}

}  // namespace

void SpeckleRun::validate() const {
  if (frames < 1) {
    throw SizeError("a speckle run needs at least one frame");
  }
  if (pixels.count < 1) {
    throw SizeError("a speckle run needs at least one pixel");
  }
  if (!weights.empty() && weights.size() != geometry.source_count()) {
    throw DimensionError("expected " + std::to_string(geometry.source_count()) +
                         " source weights, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw DimensionError("source weights must be positive");
    }
  }
  if (quantization_bits != 0) {
    require_bits(quantization_bits);
  }
}

FrameSynthesizer::FrameSynthesizer(const SpeckleRun& run) : seed_(run.seed) {
  run.validate();
  const auto alpha = phase_prefactors(run.geometry);
  const std::size_t sources = alpha.size();
  variance_ = run.weights.empty() ? std::vector<double>(sources, 1.0) : run.weights;
  axis_ = run.pixels.points();
  const std::size_t pixels = axis_.size();
  cos_table_.resize(sources * pixels);
  sin_table_.resize(sources * pixels);
  for (std::size_t l = 0; l < sources; ++l) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const double phase = alpha[l] * axis_[p];
      cos_table_[l * pixels + p] = std::cos(phase);
      sin_table_[l * pixels + p] = std::sin(phase);
    }
  }
  if (run.envelope) {
    envelope_.resize(pixels);
    std::transform(axis_.begin(), axis_.end(), envelope_.begin(), run.envelope);
  }
}

void FrameSynthesizer::render(std::uint64_t frame, std::span<double> out) const {
  const std::size_t sources = variance_.size();
  const CounterRng rng(seed_);
  // small fixed-size scratch; N is a handful of sources
  std::vector<double> re(sources), im(sources);
  for (std::size_t l = 0; l < sources; ++l) {
    const auto a = complex_normal(rng.block(frame, static_cast<std::uint32_t>(l), kFrameStream),
                                  variance_[l]);
    re[l] = a.re;
    im[l] = a.im;
  }
  simd::synthesize_intensity(re, im, {cos_table_, sin_table_, sources, axis_.size()}, out);
  if (!envelope_.empty()) {
    for (std::size_t p = 0; p < out.size(); ++p) {
      out[p] *= envelope_[p];
    }
  }
}

FrameStack sample_frames(const SpeckleRun& run) {
  const FrameSynthesizer synth(run);
  FrameStack stack;
  stack.frames = run.frames;
  stack.pixels = synth.pixels();
  stack.sources = run.geometry.source_count();
  stack.seed = run.seed;
  stack.delta_axis = synth.delta_axis();
  stack.intensities.resize(stack.frames * stack.pixels);
  parallel_for(stack.frames, run.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      synth.render(r, stack.frame(r));
    }
  });
  if (run.quantization_bits > 0) {
    return quantize(stack, run.quantization_bits);
  }
  return stack;
}

FrameStack quantize(const FrameStack& stack, int bits, QuantizeReport* report) {
  require_bits(bits);
  const double peak = stack.intensities.empty()
                          ? 0.0
                          : *std::max_element(stack.intensities.begin(), stack.intensities.end());
  const double scale = quantization_scale(bits, peak);
  FrameStack out = stack;
  out.bits = bits;
  simd::round_scaled(stack.intensities, scale, out.intensities);

  if (report != nullptr) {
    const std::size_t total = out.intensities.size();
    const auto zeros = static_cast<std::size_t>(
        std::count(out.intensities.begin(), out.intensities.end(), 0.0));
    std::vector<bool> seen(static_cast<std::size_t>(std::ldexp(1.0, bits)), false);
    for (double v : out.intensities) {
      seen[static_cast<std::size_t>(v)] = true;
    }
    report->bits = bits;
    report->scale = scale;
    report->zero_fraction = total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
    report->levels_used = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
    report->heavily_clipped = report->zero_fraction > 0.25 || report->levels_used < 8;
  }
  return out;
}

MagicPixels nearest_magic_pixels(std::span<const double> axis, int order) {
  const auto magic = magic_positions(order);
  if (axis.size() < 2) {
    throw CoverageError("pixel axis needs at least two points");
  }
  const double half_pitch =
      0.5 * (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  MagicPixels result;
  for (double target : magic) {
    if (target < axis.front() - half_pitch || target > axis.back() + half_pitch) {
      throw CoverageError("pixel axis [" + std::to_string(axis.front()) + ", " +
                          std::to_string(axis.back()) + "] does not reach magic position " +
                          std::to_string(target));
    }
    auto it = std::lower_bound(axis.begin(), axis.end(), target);
    if (it == axis.end() || (it != axis.begin() && target - *(it - 1) <= *it - target)) {
      --it;
    }
    result.indices.push_back(static_cast<std::size_t>(it - axis.begin()));
    result.max_error = std::max(result.max_error, std::abs(*it - target));
  }
  return result;
}

MomentBlocks::MomentBlocks(std::size_t frames, std::size_t pixels, std::vector<Probe> probes,
                           std::size_t max_blocks)
    : frames_(frames), pixels_(pixels), probes_(std::move(probes)) {
  if (frames == 0 || pixels == 0) {
    throw DimensionError("moment accumulation needs at least one frame and one pixel");
  }
  for (const auto& probe : probes_) {
    if (probe.fixed_pixels.size() + 1 != static_cast<std::size_t>(probe.order) || probe.order < 2) {
      throw DimensionError("probe of order " + std::to_string(probe.order) + " has " +
                           std::to_string(probe.fixed_pixels.size()) + " fixed pixels");
    }
    for (auto p : probe.fixed_pixels) {
      if (p >= pixels) {
        throw DimensionError("fixed pixel " + std::to_string(p) + " outside " +
                             std::to_string(pixels) + " pixels");
      }
    }
  }
  const std::size_t blocks = std::min(frames, std::max<std::size_t>(max_blocks, 1));
  counts_.assign(blocks, 0.0);
  sum_intensity_.assign(blocks * pixels, 0.0);
  sum_product_.assign(probes_.size() * blocks * pixels, 0.0);
}

std::size_t MomentBlocks::block_begin(std::size_t b) const noexcept {
  return frames_ * b / blocks();
}

void MomentBlocks::add(std::size_t block, std::span<const double> intensity) {
  const std::size_t nb = blocks();
  counts_[block] += 1.0;
  simd::axpy(1.0, intensity, std::span<double>(sum_intensity_).subspan(block * pixels_, pixels_));
  for (std::size_t k = 0; k < probes_.size(); ++k) {
    double fixed = 1.0;
    for (auto p : probes_[k].fixed_pixels) {
      fixed *= intensity[p];
    }
    simd::axpy(fixed, intensity,
               std::span<double>(sum_product_).subspan((k * nb + block) * pixels_, pixels_));
  }
}

void MomentBlocks::fill(const std::function<void(std::uint64_t, std::span<double>)>& source,
                        std::size_t threads) {
  parallel_for(blocks(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buffer(pixels_);
    for (std::size_t b = begin; b < end; ++b) {
      for (std::size_t r = block_begin(b); r < block_begin(b + 1); ++r) {
        source(r, buffer);
        add(b, buffer);
      }
    }
  });
}

CorrelationCurve MomentBlocks::curve(std::size_t probe, std::span<const double> delta_axis,
                                     const EstimatorOptions& options) const {
  if (probe >= probes_.size()) {
    throw DimensionError("probe index out of range");
  }
  if (delta_axis.size() != pixels_) {
    throw DimensionError("delta axis length does not match the pixel count");
  }
  const Probe& pr = probes_[probe];
  const std::size_t nb = blocks();

  // ratio estimate from block multiplicities (all ones for the point estimate)
  auto estimate = [&](std::span<const double> multiplicity, std::span<double> out,
                      std::vector<double>& si, std::vector<double>& sp) -> bool {
    std::fill(si.begin(), si.end(), 0.0);
    std::fill(sp.begin(), sp.end(), 0.0);
    double n = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double c = multiplicity[b];
      if (c == 0.0) {
        continue;
      }
      n += c * counts_[b];
      simd::axpy(c, std::span<const double>(sum_intensity_).subspan(b * pixels_, pixels_), si);
      simd::axpy(c, std::span<const double>(sum_product_).subspan((probe * nb + b) * pixels_, pixels_),
                 sp);
    }
    double fixed_mean = 1.0;
    for (auto p : pr.fixed_pixels) {
      fixed_mean *= si[p] / n;
    }
    bool finite = fixed_mean > 0.0;
    for (std::size_t p = 0; p < pixels_; ++p) {
      const double denom = (si[p] / n) * fixed_mean;
      if (denom > 0.0) {
        out[p] = (sp[p] / n) / denom;
      } else {
        out[p] = std::numeric_limits<double>::quiet_NaN();
        finite = false;
      }
    }
    return finite;
  };

  CorrelationCurve curve;
  curve.order = pr.order;
  curve.delta1.assign(delta_axis.begin(), delta_axis.end());
  for (auto p : pr.fixed_pixels) {
    curve.fixed_deltas.push_back(delta_axis[p]);
  }
  curve.values.resize(pixels_);
  {
    std::vector<double> si(pixels_), sp(pixels_);
    const std::vector<double> ones(nb, 1.0);
    if (!estimate(ones, curve.values, si, sp)) {
      throw DegenerateError("a pixel has zero mean intensity; g^(" + std::to_string(pr.order) +
                            ") is undefined");
    }
  }

  const std::size_t reps = options.bootstrap;
  if (reps == 0) {
    return curve;
  }
  std::vector<std::vector<double>> replicates(reps, std::vector<double>(pixels_));
  const CounterRng rng(options.seed);
  const std::uint32_t stream = bootstrap_stream(pr.order);
  parallel_for(reps, options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> si(pixels_), sp(pixels_), multiplicity(nb);
    for (std::size_t k = begin; k < end; ++k) {
      std::fill(multiplicity.begin(), multiplicity.end(), 0.0);
      for (std::size_t d = 0; d < nb; ++d) {
        const auto word = rng.block(d / 4, static_cast<std::uint32_t>(k), stream)[d % 4];
        multiplicity[CounterRng::below(word, static_cast<std::uint32_t>(nb))] += 1.0;
      }
      estimate(multiplicity, replicates[k], si, sp);
    }
  });

  curve.sigma.assign(pixels_, 0.0);
  for (std::size_t p = 0; p < pixels_; ++p) {
    double mean = 0.0;
    std::size_t used = 0;
    for (const auto& rep : replicates) {
      if (std::isfinite(rep[p])) {
        mean += rep[p];
        ++used;
      }
    }
    if (used < 2) {
      continue;
    }
    mean /= static_cast<double>(used);
    double ss = 0.0;
    for (const auto& rep : replicates) {
      if (std::isfinite(rep[p])) {
        ss += (rep[p] - mean) * (rep[p] - mean);
      }
    }
    curve.sigma[p] = std::sqrt(ss / static_cast<double>(used - 1));
  }
  curve.sigma_reliable = nb >= options.min_reliable_blocks && reps >= 2;
  if (options.keep_replicates) {
    curve.replicates = std::move(replicates);
  }
  return curve;
}

CorrelationCurve estimate_g_m(const FrameStack& stack, std::span<const std::size_t> fixed_pixels,
                              const EstimatorOptions& options) {
  if (stack.delta_axis.size() != stack.pixels ||
      stack.intensities.size() != stack.frames * stack.pixels) {
    throw DimensionError("frame stack dimensions are inconsistent");
  }
  MomentBlocks blocks(stack.frames, stack.pixels,
                      {Probe{static_cast<int>(fixed_pixels.size()) + 1,
                             {fixed_pixels.begin(), fixed_pixels.end()}}},
                      options.max_blocks);
  blocks.fill(
      [&](std::uint64_t r, std::span<double> out) {
        const auto row = stack.frame(r);
        std::copy(row.begin(), row.end(), out.begin());
      },
      options.threads);
  return blocks.curve(0, stack.delta_axis, options);
}

std::vector<CorrelationCurve> simulate_curves(const SpeckleRun& run, std::span<const int> orders,
                                              const EstimatorOptions& options) {
  const FrameSynthesizer synth(run);
  const auto& axis = synth.delta_axis();
  std::vector<Probe> probes;
  for (int m : orders) {
    probes.push_back({m, nearest_magic_pixels(axis, m).indices});
  }

  std::function<void(std::uint64_t, std::span<double>)> source =
      [&](std::uint64_t r, std::span<double> out) { synth.render(r, out); };
  if (run.quantization_bits > 0) {
    const double scale = quantization_scale(
        run.quantization_bits, max_intensity(source, run.frames, axis.size(), run.threads));
    source = [&synth, scale](std::uint64_t r, std::span<double> out) {
      synth.render(r, out);
      simd::round_scaled(out, scale, out);
    };
  }

  MomentBlocks blocks(run.frames, axis.size(), std::move(probes), options.max_blocks);
  blocks.fill(source, run.threads);
  std::vector<CorrelationCurve> curves;
  for (std::size_t k = 0; k < blocks.probes().size(); ++k) {
    curves.push_back(blocks.curve(k, axis, options));
  }
  return curves;
}

}  // namespace superres
