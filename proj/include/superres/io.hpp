#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "superres/curve.hpp"
#include "superres/speckle.hpp"

namespace superres {

/// Writes to a sibling temporary and renames over `path`, so readers never
/// see a partial file. Creates missing parent directories. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Throws IoError if the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Binary frame container: 8-byte magic, little-endian u64 header length,
/// JSON header {N, R, P, seed, delta_axis, bits}, then R*P little-endian
/// float64 intensities, frame-major.
void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack);
FrameStack read_frame_stack(const std::filesystem::path& path);

/// Curve container, same framing: header {m, fixed_deltas, P, has_sigma,
/// sigma_reliable, B}, then delta1, values, sigma (if any) and B bootstrap
/// replicates, each P values. Keeps everything the fits need, exactly.
void write_curve(const std::filesystem::path& path, const CorrelationCurve& curve);
CorrelationCurve read_curve(const std::filesystem::path& path);

}  // namespace superres
