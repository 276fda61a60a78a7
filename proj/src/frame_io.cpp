#include <bit>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "superres/errors.hpp"
#include "superres/io.hpp"

namespace superres {
namespace {

constexpr char kFrameMagic[8] = {'S', 'R', 'F', 'R', 'A', 'M', 'E', '1'};
constexpr char kCurveMagic[8] = {'S', 'R', 'C', 'U', 'R', 'V', 'E', '1'};

static_assert(std::endian::native == std::endian::little,
              "frame container is written in native little-endian order");

/// magic | u64 header length | JSON header | float64 payload
std::string pack(const char (&magic)[8], const nlohmann::json& header, std::span<const double> payload) {
  const std::string text = header.dump();
  std::string blob(magic, sizeof(magic));
  const auto size = static_cast<std::uint64_t>(text.size());
  blob.append(reinterpret_cast<const char*>(&size), sizeof(size));
  blob += text;
  blob.append(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(double));
  return blob;
}

struct Unpacked {
  nlohmann::json header;
  std::vector<double> payload;
};

Unpacked unpack(const std::filesystem::path& path, const char (&magic)[8], const char* what) {
  const std::string blob = read_file(path);
  if (blob.size() < 16 || std::memcmp(blob.data(), magic, sizeof(magic)) != 0) {
    throw IoError(path.string() + " is not a " + what);
  }
  std::uint64_t header_size = 0;
  std::memcpy(&header_size, blob.data() + 8, sizeof(header_size));
  if (header_size > blob.size() - 16) {
    throw IoError(path.string() + ": truncated header");
  }
  Unpacked out;
  try {
    out.header = nlohmann::json::parse(blob.substr(16, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  const std::size_t offset = 16 + header_size;
  if ((blob.size() - offset) % sizeof(double) != 0) {
    throw IoError(path.string() + ": payload is not a whole number of float64 values");
  }
  out.payload.resize((blob.size() - offset) / sizeof(double));
  std::memcpy(out.payload.data(), blob.data() + offset, out.payload.size() * sizeof(double));
  return out;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack) {
  const nlohmann::json header = {{"N", stack.sources},        {"R", stack.frames},
                                 {"P", stack.pixels},         {"seed", stack.seed},
                                 {"delta_axis", stack.delta_axis}, {"bits", stack.bits}};
  write_file_atomic(path, pack(kFrameMagic, header, stack.intensities));
}

FrameStack read_frame_stack(const std::filesystem::path& path) {
  auto [header, payload] = unpack(path, kFrameMagic, "frame container");
  FrameStack stack;
  try {
    stack.sources = header.at("N").get<std::size_t>();
    stack.frames = header.at("R").get<std::size_t>();
    stack.pixels = header.at("P").get<std::size_t>();
    stack.seed = header.at("seed").get<std::uint64_t>();
    stack.delta_axis = header.at("delta_axis").get<std::vector<double>>();
    stack.bits = header.at("bits").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  if (stack.delta_axis.size() != stack.pixels || payload.size() != stack.frames * stack.pixels) {
    throw IoError(path.string() + ": payload does not match header dimensions");
  }
  stack.intensities = std::move(payload);
  return stack;
}

void write_curve(const std::filesystem::path& path, const CorrelationCurve& curve) {
  validate(curve);
  const nlohmann::json header = {{"m", curve.order},
                                 {"fixed_deltas", curve.fixed_deltas},
                                 {"P", curve.size()},
                                 {"has_sigma", !curve.sigma.empty()},
                                 {"sigma_reliable", curve.sigma_reliable},
                                 {"B", curve.replicates.size()}};
  std::vector<double> payload = curve.delta1;
  payload.insert(payload.end(), curve.values.begin(), curve.values.end());
  payload.insert(payload.end(), curve.sigma.begin(), curve.sigma.end());
  for (const auto& rep : curve.replicates) payload.insert(payload.end(), rep.begin(), rep.end());
  write_file_atomic(path, pack(kCurveMagic, header, payload));
}

CorrelationCurve read_curve(const std::filesystem::path& path) {
  auto [header, payload] = unpack(path, kCurveMagic, "curve container");
  CorrelationCurve curve;
  std::size_t p = 0, b = 0;
  bool has_sigma = false;
  try {
    curve.order = header.at("m").get<int>();
    curve.fixed_deltas = header.at("fixed_deltas").get<std::vector<double>>();
    p = header.at("P").get<std::size_t>();
    has_sigma = header.at("has_sigma").get<bool>();
    curve.sigma_reliable = header.at("sigma_reliable").get<bool>();
    b = header.at("B").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  if (payload.size() != p * (2 + (has_sigma ? 1 : 0) + b)) {
    throw IoError(path.string() + ": payload does not match header dimensions");
  }
  auto take = [&, at = std::size_t{0}]() mutable {
    std::vector<double> v(payload.begin() + static_cast<std::ptrdiff_t>(at),
                          payload.begin() + static_cast<std::ptrdiff_t>(at + p));
    at += p;
    return v;
  };
  curve.delta1 = take();
  curve.values = take();
  if (has_sigma) curve.sigma = take();
  for (std::size_t r = 0; r < b; ++r) curve.replicates.push_back(take());
  return curve;
}

}  // namespace superres
