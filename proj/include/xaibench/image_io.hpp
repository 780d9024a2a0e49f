#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xaibench/saliency_map.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

/// 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Ground-truth grid text format:
///
///   XAIGTMAP1 <width> <height>
///   <width values of row 0, separated by single spaces>
///   ...
///
/// Values are written in shortest round-trip decimal form, so a read after a
/// write reproduces every double exactly.
inline constexpr const char* kGtMapMagic = "XAIGTMAP1";
void write_gt_map(const std::filesystem::path& path, const SaliencyMap& map);
SaliencyMap read_gt_map(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace xaibench
