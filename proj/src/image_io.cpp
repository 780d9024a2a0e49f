#include "xaibench/image_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <charconv>
#include <fstream>

#include "xaibench/error.hpp"

namespace xaibench {

namespace fs = std::filesystem;

void write_png(const fs::path& path, const Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw InvalidArgument("write_png: inconsistent image dimensions");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

Image read_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return image;
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_gt_map(const fs::path& path, const SaliencyMap& map) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << kGtMapMagic << ' ' << map.width() << ' ' << map.height() << '\n';
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (c) out << ' ';
      out << format_double(map.at(r, c));
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

SaliencyMap read_gt_map(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  if (!(in >> magic >> width >> height) || magic != kGtMapMagic || width <= 0 || height <= 0) {
    throw IoError(path.string() + ": not a ground-truth map file");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(width) * height);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
      throw IoError(path.string() + ": malformed value '" + token + "'");
    }
    values.push_back(v);
  }
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw IoError(path.string() + ": expected " + std::to_string(width * height) + " values, found " +
                  std::to_string(values.size()));
  }
  return SaliencyMap(width, height, std::move(values));
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file_bytes(path)); }

}  // namespace xaibench
