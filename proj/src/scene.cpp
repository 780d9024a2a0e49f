#include "xaibench/scene.hpp"

#include <algorithm>
#include <set>

#include "xaibench/error.hpp"

namespace xaibench {

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Square: return "square";
    case ShapeKind::Cross: return "cross";
  }
  return "?";
}

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::Shape ? "shape" : "color";
}

ShapeKind parse_shape_kind(std::string_view text) {
  if (text == "circle") return ShapeKind::Circle;
  if (text == "square") return ShapeKind::Square;
  if (text == "cross") return ShapeKind::Cross;
  throw InvalidArgument("unknown shape kind '" + std::string(text) + "'");
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "shape") return DatasetKind::Shape;
  if (text == "color") return DatasetKind::Color;
  throw InvalidArgument("unknown dataset kind '" + std::string(text) + "'");
}

std::size_t Image::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v != 0; }));
}

std::size_t Bitmask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool Bitmask::intersects(const Bitmask& other) const {
  if (width_ != other.width_ || height_ != other.height_) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && other.bits_[i]) return true;
  }
  return false;
}

std::vector<std::size_t> Bitmask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

Extent footprint_extent(const SceneObject& obj) {
  const int r = obj.center.row;
  const int c = obj.center.col;
  return {r - obj.size, c - obj.size, r + obj.size, c + obj.size};
}

bool inside_bounds(const SceneObject& obj, int width, int height) {
  if (obj.size < 0) return false;
  const Extent e = footprint_extent(obj);
  return e.top >= 0 && e.left >= 0 && e.bottom < height && e.right < width;
}

bool covers(const SceneObject& obj, int row, int col) {
  const int dr = row - obj.center.row;
  const int dc = col - obj.center.col;
  if (dr < -obj.size || dr > obj.size || dc < -obj.size || dc > obj.size) return false;
  switch (obj.shape) {
    case ShapeKind::Circle:
      return dr * dr + dc * dc <= obj.size * obj.size;
    case ShapeKind::Square:
      return true;
    case ShapeKind::Cross: {
      // Bars of thickness t span offsets [-(t-1)/2, t/2] around the center.
      const int t = cross_thickness(obj.size);
      const int lo = -(t - 1) / 2;
      const int hi = lo + t - 1;
      return (dr >= lo && dr <= hi) || (dc >= lo && dc <= hi);
    }
  }
  return false;
}

Bitmask object_mask(const SceneObject& obj, int width, int height) {
  if (!inside_bounds(obj, width, height)) {
    throw InvalidArgument("object " + std::to_string(obj.id) + " footprint leaves the " +
                          std::to_string(width) + "x" + std::to_string(height) + " image");
  }
  Bitmask mask(width, height);
  const Extent e = footprint_extent(obj);
  for (int r = e.top; r <= e.bottom; ++r) {
    for (int c = e.left; c <= e.right; ++c) {
      if (covers(obj, r, c)) mask.set(r, c);
    }
  }
  return mask;
}

bool overlaps(const SceneObject& a, const SceneObject& b, int width, int height) {
  if (!inside_bounds(a, width, height) || !inside_bounds(b, width, height)) {
    throw InvalidArgument("overlaps: object outside image bounds");
  }
  const Extent ea = footprint_extent(a);
  const Extent eb = footprint_extent(b);
  const int top = std::max(ea.top, eb.top);
  const int bottom = std::min(ea.bottom, eb.bottom);
  const int left = std::max(ea.left, eb.left);
  const int right = std::min(ea.right, eb.right);
  for (int r = top; r <= bottom; ++r) {
    for (int c = left; c <= right; ++c) {
      if (covers(a, r, c) && covers(b, r, c)) return true;
    }
  }
  return false;
}

Image render_scene(const Scene& scene) {
  Image image(scene.width, scene.height);
  for (const auto& obj : scene.objects) {
    const Extent e = footprint_extent(obj);
    for (int r = std::max(e.top, 0); r <= std::min(e.bottom, scene.height - 1); ++r) {
      for (int c = std::max(e.left, 0); c <= std::min(e.right, scene.width - 1); ++c) {
        auto& px = image.at(r, c);
        if (px == 0 && covers(obj, r, c)) px = static_cast<std::uint8_t>(obj.intensity);
      }
    }
  }
  return image;
}

std::vector<std::vector<std::size_t>> object_footprints(const Scene& scene) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    out.push_back(object_mask(obj, scene.width, scene.height).indices());
  }
  return out;
}

void validate_scene(const Scene& scene) {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid scene: " + what); };
  if (scene.width <= 0 || scene.height <= 0) fail("non-positive dimensions");
  const auto n = scene.objects.size();
  if (n < 1 || n > 6) fail("object count " + std::to_string(n) + " outside [1, 6]");
  std::vector<int> per_pattern(scene.pattern_catalog.size(), 0);
  std::set<int> ids;
  for (const auto& obj : scene.objects) {
    if (obj.id < 0 || obj.id >= static_cast<int>(n) || !ids.insert(obj.id).second) {
      fail("object ids must be unique and 0-based");
    }
    if (obj.pattern_index < 0 || obj.pattern_index >= static_cast<int>(per_pattern.size())) {
      fail("object " + std::to_string(obj.id) + " has pattern index out of range");
    }
    if (obj.intensity < 1 || obj.intensity > 255) fail("intensity outside [1, 255]");
    if (!inside_bounds(obj, scene.width, scene.height)) {
      fail("object " + std::to_string(obj.id) + " leaves the image");
    }
    if (++per_pattern[obj.pattern_index] > 2) fail("more than two objects share a pattern");
    const auto& pattern = scene.pattern_catalog[obj.pattern_index];
    if (scene.dataset_kind == DatasetKind::Shape) {
      if (obj.shape != pattern.shape) fail("object shape does not match its pattern");
      if (obj.intensity != scene.objects.front().intensity) fail("shape scene intensities differ");
    } else {
      if (obj.shape != ShapeKind::Circle) fail("color scenes contain only circles");
      if (obj.intensity != pattern.intensity) fail("object intensity does not match its pattern");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (overlaps(scene.objects[i], scene.objects[j], scene.width, scene.height)) {
        fail("objects " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
}

}  // namespace xaibench
