#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xaibench {

enum class ShapeKind { Circle, Square, Cross };
enum class DatasetKind { Shape, Color };

std::string_view to_string(ShapeKind kind);
std::string_view to_string(DatasetKind kind);
ShapeKind parse_shape_kind(std::string_view text);
DatasetKind parse_dataset_kind(std::string_view text);

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// One geometric object. `size` is the radius of a circle, the half-side of a
/// square, or the half-arm length of a cross.
struct SceneObject {
  int id = 0;
  ShapeKind shape = ShapeKind::Circle;
  PixelCoord center;
  int size = 0;
  int intensity = 255;
  int pattern_index = 0;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// A pattern of the catalog: a shape kind (Shape datasets) or an intensity
/// class (Color datasets).
struct PatternDescriptor {
  ShapeKind shape = ShapeKind::Circle;
  int intensity = 255;
  friend bool operator==(const PatternDescriptor&, const PatternDescriptor&) = default;
};

struct Scene {
  int width = 128;
  int height = 128;
  DatasetKind dataset_kind = DatasetKind::Shape;
  std::vector<PatternDescriptor> pattern_catalog;
  std::vector<SceneObject> objects;
  std::uint64_t rng_seed = 0;
  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Single-channel 8-bit image, row-major, background 0.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int row, int col) const { return pixels[index(row, col)]; }
  std::uint8_t& at(int row, int col) { return pixels[index(row, col)]; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  std::size_t nonzero_count() const;
  friend bool operator==(const Image&, const Image&) = default;
};

/// Pixel set over a width x height grid.
class Bitmask {
 public:
  Bitmask(int width, int height)
      : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool test(int row, int col) const { return bits_[static_cast<std::size_t>(row) * width_ + col] != 0; }
  void set(int row, int col) { bits_[static_cast<std::size_t>(row) * width_ + col] = 1; }
  std::size_t count() const;
  bool intersects(const Bitmask& other) const;
  /// Row-major linear indices of the set pixels, ascending.
  std::vector<std::size_t> indices() const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Inclusive bounding box of an object's footprint.
struct Extent {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;
};

/// Bar thickness of a cross of the given half-arm length.
constexpr int cross_thickness(int size) { return size / 3 > 1 ? size / 3 : 1; }

Extent footprint_extent(const SceneObject& obj);
bool inside_bounds(const SceneObject& obj, int width, int height);
/// Whether the object covers pixel (row, col); no bounds check.
bool covers(const SceneObject& obj, int row, int col);

/// Exact footprint of `obj`; throws InvalidArgument if it leaves the image.
Bitmask object_mask(const SceneObject& obj, int width, int height);

/// Exact pixel-intersection test, pre-filtered by bounding boxes.
bool overlaps(const SceneObject& a, const SceneObject& b, int width, int height);

/// Black background with each object's footprint painted at its intensity.
Image render_scene(const Scene& scene);

/// Footprint indices of every object, in object order.
std::vector<std::vector<std::size_t>> object_footprints(const Scene& scene);

/// Throws InvalidArgument naming the first violated scene invariant.
void validate_scene(const Scene& scene);

}  // namespace xaibench
