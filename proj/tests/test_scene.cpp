#include <doctest.h>

#include <cmath>

#include "xaibench/error.hpp"
#include "xaibench/scene.hpp"

using namespace xaibench;

namespace {

SceneObject make(ShapeKind shape, int row, int col, int size, int id = 0, int pattern = 0) {
  SceneObject o;
  o.id = id;
  o.shape = shape;
  o.center = {row, col};
  o.size = size;
  o.pattern_index = pattern;
  return o;
}

// Independent rasterizer: tests every pixel of the image against the shape
// definition directly.
std::size_t brute_count(const SceneObject& o, int w, int h) {
  std::size_t n = 0;
  const int t = std::max(1, o.size / 3);
  const int lo = -(t - 1) / 2;
  const int hi = lo + t - 1;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int dr = r - o.center.row;
      const int dc = c - o.center.col;
      bool in = false;
      switch (o.shape) {
        case ShapeKind::Circle: in = dr * dr + dc * dc <= o.size * o.size; break;
        case ShapeKind::Square: in = std::abs(dr) <= o.size && std::abs(dc) <= o.size; break;
        case ShapeKind::Cross:
          in = (std::abs(dc) <= o.size && dr >= lo && dr <= hi) || (std::abs(dr) <= o.size && dc >= lo && dc <= hi);
          break;
      }
      n += in;
    }
  }
  return n;
}

Scene two_object_scene() {
  Scene s;
  s.width = 64;
  s.height = 64;
  s.pattern_catalog = {{ShapeKind::Circle, 255}, {ShapeKind::Square, 255}, {ShapeKind::Cross, 255}};
  s.objects = {make(ShapeKind::Circle, 10, 10, 4, 0, 0), make(ShapeKind::Square, 40, 40, 5, 1, 1)};
  for (auto& o : s.objects) o.intensity = 255;
  return s;
}

}  // namespace

TEST_CASE("mask pixel counts") {
  CHECK(object_mask(make(ShapeKind::Circle, 5, 5, 0), 32, 32).count() == 1);
  CHECK(object_mask(make(ShapeKind::Circle, 5, 5, 0), 32, 32).test(5, 5));
  CHECK(object_mask(make(ShapeKind::Square, 10, 10, 2), 32, 32).count() == 25);
  CHECK(object_mask(make(ShapeKind::Circle, 10, 10, 2), 32, 32).count() == 13);
}

TEST_CASE("masks agree with a brute-force rasterizer") {
  for (auto shape : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Cross}) {
    for (int size = 0; size <= 12; ++size) {
      const auto o = make(shape, 20, 21, size);
      CAPTURE(size);
      CHECK(object_mask(o, 48, 48).count() == brute_count(o, 48, 48));
    }
  }
}

TEST_CASE("cross has two bars of length 2*size+1") {
  const auto o = make(ShapeKind::Cross, 20, 20, 9);
  const int t = cross_thickness(9);
  CHECK(t == 3);
  CHECK(object_mask(o, 48, 48).count() == static_cast<std::size_t>(2 * t * 19 - t * t));
  CHECK(cross_thickness(1) == 1);
}

TEST_CASE("out of bounds objects are rejected") {
  CHECK_FALSE(inside_bounds(make(ShapeKind::Circle, 2, 2, 3), 32, 32));
  CHECK_THROWS_AS(object_mask(make(ShapeKind::Circle, 2, 2, 3), 32, 32), InvalidArgument);
  CHECK_THROWS_AS(object_mask(make(ShapeKind::Square, 30, 10, 2), 32, 32), InvalidArgument);
  CHECK(inside_bounds(make(ShapeKind::Square, 29, 10, 2), 32, 32));
}

TEST_CASE("overlaps") {
  CHECK_FALSE(overlaps(make(ShapeKind::Circle, 10, 10, 5), make(ShapeKind::Circle, 10, 110, 5), 128, 128));
  CHECK(overlaps(make(ShapeKind::Square, 20, 20, 4), make(ShapeKind::Square, 20, 20, 4), 64, 64));
  CHECK(overlaps(make(ShapeKind::Circle, 10, 10, 3), make(ShapeKind::Square, 14, 10, 3), 32, 32));
  // Bounding boxes touch but the disc corner does not reach the cross arm.
  const auto circle = make(ShapeKind::Circle, 10, 10, 4);
  const auto cross = make(ShapeKind::Cross, 16, 16, 3);
  CHECK(overlaps(circle, cross, 32, 32) == object_mask(circle, 32, 32).intersects(object_mask(cross, 32, 32)));
}

TEST_CASE("overlaps equals exact mask intersection on a sweep") {
  const auto a = make(ShapeKind::Cross, 16, 16, 6);
  for (auto shape : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Cross}) {
    for (int r = 6; r < 26; ++r) {
      for (int c = 6; c < 26; ++c) {
        const auto b = make(shape, r, c, 5);
        const bool exact = object_mask(a, 32, 32).intersects(object_mask(b, 32, 32));
        REQUIRE(overlaps(a, b, 32, 32) == exact);
      }
    }
  }
}

TEST_CASE("render paints every mask at its intensity") {
  Scene s = two_object_scene();
  const Image image = render_scene(s);
  std::size_t expected = 0;
  for (const auto& o : s.objects) expected += object_mask(o, s.width, s.height).count();
  CHECK(image.nonzero_count() == expected);
  CHECK(image.at(10, 10) == 255);
  CHECK(image.at(0, 0) == 0);
  CHECK(render_scene(s) == image);

  Scene empty = s;
  empty.objects.clear();
  CHECK(render_scene(empty).nonzero_count() == 0);
}

TEST_CASE("footprints list mask indices") {
  Scene s = two_object_scene();
  const auto fp = object_footprints(s);
  REQUIRE(fp.size() == 2);
  CHECK(fp[0] == object_mask(s.objects[0], s.width, s.height).indices());
  CHECK(std::is_sorted(fp[1].begin(), fp[1].end()));
}

TEST_CASE("validate_scene") {
  Scene s = two_object_scene();
  CHECK_NOTHROW(validate_scene(s));

  Scene overlapping = s;
  overlapping.objects[1].center = {12, 12};
  CHECK_THROWS_AS(validate_scene(overlapping), InvalidArgument);

  Scene dup = s;
  dup.objects[1].id = 0;
  CHECK_THROWS_AS(validate_scene(dup), InvalidArgument);

  Scene wrong_shape = s;
  wrong_shape.objects[1].shape = ShapeKind::Cross;
  CHECK_THROWS_AS(validate_scene(wrong_shape), InvalidArgument);

  Scene three = s;
  three.objects.push_back(make(ShapeKind::Circle, 50, 10, 3, 2, 0));
  three.objects.push_back(make(ShapeKind::Circle, 30, 10, 3, 3, 0));
  for (auto& o : three.objects) o.intensity = 255;
  CHECK_THROWS_AS(validate_scene(three), InvalidArgument);

  Scene none = s;
  none.objects.clear();
  CHECK_THROWS_AS(validate_scene(none), InvalidArgument);

  Scene color = s;
  color.dataset_kind = DatasetKind::Color;
  color.pattern_catalog = {{ShapeKind::Circle, 85}, {ShapeKind::Circle, 170}, {ShapeKind::Circle, 255}};
  color.objects[1].shape = ShapeKind::Circle;
  color.objects[0].intensity = 85;
  color.objects[1].intensity = 170;
  CHECK_NOTHROW(validate_scene(color));
  color.objects[1].intensity = 255;
  CHECK_THROWS_AS(validate_scene(color), InvalidArgument);
}

TEST_CASE("enum names round-trip") {
  for (auto k : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Cross}) CHECK(parse_shape_kind(to_string(k)) == k);
  for (auto k : {DatasetKind::Shape, DatasetKind::Color}) CHECK(parse_dataset_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_shape_kind("hexagon"), InvalidArgument);
}
