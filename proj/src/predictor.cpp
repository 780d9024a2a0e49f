#include "xaibench/predictor.hpp"

#include <string>

#include "xaibench/error.hpp"

namespace xaibench {

std::vector<double> Predictor::predict_batch(std::span<const Image> images) {
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(predict(image));
  return out;
}

namespace {

PredictorInfo oracle_info(const AttributionFunction& fn) {
  PredictorInfo info;
  info.name = "oracle-" + std::string(to_string(fn.kind));
  info.is_classifier = fn.is_classifier();
  return info;
}

}  // namespace

OraclePredictor::OraclePredictor(Scene scene, AttributionFunction fn, double presence_threshold)
    : scene_(std::move(scene)), fn_(std::move(fn)), threshold_(presence_threshold), info_(oracle_info(fn_)) {
  if (!(threshold_ > 0.0 && threshold_ <= 1.0)) {
    throw InvalidArgument("presence threshold must lie in (0, 1]");
  }
  footprints_ = object_footprints(scene_);
}

std::vector<int> OraclePredictor::visible_counts(const Image& image) const {
  if (image.width != scene_.width || image.height != scene_.height) {
    throw InvalidArgument("oracle: image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + ", scene is " + std::to_string(scene_.width) +
                          "x" + std::to_string(scene_.height));
  }
  std::vector<int> counts(scene_.pattern_catalog.size(), 0);
  for (std::size_t k = 0; k < scene_.objects.size(); ++k) {
    const auto& obj = scene_.objects[k];
    const auto& footprint = footprints_[k];
    std::size_t lit = 0;
    for (std::size_t idx : footprint) lit += image.pixels[idx] == obj.intensity ? 1 : 0;
    if (static_cast<double>(lit) >= threshold_ * static_cast<double>(footprint.size())) {
      ++counts[static_cast<std::size_t>(obj.pattern_index)];
    }
  }
  return counts;
}

double OraclePredictor::predict(const Image& image) { return fn_.evaluate(visible_counts(image)); }

ScenePoolOracle::ScenePoolOracle(std::vector<Scene> scenes, AttributionFunction fn, double presence_threshold)
    : info_(oracle_info(fn)) {
  if (scenes.empty()) throw InvalidArgument("scene pool is empty");
  for (auto& scene : scenes) {
    renders_.push_back(render_scene(scene));
    oracles_.emplace_back(std::move(scene), fn, presence_threshold);
  }
}

bool ScenePoolOracle::consistent(std::size_t index, const Image& image) const {
  const Image& full = renders_[index];
  if (full.width != image.width || full.height != image.height) return false;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (image.pixels[i] != 0 && image.pixels[i] != full.pixels[i]) return false;
  }
  return true;
}

double ScenePoolOracle::predict(const Image& image) {
  if (consistent(last_, image)) return oracles_[last_].predict(image);
  for (std::size_t i = 0; i < oracles_.size(); ++i) {
    if (i != last_ && consistent(i, image)) {
      last_ = i;
      return oracles_[i].predict(image);
    }
  }
  throw InvalidArgument("no scene in the pool is consistent with the image");
}

}  // namespace xaibench
