#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xaibench/attribution.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

struct PredictorInfo {
  std::string name;
  double output_min = 0.0;
  double output_max = 1.0;
  bool is_classifier = false;
  /// Classifier exposes a real-valued logit instead of a hard label.
  bool raw_logit = false;
};

/// Black-box model f(image) -> real. Identical pixels must give identical
/// outputs.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual const PredictorInfo& info() const = 0;
  virtual double predict(const Image& image) = 0;
  virtual std::vector<double> predict_batch(std::span<const Image> images);
};

inline constexpr double kDefaultPresenceThreshold = 0.5;

/// The attribution function used directly as the model. It reads pixels: an
/// object counts as present when at least `presence_threshold` of its
/// footprint still shows its intensity.
class OraclePredictor final : public Predictor {
 public:
  OraclePredictor(Scene scene, AttributionFunction fn,
                  double presence_threshold = kDefaultPresenceThreshold);

  const PredictorInfo& info() const override { return info_; }
  double predict(const Image& image) override;

  /// Per-pattern counts of the objects visible in `image`.
  std::vector<int> visible_counts(const Image& image) const;

 private:
  Scene scene_;
  AttributionFunction fn_;
  double threshold_;
  std::vector<std::vector<std::size_t>> footprints_;
  PredictorInfo info_;
};

/// Oracle over a pool of candidate scenes, for serving the oracle behind the
/// bridge where only pixels arrive. Each image is attributed to the scene it
/// is consistent with (every lit pixel matches that scene's rendering); the
/// most recently matched scene is tried first.
class ScenePoolOracle final : public Predictor {
 public:
  ScenePoolOracle(std::vector<Scene> scenes, AttributionFunction fn,
                  double presence_threshold = kDefaultPresenceThreshold);

  const PredictorInfo& info() const override { return info_; }
  /// Throws InvalidArgument if no scene in the pool explains the image.
  double predict(const Image& image) override;

 private:
  bool consistent(std::size_t index, const Image& image) const;

  std::vector<OraclePredictor> oracles_;
  std::vector<Image> renders_;
  std::size_t last_ = 0;
  PredictorInfo info_;
};

}  // namespace xaibench
