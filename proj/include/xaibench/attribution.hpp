#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "xaibench/saliency_map.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

enum class FunctionKind { Ssin, Suum, Class };

std::string_view to_string(FunctionKind kind);
FunctionKind parse_function_kind(std::string_view text);
inline constexpr std::array<FunctionKind, 3> kAllFunctions{FunctionKind::Ssin, FunctionKind::Suum,
                                                          FunctionKind::Class};

/// Relative importances of the three patterns for ssin and suum.
inline constexpr std::array<double, 3> kRegressionWeights{0.55, 0.27, 0.18};
/// Weights of the first two patterns for class; later patterns are ignored.
inline constexpr std::array<double, 2> kClassWeights{1.0, 0.5};
/// Largest per-pattern count; maps counts into [0, 1] for ssin and suum.
inline constexpr int kMaxPatternCount = 2;

/// sum_i w_i * sin(pi/2 * counts[i] / 2). Requires exactly three counts in [0, 2].
double eval_ssin(std::span<const int> counts);
/// sum_i w_i * counts[i] / 2. Requires exactly three counts in [0, 2].
double eval_suum(std::span<const int> counts);
/// 1 if counts[0] - 0.5 * counts[1] >= 0, else 0. Requires at least two counts.
double eval_class(std::span<const int> counts);

/// Attribution function F together with its ground-truth pattern weights.
struct AttributionFunction {
  FunctionKind kind = FunctionKind::Suum;
  std::vector<double> weights;
  int g_normalizer = kMaxPatternCount;

  static AttributionFunction make(FunctionKind kind);

  double evaluate(std::span<const int> counts) const;
  /// Ground-truth importance painted on objects of pattern `pattern_index`:
  /// the weight magnitude, or 0 for patterns the function ignores.
  double pattern_weight(int pattern_index) const;
  bool is_classifier() const { return kind == FunctionKind::Class; }
};

/// g(p, I): number of scene objects carrying the pattern.
int pattern_count(const Scene& scene, int pattern_index);
std::vector<int> pattern_counts(const Scene& scene);

/// Label of a scene under `fn`.
double scene_label(const Scene& scene, const AttributionFunction& fn);

/// Unnormalized ground truth: every pixel of an object with pattern i holds
/// the pattern weight w_i, background 0.
SaliencyMap ground_truth_map(const Scene& scene, const AttributionFunction& fn);

}  // namespace xaibench
