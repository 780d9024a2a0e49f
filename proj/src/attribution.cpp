#include "xaibench/attribution.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "xaibench/error.hpp"

namespace xaibench {

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Ssin: return "ssin";
    case FunctionKind::Suum: return "suum";
    case FunctionKind::Class: return "class";
  }
  return "?";
}

FunctionKind parse_function_kind(std::string_view text) {
  if (text == "ssin") return FunctionKind::Ssin;
  if (text == "suum") return FunctionKind::Suum;
  if (text == "class") return FunctionKind::Class;
  throw InvalidArgument("unknown function '" + std::string(text) + "'");
}

namespace {

void check_regression_counts(std::span<const int> counts, const char* name) {
  if (counts.size() != kRegressionWeights.size()) {
    throw InvalidArgument(std::string(name) + ": expected 3 pattern counts, got " +
                          std::to_string(counts.size()));
  }
  for (int c : counts) {
    if (c < 0 || c > kMaxPatternCount) {
      throw InvalidArgument(std::string(name) + ": pattern count " + std::to_string(c) +
                            " outside [0, 2]");
    }
  }
}

}  // namespace

double eval_ssin(std::span<const int> counts) {
  check_regression_counts(counts, "ssin");
  double out = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double g = static_cast<double>(counts[i]) / kMaxPatternCount;
    out += kRegressionWeights[i] * std::sin(std::numbers::pi / 2.0 * g);
  }
  return out;
}

double eval_suum(std::span<const int> counts) {
  check_regression_counts(counts, "suum");
  double out = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out += kRegressionWeights[i] * (static_cast<double>(counts[i]) / kMaxPatternCount);
  }
  return out;
}

double eval_class(std::span<const int> counts) {
  if (counts.size() < 2) {
    throw InvalidArgument("class: expected at least 2 pattern counts, got " +
                          std::to_string(counts.size()));
  }
  const double margin = kClassWeights[0] * counts[0] - kClassWeights[1] * counts[1];
  return margin >= 0.0 ? 1.0 : 0.0;
}

AttributionFunction AttributionFunction::make(FunctionKind kind) {
  AttributionFunction fn;
  fn.kind = kind;
  if (kind == FunctionKind::Class) {
    fn.weights.assign(kClassWeights.begin(), kClassWeights.end());
  } else {
    fn.weights.assign(kRegressionWeights.begin(), kRegressionWeights.end());
  }
  return fn;
}

double AttributionFunction::evaluate(std::span<const int> counts) const {
  switch (kind) {
    case FunctionKind::Ssin: return eval_ssin(counts);
    case FunctionKind::Suum: return eval_suum(counts);
    case FunctionKind::Class: return eval_class(counts);
  }
  return 0.0;
}

double AttributionFunction::pattern_weight(int pattern_index) const {
  if (pattern_index < 0) throw InvalidArgument("negative pattern index");
  if (static_cast<std::size_t>(pattern_index) >= weights.size()) return 0.0;
  return std::abs(weights[static_cast<std::size_t>(pattern_index)]);
}

int pattern_count(const Scene& scene, int pattern_index) {
  if (pattern_index < 0 || static_cast<std::size_t>(pattern_index) >= scene.pattern_catalog.size()) {
    throw InvalidArgument("pattern index " + std::to_string(pattern_index) + " out of range");
  }
  int n = 0;
  for (const auto& obj : scene.objects) n += obj.pattern_index == pattern_index ? 1 : 0;
  return n;
}

std::vector<int> pattern_counts(const Scene& scene) {
  std::vector<int> counts(scene.pattern_catalog.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = pattern_count(scene, static_cast<int>(i));
  return counts;
}

double scene_label(const Scene& scene, const AttributionFunction& fn) {
  return fn.evaluate(pattern_counts(scene));
}

SaliencyMap ground_truth_map(const Scene& scene, const AttributionFunction& fn) {
  SaliencyMap map(scene.width, scene.height);
  for (const auto& obj : scene.objects) {
    const double w = fn.pattern_weight(obj.pattern_index);
    for (std::size_t idx : object_mask(obj, scene.width, scene.height).indices()) map[idx] = w;
  }
  return map;
}

}  // namespace xaibench
