#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xaibench/error.hpp"
#include "xaibench/predictor.hpp"
#include "xaibench/saliency_map.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

/// Object presence vector: 1 keeps the object, 0 occludes it.
using PresenceVector = std::vector<std::uint8_t>;

inline constexpr int kMaxPlanObjects = 6;
/// Requests a plan with every subset of objects.
inline constexpr int kFullPlan = 0;

struct PerturbationPlan {
  int n_objects = 0;
  int sample_size = 0;
  std::vector<PresenceVector> vectors;
};

/// Smallest plan the surrogate accepts: intercept, one slope per object and
/// one residual degree of freedom, capped at the 2^n available subsets.
int min_sample_size(int n_objects);
int max_sample_size(int n_objects);
/// Maps a requested size (kFullPlan, or any positive count) into the legal
/// range [min_sample_size, max_sample_size].
int effective_sample_size(int n_objects, int requested);

/// Full size: every subset, descending binary order from all-ones. Smaller
/// sizes: all-ones first, then a prefix of a permutation of the remaining
/// subsets seeded by `plan_seed`, so plans of one seed are nested.
PerturbationPlan enumerate_perturbations(int n_objects, int sample_size, std::uint64_t plan_seed);

/// Copy of `image` with the footprints of objects where z is 0 set to 0.
Image apply_perturbation(const Image& image, const Scene& scene, std::span<const std::uint8_t> z);

class SurrogateFitError : public Error {
 public:
  using Error::Error;
};

struct SurrogateFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double residual_norm = 0.0;
  bool ridge_applied = false;
};

inline constexpr double kRidgeLambda = 1e-8;
inline constexpr double kConditionLimit = 1e12;

/// Ordinary least squares of outputs on presence vectors with an intercept
/// and uniform sample weights, through the normal equations of the centered
/// design. A Gram matrix with condition number above 1e12 gets a 1e-8 ridge.
SurrogateFit fit_linear_surrogate(const PerturbationPlan& plan, std::span<const double> outputs);

enum class CoefficientRendering { ClipNegative, Absolute };

/// Paints each object's footprint with its (clipped or absolute) coefficient.
SaliencyMap render_coefficients(const Scene& scene, std::span<const double> coefficients,
                                CoefficientRendering rendering = CoefficientRendering::ClipNegative);

struct ExplainOptions {
  int sample_size = kFullPlan;
  std::uint64_t plan_seed = 0;
  CoefficientRendering rendering = CoefficientRendering::ClipNegative;
};

struct Explanation {
  SaliencyMap map;
  SurrogateFit fit;
  PerturbationPlan plan;
  std::vector<double> outputs;
};

/// Occlusion explanation of `predictor` at `image`, with the scene objects as
/// interpretable features. The sample size is clamped by effective_sample_size.
Explanation explain(const Image& image, const Scene& scene, Predictor& predictor,
                    const ExplainOptions& options = {});

}  // namespace xaibench
