#pragma once

#include <vector>

#include "xaibench/error.hpp"
#include "xaibench/saliency_map.hpp"

namespace xaibench {

class MassMismatchError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline constexpr double kDefaultKlEpsilon = 1e-10;
inline constexpr int kDefaultBinGrid = 32;

/// Scales the map to unit sum. An all-zero map has no direction to scale, so
/// it becomes the uniform distribution; callers detect this with
/// is_all_zero() beforehand.
SaliencyMap normalize(const SaliencyMap& map);
bool is_all_zero(const SaliencyMap& map);

struct SignaturePoint {
  double row = 0.0;
  double col = 0.0;
  double mass = 0.0;
};

/// Sparse mass distribution over the plane. Ground distances between points
/// are Euclidean distances divided by `distance_scale`.
class Signature {
 public:
  /// Throws InvalidArgument on empty input, non-positive or non-finite
  /// masses, duplicate locations or a non-positive scale.
  Signature(std::vector<SignaturePoint> points, double distance_scale);

  const std::vector<SignaturePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double total_mass() const { return total_mass_; }
  double distance_scale() const { return distance_scale_; }

 private:
  std::vector<SignaturePoint> points_;
  double total_mass_ = 0.0;
  double distance_scale_ = 1.0;
};

/// Image diagonal sqrt((w-1)^2 + (h-1)^2), the largest pixel distance.
double image_diagonal(int width, int height);

/// Aggregates map mass into bin_grid x bin_grid bins placed at the bin
/// centers; zero-mass bins are dropped. bin_grid equal to the image width and
/// height is pixel-exact. Distances scale by the image diagonal.
Signature to_signature(const SaliencyMap& map, int bin_grid = kDefaultBinGrid);

/// Earth mover's distance between signatures of equal total mass, solved
/// exactly. With unit masses and diagonal-scaled distances the value is in
/// [0, 1]. Throws MassMismatchError if totals differ by more than 1e-9.
double emd(const Signature& p, const Signature& q);

/// Earth mover's distance with the partial-match penalty for unequal masses:
/// the optimal cost of moving min(total_p, total_q) plus
/// |total_p - total_q| times the largest ground distance.
double emd_partial(const Signature& p, const Signature& q);

/// sum_x P(x) * log(P(x) / (Q(x) + eps) + eps), natural log. P is the
/// reference (ground truth), Q the explanation.
double kl_div(const SaliencyMap& p, const SaliencyMap& q, double eps = kDefaultKlEpsilon);

}  // namespace xaibench
