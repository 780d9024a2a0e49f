#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xaibench {

/// Dense grid of nonnegative importance values, row-major. Used both for
/// ground truth and for explanations.
class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(int width, int height)
      : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, 0.0) {}
  /// Throws InvalidArgument on size mismatch, negative or non-finite values.
  SaliencyMap(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }
  double& at(int row, int col) { return values_[static_cast<std::size_t>(row) * width_ + col]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double total() const;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Throws InvalidArgument if any value is negative or not finite.
void check_saliency_values(const SaliencyMap& map);

}  // namespace xaibench
