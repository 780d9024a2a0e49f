#include "xaibench/saliency_map.hpp"

#include <cmath>
#include <string>

#include "xaibench/error.hpp"

namespace xaibench {

SaliencyMap::SaliencyMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0 ||
      values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("saliency map: " + std::to_string(values_.size()) +
                          " values for a " + std::to_string(width) + "x" +
                          std::to_string(height) + " grid");
  }
  check_saliency_values(*this);
}

double SaliencyMap::total() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum;
}

void check_saliency_values(const SaliencyMap& map) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = map[i];
    if (!std::isfinite(v)) throw InvalidArgument("saliency map holds a non-finite value");
    if (v < 0.0) throw InvalidArgument("saliency map holds a negative value");
  }
}

}  // namespace xaibench
