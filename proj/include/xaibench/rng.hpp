#pragma once

#include <cstdint>
#include <random>

namespace xaibench {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based seed split: the seed of item `index` in stream `stream`
/// depends only on (master, stream, index), never on generation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

/// Seeded generator with distribution helpers whose output does not depend on
/// the standard library implementation (std::uniform_int_distribution does).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  /// Uniform real in [0, 1).
  double uniform01();

 private:
  std::mt19937_64 engine_;
};

}  // namespace xaibench
