#pragma once

#include <cstdint>
#include <random>

namespace netdemix {

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of substream `index` under `master`. Pure function of both arguments,
/// so work split across samples is reproducible regardless of scheduling.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Seedable, splittable random source.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix_seed(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent generator for substream `index`; does not advance *this.
  Rng split(std::uint64_t index) const { return Rng(substream_seed(seed_, index)); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return normal_(engine_); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  engine_type& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace netdemix
