#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace esn {

/// One splitmix64 step; advances the state and returns the next word.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Mixes an arbitrary list of seed parts into one 64-bit substream seed.
/// Used to derive independent, order-insensitive-to-scheduling streams
/// keyed by (master seed, trial, purpose, ...).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8BADF00D600DCAFEull;
  for (std::uint64_t p : parts) {
    state ^= splitmix64_next(state) ^ p;
    state = splitmix64_next(state);
  }
  return splitmix64_next(state);
}

/// Well-known purpose tags for substream derivation.
namespace stream {
constexpr std::uint64_t reservoir = 1;
constexpr std::uint64_t input = 2;
constexpr std::uint64_t init = 3;
constexpr std::uint64_t noise_a = 4;
constexpr std::uint64_t noise_b = 5;
constexpr std::uint64_t perturb = 6;
constexpr std::uint64_t lipschitz = 7;
constexpr std::uint64_t attractor = 8;
}  // namespace stream

/// Deterministic random source; one instance per (trial, purpose) substream.
/// Instances are never shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  /// Standard normal draw.
  double gaussian() { return normal_(engine_); }

  bool bernoulli(double p) {
    return std::bernoulli_distribution(p)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace esn
