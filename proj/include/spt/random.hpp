#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace spt {

/// Seedable, splittable random stream.
///
/// Uniform variates are built directly from the engine's 64-bit output so the
/// stream of doubles is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seeded(seed, 0, false)) {}

  /// Independent substream `index` of the stream identified by `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    Rng r;
    r.engine_ = seeded(seed, index, true);
    return r;
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index drawn with probability proportional to `weights` (non-negative, positive sum).
  template <class Weights>
  std::size_t categorical(const Weights& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform point of the (n-1)-simplex, i.e. Dirichlet(1,...,1).
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> out(n);
    double sum = 0;
    for (auto& x : out) {
      x = -std::log1p(-uniform());
      sum += x;
    }
    for (auto& x : out) x /= sum;
    return out;
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  static std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t index, bool split) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(split ? 0x5eed : 0)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
};

}  // namespace spt
