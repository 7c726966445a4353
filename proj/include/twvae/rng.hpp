#pragma once

#include <cstdint>
#include <random>

namespace twvae {

/// Seeded random stream. The engine is std::mt19937_64; the real-valued
/// draws are computed here rather than through <random> distributions so
/// that a given seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  bool coin() { return (engine_() >> 63) != 0; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream, e.g. one per data-loading worker.
  Rng fork(std::uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace twvae
