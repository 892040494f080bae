#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace phasevol {

// SplitMix64 finalizer. Used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sub-seed for a named stream (data, init, batches, ...) or an epoch index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream));
}

namespace streams {
inline constexpr std::uint64_t data = 0x64617461;     // "data"
inline constexpr std::uint64_t init = 0x696e6974;     // "init"
inline constexpr std::uint64_t batches = 0x62617463;  // "batc"
inline constexpr std::uint64_t sweep = 0x73776565;    // "swee"
}  // namespace streams

/// MT19937-64 engine with a fixed 53-bit mantissa mapping to [0,1).
/// std::uniform_real_distribution is implementation-defined, so it is not
/// used anywhere reproducibility matters.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename Scalar>
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> uniform_points(Eigen::Index count) {
    Eigen::Matrix<Scalar, 3, Eigen::Dynamic> pts(3, count);
    for (Eigen::Index j = 0; j < count; ++j)
      for (int d = 0; d < 3; ++d) pts(d, j) = static_cast<Scalar>(uniform());
    return pts;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace phasevol
