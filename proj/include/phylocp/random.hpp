#ifndef PHYLOCP_RANDOM_HPP
#define PHYLOCP_RANDOM_HPP

#include <cstdint>
#include <random>

namespace phylocp {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to turn structured indices into seeds.
inline std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the substream identified by (seed, a, b). Streams for distinct
/// index pairs are statistically independent for all practical purposes,
/// and do not depend on the order in which they are requested.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

/// Small counter-style engine for short, cheaply created substreams
/// (one per simulated site).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return UINT64_MAX; }
  result_type operator()()
  {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
  return Rng(derive_seed(seed, a, b));
}

/// Uniform on [0, 1) with 53 random bits. Portable across standard libraries,
/// unlike std::uniform_real_distribution.
template <typename Engine>
inline double uniform01(Engine& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer on [lo, hi] (inclusive), portable.
template <typename Engine>
inline int uniform_int(Engine& rng, int lo, int hi)
{
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // rejection keeps the draw exactly uniform
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return lo + static_cast<int>(r % span);
}

} // namespace phylocp

#endif
