#ifndef BFSGD_RNG_HPP
#define BFSGD_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bfsgd/types.hpp"

namespace bfsgd {

// Counter-based seeding: every random draw is keyed by (run seed, stream,
// counters), so results do not depend on evaluation order or thread count.

enum class Stream : std::uint64_t {
  realizations = 1,
  indices = 2,
  anchor = 3,
  inner = 4,
  minibatch = 5,
  validation = 6,
  data = 7,
  replicate = 8,
  problem = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b * 0xD1B54A32D192ED03ULL));
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(derive_seed(seed, stream, a, b));
}

/// `count` distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<Index> draw_distinct(Rng& rng, Index n, Index count) {
  if (count > n) throw ConfigFault("cannot draw more distinct indices than available");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

inline Vector standard_normal(Rng& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace bfsgd

#endif  // BFSGD_RNG_HPP
