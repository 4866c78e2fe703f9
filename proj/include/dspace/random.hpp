#ifndef DSPACE_RANDOM_HPP_
#define DSPACE_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dspace {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a sub-stream identified by a path of indices, e.g.
/// (run seed, step, camera, component). Independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace dspace

#endif  // DSPACE_RANDOM_HPP_
