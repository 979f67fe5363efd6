// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef RAINGP_RNG_HPP
#define RAINGP_RNG_HPP

#include <cstdint>
#include <random>

namespace raingp {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Used to derive independent substream seeds from a
// master seed so that replicates/chains/pixels can run in any order.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  return mix64(derive_seed(master, a) ^ mix64(b + 0x51ed270b9d4d4b6fULL));
}

}  // namespace raingp

#endif
