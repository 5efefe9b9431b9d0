#pragma once

#include <cstdint>
#include <random>

namespace oisnet {

using Engine = std::mt19937_64;

// Named randomness streams. Every random draw in the library comes from an
// engine seeded by derive_seed(master, stream, ...), so serial and parallel
// runs see the same numbers.
enum class Stream : std::uint64_t {
  rates = 0x72617465,
  arrivals = 0x61727276,
  marks = 0x6d61726b,
  bonds = 0x626f6e64,
  oracle = 0x6f72636c,
};

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0,
                                    std::uint64_t d = 0) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return mix64(h ^ d);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t b = 0,
                                    std::uint64_t c = 0, std::uint64_t d = 0) noexcept {
  return derive_seed(master, static_cast<std::uint64_t>(s), b, c, d);
}

/// Draws from the noncentral chi-squared law with `dof` degrees of freedom and
/// noncentrality `noncentrality` as a Poisson mixture of central chi-squared
/// variables: N ~ Poisson(noncentrality / 2), then chi2(dof + 2N).
double sample_noncentral_chi2(double dof, double noncentrality, Engine& rng);

}  // namespace oisnet
