// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstdint>
#include <random>

namespace spansketch {

/// Engine used throughout the toolkit. mt19937_64 output is fully specified
/// by the standard, so runs are reproducible across platforms as long as we
/// avoid the implementation-defined std:: distributions.
using Rng = std::mt19937_64;

template <typename G>
concept Uniform64Source = std::uniform_random_bit_generator<G> &&
                          std::same_as<typename G::result_type, std::uint64_t> &&
                          (G::min() == 0) && (G::max() == ~std::uint64_t{0});

/// splitmix64 finalizer: a bijective 64-bit mixer with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Top 53 bits of a word mapped onto [0, 1).
constexpr double unit_interval(std::uint64_t word) noexcept {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

template <Uniform64Source G>
double uniform01(G& g) {
  return unit_interval(g());
}

/// Uniform integer in [0, n) by multiply-shift; bias is below 2^-64 * n.
template <Uniform64Source G>
std::uint64_t uniform_below(G& g, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(g()) * n) >> 64);
}

/// Independent deterministic stream for (seed, ordinal).
inline Rng stream_for(std::uint64_t seed, std::uint64_t ordinal) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ordinal),
                    static_cast<std::uint32_t>(ordinal >> 32)};
  return Rng(seq);
}

} // namespace spansketch
