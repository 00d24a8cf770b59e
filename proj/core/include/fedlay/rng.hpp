#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedlay {

// 64-bit finalizer from SplitMix64. Bijective, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over a byte range, then mixed so that the top bits are usable.
std::uint64_t hash_bytes(const void* data, std::size_t size) noexcept;

std::uint64_t hash_string(std::string_view s) noexcept;

// All randomness flows from one 64-bit root seed. A stream is identified by
// a name and an index (node id, run number, ...):
//   stream_seed = mix64(mix64(root ^ hash(name)) + index)
// so adding a new consumer never perturbs existing streams.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0) noexcept;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

// Uniform integer in [0, bound). Unlike std::uniform_int_distribution the
// result is identical across standard library implementations.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Uniform real in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

// Box-Muller on two uniform_unit draws, so the stream does not depend on the
// standard library's normal_distribution.
double standard_normal(Rng& rng);

}  // namespace fedlay
