#ifndef LENBIAS_RNG_HPP
#define LENBIAS_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lenbias {

// All randomness in the library flows through mt19937_64 plus the helpers
// below. std::uniform_int_distribution and friends are implementation
// defined, so they are never used: outputs must be bit-identical across
// standard libraries and platforms.

// FNV-1a over the seed bytes (little-endian) followed by the id bytes.
// Used to give every id a stable, seed-keyed sort key.
inline std::uint64_t keyed_hash(std::uint64_t seed, std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : id) mix(static_cast<unsigned char>(c));
  return h;
}

// Derives an independent stream seed from a base seed and a purpose tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return keyed_hash(seed, tag);
}

// Uniform integer in [0, n) via multiply-shift; n must be > 0.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Fisher-Yates with the portable bounded() above.
template <typename T>
void shuffle_inplace(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace lenbias

#endif  // LENBIAS_RNG_HPP
