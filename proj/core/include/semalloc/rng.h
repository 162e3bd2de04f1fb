#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace semalloc {

using Rng = std::mt19937_64;

// Expands one experiment seed into independent named streams, so toggling
// one subsystem does not perturb the draws of another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index);

inline Rng make_stream(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

inline Rng make_stream(std::uint64_t seed, std::string_view stream,
                       std::uint64_t index) {
  return Rng(derive_seed(seed, stream, index));
}

// Uniform double in [0, 1) from the top 53 bits. Used instead of
// std::uniform_real_distribution where bit-exact portability matters.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace semalloc
