#pragma once

#include <cstdint>
#include <random>

namespace maopt {

/// Purpose tags of the seed tree. Every random draw in the library comes
/// from a child stream keyed by (master seed, tag, index), so two consumers
/// with different tags never share samples.
enum class Stream : std::uint64_t {
  mc_gradient = 1,
  mc_resample = 2,
  evaluation = 3,
  evaluation_resample = 4,
  user_draw = 5,
  candidates = 6,
  instantaneous = 7,
  receive_oracle = 8,
  validation = 9,
  mc_iteration = 10,
};

using Rng = std::mt19937_64;

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream tag, std::uint64_t index) {
  std::uint64_t h = detail::splitmix64(master);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return detail::splitmix64(h ^ (index * 0xd6e8feb86659fd93ULL));
}

inline Rng make_stream(std::uint64_t master, Stream tag, std::uint64_t index) {
  return Rng(derive_seed(master, tag, index));
}

}  // namespace maopt
