#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stm {

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a root seed and a tag path. Streams with
/// different paths are independent regardless of the order they are used in,
/// which keeps parallel sweeps reproducible.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag));
  return s;
}

inline std::mt19937_64 make_stream(std::uint64_t root,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(root, path));
}

/// Fixed tags naming what a substream is for.
namespace stream {
inline constexpr std::uint64_t kTopicMatrix = 0x544f504943ULL;
inline constexpr std::uint64_t kSparsify = 0x535041525345ULL;
inline constexpr std::uint64_t kWeights = 0x57454947485453ULL;
inline constexpr std::uint64_t kCorpus = 0x434f52505553ULL;
inline constexpr std::uint64_t kDocument = 0x444f43ULL;
inline constexpr std::uint64_t kRow = 0x524f57ULL;
}  // namespace stream

}  // namespace stm
