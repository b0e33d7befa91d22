#pragma once

#include <cstdint>
#include <random>

namespace adex {

// splitmix64 finalizer; used to derive decorrelated substream seeds from a
// master seed plus stream tags. Seeding mt19937_64 with correlated integers
// directly produces visibly correlated streams, hence the mixing.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a,
                                 std::uint64_t tag_b) noexcept {
  return derive_seed(derive_seed(seed, tag_a), tag_b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Stream tags for the independent substreams of one simulation run.
namespace stream {
inline constexpr std::uint64_t environment = 0x0e5a11;
inline constexpr std::uint64_t policy = 0x90110c;
}  // namespace stream

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Beta(alpha, beta) draw via two gamma draws.
inline double sample_beta(std::mt19937_64& rng, double alpha, double beta) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return alpha / (alpha + beta);  // underflow guard
  return x / (x + y);
}

}  // namespace adex
