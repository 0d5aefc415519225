// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace bnp {

// mt19937_64 seeded with splitmix64(seed + (stream + 1) * golden). Each
// (seed, stream) pair is an independent chain; stream 0 is the default.
// Variates come from boost::random, whose algorithms are fixed across
// platforms (std:: distributions are not).
using Engine = std::mt19937_64;
inline constexpr std::string_view kRngName = "mt19937_64/splitmix64-streams/boost-normal";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL));
}

// Uniform on the open interval (0, 1) with 53 bits of resolution.
inline double uniform_open01(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double normal(Engine& rng, double mean = 0.0, double sd = 1.0) {
  return boost::random::normal_distribution<double>(mean, sd)(rng);
}

inline double gumbel(Engine& rng) { return -std::log(-std::log(uniform_open01(rng))); }

// Index in [0, n) drawn uniformly.
inline std::size_t uniform_index(Engine& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(n)) % n;
}

}  // namespace bnp
