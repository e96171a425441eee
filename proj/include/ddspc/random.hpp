#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cstdint>

namespace ddspc {

/// Seedable random source.
///
/// The engine is Boost's mt19937_64 and the distributions are Boost's, whose
/// algorithms are fixed by the library (unlike the implementation-defined
/// std:: distributions), so a seed reproduces the same stream on every
/// platform. Independent streams are derived with `stream()`, which mixes the
/// parent seed and a stream id through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform(double lower, double upper) {
    return boost::random::uniform_real_distribution<double>(lower, upper)(engine_);
  }

  double standard_normal() {
    return boost::random::normal_distribution<double>(0.0, 1.0)(engine_);
  }

  /// Independent generator for sub-task `id` (Monte Carlo sample, run index).
  Rng stream(std::uint64_t id) const { return Rng(mix(seed_, id)); }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  boost::random::mt19937_64 engine_;
};

}  // namespace ddspc
