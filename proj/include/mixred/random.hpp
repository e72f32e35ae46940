#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mixred {

/// Seeded random source with reproducible draws across platforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Independent streams are derived by hashing (seed, stream) with
/// SplitMix64. All distributions are implemented here rather than taken from
/// <random>, whose distribution algorithms are implementation-defined:
///   uniform      53-bit mantissa fill, [0, 1)
///   normal       Marsaglia polar method (second variate discarded)
///   gamma        Marsaglia-Tsang squeeze, shape/rate convention
///   categorical  inverse CDF over the given weights
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// A generator for sub-stream `stream` of this generator's seed.
  Rng split(std::uint64_t stream) const { return Rng(seed_, mix(stream_, stream)); }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace mixred
