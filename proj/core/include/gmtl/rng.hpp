#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gmtl {

/// FNV-1a 64-bit hash, used for stream labels and file digests.
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic RNG based on SplitMix64. The generator is fully specified
/// here so streams are bit-identical across platforms and compilers:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
///
/// Every run derives all of its randomness from one root seed; substreams
/// are forked by hashing a text label into the seed (see fork()), so adding
/// a consumer never perturbs existing streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double next_unit();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). Rejection sampled, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return next_unit() < p; }

  /// Independent child stream named by a label. Pure function of
  /// (parent seed, label); does not advance this stream.
  Rng fork(std::string_view label) const;

  template <class T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace gmtl
