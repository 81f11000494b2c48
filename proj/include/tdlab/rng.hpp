#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tdlab {

/// Seedable, splittable random stream.
///
/// Every experiment cell derives its own stream from (master seed, label) so
/// parallel runs never share generator state. Sampling primitives are spelled
/// out explicitly (53-bit doubles, CDF-scan categorical) so a given seed
/// produces the same trajectory on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(seed), gen_(mix(seed)) {}

  /// Derive an independent stream from a master seed and a textual label.
  static Rng from_stream(std::uint64_t master, std::string_view label) {
    return Rng(mix(master ^ fnv1a(label)));
  }

  /// Child stream; does not consume state from this generator.
  Rng split(std::string_view label) const {
    return Rng(mix(root_ ^ fnv1a(label) ^ 0x9e3779b97f4a7c15ull));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Index drawn from an unnormalized-free probability row of length n.
  /// Rows are expected to sum to 1; the final index absorbs rounding slack.
  template <typename Row>
  int categorical(const Row& probs, int n) {
    const double u = next_double();
    double acc = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  std::uint64_t root() const { return root_; }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  // splitmix64 finalizer; spreads structured seeds over the full state space.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t root_;
  std::mt19937_64 gen_;
};

}  // namespace tdlab
