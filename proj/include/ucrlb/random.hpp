#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ucrlb {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds an ordered list of integers into a single 64-bit stream key.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts);

/// Counter-based random stream: draw i is a keyed hash of i, so a stream is
/// fully described by (key, counter) and copies replay identically.
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream() = default;
  explicit Stream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const Stream&, const Stream&) = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Beta(alpha, beta) draw via two gamma variates.
double sample_beta(Stream& stream, double alpha, double beta);

/// Gamma(shape, 1) draw.
double sample_gamma(Stream& stream, double shape);

}  // namespace ucrlb
