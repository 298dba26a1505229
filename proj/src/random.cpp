#include "ucrlb/random.hpp"

#include <random>

namespace ucrlb {

std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

double sample_gamma(Stream& stream, double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(stream);
}

double sample_beta(Stream& stream, double alpha, double beta) {
  const double x = sample_gamma(stream, alpha);
  const double y = sample_gamma(stream, beta);
  const double sum = x + y;
  // Both draws can underflow for tiny shapes; fall back to the mean.
  if (!(sum > 0.0)) return alpha / (alpha + beta);
  return x / sum;
}

}  // namespace ucrlb
