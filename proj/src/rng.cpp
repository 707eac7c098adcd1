#include "dprsa/rng.hpp"

#include <cmath>
#include <numbers>

namespace dprsa {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double RngStream::next_normal() {
  double u1 = next_unit_pos();
  double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void RngStream::fill_normal(std::span<double> out, double stddev) {
  std::size_t i = 0;
  while (i + 1 < out.size()) {
    double u1 = next_unit_pos();
    double u2 = next_unit();
    double r = stddev * std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(angle);
    out[i + 1] = r * std::sin(angle);
    i += 2;
  }
  if (i < out.size()) out[i] = stddev * next_normal();
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Power-of-two mask rejection: unbiased and cheap for the small n used here.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t r = next_u64() & mask;
    if (r < n) return r;
  }
}

std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed ^ 0x517CC1B727220A95ULL);
  for (std::uint64_t t : tags) {
    h = mix64(h ^ (mix64(t + 0x9E3779B97F4A7C15ULL) + (h << 6) + (h >> 2)));
  }
  return h;
}

}  // namespace dprsa
