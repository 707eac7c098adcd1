#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace dprsa {

/// Counter-based random stream. Each stream is fully determined by its key,
/// so draws are reproducible and independent of the order in which other
/// streams are consumed. The generator is splitmix64 with an explicit
/// counter (O(1) seek, passes standard statistical batteries).
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + 0x9E3779B97F4A7C15ULL * ++ctr_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal draw (Box-Muller; one value per pair of uniforms kept
  /// stateless so streams stay seekable).
  double next_normal();

  /// Fills `out` with i.i.d. N(0, stddev^2) draws, consuming uniforms in
  /// pairs.
  void fill_normal(std::span<double> out, double stddev);

  /// Unbiased integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

/// Well-known stream purposes, mixed into stream keys so the same
/// (round, worker) pair can own several independent streams.
namespace stream_purpose {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kMinibatch = 3;
inline constexpr std::uint64_t kDpNoise = 4;
inline constexpr std::uint64_t kAttack = 5;
inline constexpr std::uint64_t kSynthetic = 6;
}  // namespace stream_purpose

/// Derives a stream key from a master seed and a tag tuple
/// (e.g. {purpose, round, worker}).
std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

/// Deterministic in-place Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::span<T> values, RngStream& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace dprsa
