#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace subnet_hpo {

/// Random engine used by every sampling routine. Streams are caller-owned.
using Rng = std::mt19937_64;

/// Uniform draw on [0, 1), the r() of the scheduling rules.
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// SplitMix64 key stream. A run draws one 64-bit key per trial from this
/// stream and seeds that trial's Rng with it, so the whole generator state a
/// run needs to resume is a single word.
class KeyStream {
 public:
  explicit KeyStream(std::uint64_t state = 0) : state_(state) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state() const noexcept { return state_; }

  /// Fixed-width lowercase hex, the journal's serialization of the state.
  std::string state_hex() const;
  static KeyStream from_hex(const std::string& hex);

 private:
  std::uint64_t state_;
};

std::string to_hex64(std::uint64_t value);
std::uint64_t from_hex64(const std::string& hex);

/// Initial key-stream state for (seed, fold).
KeyStream key_stream_for(std::uint64_t seed, std::uint64_t fold);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace subnet_hpo
