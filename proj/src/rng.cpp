#include "subnet_hpo/rng.hpp"

#include <charconv>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

std::string to_hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::uint64_t from_hex64(const std::string& hex) {
  std::uint64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
  if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.empty()) {
    throw Error(ErrorCode::parse_error, "bad hex word '" + hex + "'");
  }
  return value;
}

std::string KeyStream::state_hex() const { return to_hex64(state_); }

KeyStream KeyStream::from_hex(const std::string& hex) {
  return KeyStream(from_hex64(hex));
}

KeyStream key_stream_for(std::uint64_t seed, std::uint64_t fold) {
  KeyStream mixer(seed);
  std::uint64_t state = mixer.next();
  KeyStream fold_mixer(state ^ (fold * 0xD1B54A32D192ED03ULL));
  return KeyStream(fold_mixer.next());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace subnet_hpo
