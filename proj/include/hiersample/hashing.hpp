#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace hiersample {

/// FNV-1a 64-bit over a canonical little-endian byte encoding, so identifiers
/// are bit-identical across platforms.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a64& byte(std::uint8_t b) noexcept {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }
  Fnv1a64& u64(std::uint64_t x) noexcept {
    for (int k = 0; k < 8; ++k) byte(static_cast<std::uint8_t>(x >> (8 * k)));
    return *this;
  }
  Fnv1a64& i32(std::int32_t x) noexcept {
    auto u = static_cast<std::uint32_t>(x);
    for (int k = 0; k < 4; ++k) byte(static_cast<std::uint8_t>(u >> (8 * k)));
    return *this;
  }
  Fnv1a64& bytes(std::string_view s) noexcept {
    for (char c : s) byte(static_cast<std::uint8_t>(c));
    return *this;
  }
  // Length-prefixed sequence so that tuples of different shapes never collide trivially.
  Fnv1a64& codes(std::span<const std::int32_t> xs) noexcept {
    u64(xs.size());
    for (auto x : xs) i32(x);
    return *this;
  }

  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

inline std::string to_hex(std::uint64_t x) {
  std::uint8_t be[8];
  for (int k = 0; k < 8; ++k) be[k] = static_cast<std::uint8_t>(x >> (8 * (7 - k)));
  return to_hex(std::span<const std::uint8_t>(be, 8));
}

}  // namespace hiersample
