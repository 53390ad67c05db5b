#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace semalign {

// 64-bit FNV-1a. Used for reproducibility fingerprints, not security.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::span<const double> values);
  void update(std::string_view text);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string checksum_hex(std::span<const double> values);
std::string checksum_hex(std::string_view text);
std::string to_hex(std::uint64_t value);

}  // namespace semalign
