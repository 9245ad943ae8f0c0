#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>

namespace hh {

// Unsigned integer of up to 256 bits. Partition keys in the cluster-based
// pipelines are concatenations of several short fields and easily exceed 64
// bits, so everything that addresses a partition goes through this type.
class PartitionId {
 public:
  static constexpr unsigned kMaxBits = 256;

  constexpr PartitionId() = default;
  explicit constexpr PartitionId(std::uint64_t v) : w_{v, 0, 0, 0} {}

  // value = (value << bits) | (v & mask(bits)); bits <= 64.
  PartitionId& append(std::uint64_t v, unsigned bits);

  // Bits [lsb, lsb + bits) as an integer; bits <= 64.
  std::uint64_t field(unsigned lsb, unsigned bits) const;

  PartitionId operator>>(unsigned n) const;
  PartitionId operator<<(unsigned n) const;

  std::uint64_t word(unsigned i) const { return w_[i]; }
  void set_word(unsigned i, std::uint64_t v) { w_[i] = v; }
  std::uint32_t limb32(unsigned i) const {
    return static_cast<std::uint32_t>(w_[i / 2] >> (32 * (i % 2)));
  }

  // Number of significant bits (0 for zero).
  unsigned bit_width() const;
  bool fits_u64() const { return (w_[1] | w_[2] | w_[3]) == 0; }
  std::uint64_t low64() const { return w_[0]; }

  std::string to_hex() const;

  bool operator==(const PartitionId&) const = default;
  std::strong_ordering operator<=>(const PartitionId& o) const {
    for (int i = 3; i >= 0; --i)
      if (w_[i] != o.w_[i]) return w_[i] <=> o.w_[i];
    return std::strong_ordering::equal;
  }

 private:
  std::array<std::uint64_t, 4> w_{};
};

struct PartitionIdHash {
  std::size_t operator()(const PartitionId& z) const noexcept;
};

}  // namespace hh
