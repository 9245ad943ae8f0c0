#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hh/partition_id.hpp"

namespace hh {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t splitmix64(std::uint64_t& state);
// Stateless variant: the i-th output of a splitmix stream started at seed.
std::uint64_t splitmix_at(std::uint64_t seed, std::uint64_t i);

inline std::uint64_t reduce61(unsigned __int128 x) {
  const std::uint64_t lo = static_cast<std::uint64_t>(x) & kMersenne61;
  const std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
  // hi < 2^67 for our inputs; fold twice to be safe
  std::uint64_t r = lo + (hi & kMersenne61) + (hi >> 61);
  r = (r & kMersenne61) + (r >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  return reduce61(static_cast<unsigned __int128>(a) * b);
}

inline std::uint64_t addmod61(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t r = a + b;
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

[[noreturn]] void throw_sign_range();

// Degree-(k-1) polynomial over GF(2^61 - 1), reduced modulo range.
// v mod range, with a mask when range is a power of two (the common case).
inline std::uint64_t reduce_range(std::uint64_t v, std::uint64_t range) {
  return (range & (range - 1)) == 0 ? v & (range - 1) : v % range;
}

class KWiseHash {
 public:
  KWiseHash() = default;
  KWiseHash(unsigned k, unsigned domain_bits, std::uint64_t range,
            std::uint64_t seed);

  static KWiseHash from_coefficients(std::vector<std::uint64_t> coeffs,
                                     unsigned domain_bits, std::uint64_t range);

  std::uint64_t operator()(std::uint64_t x) const { return eval(x); }
  std::uint64_t eval(std::uint64_t x) const { return reduce_range(raw(x), range_); }
  // Polynomial value before range reduction.
  std::uint64_t raw(std::uint64_t x) const {
    std::uint64_t acc = coeffs_.back();
    for (std::size_t e = coeffs_.size() - 1; e-- > 0;)
      acc = addmod61(mulmod61(acc, x), coeffs_[e]);
    return acc;
  }
  // -1 for bucket 0, +1 for bucket 1. Throws unless range == 2.
  int sign_eval(std::uint64_t x) const {
    if (range_ != 2) throw_sign_range();
    return (raw(x) & 1) == 0 ? -1 : 1;
  }

  unsigned independence() const {
    return static_cast<unsigned>(coeffs_.size());
  }
  unsigned domain_bits() const { return domain_bits_; }
  std::uint64_t range() const { return range_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& coefficients() const { return coeffs_; }
  std::size_t space_words() const { return coeffs_.size(); }

  void serialize(std::vector<std::uint8_t>& out) const;
  static KWiseHash deserialize(std::span<const std::uint8_t>& in);

 private:
  std::vector<std::uint64_t> coeffs_;  // coeffs_[e] multiplies x^e
  unsigned domain_bits_ = 0;
  std::uint64_t range_ = 1;
  std::uint64_t seed_ = 0;
};

// Pairwise-independent hash on keys of up to 256 bits: the key is cut into
// 32-bit limbs and h(x) = (a_0 + sum a_l * limb_l) mod p mod range.
class WideKeyHash {
 public:
  WideKeyHash() = default;
  WideKeyHash(unsigned key_bits, std::uint64_t range, std::uint64_t seed);

  std::uint64_t eval(const PartitionId& z) const { return reduce_range(raw(z), range_); }
  std::uint64_t raw(const PartitionId& z) const {
    // each term < 2^93, at most 9 terms: no overflow in 128 bits
    unsigned __int128 acc = coeffs_[0];
    for (std::size_t l = 1; l < coeffs_.size(); ++l)
      acc += static_cast<unsigned __int128>(coeffs_[l]) * z.limb32(static_cast<unsigned>(l - 1));
    return reduce61(acc);
  }
  int sign_eval(const PartitionId& z) const {
    if (range_ != 2) throw_sign_range();
    return (raw(z) & 1) == 0 ? -1 : 1;
  }

  unsigned key_bits() const { return key_bits_; }
  std::uint64_t range() const { return range_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t space_words() const { return coeffs_.size(); }

  void serialize(std::vector<std::uint8_t>& out) const;
  static WideKeyHash deserialize(std::span<const std::uint8_t>& in);

 private:
  std::vector<std::uint64_t> coeffs_;
  unsigned key_bits_ = 0;
  std::uint64_t range_ = 1;
  std::uint64_t seed_ = 0;
};

// Little-endian helpers shared by all binary formats.
namespace io {
void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_i64(std::vector<std::uint8_t>& out, std::int64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint8_t get_u8(std::span<const std::uint8_t>& in);
std::uint32_t get_u32(std::span<const std::uint8_t>& in);
std::uint64_t get_u64(std::span<const std::uint8_t>& in);
std::int64_t get_i64(std::span<const std::uint8_t>& in);
double get_f64(std::span<const std::uint8_t>& in);
}  // namespace io

}  // namespace hh
