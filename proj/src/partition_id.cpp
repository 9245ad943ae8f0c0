#include "hh/partition_id.hpp"

#include <bit>
#include <stdexcept>

namespace hh {

PartitionId PartitionId::operator<<(unsigned n) const {
  PartitionId r;
  if (n >= kMaxBits) return r;
  const unsigned ws = n / 64, bs = n % 64;
  for (int i = 3; i >= 0; --i) {
    const int src = i - static_cast<int>(ws);
    if (src < 0) continue;
    std::uint64_t v = w_[src] << bs;
    if (bs != 0 && src > 0) v |= w_[src - 1] >> (64 - bs);
    r.w_[i] = v;
  }
  return r;
}

PartitionId PartitionId::operator>>(unsigned n) const {
  PartitionId r;
  if (n >= kMaxBits) return r;
  const unsigned ws = n / 64, bs = n % 64;
  for (unsigned i = 0; i < 4; ++i) {
    const unsigned src = i + ws;
    if (src > 3) break;
    std::uint64_t v = w_[src] >> bs;
    if (bs != 0 && src < 3) v |= w_[src + 1] << (64 - bs);
    r.w_[i] = v;
  }
  return r;
}

PartitionId& PartitionId::append(std::uint64_t v, unsigned bits) {
  if (bits > 64) throw std::invalid_argument("append: at most 64 bits");
  if (bits == 0) return *this;
  if (bit_width() + bits > kMaxBits)
    throw std::overflow_error("partition id exceeds 256 bits");
  if (bits < 64) v &= (std::uint64_t{1} << bits) - 1;
  *this = *this << bits;
  w_[0] |= v;
  return *this;
}

std::uint64_t PartitionId::field(unsigned lsb, unsigned bits) const {
  if (bits == 0) return 0;
  if (bits > 64) throw std::invalid_argument("field: at most 64 bits");
  std::uint64_t v = (*this >> lsb).w_[0];
  if (bits < 64) v &= (std::uint64_t{1} << bits) - 1;
  return v;
}

unsigned PartitionId::bit_width() const {
  for (int i = 3; i >= 0; --i)
    if (w_[i]) return 64 * i + std::bit_width(w_[i]);
  return 0;
}

std::string PartitionId::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s;
  bool started = false;
  for (int i = 63; i >= 0; --i) {
    const unsigned nib = (w_[i / 16] >> (4 * (i % 16))) & 0xf;
    if (nib) started = true;
    if (started) s.push_back(digits[nib]);
  }
  return s.empty() ? "0" : s;
}

std::size_t PartitionIdHash::operator()(const PartitionId& z) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (unsigned i = 0; i < 4; ++i) {
    h ^= z.word(i) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

}  // namespace hh
