#include "hh/hashing.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace hh {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t splitmix_at(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t s = seed + i * 0x9e3779b97f4a7c15ULL;
  return splitmix64(s);
}

void throw_sign_range() { throw std::invalid_argument("sign_eval needs range 2"); }

namespace {

// Uniform element of GF(p) from the seed stream; rejection keeps it exact.
std::uint64_t field_element(std::uint64_t seed, std::uint64_t& ctr) {
  for (;;) {
    std::uint64_t v = splitmix_at(seed, ctr++) >> 3;
    if (v < kMersenne61) return v;
  }
}

}  // namespace

KWiseHash::KWiseHash(unsigned k, unsigned domain_bits, std::uint64_t range,
                     std::uint64_t seed)
    : domain_bits_(domain_bits), range_(range), seed_(seed) {
  if (k == 0) throw std::invalid_argument("KWiseHash: k must be >= 1");
  if (range == 0) throw std::invalid_argument("KWiseHash: range must be >= 1");
  if (domain_bits > 61)
    throw std::invalid_argument("KWiseHash: domain_bits must be <= 61");
  coeffs_.resize(k);
  std::uint64_t ctr = 0;
  for (auto& c : coeffs_) c = field_element(seed, ctr);
}

KWiseHash KWiseHash::from_coefficients(std::vector<std::uint64_t> coeffs,
                                       unsigned domain_bits,
                                       std::uint64_t range) {
  if (coeffs.empty()) throw std::invalid_argument("KWiseHash: k must be >= 1");
  if (range == 0) throw std::invalid_argument("KWiseHash: range must be >= 1");
  if (domain_bits > 61)
    throw std::invalid_argument("KWiseHash: domain_bits must be <= 61");
  KWiseHash h;
  for (auto& c : coeffs) c %= kMersenne61;
  h.coeffs_ = std::move(coeffs);
  h.domain_bits_ = domain_bits;
  h.range_ = range;
  return h;
}

void KWiseHash::serialize(std::vector<std::uint8_t>& out) const {
  io::put_u32(out, static_cast<std::uint32_t>(coeffs_.size()));
  io::put_u32(out, domain_bits_);
  io::put_u64(out, range_);
  io::put_u64(out, seed_);
  for (auto c : coeffs_) io::put_u64(out, c);
}

KWiseHash KWiseHash::deserialize(std::span<const std::uint8_t>& in) {
  const std::uint32_t k = io::get_u32(in);
  const std::uint32_t db = io::get_u32(in);
  const std::uint64_t range = io::get_u64(in);
  const std::uint64_t seed = io::get_u64(in);
  if (k == 0 || k > (1u << 20)) throw std::runtime_error("bad hash blob");
  std::vector<std::uint64_t> c(k);
  for (auto& v : c) v = io::get_u64(in);
  KWiseHash h = from_coefficients(std::move(c), db, range);
  h.seed_ = seed;
  return h;
}

WideKeyHash::WideKeyHash(unsigned key_bits, std::uint64_t range,
                         std::uint64_t seed)
    : key_bits_(key_bits), range_(range), seed_(seed) {
  if (range == 0) throw std::invalid_argument("WideKeyHash: range must be >= 1");
  if (key_bits > PartitionId::kMaxBits)
    throw std::invalid_argument("WideKeyHash: key too wide");
  coeffs_.resize(1 + (key_bits + 31) / 32);
  std::uint64_t ctr = 0;
  for (auto& c : coeffs_) c = field_element(seed, ctr);
}

void WideKeyHash::serialize(std::vector<std::uint8_t>& out) const {
  io::put_u32(out, key_bits_);
  io::put_u64(out, range_);
  io::put_u64(out, seed_);
}

WideKeyHash WideKeyHash::deserialize(std::span<const std::uint8_t>& in) {
  const std::uint32_t kb = io::get_u32(in);
  const std::uint64_t range = io::get_u64(in);
  const std::uint64_t seed = io::get_u64(in);
  return WideKeyHash(kb, range, seed);
}

namespace io {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

static void need(std::span<const std::uint8_t>& in, std::size_t n) {
  if (in.size() < n) throw std::runtime_error("truncated binary blob");
}

std::uint8_t get_u8(std::span<const std::uint8_t>& in) {
  need(in, 1);
  std::uint8_t v = in[0];
  in = in.subspan(1);
  return v;
}
std::uint32_t get_u32(std::span<const std::uint8_t>& in) {
  need(in, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[i]} << (8 * i);
  in = in.subspan(4);
  return v;
}
std::uint64_t get_u64(std::span<const std::uint8_t>& in) {
  need(in, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{in[i]} << (8 * i);
  in = in.subspan(8);
  return v;
}
std::int64_t get_i64(std::span<const std::uint8_t>& in) {
  return static_cast<std::int64_t>(get_u64(in));
}
double get_f64(std::span<const std::uint8_t>& in) {
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace io

}  // namespace hh
