#include <memory>
#include <mutex>
#include <stdexcept>

#include "hh/coding.hpp"

namespace hh::coding {

namespace {

// Primitive polynomials, indexed by t, including the x^t term.
constexpr std::uint32_t kPrimitive[17] = {0,      0,      0x7,    0xB,    0x13,
                                          0x25,   0x43,   0x89,   0x11D,  0x211,
                                          0x409,  0x805,  0x1053, 0x201B, 0x4443,
                                          0x8003, 0x1100B};

}  // namespace

GaloisField::GaloisField(unsigned t) : t_(t) {
  if (t < 2 || t > 16) throw std::invalid_argument("GF(2^t): t must be in [2,16]");
  size_ = 1u << t;
  exp_.assign(2 * size_, 0);
  log_.assign(size_, 0);
  std::uint32_t x = 1;
  for (std::uint32_t e = 0; e < size_ - 1; ++e) {
    if (e > 0 && x == 1) throw std::logic_error("GF(2^t): polynomial not primitive");
    exp_[e] = x;
    log_[x] = e;
    x <<= 1;
    if (x & size_) x ^= kPrimitive[t];
  }
  if (x != 1) throw std::logic_error("GF(2^t): polynomial not primitive");
  for (std::uint32_t e = size_ - 1; e < 2 * size_; ++e)
    exp_[e] = exp_[e - (size_ - 1)];
}

std::uint32_t GaloisField::div(std::uint32_t a, std::uint32_t b) const {
  if (b == 0) throw std::domain_error("GF division by zero");
  if (a == 0) return 0;
  return exp_[log_[a] + (size_ - 1) - log_[b]];
}

std::uint32_t GaloisField::alpha_pow(long long e) const {
  const long long ord = size_ - 1;
  long long r = e % ord;
  if (r < 0) r += ord;
  return exp_[static_cast<std::size_t>(r)];
}

const GaloisField& galois_field(unsigned t) {
  if (t < 2 || t > 16) throw std::invalid_argument("GF(2^t): t must be in [2,16]");
  static std::unique_ptr<GaloisField> fields[17];
  static std::once_flag once[17];
  std::call_once(once[t], [t] { fields[t] = std::make_unique<GaloisField>(t); });
  return *fields[t];
}

}  // namespace hh::coding
