#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hh/types.hpp"

namespace hh::coding {

// GF(2^t), 2 <= t <= 16, via log/antilog tables over a primitive polynomial.
class GaloisField {
 public:
  explicit GaloisField(unsigned t);

  unsigned bits() const { return t_; }
  std::uint32_t size() const { return size_; }  // 2^t
  std::uint32_t order() const { return size_ - 1; }

  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }
  std::uint32_t div(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t inv(std::uint32_t a) const { return div(1, a); }
  // alpha^e for any integer e (negative allowed).
  std::uint32_t alpha_pow(long long e) const;
  std::uint32_t log(std::uint32_t a) const { return log_[a]; }

 private:
  unsigned t_;
  std::uint32_t size_;
  std::vector<std::uint32_t> exp_;  // doubled to skip a modulo in mul
  std::vector<std::uint32_t> log_;
};

// Shared instance per t, built on first use.
const GaloisField& galois_field(unsigned t);

struct Codeword {
  std::vector<std::uint32_t> chunks;
  unsigned m = 0;
  unsigned t = 0;
  std::optional<Index> source_index;
};

struct DecodeResult {
  bool ok = false;
  Index index = 0;
  unsigned errors = 0;    // corrected non-erased positions
  unsigned erasures = 0;
  std::vector<std::uint32_t> codeword;  // corrected chunks when ok
};

// Systematic Reed-Solomon code of length m over GF(2^t) carrying
// k = floor(m/2) message symbols. Chunk j of the codeword is the coefficient
// of x^(m-1-j); chunks 0..k-1 are the message, most significant first.
class ReedSolomon {
 public:
  ReedSolomon(unsigned m, unsigned t);

  unsigned length() const { return m_; }
  unsigned bits() const { return t_; }
  unsigned message_symbols() const { return k_; }
  unsigned parity_symbols() const { return m_ - k_; }

  Codeword encode(Index i) const;

  // Errors and erasures (absent chunks). ok only if the corrected word is a
  // codeword and the message fits in 64 bits.
  DecodeResult decode_detailed(
      const std::vector<std::optional<std::uint32_t>>& chunks) const;

  // decode_detailed plus the radius check 2e + f < m/2 on the re-encoded
  // word; anything outside the radius is reported as a failure.
  std::optional<Index> decode(
      const std::vector<std::optional<std::uint32_t>>& chunks) const;

 private:
  std::uint32_t eval_positions(const std::vector<std::uint32_t>& poly,
                               std::uint32_t x) const;

  unsigned m_, t_, k_;
  const GaloisField* gf_;
  std::vector<std::uint32_t> gen_;  // generator, gen_[e] multiplies x^e
};

}  // namespace hh::coding
