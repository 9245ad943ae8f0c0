#include <algorithm>
#include <stdexcept>

#include "hh/coding.hpp"

namespace hh::coding {

namespace {

using Poly = std::vector<std::uint32_t>;

std::uint32_t poly_eval(const GaloisField& gf, const Poly& p, std::uint32_t x) {
  std::uint32_t acc = 0;
  for (std::size_t e = p.size(); e-- > 0;) acc = gf.mul(acc, x) ^ p[e];
  return acc;
}

Poly poly_mul(const GaloisField& gf, const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i])
      for (std::size_t j = 0; j < b.size(); ++j) r[i + j] ^= gf.mul(a[i], b[j]);
  return r;
}

void trim(Poly& p) {
  while (p.size() > 1 && p.back() == 0) p.pop_back();
}

}  // namespace

ReedSolomon::ReedSolomon(unsigned m, unsigned t) : m_(m), t_(t), k_(m / 2) {
  if (t < 2 || t > 16) throw std::invalid_argument("RS: t must be in [2,16]");
  if (m < 2) throw std::invalid_argument("RS: need m >= 2");
  // a shortened cyclic code of length m needs m distinct nonzero points
  if ((std::uint64_t{1} << t) <= m)
    throw std::invalid_argument("RS: field too small, need 2^t > m");
  gf_ = &galois_field(t);
  gen_ = {1};
  for (unsigned l = 0; l < m_ - k_; ++l)
    gen_ = poly_mul(*gf_, gen_, Poly{gf_->alpha_pow(l), 1});
}

std::uint32_t ReedSolomon::eval_positions(const Poly& poly,
                                          std::uint32_t x) const {
  return poly_eval(*gf_, poly, x);
}

Codeword ReedSolomon::encode(Index i) const {
  const unsigned msg_bits = k_ * t_;
  if (msg_bits < 64 && (i >> msg_bits) != 0)
    throw std::invalid_argument("RS: index does not fit in the message");
  const std::uint32_t mask = (1u << t_) - 1;
  const unsigned nk = m_ - k_;
  Poly rem(nk, 0);
  Codeword cw;
  cw.m = m_;
  cw.t = t_;
  cw.source_index = i;
  cw.chunks.assign(m_, 0);
  for (unsigned j = 0; j < k_; ++j) {
    const unsigned shift = t_ * (k_ - 1 - j);
    const std::uint32_t u =
        shift < 64 ? static_cast<std::uint32_t>((i >> shift) & mask) : 0;
    cw.chunks[j] = u;
    const std::uint32_t fb = u ^ rem[nk - 1];
    for (unsigned l = nk - 1; l > 0; --l) rem[l] = rem[l - 1] ^ gf_->mul(fb, gen_[l]);
    rem[0] = gf_->mul(fb, gen_[0]);
  }
  // parity chunk k + q holds the coefficient of x^(nk-1-q)
  for (unsigned q = 0; q < nk; ++q) cw.chunks[k_ + q] = rem[nk - 1 - q];
  return cw;
}

DecodeResult ReedSolomon::decode_detailed(
    const std::vector<std::optional<std::uint32_t>>& chunks) const {
  DecodeResult res;
  if (chunks.size() != m_) return res;
  const GaloisField& gf = *gf_;
  const unsigned nk = m_ - k_;

  // r[p] = coefficient of x^p
  Poly r(m_, 0);
  std::vector<unsigned> erased;
  for (unsigned j = 0; j < m_; ++j) {
    const unsigned p = m_ - 1 - j;
    if (!chunks[j]) {
      erased.push_back(p);
      continue;
    }
    if (*chunks[j] >= gf.size()) return res;
    r[p] = *chunks[j];
  }
  const unsigned f = static_cast<unsigned>(erased.size());
  res.erasures = f;
  if (f > nk) return res;

  Poly synd(nk, 0);
  bool clean = true;
  for (unsigned l = 0; l < nk; ++l) {
    synd[l] = poly_eval(gf, r, gf.alpha_pow(l));
    if (synd[l]) clean = false;
  }

  if (!clean) {
    Poly gamma{1};
    for (unsigned p : erased)
      gamma = poly_mul(gf, gamma, Poly{1, gf.alpha_pow(p)});

    // Berlekamp-Massey seeded with the erasure locator.
    Poly lambda = gamma, b = gamma;
    unsigned L = f;
    for (unsigned step = f + 1; step <= nk; ++step) {
      std::uint32_t disc = 0;
      for (std::size_t j = 0; j < lambda.size() && j < step; ++j)
        disc ^= gf.mul(lambda[j], synd[step - 1 - j]);
      Poly xb(b.size() + 1, 0);
      std::copy(b.begin(), b.end(), xb.begin() + 1);
      if (disc == 0) {
        b = std::move(xb);
        continue;
      }
      Poly next(std::max(lambda.size(), xb.size()), 0);
      for (std::size_t j = 0; j < lambda.size(); ++j) next[j] = lambda[j];
      for (std::size_t j = 0; j < xb.size(); ++j) next[j] ^= gf.mul(disc, xb[j]);
      if (2 * L <= step + f - 1) {
        const std::uint32_t dinv = gf.inv(disc);
        b.assign(lambda.size(), 0);
        for (std::size_t j = 0; j < lambda.size(); ++j) b[j] = gf.mul(dinv, lambda[j]);
        L = step + f - L;
      } else {
        b = std::move(xb);
      }
      lambda = std::move(next);
    }
    trim(lambda);
    if (lambda.size() - 1 != L || L > nk) return res;

    std::vector<unsigned> roots;
    for (unsigned p = 0; p < m_; ++p)
      if (poly_eval(gf, lambda, gf.alpha_pow(-static_cast<long long>(p))) == 0)
        roots.push_back(p);
    if (roots.size() != L) return res;

    // Omega = S * Lambda mod x^nk
    Poly omega(nk, 0);
    for (unsigned a = 0; a < nk; ++a)
      for (std::size_t c = 0; c < lambda.size() && a + c < nk; ++c)
        omega[a + c] ^= gf.mul(synd[a], lambda[c]);
    Poly dlambda(lambda.size() > 1 ? lambda.size() - 1 : 1, 0);
    for (std::size_t e = 1; e < lambda.size(); e += 2) dlambda[e - 1] = lambda[e];

    for (unsigned p : roots) {
      const std::uint32_t x = gf.alpha_pow(p);
      const std::uint32_t xinv = gf.alpha_pow(-static_cast<long long>(p));
      const std::uint32_t den = poly_eval(gf, dlambda, xinv);
      if (den == 0) return res;
      const std::uint32_t mag = gf.mul(x, gf.div(poly_eval(gf, omega, xinv), den));
      r[p] ^= mag;
    }
    for (unsigned l = 0; l < nk; ++l)
      if (poly_eval(gf, r, gf.alpha_pow(l)) != 0) return res;
  }

  // Count corrections on positions we actually received.
  unsigned errors = 0;
  for (unsigned j = 0; j < m_; ++j)
    if (chunks[j] && *chunks[j] != r[m_ - 1 - j]) ++errors;

  unsigned __int128 acc = 0;
  for (unsigned j = 0; j < k_; ++j) {
    if (acc >> 64) return res;  // message does not fit an index
    acc = (acc << t_) | r[m_ - 1 - j];
  }
  if (acc >> 64) return res;
  res.ok = true;
  res.index = static_cast<Index>(acc);
  res.errors = errors;
  res.codeword.resize(m_);
  for (unsigned j = 0; j < m_; ++j) res.codeword[j] = r[m_ - 1 - j];
  return res;
}

std::optional<Index> ReedSolomon::decode(
    const std::vector<std::optional<std::uint32_t>>& chunks) const {
  const DecodeResult d = decode_detailed(chunks);
  if (!d.ok) return std::nullopt;
  const unsigned msg_bits = k_ * t_;
  if (msg_bits < 64 && (d.index >> msg_bits) != 0) return std::nullopt;
  const Codeword again = encode(d.index);
  unsigned disagree = 0, missing = 0;
  for (unsigned j = 0; j < m_; ++j) {
    if (!chunks[j])
      ++missing;
    else if (*chunks[j] != again.chunks[j])
      ++disagree;
  }
  if (2 * (2 * disagree + missing) >= m_) return std::nullopt;
  return d.index;
}

}  // namespace hh::coding
