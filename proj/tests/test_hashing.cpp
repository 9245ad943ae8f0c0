#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hh/hashing.hpp"
#include "hh/partition_id.hpp"

using namespace hh;

namespace {

// Two-sided binomial tail P(|X - np| > k*sigma), summed exactly.
double binomial_outside(unsigned n, double p, double k_sigma) {
  const double mean = n * p, sd = std::sqrt(n * p * (1 - p));
  double tail = 0;
  for (unsigned x = 0; x <= n; ++x) {
    if (std::fabs(x - mean) <= k_sigma * sd) continue;
    const double logc = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
    tail += std::exp(logc + x * std::log(p) + (n - x) * std::log1p(-p));
  }
  return tail;
}

}  // namespace

TEST_CASE("kwise: deterministic and seeded") {
  KWiseHash a(2, 16, 8, 42), b(2, 16, 8, 42);
  CHECK(a.eval(5) == a.eval(5));
  for (std::uint64_t x = 0; x < 1000; ++x) CHECK(a.eval(x) == b.eval(x));
  KWiseHash c(2, 16, 8, 43);
  int differ = 0;
  for (std::uint64_t x = 0; x < 1000; ++x) differ += a.eval(x) != c.eval(x);
  CHECK(differ > 0);
}

TEST_CASE("kwise: single bucket and output range") {
  KWiseHash one(2, 16, 1, 7);
  for (std::uint64_t x = 0; x < 1 << 16; x += 97) CHECK(one.eval(x) == 0);
  KWiseHash h(5, 20, 37, 9);
  for (std::uint64_t x = 0; x < 5000; ++x) CHECK(h.eval(x) < 37);
}

TEST_CASE("kwise: rejects bad parameters") {
  CHECK_THROWS_AS(KWiseHash(0, 16, 8, 1), std::invalid_argument);
  CHECK_THROWS_AS(KWiseHash(2, 16, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(KWiseHash(2, 62, 8, 1), std::invalid_argument);
  CHECK_THROWS(KWiseHash(2, 16, 8, 1).sign_eval(3));
}

TEST_CASE("kwise: constant and affine polynomials") {
  const auto k1 = KWiseHash::from_coefficients({123456789}, 16, 1000);
  for (std::uint64_t x = 0; x < 100; ++x) CHECK(k1.eval(x) == 123456789 % 1000);
  // c0 + x with domain no larger than the range is injective
  const auto aff = KWiseHash::from_coefficients({5, 1}, 10, 4096);
  std::vector<std::uint64_t> seen;
  for (std::uint64_t x = 0; x < 1024; ++x) seen.push_back(aff.eval(x));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("kwise: polynomial matches a big-integer evaluation") {
  const std::uint64_t p = kMersenne61;
  KWiseHash h(4, 40, 1000003, 77);
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::uint64_t x = rng() & ((std::uint64_t{1} << 40) - 1);
    // Horner with explicit 128-bit remainder, independent of the library helpers.
    unsigned __int128 acc = 0;
    const auto& c = h.coefficients();
    for (std::size_t e = c.size(); e-- > 0;) acc = (acc * (x % p) + c[e]) % p;
    CHECK(h.raw(x) == static_cast<std::uint64_t>(acc));
    CHECK(h.eval(x) == static_cast<std::uint64_t>(acc) % 1000003);
  }
}

TEST_CASE("kwise: bucket loads pass a chi-square test for most seeds") {
  // Pearson statistic over 64 buckets from all 4096 inputs; 63 degrees of
  // freedom. The collision count is a sum over pairs, so its spread around the
  // mean is governed by 4-wise behaviour; a pairwise family only fixes the mean
  // (checked per pair below) and lands about 4% of seeds above the quantile.
  const double q999 = 103.4424;  // chi-square 0.999 quantile, df = 63
  int pass = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    KWiseHash h(4, 12, 64, s);
    std::vector<int> load(64, 0);
    for (std::uint64_t x = 0; x < 4096; ++x) ++load[h.eval(x)];
    double chi = 0;
    for (int l : load) chi += (l - 64.0) * (l - 64.0) / 64.0;
    pass += chi <= q999;
  }
  CHECK(pass >= 990);
}

TEST_CASE("kwise: max bucket load over random inputs within 3 sigma") {
  KWiseHash h(2, 40, 16, 2024);
  std::mt19937_64 rng(3);
  std::vector<int> load(16, 0);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) ++load[h.eval(rng() & ((std::uint64_t{1} << 40) - 1))];
  const double mean = draws / 16.0, sd = std::sqrt(draws * (1 / 16.0) * (15 / 16.0));
  CHECK(*std::max_element(load.begin(), load.end()) <= mean + 3 * sd);
}

TEST_CASE("kwise: signs are balanced") {
  KWiseHash h(2, 20, 2, 5);
  long sum = 0;
  for (std::uint64_t x = 0; x < 100000; ++x) {
    const int s = h.sign_eval(x);
    CHECK((s == 1 || s == -1));
    CHECK(s == (h.eval(x) == 0 ? -1 : 1));
    sum += s;
  }
  CHECK(std::fabs(sum / 1e5) < 0.02);
}

TEST_CASE("kwise: pairwise collision rates over seeds, every pair of a 2^12 domain") {
  const unsigned seeds = 500, range = 64, dom = 4096;
  std::vector<std::uint16_t> hits(static_cast<std::size_t>(dom) * (dom - 1) / 2, 0);
  auto pair_index = [&](unsigned x, unsigned y) {  // x < y
    return static_cast<std::size_t>(y) * (y - 1) / 2 + x;
  };
  std::vector<std::vector<unsigned>> bucket(range);
  for (unsigned s = 0; s < seeds; ++s) {
    KWiseHash h(2, 12, range, 1000 + s);
    for (auto& b : bucket) b.clear();
    for (unsigned x = 0; x < dom; ++x) bucket[h.eval(x)].push_back(x);
    for (const auto& b : bucket)
      for (std::size_t a = 0; a < b.size(); ++a)
        for (std::size_t c = a + 1; c < b.size(); ++c) ++hits[pair_index(b[a], b[c])];
  }
  const double p = 1.0 / range, mean = seeds * p, sd = std::sqrt(seeds * p * (1 - p));
  std::size_t outside = 0;
  double total = 0;
  for (auto v : hits) {
    outside += std::fabs(v - mean) > 4 * sd;
    total += v;
  }
  // Average rate is 1/range up to field rounding; the share of pairs beyond
  // 4 sigma matches what an ideal binomial produces.
  CHECK(total / hits.size() / seeds == doctest::Approx(p).epsilon(0.01));
  const double expect = binomial_outside(seeds, p, 4);
  CHECK(double(outside) / hits.size() <= 2 * expect + 1e-5);
}

TEST_CASE("kwise: serialization round trip") {
  KWiseHash h(7, 33, 999, 31337);
  std::vector<std::uint8_t> blob;
  h.serialize(blob);
  std::span<const std::uint8_t> in(blob);
  const auto g = KWiseHash::deserialize(in);
  CHECK(in.empty());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t x = rng() & ((std::uint64_t{1} << 33) - 1);
    CHECK(h.eval(x) == g.eval(x));
  }
  CHECK(g.seed() == h.seed());
  std::vector<std::uint8_t> cut(blob.begin(), blob.end() - 3);
  std::span<const std::uint8_t> bad(cut);
  CHECK_THROWS(KWiseHash::deserialize(bad));
}

TEST_CASE("wide key hash: linear form over 32-bit limbs") {
  WideKeyHash h(200, 1 << 20, 99);
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    PartitionId z;
    for (unsigned w = 0; w < 4; ++w) z.set_word(w, w < 3 ? rng() : rng() & 0xff);
    CHECK(h.eval(z) < (1u << 20));
    WideKeyHash same(200, 1 << 20, 99);
    CHECK(same.eval(z) == h.eval(z));
  }
  // Keys that differ in one high limb land apart for most seeds.
  PartitionId a(1), b(1);
  b.set_word(3, 1);
  int same = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    WideKeyHash g(256, 1024, s);
    same += g.eval(a) == g.eval(b);
  }
  CHECK(same < 10);
  std::vector<std::uint8_t> blob;
  h.serialize(blob);
  std::span<const std::uint8_t> in(blob);
  const auto r = WideKeyHash::deserialize(in);
  CHECK(r.eval(a) == h.eval(a));
}

TEST_CASE("partition id: fields, shifts and ordering") {
  PartitionId z;
  z.append(0x5, 3).append(0xabc, 12).append(1, 1);
  CHECK(z.bit_width() == 16);
  CHECK(z.field(13, 3) == 0x5);
  CHECK(z.field(1, 12) == 0xabc);
  CHECK(z.field(0, 1) == 1);
  CHECK((z >> 1).field(0, 12) == 0xabc);
  PartitionId big;
  for (int i = 0; i < 5; ++i) big.append(0xffffffffffffull, 48);
  CHECK(big.bit_width() == 240);
  CHECK((big >> 200).low64() == 0xffffffffffull);
  CHECK(((big << 16) >> 16) == big);
  CHECK(PartitionId(3) < PartitionId(4));
  PartitionId hi;
  hi.set_word(2, 1);
  CHECK(PartitionId(~0ull) < hi);
  CHECK(splitmix_at(1, 2) == splitmix_at(1, 2));
  CHECK(splitmix_at(1, 2) != splitmix_at(1, 3));
}
