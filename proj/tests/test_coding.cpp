#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "hh/coding.hpp"
#include "hh/expander.hpp"
#include "hh/rng.hpp"

using namespace hh;
using namespace hh::coding;

namespace {

using Received = std::vector<std::optional<std::uint32_t>>;

// Carry-less multiply modulo the degree-8 polynomial x^8+x^4+x^3+x^2+1.
std::uint32_t slow_mul8(std::uint32_t a, std::uint32_t b) {
  std::uint32_t r = 0;
  for (int bit = 0; bit < 8; ++bit)
    if (b >> bit & 1) r ^= a << bit;
  for (int bit = 15; bit >= 8; --bit)
    if (r >> bit & 1) r ^= 0x11Du << (bit - 8);
  return r;
}

Received present(const Codeword& c) { return Received(c.chunks.begin(), c.chunks.end()); }

// Dense eigen-decomposition in the test: max(|l2|, |lm|).
double dense_lambda(const std::vector<std::vector<unsigned>>& adj) {
  const auto m = static_cast<Eigen::Index>(adj.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index u = 0; u < m; ++u)
    for (unsigned v : adj[u]) a(u, v) += 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  return std::max(std::fabs(ev(0)), std::fabs(ev(m - 2)));
}

// Power iteration on A with the all-ones direction projected out, then on
// A - l1 I to find the other end of the spectrum.
double power_lambda(const std::vector<std::vector<unsigned>>& adj) {
  const std::size_t m = adj.size();
  auto run = [&](double shift) {
    std::vector<double> v(m);
    Rng rng(11);
    for (auto& x : v) x = rng.uniform() - 0.5;
    double est = 0;
    for (int it = 0; it < 200000; ++it) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
      for (auto& x : v) x -= mean;
      std::vector<double> w(m, 0);
      for (std::size_t u = 0; u < m; ++u) {
        for (unsigned x : adj[u]) w[u] += v[x];
        w[u] -= shift * v[u];
      }
      double num = 0, den = 0, nrm = 0;
      for (std::size_t u = 0; u < m; ++u) num += v[u] * w[u], den += v[u] * v[u], nrm += w[u] * w[u];
      const double next = num / den;
      nrm = std::sqrt(nrm);
      for (std::size_t u = 0; u < m; ++u) v[u] = w[u] / nrm;
      if (it > 100 && std::fabs(next - est) < 1e-14) return next;
      est = next;
    }
    return est;
  };
  const double top = run(0);  // eigenvalue of largest magnitude
  // Shifting by |top| pushes the opposite end to the largest magnitude.
  const double other = run(top) + top;
  return std::max(std::fabs(top), std::fabs(other));
}

}  // namespace

TEST_CASE("GF(2^8) matches carry-less arithmetic") {
  const auto& gf = galois_field(8);
  CHECK(gf.size() == 256);
  CHECK(gf.alpha_pow(1) == 2);
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; b += 7) CHECK(gf.mul(a, b) == slow_mul8(a, b));
  for (std::uint32_t a = 1; a < 256; ++a) CHECK(gf.mul(a, gf.inv(a)) == 1);
  CHECK_THROWS(galois_field(1));
}

TEST_CASE("GF(2^t) field axioms for every supported t") {
  for (unsigned t = 2; t <= 16; ++t) {
    const auto& gf = galois_field(t);
    Rng rng(t);
    for (int rep = 0; rep < 300; ++rep) {
      const auto a = static_cast<std::uint32_t>(rng.below(gf.size()));
      const auto b = static_cast<std::uint32_t>(rng.below(gf.size()));
      const auto c = static_cast<std::uint32_t>(rng.below(gf.size()));
      REQUIRE(gf.mul(a, b) == gf.mul(b, a));
      REQUIRE(gf.mul(a, b ^ c) == (gf.mul(a, b) ^ gf.mul(a, c)));
      REQUIRE(gf.mul(gf.mul(a, b), c) == gf.mul(a, gf.mul(b, c)));
      if (b) REQUIRE(gf.mul(gf.div(a, b), b) == a);
    }
  }
}

TEST_CASE("RS: parameter checks") {
  CHECK_THROWS(ReedSolomon(16, 4));  // 2^4 = 16 points, need > m
  CHECK_THROWS(ReedSolomon(8, 1));
  CHECK_THROWS(ReedSolomon(1, 8));
  const ReedSolomon rs(8, 4);  // 16 message bits
  CHECK_THROWS(rs.encode(Index{1} << 16));
  CHECK_NOTHROW(rs.encode((Index{1} << 16) - 1));
}

TEST_CASE("RS: codewords vanish at the generator roots") {
  const ReedSolomon rs(20, 8);
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const Index i = rng.next() & ((Index{1} << 63) - 1);
    const auto cw = rs.encode(i).chunks;
    // c(x) = sum_j c_j x^(m-1-j); roots alpha^0 .. alpha^(m/2 - 1)
    std::uint32_t root = 1;
    for (unsigned l = 0; l < 10; ++l) {
      std::uint32_t acc = 0;
      for (unsigned j = 0; j < 20; ++j) acc = slow_mul8(acc, root) ^ cw[j];
      CHECK(acc == 0);
      root = slow_mul8(root, 2);
    }
  }
}

TEST_CASE("RS: systematic layout and zero codeword") {
  const ReedSolomon rs(20, 8);
  const auto zero = rs.encode(0);
  CHECK(std::all_of(zero.chunks.begin(), zero.chunks.end(), [](auto c) { return c == 0; }));
  const Index i = 0x0123456789abcdefULL;
  const auto cw = rs.encode(i);
  // Ten message symbols, big-endian bytes; the top two are zero for a 64-bit index.
  for (unsigned j = 0; j < 10; ++j) {
    const unsigned shift = 8 * (9 - j);
    const std::uint32_t want = shift < 64 ? (i >> shift) & 0xff : 0;
    CHECK(cw.chunks[j] == want);
  }
  CHECK(cw.source_index == i);
}

TEST_CASE("RS: round trips and bounded corruption") {
  const ReedSolomon rs(20, 8);
  Rng rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index i = rng.next();
    const auto cw = rs.encode(i);
    CHECK(rs.decode(present(cw)) == i);
    // 2 erasures + 2 errors: 2e + f = 6 < 10
    auto r = present(cw);
    std::vector<unsigned> pos(20);
    std::iota(pos.begin(), pos.end(), 0u);
    rng.shuffle(pos);
    r[pos[0]].reset();
    r[pos[1]].reset();
    r[pos[2]] = *r[pos[2]] ^ (1 + static_cast<std::uint32_t>(rng.below(255)));
    r[pos[3]] = *r[pos[3]] ^ (1 + static_cast<std::uint32_t>(rng.below(255)));
    const auto d = rs.decode_detailed(r);
    CHECK(d.ok);
    CHECK(d.index == i);
    CHECK(d.errors == 2);
    CHECK(d.erasures == 2);
    CHECK(rs.decode(r) == i);
  }
  Received none(20);
  CHECK_FALSE(rs.decode(none).has_value());
  CHECK_FALSE(rs.decode(Received(19, 0u)).has_value());
}

TEST_CASE("RS: every single-symbol corruption is corrected") {
  const ReedSolomon rs(16, 8);
  Rng rng(3);
  for (int msg = 0; msg < 3; ++msg) {
    const Index i = rng.next();
    const auto cw = rs.encode(i);
    for (unsigned pos = 0; pos < 16; ++pos)
      for (std::uint32_t e = 1; e < 256; ++e) {
        auto r = present(cw);
        r[pos] = *r[pos] ^ e;
        REQUIRE(rs.decode(r) == i);
      }
  }
}

TEST_CASE("RS: beyond the radius, output is re-verified") {
  const ReedSolomon rs(16, 8);
  Rng rng(4);
  for (int rep = 0; rep < 2000; ++rep) {
    const Index i = rng.next();
    const auto cw = rs.encode(i);
    auto r = present(cw);
    std::vector<unsigned> pos(16);
    std::iota(pos.begin(), pos.end(), 0u);
    rng.shuffle(pos);
    for (unsigned k = 0; k < 5; ++k) r[pos[k]] = *r[pos[k]] ^ (1 + static_cast<std::uint32_t>(rng.below(255)));
    const auto got = rs.decode(r);
    if (!got) continue;
    const auto again = rs.encode(*got).chunks;
    unsigned dis = 0;
    for (unsigned k = 0; k < 16; ++k) dis += *r[k] != again[k];
    CHECK(2 * dis < 8);
  }
}

TEST_CASE("expanders: small spectra") {
  ExpanderGraph k4;
  k4.m = 4;
  k4.d = 3;
  k4.adj = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  CHECK(second_eigenvalue(k4) == doctest::Approx(1.0).epsilon(1e-9));
  ExpanderGraph c4;
  c4.m = 4;
  c4.d = 2;
  c4.adj = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};
  CHECK(second_eigenvalue(c4) == doctest::Approx(2.0).epsilon(1e-9));
  const auto spec = adjacency_spectrum(c4.adj);
  CHECK(spec.size() == 4);
}

TEST_CASE("expanders: complete graph and certified random graphs") {
  const auto k = build_expander(9, 8, 1.0, 5);
  CHECK(k.meets_target);
  CHECK(k.lambda == doctest::Approx(1.0).epsilon(1e-9));
  for (unsigned u = 0; u < 9; ++u) CHECK(k.adj[u].size() == 8);

  const auto g = build_expander(32, 8, 0.6 * 8, 6);
  REQUIRE(g.meets_target);
  CHECK(g.lambda <= 4.8 + 1e-9);
  CHECK(std::fabs(dense_lambda(g.adj) - g.lambda) < 1e-6);
  for (unsigned u = 0; u < 32; ++u) {
    CHECK(g.adj[u].size() == 8);
    CHECK(std::is_sorted(g.adj[u].begin(), g.adj[u].end()));
    CHECK_FALSE(std::binary_search(g.adj[u].begin(), g.adj[u].end(), u));
    for (unsigned v : g.adj[u]) CHECK(g.has_edge(v, u));
  }
  CHECK_THROWS(build_expander(7, 3, 2.0, 1));  // m*d odd
  CHECK_THROWS(build_expander(5, 5, 2.0, 1));  // d >= m
}

TEST_CASE("expanders: an impossible target reports the best graph") {
  const auto g = build_expander(20, 4, 0.5, 7);
  CHECK_FALSE(g.meets_target);
  CHECK(g.attempts == kExpanderRetries);
  CHECK(std::fabs(dense_lambda(g.adj) - g.lambda) < 1e-6);
}

TEST_CASE("expanders: random 3-regular graph against power iteration") {
  const auto adj = random_regular_graph(64, 3, 12);
  ExpanderGraph g;
  g.m = 64;
  g.d = 3;
  g.adj = adj;
  CHECK(std::fabs(second_eigenvalue(g) - power_lambda(adj)) < 1e-6);
}

TEST_CASE("expanders: mixing bound on random subsets") {
  for (auto [m, d] : std::vector<std::pair<unsigned, unsigned>>{{24, 6}, {40, 10}, {12, 11}}) {
    const auto g = build_expander(m, d, 0.7 * d, m + d);
    Rng rng(m);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<char> in(m, 0);
      unsigned size = 0;
      for (unsigned u = 0; u < m; ++u)
        if (rng.coin(0.4)) in[u] = 1, ++size;
      if (size == 0) continue;
      unsigned boundary = 0;
      for (unsigned u = 0; u < m; ++u)
        if (in[u])
          for (unsigned v : g.adj[u]) boundary += !in[v];
      CHECK(double(boundary) + 1e-9 >= (d - g.lambda) * (1 - double(size) / m) * size);
    }
  }
}

TEST_CASE("edge expander: 12-regular, exact expansion matches brute force") {
  const auto g = build_edge_expander(14, 3);
  CHECK(g.flavor == ExpanderFlavor::edge12);
  CHECK(g.d == 12);
  for (const auto& row : g.adj) CHECK(row.size() == 12);
  REQUIRE(edge_expansion_is_exact(g));
  double best = 1e9;
  for (unsigned mask = 1; mask < (1u << 14); ++mask) {
    const unsigned size = std::popcount(mask);
    if (2 * size > 14) continue;
    unsigned boundary = 0;
    for (unsigned u = 0; u < 14; ++u)
      if (mask >> u & 1)
        for (unsigned v : g.adj[u]) boundary += !(mask >> v & 1);
    best = std::min(best, double(boundary) / (12.0 * size));
  }
  CHECK(edge_expansion(g) == doctest::Approx(best).epsilon(1e-12));
  CHECK_THROWS(build_edge_expander(12, 1));
}

TEST_CASE("expanders: text round trip") {
  const auto g = build_expander(16, 6, 5.0, 9);
  std::stringstream ss;
  write_expander(ss, g);
  const auto r = read_expander(ss);
  CHECK(r.m == g.m);
  CHECK(r.d == g.d);
  CHECK(r.adj == g.adj);
  CHECK(r.lambda == doctest::Approx(g.lambda));
  std::stringstream bad("3 2 1.0\n1 2\n");
  CHECK_THROWS(read_expander(bad));
}
