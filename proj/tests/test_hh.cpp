#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "hh/hh.hpp"
#include "hh/rng.hpp"
#include "hh/streams.hpp"

using namespace hh;

namespace {

ExpanderSketchParams small_es(std::uint64_t n, double eps, std::uint64_t seed) {
  ExpanderSketchParams p;
  p.n = n;
  p.eps = eps;
  p.seed = seed;
  return p;
}

std::vector<std::uint8_t> blob_of(const ExpanderSketch& s) {
  std::vector<std::uint8_t> out;
  s.serialize(out);
  return out;
}

}  // namespace

TEST_CASE("lp_to_l2") {
  CHECK(lp_to_l2(2, 0.1) == doctest::Approx(0.1));
  CHECK(lp_to_l2(1, 0.01) == doctest::Approx(0.1));
  CHECK(lp_to_l2(0.5, 0.0001) == doctest::Approx(0.1));
  CHECK_THROWS(lp_to_l2(0, 0.1));
  CHECK_THROWS(lp_to_l2(2.5, 0.1));
  CHECK_THROWS(lp_to_l2(-1, 0.1));
}

TEST_CASE("reduce_split: one substream, determinism and bucket loads") {
  const KWiseHash one(4, 14, 1, 3);
  for (Index i = 0; i < 1000; ++i) CHECK(reduce_split(one, i) == 0);
  const KWiseHash h(28, 14, 16, 4);
  for (Index i = 0; i < 1000; ++i) CHECK(reduce_split(h, i) == reduce_split(h, i));

  // 64 heavies into 16 substreams: mean 4; a loose load cap of 4 + 3*log2(16)
  // should hold for nearly every seed.
  const double delta = 1.0 / 16;
  const unsigned cap = 4 + 3 * 4;
  unsigned ok = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const KWiseHash s(28, 14, 16, 100 + seed);
    Rng rng(seed);
    std::set<Index> heavy;
    while (heavy.size() < 64) heavy.insert(rng.below(1 << 14));
    std::vector<unsigned> load(16, 0);
    for (Index i : heavy) ++load[reduce_split(s, i)];
    ok += *std::max_element(load.begin(), load.end()) <= cap;
  }
  CHECK(ok >= (1 - delta) * 1000);
}

TEST_CASE("chunk layout: compose and field extraction") {
  ChunkLayout l{5, 8, 3};
  CHECK(l.key_bits() == 5 + 8 + 15);
  const std::uint64_t nb[3] = {1, 30, 7};
  const auto z = l.compose(19, 0xab, nb);
  CHECK(l.name(z) == 19);
  CHECK(l.chunk(z) == 0xab);
  for (unsigned e = 0; e < 3; ++e) CHECK(l.neighbor(z, e) == nb[e]);
  // name occupies the top bits
  CHECK((z >> (8 + 15)).low64() == 19);
  const std::uint64_t two[2] = {1, 2};
  CHECK_THROWS(l.compose(1, 1, two));
}

TEST_CASE("expander sketch: one update touches one substream; updates cancel") {
  ExpanderSketch s(small_es(1 << 12, 1.0 / 8, 5));
  const unsigned q = s.layout().q;
  REQUIRE(q > 1);
  const Index i = 1234;
  s.update(i, 77);
  for (unsigned k = 0; k < q; ++k) CHECK(s.substream_is_zero(k) == (k != s.substream(i)));
  s.update(i, -77);

  // Another index in the same substream, also cancelled: every counter is zero
  // in both, so the serialized states agree byte for byte.
  Index other = 0;
  while (other == i || s.substream(other) != s.substream(i)) ++other;
  ExpanderSketch t(small_es(1 << 12, 1.0 / 8, 5));
  t.update(other, 5);
  t.update(other, -5);
  CHECK(blob_of(s) == blob_of(t));
  CHECK(s.query().indices.empty());
  CHECK_THROWS(s.update(1 << 12, 1));
}

TEST_CASE("expander sketch: key layout matches independent packing") {
  ExpanderSketch s(small_es(1 << 16, 1.0 / 16, 6));
  const auto& lay = s.layout();
  const auto& f = s.expander();
  const unsigned sb = lay.chunk.s, tb = lay.chunk.t, d = lay.chunk.d;
  REQUIRE(d == f.d);
  REQUIRE(lay.m == f.m);
  Rng rng(7);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index i = rng.below(1 << 16);
    const unsigned k = s.substream(i);
    const unsigned j = static_cast<unsigned>(rng.below(lay.m));
    const auto z = s.oracle_key(k, j, i);
    const auto cw = s.code().encode(i);
    REQUIRE(z.field(tb + d * sb, sb) == s.name(k, j, i));
    REQUIRE(z.field(d * sb, tb) == cw.chunks[j]);
    for (unsigned e = 0; e < d; ++e)
      REQUIRE(z.field((d - 1 - e) * sb, sb) == s.name(k, f.adj[j][e], i));
    REQUIRE(z.bit_width() <= lay.chunk.key_bits());
  }
}

TEST_CASE("build_chunk_graph: empty lists, name argmax and edge symmetry") {
  const auto f = coding::build_expander(8, 3, 3.0, 2);
  const ChunkLayout lay{6, 8, 3};
  std::vector<std::vector<WeightedKey>> lists(8);
  auto g = build_chunk_graph(lists, lay, f);
  CHECK(g.vertices.empty());
  CHECK(g.edges.empty());

  const std::uint64_t nb[3] = {0, 0, 0};
  lists[0].push_back({lay.compose(9, 1, nb), 10});
  lists[0].push_back({lay.compose(9, 2, nb), 3});
  g = build_chunk_graph(lists, lay, f, false);
  REQUIRE(g.vertices.size() == 1);
  CHECK(g.vertices[0].chunk == 1);
  CHECK(g.vertices[0].weight == 10);
  CHECK(g.dropped_by_name == 1);
  // the lone vertex is isolated
  CHECK(build_chunk_graph(lists, lay, f, true).vertices.empty());
  CHECK_THROWS(build_chunk_graph(std::vector<std::vector<WeightedKey>>(7), lay, f));
}

TEST_CASE("build_chunk_graph: one heavy index yields a copy of F") {
  ExpanderSketch s(small_es(1 << 12, 1.0 / 8, 8));
  const Index i = 3001;
  s.update(i, 1000000);
  const unsigned k = s.substream(i);
  const auto g = s.chunk_graph(k);
  const auto& f = s.expander();
  REQUIRE(g.vertices.size() == f.m);
  std::vector<int> by_layer(f.m, -1);
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const auto& cv = g.vertices[v];
    CHECK(cv.name == s.name(k, cv.layer, i));
    CHECK(cv.z == s.oracle_key(k, cv.layer, i));
    by_layer[cv.layer] = static_cast<int>(v);
  }
  std::set<std::pair<unsigned, unsigned>> got, want;
  for (auto [a, b] : g.edges) {
    CHECK(a < b);
    const unsigned la = g.vertices[a].layer, lb = g.vertices[b].layer;
    got.emplace(std::min(la, lb), std::max(la, lb));
  }
  for (unsigned j = 0; j < f.m; ++j)
    for (unsigned jp : f.adj[j])
      if (j < jp) want.emplace(j, jp);
  CHECK(got == want);
  CHECK(g.edges.size() == want.size());
}

TEST_CASE("expander sketch: zero stream and a lone spike at n=256") {
  ExpanderSketch z(small_es(256, 1.0 / 4, 9));
  const auto r0 = z.query();
  CHECK(r0.indices.empty());
  for (Index i : {Index{0}, Index{17}, Index{255}}) {
    ExpanderSketch s(small_es(256, 1.0 / 4, 10 + i));
    s.update(i, 1000000);
    const auto r = s.query();
    CHECK(r.indices == std::vector<Index>{i});
    CHECK(r.weights.size() == 1);
  }
}

TEST_CASE("expander sketch: planted heavies at n=2^12") {
  unsigned full = 0;
  const unsigned trials = 10;
  for (unsigned trial = 0; trial < trials; ++trial) {
    GeneratorSpec g;
    g.n = 1 << 12;
    g.p = 2;
    g.eps = 1.0 / 8;
    g.zipf = 0.8;
    g.support = 1024;
    g.noise_scale = 2000;
    g.planted = 6;
    const auto st = generate_stream(g, 40 + trial);
    ExactOracle o(g.n);
    o.apply(st.updates);
    ExpanderSketch s(small_es(g.n, g.eps, 300 + trial));
    for (const auto& u : st.updates) s.update(u.index, u.delta);
    const auto r = s.query();
    CHECK(std::is_sorted(r.indices.begin(), r.indices.end()));
    CHECK(r.indices.size() <= s.layout().cap);
    const auto truth = oracle_heavy_hitters(o, 2, g.eps);
    bool all = true;
    for (Index i : truth) all = all && std::binary_search(r.indices.begin(), r.indices.end(), i);
    full += all;
    const double floor = g.eps / 2 * o.tail_norm(tail_count(2, g.eps), 2);
    for (Index i : r.indices) CHECK(std::fabs(double(o.value(i))) >= floor);
  }
  CHECK(full >= trials - 1);
}

TEST_CASE("expander sketch: serialization round trip") {
  ExpanderSketch s(small_es(1 << 12, 1.0 / 8, 11));
  Rng rng(12);
  for (int u = 0; u < 500; ++u) s.update(rng.below(1 << 12), 1 + static_cast<std::int64_t>(rng.below(9)));
  s.update(77, 50000);
  const auto blob = blob_of(s);
  std::span<const std::uint8_t> in(blob);
  const auto r = ExpanderSketch::deserialize(in);
  CHECK(in.empty());
  CHECK(r.query().indices == s.query().indices);
  CHECK(r.space_words() == s.space_words());
  std::vector<std::uint8_t> cut(blob.begin(), blob.begin() + blob.size() / 2);
  std::span<const std::uint8_t> bad(cut);
  CHECK_THROWS(ExpanderSketch::deserialize(bad));
}

TEST_CASE("expander sketch: layout at the default scale") {
  const auto lay = expander_sketch_layout(small_es(1 << 16, 1.0 / 16, 1));
  CHECK(lay.log_n == 16);
  CHECK(lay.eps2 == doctest::Approx(1.0 / 16));
  CHECK(lay.m >= 6);
  CHECK(lay.chunk.t * (lay.m / 2) >= 16);  // message holds a 16-bit index
  CHECK((1u << lay.chunk.t) > lay.m);
  CHECK(lay.cap == 4 * 16 * 16);
}

TEST_CASE("strict sketch: zero, spike and a small planted run") {
  StrictSketchParams p;
  p.n = 1 << 12;
  p.eps = 1.0 / 16;
  p.seed = 3;
  {
    StrictSketch s(p);
    CHECK(s.query().indices.empty());
    s.update(999, 40);
    CHECK(s.query().indices == std::vector<Index>{999});
    CHECK(s.l1() == 40);
  }
  const auto& lay = strict_sketch_layout(p);
  CHECK(lay.m >= 20);
  CHECK(lay.chunk.d == 12);

  unsigned full = 0;
  const unsigned trials = 10;
  for (unsigned trial = 0; trial < trials; ++trial) {
    GeneratorSpec g;
    g.n = p.n;
    g.model = StreamModel::strict_turnstile;
    g.p = 1;
    g.eps = p.eps;
    g.threshold = ThresholdKind::total;
    g.support = 1024;
    g.planted = 5;
    g.deletion_fraction = 0.3;
    const auto st = generate_stream(g, 70 + trial);
    ExactOracle o(g.n);
    o.apply(st.updates);
    REQUIRE_FALSE(o.ever_negative());
    p.seed = 500 + trial;
    StrictSketch s(p);
    for (const auto& u : st.updates) s.update(u.index, u.delta);
    CHECK(s.l1() == static_cast<std::int64_t>(o.lp_norm(1)));
    const auto r = s.query();
    bool all = true;
    for (Index i : oracle_heavy_hitters_total(o, 1, p.eps))
      all = all && std::binary_search(r.indices.begin(), r.indices.end(), i);
    full += all;
    for (Index i : r.indices) CHECK(double(o.value(i)) >= p.eps / 2 * o.lp_norm(1));
  }
  CHECK(full >= trials - 1);
}
