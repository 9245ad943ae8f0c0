#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "hh/graph.hpp"
#include "hh/hh.hpp"

namespace hh {

double lp_to_l2(double p, double eps) {
  if (!(p > 0 && p <= 2)) throw std::invalid_argument("p must lie in (0, 2]");
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("eps must lie in (0, 1)");
  return std::pow(eps, p / 2);
}

PartitionId ChunkLayout::compose(std::uint64_t name, std::uint32_t chunk,
                                 std::span<const std::uint64_t> neighbor_names) const {
  if (neighbor_names.size() != d) throw std::invalid_argument("chunk key: need d neighbor names");
  PartitionId z(name & ((std::uint64_t{1} << s) - 1));
  z.append(chunk, t);
  for (auto nb : neighbor_names) z.append(nb, s);
  return z;
}

ChunkGraph build_chunk_graph(const std::vector<std::vector<WeightedKey>>& lists,
                             const ChunkLayout& layout, const coding::ExpanderGraph& f,
                             bool drop_isolated) {
  if (lists.size() != f.m) throw std::invalid_argument("chunk graph: one list per layer");
  if (layout.d != f.d) throw std::invalid_argument("chunk graph: degree mismatch");
  ChunkGraph g;
  g.m = f.m;
  g.d = f.d;

  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> by_name(f.m);
  for (unsigned j = 0; j < f.m; ++j) {
    std::unordered_map<std::uint64_t, const WeightedKey*> best;
    for (const auto& wk : lists[j]) {
      auto [it, fresh] = best.emplace(layout.name(wk.z), &wk);
      if (fresh) continue;
      ++g.dropped_by_name;
      const WeightedKey* cur = it->second;
      if (wk.weight > cur->weight || (wk.weight == cur->weight && cur->z < wk.z))
        it->second = &wk;
    }
    std::vector<std::pair<std::uint64_t, const WeightedKey*>> sorted(best.begin(), best.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto [name, wk] : sorted) {
      ChunkVertex v;
      v.layer = j;
      v.name = name;
      v.chunk = layout.chunk(wk->z);
      v.neighbor_names.resize(f.d);
      for (unsigned e = 0; e < f.d; ++e) v.neighbor_names[e] = layout.neighbor(wk->z, e);
      v.weight = wk->weight;
      v.z = wk->z;
      by_name[j].emplace(name, static_cast<std::uint32_t>(g.vertices.size()));
      g.vertices.push_back(std::move(v));
    }
  }

  // Each F edge {j, j'} with j < j' is visited from its lower layer only.
  for (std::uint32_t u = 0; u < g.vertices.size(); ++u) {
    const auto& vu = g.vertices[u];
    const unsigned j = vu.layer;
    for (unsigned e = 0; e < f.d; ++e) {
      const unsigned jp = f.adj[j][e];
      if (jp < j) continue;
      auto it = by_name[jp].find(vu.neighbor_names[e]);
      if (it == by_name[jp].end()) continue;
      const auto& row = f.adj[jp];
      const auto back = static_cast<unsigned>(
          std::lower_bound(row.begin(), row.end(), j) - row.begin());
      if (g.vertices[it->second].neighbor_names[back] == vu.name)
        g.edges.emplace_back(u, it->second);
    }
  }

  if (drop_isolated) {
    std::vector<std::uint32_t> deg(g.vertices.size(), 0);
    for (auto [a, b] : g.edges) ++deg[a], ++deg[b];
    std::vector<std::uint32_t> remap(g.vertices.size(), UINT32_MAX);
    std::vector<ChunkVertex> kept;
    for (std::uint32_t v = 0; v < g.vertices.size(); ++v) {
      if (deg[v] == 0) {
        ++g.dropped_isolated;
        continue;
      }
      remap[v] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(std::move(g.vertices[v]));
    }
    g.vertices = std::move(kept);
    for (auto& [a, b] : g.edges) a = remap[a], b = remap[b];
  }
  return g;
}

namespace {

std::uint64_t ceil_u64(double x) { return static_cast<std::uint64_t>(std::ceil(x - 1e-9)); }

enum SeedTag : std::uint64_t {
  kTagExpander = 1,
  kTagSplit = 2,
  kTagVerifier = 3,
  kTagNames = 4,
  kTagTrees = 5,
  kTagPoint = 6,
};

coding::ExpanderGraph pick_expander(unsigned m, unsigned degree, double eps0,
                                    std::uint64_t seed) {
  if (degree) return coding::build_expander(m, degree, eps0 * degree, splitmix_at(seed, degree));
  for (unsigned d = 3; d < m; ++d) {
    if ((std::uint64_t{m} * d) % 2) continue;
    auto g = coding::build_expander(m, d, eps0 * d, splitmix_at(seed, d));
    if (g.meets_target) return g;
  }
  throw std::runtime_error("expander sketch: no degree meets the spectral target");
}

BTreeParams tree_params(const ExpanderSketchLayout& l, std::uint64_t seed) {
  BTreeParams bp;
  bp.key_bits = l.chunk.key_bits();
  bp.index_bits = l.log_n;
  bp.epsilon = l.eps_sub;
  bp.delta = l.delta_s;
  bp.branching = l.branching;
  bp.mode = BTreeMode::l2_general;
  bp.width = l.btree_width;
  bp.rows = l.btree_rows;
  bp.keep = l.btree_keep;
  bp.pow2_width = false;
  bp.seed = seed;
  return bp;
}

ExpanderSketchLayout base_layout(const ExpanderSketchParams& p) {
  if (p.n < 4) throw std::invalid_argument("expander sketch: n must be >= 4");
  ExpanderSketchLayout l;
  l.log_n = std::max(2u, ceil_log2(p.n));
  const double L = l.log_n;
  l.eps2 = lp_to_l2(p.p, p.eps);
  l.q = static_cast<unsigned>(std::max<std::uint64_t>(1, ceil_u64(1 / (l.eps2 * l.eps2 * L))));
  l.eps_sub = std::max(l.eps2, 1 / std::sqrt(p.c_red * L));
  l.delta_s = 1 / (L * L * L);
  l.m = std::max<unsigned>(p.min_m,
                           static_cast<unsigned>(ceil_u64(p.c_m * L / std::log2(L))));
  l.kwise = p.kwise_c ? p.kwise_c : 2 * l.log_n;

  const unsigned k = l.m / 2;
  unsigned t = 2;
  while (k * t < l.log_n || (1u << t) <= l.m) ++t;
  if (l.m > 64) throw std::invalid_argument("expander sketch: m must be <= 64");
  if (t > 16) throw std::invalid_argument("expander sketch: chunks wider than 16 bits");
  l.chunk.t = t;
  l.chunk.s = std::max(1u, ceil_log2(ceil_u64(p.c_s * L * L)));
  // d is fixed by the expander, see finish_layout.
  return l;
}

void finish_layout(ExpanderSketchLayout& l, const ExpanderSketchParams& p, unsigned d) {
  l.chunk.d = d;
  const unsigned key_bits = l.chunk.key_bits();
  if (key_bits > PartitionId::kMaxBits)
    throw std::invalid_argument("expander sketch: chunk keys exceed 256 bits");
  l.branching = default_branching(key_bits, l.eps_sub, l.delta_s, p.gamma);
  const unsigned ell = static_cast<unsigned>(std::countr_zero(l.branching));
  const unsigned depth = (key_bits + ell - 1) / ell;
  const double e2 = l.eps_sub * l.eps_sub;
  l.btree_width = ceil_u64(p.btree_width_c / e2);
  l.btree_keep = ceil_u64(p.btree_keep_c / e2);
  const double eta = l.delta_s / (2.0 * l.branching * depth * double(l.btree_keep));
  l.btree_rows = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(1, ceil_u64(p.btree_rows_c * std::log2(1 / eta))));
  const double qe = p.q_c * l.eps_sub;
  l.q_shape.width = ceil_u64(p.q_width_c / (qe * qe));
  l.q_shape.rows = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(1, ceil_u64(p.q_rows_c * std::log2(1 / l.delta_s))));
  l.verifier_shape.width = ceil_u64(p.verifier_width_c / (l.eps2 * l.eps2));
  l.verifier_shape.rows = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(1, ceil_u64(p.verifier_rows_c * l.log_n)));
  l.cap = ceil_u64(p.cap_c / (l.eps2 * l.eps2));
}

}  // namespace

ExpanderSketchLayout expander_sketch_layout(const ExpanderSketchParams& p) {
  auto l = base_layout(p);
  const auto f = pick_expander(l.m, p.degree, p.expander_eps, splitmix_at(p.seed, kTagExpander));
  finish_layout(l, p, f.d);
  return l;
}

ExpanderSketch::ExpanderSketch(const ExpanderSketchParams& p)
    : params_(p), layout_(base_layout(p)),
      f_(pick_expander(layout_.m, p.degree, p.expander_eps, splitmix_at(p.seed, kTagExpander))),
      rs_(layout_.m, layout_.chunk.t) {
  finish_layout(layout_, p, f_.d);
  const unsigned m = layout_.m, q = layout_.q;
  split_ = KWiseHash(layout_.kwise, layout_.log_n, q, splitmix_at(p.seed, kTagSplit));
  const std::uint64_t name_seed = splitmix_at(p.seed, kTagNames);
  const std::uint64_t tree_seed = splitmix_at(p.seed, kTagTrees);
  const std::uint64_t point_seed = splitmix_at(p.seed, kTagPoint);
  names_.resize(q);
  trees_.resize(q);
  point_.resize(q);
  for (unsigned k = 0; k < q; ++k) {
    names_[k].reserve(m);
    trees_[k].reserve(m);
    point_[k].reserve(m);
    for (unsigned j = 0; j < m; ++j) {
      const std::uint64_t slot = std::uint64_t{k} * m + j;
      names_[k].emplace_back(2, layout_.log_n, std::uint64_t{1} << layout_.chunk.s,
                             splitmix_at(name_seed, slot));
      trees_[k].emplace_back(tree_params(layout_, splitmix_at(tree_seed, slot)));
      point_[k].emplace_back(SketchKind::count_sketch, layout_.q_shape,
                             layout_.chunk.key_bits(), layout_.log_n,
                             splitmix_at(point_seed, slot));
    }
  }
  verifier_ = CounterTable(SketchKind::count_sketch, layout_.verifier_shape, layout_.log_n,
                           layout_.log_n, splitmix_at(p.seed, kTagVerifier));
  touched_.assign(q, 0);
}

PartitionId ExpanderSketch::oracle_key(unsigned k, unsigned j, Index i) const {
  const auto enc = rs_.encode(i);
  std::vector<std::uint64_t> nb(f_.d);
  for (unsigned e = 0; e < f_.d; ++e) nb[e] = name(k, f_.adj[j][e], i);
  return layout_.chunk.compose(name(k, j, i), enc.chunks[j], nb);
}

void ExpanderSketch::update(Index i, std::int64_t delta) {
  if (i >= params_.n) throw std::out_of_range("expander sketch: index out of range");
  if (delta == 0) return;
  const unsigned k = substream(i);
  const unsigned m = layout_.m;
  const auto enc = rs_.encode(i);
  std::uint64_t names[64];
  for (unsigned j = 0; j < m; ++j) names[j] = name(k, j, i);
  std::uint64_t nb[64];
  for (unsigned j = 0; j < m; ++j) {
    for (unsigned e = 0; e < f_.d; ++e) nb[e] = names[f_.adj[j][e]];
    const PartitionId z = layout_.chunk.compose(names[j], enc.chunks[j], {nb, f_.d});
    trees_[k][j].update_key(z, i, delta);
    point_[k][j].pcs_update_key(z, i, delta);
  }
  verifier_.pcs_update_key(PartitionId(i), i, delta);
  touched_[k] = 1;
}

std::vector<std::vector<WeightedKey>> ExpanderSketch::layer_lists(unsigned k) const {
  std::vector<std::vector<WeightedKey>> lists(layout_.m);
  for (unsigned j = 0; j < layout_.m; ++j) {
    const auto res = trees_[k][j].query();
    for (const auto& z : res.items) {
      const double w = point_[k][j].pcs_point_query(z);
      if (w > 0) lists[j].push_back({z, w});
    }
  }
  return lists;
}

ChunkGraph ExpanderSketch::chunk_graph(unsigned k) const {
  return build_chunk_graph(layer_lists(k), layout_.chunk, f_, true);
}

bool ExpanderSketch::substream_is_zero(unsigned k) const { return touched_[k] == 0; }

void ExpanderSketch::query_substream(unsigned k, std::vector<Index>& found,
                                     ReportDiagnostics& diag, double& erased_sum,
                                     std::uint64_t& decodes) const {
  const unsigned m = layout_.m, d = f_.d;
  const ChunkGraph g = chunk_graph(k);
  diag.chunk_vertices += g.vertices.size();
  diag.chunk_edges += g.edges.size();
  if (g.vertices.empty()) return;

  auto g0 = std::make_shared<const cluster::Graph>(g.vertices.size(), g.edges);
  const cluster::WorkGraph wg(g0);
  const auto parts = cluster::find_clusters(wg);

  std::vector<char> in_set(g.vertices.size(), 0);
  for (const auto& u : parts.sets) {
    if (2 * u.size() < m) continue;
    ++diag.clusters_found;
    for (auto v : u) in_set[v] = 1;
    std::vector<std::uint32_t> kept;
    for (auto v : u) {
      unsigned deg = 0;
      for (auto w : g0->neighbors(v)) deg += in_set[w];
      if (2 * deg > d) kept.push_back(v);
    }
    for (auto v : u) in_set[v] = 0;

    std::vector<unsigned> per_layer(m, 0);
    for (auto v : kept) ++per_layer[g.vertices[v].layer];
    std::vector<std::optional<std::uint32_t>> chunks(m);
    for (auto v : kept) {
      const auto& cv = g.vertices[v];
      if (per_layer[cv.layer] == 1) chunks[cv.layer] = cv.chunk;
    }
    for (unsigned j = 0; j < m; ++j) diag.duplicate_layers += per_layer[j] > 1;

    const auto idx = rs_.decode(chunks);
    if (!idx) {
      ++diag.decode_failures;
      continue;
    }
    const Index i = *idx;
    if (i >= params_.n || substream(i) != k) {
      ++diag.consistency_rejections;
      continue;
    }
    unsigned present = 0, agree = 0;
    for (auto v : kept) {
      const auto& cv = g.vertices[v];
      if (per_layer[cv.layer] != 1) continue;
      ++present;
      agree += cv.name == name(k, cv.layer, i);
    }
    if (2 * agree < present) {
      ++diag.consistency_rejections;
      continue;
    }
    erased_sum += double(m - agree) / m;
    ++decodes;
    found.push_back(i);
  }
}

HeavyHittersReport ExpanderSketch::query() const {
  HeavyHittersReport rep;
  auto& diag = rep.diagnostics;
  std::vector<Index> found;
  double erased_sum = 0;
  std::uint64_t decodes = 0;
  for (unsigned k = 0; k < layout_.q; ++k)
    if (!substream_is_zero(k)) query_substream(k, found, diag, erased_sum, decodes);
  diag.bad_level_estimate = decodes ? erased_sum / decodes : 0;

  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());

  const std::uint64_t drop = ceil_u64(1 / (layout_.eps2 * layout_.eps2));
  diag.tail_estimate = verifier_.tail_l2_estimate(drop);
  diag.threshold = params_.verify_frac * layout_.eps2 * diag.tail_estimate;

  std::vector<std::pair<double, Index>> ok;
  for (Index i : found) {
    const double est = std::fabs(verifier_.signed_point_query(PartitionId(i), i));
    if (est > 0 && est >= diag.threshold)
      ok.emplace_back(est, i);
    else
      ++diag.verify_rejections;
  }
  if (ok.size() > layout_.cap) {
    std::sort(ok.begin(), ok.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    diag.truncated = ok.size() - layout_.cap;
    ok.resize(layout_.cap);
  }
  std::sort(ok.begin(), ok.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  for (auto [w, i] : ok) {
    rep.indices.push_back(i);
    rep.weights.push_back(w);
  }
  return rep;
}

std::size_t ExpanderSketch::space_words() const {
  std::size_t w = split_.space_words() + verifier_.space_words();
  w += static_cast<std::size_t>(f_.m) * f_.d;  // adjacency
  for (unsigned k = 0; k < layout_.q; ++k)
    for (unsigned j = 0; j < layout_.m; ++j)
      w += names_[k][j].space_words() + trees_[k][j].space_words() +
           point_[k][j].space_words();
  return w;
}

namespace {
constexpr std::uint32_t kMagic = 0x48484553;  // "HHES"
constexpr std::uint32_t kVersion = 1;
}  // namespace

void ExpanderSketch::serialize(std::vector<std::uint8_t>& out) const {
  using namespace io;
  put_u32(out, kMagic);
  put_u32(out, kVersion);
  const auto& p = params_;
  put_u64(out, p.n);
  put_f64(out, p.p);
  put_f64(out, p.eps);
  put_u64(out, p.seed);
  put_u32(out, p.kwise_c);
  for (double c : {p.c_red, p.c_m}) put_f64(out, c);
  put_u32(out, p.min_m);
  for (double c : {p.c_s, p.expander_eps}) put_f64(out, c);
  put_u32(out, p.degree);
  for (double c : {p.gamma, p.q_c, p.btree_width_c, p.btree_rows_c, p.btree_keep_c,
                   p.q_width_c, p.q_rows_c, p.verifier_width_c, p.verifier_rows_c,
                   p.verify_frac, p.cap_c})
    put_f64(out, c);
  for (auto b : touched_) put_u8(out, b);
  for (unsigned k = 0; k < layout_.q; ++k) {
    if (!touched_[k]) continue;
    for (unsigned j = 0; j < layout_.m; ++j) {
      trees_[k][j].serialize(out);
      point_[k][j].serialize(out);
    }
  }
  verifier_.serialize(out);
}

ExpanderSketch ExpanderSketch::deserialize(std::span<const std::uint8_t>& in) {
  using namespace io;
  if (get_u32(in) != kMagic) throw std::runtime_error("expander sketch: bad magic");
  if (get_u32(in) != kVersion) throw std::runtime_error("expander sketch: unsupported version");
  ExpanderSketchParams p;
  p.n = get_u64(in);
  p.p = get_f64(in);
  p.eps = get_f64(in);
  p.seed = get_u64(in);
  p.kwise_c = get_u32(in);
  p.c_red = get_f64(in);
  p.c_m = get_f64(in);
  p.min_m = get_u32(in);
  p.c_s = get_f64(in);
  p.expander_eps = get_f64(in);
  p.degree = get_u32(in);
  for (double* c : {&p.gamma, &p.q_c, &p.btree_width_c, &p.btree_rows_c, &p.btree_keep_c,
                    &p.q_width_c, &p.q_rows_c, &p.verifier_width_c, &p.verifier_rows_c,
                    &p.verify_frac, &p.cap_c})
    *c = get_f64(in);
  ExpanderSketch s(p);
  for (auto& b : s.touched_) b = get_u8(in);
  for (unsigned k = 0; k < s.layout_.q; ++k) {
    if (!s.touched_[k]) continue;
    for (unsigned j = 0; j < s.layout_.m; ++j) {
      s.trees_[k][j] = BTreeSketch::deserialize(in);
      s.point_[k][j] = CounterTable::deserialize(in);
    }
  }
  s.verifier_ = CounterTable::deserialize(in);
  return s;
}

}  // namespace hh
