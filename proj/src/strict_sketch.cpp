#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_set>

#include "hh/graph.hpp"
#include "hh/hh.hpp"

namespace hh {

namespace {

std::uint64_t ceil_u64(double x) { return static_cast<std::uint64_t>(std::ceil(x - 1e-9)); }

enum SeedTag : std::uint64_t { kTagExpander = 1, kTagVerifier = 3, kTagNames = 4, kTagTrees = 5 };

constexpr unsigned kStrictDegree = 12;

BTreeParams strict_tree_params(const StrictSketchParams& p, const StrictSketchLayout& l,
                               std::uint64_t seed) {
  BTreeParams bp;
  bp.key_bits = l.chunk.key_bits();
  bp.index_bits = l.log_n;
  bp.epsilon = p.eps;
  bp.delta = l.delta_s;
  bp.gamma = p.gamma;
  bp.branching = l.branching;
  bp.mode = BTreeMode::l1_strict;
  bp.rows = l.btree_rows;
  bp.width = l.btree_width;
  bp.seed = seed;
  return bp;
}

}  // namespace

StrictSketchLayout strict_sketch_layout(const StrictSketchParams& p) {
  if (p.n < 4) throw std::invalid_argument("strict sketch: n must be >= 4");
  if (!(p.eps > 0 && p.eps < 1)) throw std::invalid_argument("strict sketch: eps must lie in (0,1)");
  StrictSketchLayout l;
  l.log_n = std::max(2u, ceil_log2(p.n));
  const double L = l.log_n;
  l.m = std::max<unsigned>({p.min_m, kStrictDegree + 1,
                            static_cast<unsigned>(ceil_u64(p.c_m * L / std::log2(L)))});
  if (l.m > 64) throw std::invalid_argument("strict sketch: m must be <= 64");
  const unsigned k = l.m / 2;
  unsigned t = 2;
  while (k * t < l.log_n || (1u << t) <= l.m) ++t;
  l.chunk.t = t;
  l.chunk.s = std::max(1u, ceil_log2(ceil_u64(p.c_s * L * L)));
  l.chunk.d = kStrictDegree;
  if (l.chunk.key_bits() > PartitionId::kMaxBits)
    throw std::invalid_argument("strict sketch: chunk keys exceed 256 bits");
  l.delta_s = std::pow(L, -p.fail_exp);
  const unsigned key_bits = l.chunk.key_bits();
  l.branching = default_branching(key_bits, p.eps, l.delta_s, p.gamma);
  unsigned ell = 0;
  while ((1u << ell) < l.branching) ++ell;
  const unsigned depth = (key_bits + ell - 1) / ell;
  const double eta = l.delta_s * p.eps / (double(l.branching) * depth);
  l.btree_rows = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(1, ceil_u64(p.rows_c * std::log2(1 / eta))));
  l.btree_width = next_pow2(ceil_u64(4 / p.eps));
  l.verifier_shape.width = next_pow2(ceil_u64(4 / p.eps));
  l.verifier_shape.rows = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(1, ceil_u64(p.verifier_rows_c * L)));
  l.min_component = static_cast<unsigned>(ceil_u64(p.component_frac * l.m));
  return l;
}

StrictSketch::StrictSketch(const StrictSketchParams& p)
    : params_(p), layout_(strict_sketch_layout(p)),
      f_(coding::build_edge_expander(layout_.m, splitmix_at(p.seed, kTagExpander))),
      rs_(layout_.m, layout_.chunk.t) {
  const std::uint64_t name_seed = splitmix_at(p.seed, kTagNames);
  const std::uint64_t tree_seed = splitmix_at(p.seed, kTagTrees);
  names_.reserve(layout_.m);
  trees_.reserve(layout_.m);
  for (unsigned j = 0; j < layout_.m; ++j) {
    names_.emplace_back(2, layout_.log_n, std::uint64_t{1} << layout_.chunk.s,
                        splitmix_at(name_seed, j));
    trees_.emplace_back(strict_tree_params(p, layout_, splitmix_at(tree_seed, j)));
  }
  verifier_ = CounterTable(SketchKind::count_min, layout_.verifier_shape, layout_.log_n,
                           layout_.log_n, splitmix_at(p.seed, kTagVerifier));
}

PartitionId StrictSketch::oracle_key(unsigned j, Index i) const {
  const auto enc = rs_.encode(i);
  std::vector<std::uint64_t> nb(f_.d);
  for (unsigned e = 0; e < f_.d; ++e) nb[e] = name(f_.adj[j][e], i);
  return layout_.chunk.compose(name(j, i), enc.chunks[j], nb);
}

void StrictSketch::update(Index i, std::int64_t delta) {
  if (i >= params_.n) throw std::out_of_range("strict sketch: index out of range");
  if (delta == 0) return;
  const unsigned m = layout_.m;
  const auto enc = rs_.encode(i);
  std::uint64_t names[64], nb[64];
  for (unsigned j = 0; j < m; ++j) names[j] = name(j, i);
  for (unsigned j = 0; j < m; ++j) {
    for (unsigned e = 0; e < f_.d; ++e) nb[e] = names[f_.adj[j][e]];
    trees_[j].update_key(layout_.chunk.compose(names[j], enc.chunks[j], {nb, f_.d}), i, delta);
  }
  verifier_.cm_update_key(PartitionId(i), delta);
  tracker_.track(delta);
}

HeavyHittersReport StrictSketch::query() const {
  return query(params_.eps * static_cast<double>(tracker_.read()));
}

HeavyHittersReport StrictSketch::query(double phi) const {
  HeavyHittersReport rep;
  auto& diag = rep.diagnostics;
  diag.threshold = phi;
  diag.tail_estimate = static_cast<double>(tracker_.read());
  if (!(phi > 0)) return rep;
  const unsigned m = layout_.m;

  std::vector<std::vector<WeightedKey>> lists(m);
  for (unsigned j = 0; j < m; ++j) {
    const auto res = trees_[j].threshold_query(phi);
    if (res.aborted) {
      ++diag.failed_layers;
      continue;
    }
    std::unordered_set<std::uint64_t> seen;
    bool dup = false;
    for (const auto& z : res.items) dup |= !seen.insert(layout_.chunk.name(z)).second;
    if (dup) {
      ++diag.failed_layers;
      continue;
    }
    for (std::size_t a = 0; a < res.items.size(); ++a)
      lists[j].push_back({res.items[a], res.estimates[a]});
  }

  const ChunkGraph g = build_chunk_graph(lists, layout_.chunk, f_, false);
  diag.chunk_vertices = g.vertices.size();
  diag.chunk_edges = g.edges.size();
  if (g.vertices.empty()) return rep;
  auto g0 = std::make_shared<const cluster::Graph>(g.vertices.size(), g.edges);
  const cluster::WorkGraph wg(g0);

  std::vector<std::pair<Index, double>> found;
  for (const auto& comp : wg.components()) {
    if (comp.size() < layout_.min_component) continue;
    ++diag.clusters_found;
    std::vector<unsigned> per_layer(m, 0);
    for (auto v : comp) ++per_layer[g.vertices[v].layer];
    std::vector<std::optional<std::uint32_t>> chunks(m);
    for (auto v : comp) {
      const auto& cv = g.vertices[v];
      if (per_layer[cv.layer] == 1) chunks[cv.layer] = cv.chunk;
    }
    for (unsigned j = 0; j < m; ++j) diag.duplicate_layers += per_layer[j] > 1;
    const auto idx = rs_.decode(chunks);
    if (!idx) {
      ++diag.decode_failures;
      continue;
    }
    if (*idx >= params_.n) {
      ++diag.consistency_rejections;
      continue;
    }
    const double est = static_cast<double>(verifier_.cm_point_query(PartitionId(*idx)));
    if (est < phi) {
      ++diag.verify_rejections;
      continue;
    }
    found.emplace_back(*idx, est);
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              found.end());
  for (auto [i, w] : found) {
    rep.indices.push_back(i);
    rep.weights.push_back(w);
  }
  return rep;
}

std::size_t StrictSketch::space_words() const {
  std::size_t w = verifier_.space_words() + static_cast<std::size_t>(f_.m) * f_.d + 1;
  for (unsigned j = 0; j < layout_.m; ++j) w += names_[j].space_words() + trees_[j].space_words();
  return w;
}

}  // namespace hh
