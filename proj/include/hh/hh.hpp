#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hh/btree.hpp"
#include "hh/cluster.hpp"
#include "hh/coding.hpp"
#include "hh/expander.hpp"
#include "hh/hashing.hpp"
#include "hh/sketches.hpp"

namespace hh {

// eps^(p/2): the l2 error that solves the lp problem at error eps.
double lp_to_l2(double p, double eps);

inline std::uint64_t reduce_split(const KWiseHash& h, Index i) { return h.eval(i); }

// Bit layout of a chunk key: name (s) | chunk (t) | d neighbor names (s each),
// name in the most significant position.
struct ChunkLayout {
  unsigned s = 0, t = 0, d = 0;

  unsigned key_bits() const { return s + t + d * s; }
  PartitionId compose(std::uint64_t name, std::uint32_t chunk,
                      std::span<const std::uint64_t> neighbor_names) const;
  std::uint64_t name(const PartitionId& z) const { return z.field(t + d * s, s); }
  std::uint32_t chunk(const PartitionId& z) const {
    return static_cast<std::uint32_t>(z.field(d * s, t));
  }
  std::uint64_t neighbor(const PartitionId& z, unsigned e) const {
    return z.field((d - 1 - e) * s, s);
  }
};

struct ChunkVertex {
  unsigned layer = 0;
  std::uint64_t name = 0;
  std::uint32_t chunk = 0;
  std::vector<std::uint64_t> neighbor_names;
  double weight = 0;
  PartitionId z;
};

struct ChunkGraph {
  unsigned m = 0, d = 0;
  std::vector<ChunkVertex> vertices;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // u < v
  std::uint64_t dropped_by_name = 0;   // losers of the per-name argmax
  std::uint64_t dropped_isolated = 0;
};

struct WeightedKey {
  PartitionId z;
  double weight = 0;
};

// Per layer keep the heaviest z of every name (ties: larger z), then join
// (j,a)-(j',b) for F-adjacent layers when each suggests the other's name.
ChunkGraph build_chunk_graph(const std::vector<std::vector<WeightedKey>>& lists,
                             const ChunkLayout& layout, const coding::ExpanderGraph& f,
                             bool drop_isolated = true);

struct ReportDiagnostics {
  std::uint64_t chunk_vertices = 0;
  std::uint64_t chunk_edges = 0;
  std::uint64_t clusters_found = 0;  // big enough to decode
  std::uint64_t decode_failures = 0;
  std::uint64_t consistency_rejections = 0;
  std::uint64_t verify_rejections = 0;
  std::uint64_t duplicate_layers = 0;
  std::uint64_t failed_layers = 0;    // strict: aborted or duplicate names
  std::uint64_t truncated = 0;        // dropped by the list cap
  double bad_level_estimate = 0;      // erased share of layers over decodes
  double tail_estimate = 0;
  double threshold = 0;
};

struct HeavyHittersReport {
  std::vector<Index> indices;  // ascending
  std::vector<double> weights;
  ReportDiagnostics diagnostics;
};

struct ExpanderSketchParams {
  std::uint64_t n = 1 << 16;
  double p = 2;
  double eps = 1.0 / 16;
  std::uint64_t seed = 1;

  unsigned kwise_c = 0;        // independence of the split hash; 0: 2*ceil(log2 n)
  double c_red = 1.0;          // eps_sub = max(eps2, 1/sqrt(c_red*log2 n))
  double c_m = 2.0;            // m = max(min_m, ceil(c_m*log n/log log n))
  unsigned min_m = 6;
  double c_s = 4.0;            // s = ceil(log2(c_s*log2(n)^2))
  double expander_eps = 0.3;   // lambda target = expander_eps*d
  unsigned degree = 0;         // 0: smallest d meeting the target
  double gamma = 0.25;
  double q_c = 0.25;           // Q point queries at error q_c*eps_sub
  double btree_width_c = 32;   // width = ceil(c/eps_sub^2)
  double btree_rows_c = 0.2;   // rows = ceil(c*log2(1/eta))
  double btree_keep_c = 4;     // kept per level = ceil(c/eps_sub^2)
  double q_width_c = 2;        // Q width = ceil(c/(q_c*eps_sub)^2)
  double q_rows_c = 1;         // Q rows = ceil(c*log2(1/delta_s))
  double verifier_width_c = 64;  // width = ceil(c/eps2^2)
  double verifier_rows_c = 1;    // rows = ceil(c*log2 n)
  double verify_frac = 0.75;
  double cap_c = 4;            // report at most ceil(cap_c/eps2^2) indices
};

struct ExpanderSketchLayout {
  unsigned log_n = 0;
  double eps2 = 0;      // l2 error
  double eps_sub = 0;   // per-substream error
  double delta_s = 0;   // per-structure failure probability
  unsigned q = 1;
  unsigned m = 0;
  unsigned kwise = 0;
  ChunkLayout chunk;
  unsigned branching = 2;
  std::uint64_t btree_width = 0;
  std::uint32_t btree_rows = 0;
  std::uint64_t btree_keep = 0;
  TableShape q_shape;
  TableShape verifier_shape;
  std::uint64_t cap = 0;
};

ExpanderSketchLayout expander_sketch_layout(const ExpanderSketchParams& p);

class ExpanderSketch {
 public:
  explicit ExpanderSketch(const ExpanderSketchParams& p);

  void update(Index i, std::int64_t delta);
  HeavyHittersReport query() const;

  const ExpanderSketchParams& params() const { return params_; }
  const ExpanderSketchLayout& layout() const { return layout_; }
  const coding::ExpanderGraph& expander() const { return f_; }
  const coding::ReedSolomon& code() const { return rs_; }

  unsigned substream(Index i) const { return static_cast<unsigned>(split_.eval(i)); }
  std::uint64_t name(unsigned k, unsigned j, Index i) const { return names_[k][j].eval(i); }
  PartitionId oracle_key(unsigned k, unsigned j, Index i) const;

  // Filtered per-layer lists for substream k (b-tree output + Q weights).
  std::vector<std::vector<WeightedKey>> layer_lists(unsigned k) const;
  ChunkGraph chunk_graph(unsigned k) const;

  bool substream_is_zero(unsigned k) const;
  std::size_t space_words() const;

  void serialize(std::vector<std::uint8_t>& out) const;
  static ExpanderSketch deserialize(std::span<const std::uint8_t>& in);

 private:
  void query_substream(unsigned k, std::vector<Index>& found, ReportDiagnostics& diag,
                       double& erased_sum, std::uint64_t& decodes) const;

  ExpanderSketchParams params_;
  ExpanderSketchLayout layout_;
  coding::ExpanderGraph f_;
  coding::ReedSolomon rs_;
  KWiseHash split_;
  std::vector<std::vector<KWiseHash>> names_;          // [k][j]
  std::vector<std::vector<BTreeSketch>> trees_;        // [k][j]
  std::vector<std::vector<CounterTable>> point_;       // [k][j]
  CounterTable verifier_;
  std::vector<std::uint8_t> touched_;                  // per substream
};

struct StrictSketchParams {
  std::uint64_t n = 1 << 14;
  double eps = 1.0 / 32;
  std::uint64_t seed = 1;

  double c_m = 2.0;
  unsigned min_m = 20;
  double c_s = 256;            // s = ceil(log2(c_s*log2(n)^2))
  double gamma = 0.25;
  double fail_exp = 3;         // per-structure failure 1/log2(n)^fail_exp
  double rows_c = 0.3;         // CountMin rows scale inside the b-trees
  double verifier_rows_c = 3;  // rows = ceil(c*log2 n)
  double component_frac = 0.9;
};

struct StrictSketchLayout {
  unsigned log_n = 0;
  unsigned m = 0;
  ChunkLayout chunk;
  double delta_s = 0;
  unsigned branching = 2;
  std::uint32_t btree_rows = 0;
  std::uint64_t btree_width = 0;
  TableShape verifier_shape;
  unsigned min_component = 0;
};

StrictSketchLayout strict_sketch_layout(const StrictSketchParams& p);

class StrictSketch {
 public:
  explicit StrictSketch(const StrictSketchParams& p);

  void update(Index i, std::int64_t delta);
  // Threshold eps*|x|_1 from the exact tracker.
  HeavyHittersReport query() const;
  HeavyHittersReport query(double phi) const;

  const StrictSketchLayout& layout() const { return layout_; }
  const coding::ExpanderGraph& expander() const { return f_; }
  std::uint64_t name(unsigned j, Index i) const { return names_[j].eval(i); }
  PartitionId oracle_key(unsigned j, Index i) const;
  std::int64_t l1() const { return tracker_.read(); }
  std::size_t space_words() const;

 private:
  StrictSketchParams params_;
  StrictSketchLayout layout_;
  coding::ExpanderGraph f_;
  coding::ReedSolomon rs_;
  std::vector<KWiseHash> names_;
  std::vector<BTreeSketch> trees_;
  CounterTable verifier_;
  ExactL1Tracker tracker_;
};

}  // namespace hh
