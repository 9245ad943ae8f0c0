#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hh/sketches.hpp"

namespace hh {

enum class BTreeMode : std::uint8_t { l2_general = 0, l1_strict = 1 };

struct BTreeParams {
  unsigned key_bits = 0;    // log2 N
  unsigned index_bits = 0;  // log2 n, domain of the index-level signs
  double epsilon = 0.125;
  double delta = 0.0625;
  double gamma = 0.25;
  unsigned branching = 0;  // 0: derived from gamma
  BTreeMode mode = BTreeMode::l2_general;

  // Sizing. Zero means "use the mode default". Defaults for l2_general:
  // width = next_pow2(ceil(width_c / eps1^2)), eps1 = eps/60, width_c = 1/64;
  // rows = ceil(rows_c * log2(1/eta)), rows_c = 1/4.
  // l1_strict: CountMin at error eps/2, rows_c = 1.
  double width_c = 0;
  double rows_c = 0;
  std::uint64_t width = 0;
  std::uint32_t rows = 0;
  std::uint64_t keep = 0;  // top-K kept per level; default 2/eps2^2
  bool pow2_width = true;

  std::uint64_t seed = 0;
};

// Smallest power of two >= 2 nearest (in log scale) to ((log2 N)/(eps*delta))^gamma.
unsigned default_branching(unsigned key_bits, double eps, double delta,
                           double gamma);

struct BTreeResult {
  std::vector<PartitionId> items;
  std::vector<double> estimates;
  std::uint64_t point_queries = 0;
  bool aborted = false;
};

class BTreeSketch {
 public:
  explicit BTreeSketch(const BTreeParams& p);

  void update_key(const PartitionId& z, Index i, std::int64_t delta);
  void update(const PartitionOracle& o, Index i, std::int64_t delta) {
    update_key(o(i), i, delta);
  }

  // Top-down walk keeping the `keep` children with the largest estimates.
  BTreeResult query() const;

  // Strict mode: keep every child with estimate >= phi. Aborts with an empty
  // list once a level holds more than 3/eps nodes.
  BTreeResult threshold_query(double phi) const;

  // Key of z's ancestor at level r (0 = root, depth() = leaves).
  PartitionId level_key(const PartitionId& z, unsigned r) const {
    return z >> (ell_ * (depth_ - r));
  }
  double estimate(unsigned r, const PartitionId& node) const {
    return tables_[r].point_query(node);
  }

  unsigned branching() const { return 1u << ell_; }
  unsigned log_branching() const { return ell_; }
  unsigned depth() const { return depth_; }
  std::size_t level_count() const { return tables_.size(); }
  std::uint64_t keep() const { return keep_; }
  double eta() const { return eta_; }
  const BTreeParams& params() const { return params_; }
  const CounterTable& level(unsigned r) const { return tables_[r]; }

  std::size_t space_words() const;

  void serialize(std::vector<std::uint8_t>& out) const;
  static BTreeSketch deserialize(std::span<const std::uint8_t>& in);

 private:
  BTreeParams params_;
  unsigned ell_ = 1;
  unsigned depth_ = 1;
  std::uint64_t keep_ = 1;
  double eta_ = 0;
  std::vector<CounterTable> tables_;
};

// Binary tree of CountMin sketches with constant failure probability per
// level, walked top-down at threshold eps*|x|_1, plus a high-confidence
// CountMin verifier on the leaves.
struct ExpectedTimeParams {
  std::uint64_t n = 1024;
  double epsilon = 1.0 / 16;
  double level_failure = 0.25;
  double verifier_rows_c = 3.0;  // rows = ceil(c * log2 n)
  std::uint64_t seed = 0;
};

struct ExpectedTimeResult {
  std::vector<Index> items;
  std::uint64_t visited = 0;
};

class ExpectedTimeSketch {
 public:
  explicit ExpectedTimeSketch(const ExpectedTimeParams& p);

  void update(Index i, std::int64_t delta);
  ExpectedTimeResult query() const;

  std::int64_t l1() const { return tracker_.read(); }
  unsigned depth() const { return depth_; }
  std::size_t space_words() const;

 private:
  ExpectedTimeParams params_;
  unsigned depth_;
  std::vector<CounterTable> levels_;  // levels_[r-1] for r = 1..depth
  CounterTable verifier_;
  ExactL1Tracker tracker_;
};

}  // namespace hh
