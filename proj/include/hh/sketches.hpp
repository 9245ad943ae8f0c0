#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hh/hashing.hpp"
#include "hh/partition_id.hpp"
#include "hh/types.hpp"

namespace hh {

// O: [n] -> [N]. Either an explicit map or a composed rule.
class PartitionOracle {
 public:
  using Fn = std::function<PartitionId(Index)>;

  PartitionOracle(std::uint64_t n, unsigned key_bits, Fn fn);

  static PartitionOracle identity(std::uint64_t n);
  static PartitionOracle from_array(std::vector<std::uint64_t> map,
                                    std::uint64_t partition_count);

  PartitionId operator()(Index i) const { return fn_(i); }
  std::uint64_t universe_size() const { return n_; }
  unsigned key_bits() const { return key_bits_; }

 private:
  std::uint64_t n_;
  unsigned key_bits_;
  Fn fn_;
};

enum class SketchKind : std::uint8_t { count_min = 1, count_sketch = 2 };

struct TableShape {
  std::uint32_t rows = 1;
  std::uint64_t width = 1;
};

// width = next_pow2(ceil(2/eps)), rows = ceil(log2(1/delta)).
TableShape count_min_shape(double eps, double delta);
// width = next_pow2(ceil(width_c/eps^2)), rows = ceil(rows_c*log2(1/delta)).
TableShape count_sketch_shape(double eps, double delta, double width_c = 1.0,
                              double rows_c = 1.0);

class CounterTable {
 public:
  CounterTable() = default;
  CounterTable(SketchKind kind, TableShape shape, unsigned key_bits,
               unsigned index_bits, std::uint64_t seed);

  // CountMin: one +delta per row at the partition's bucket.
  void cm_update(const PartitionOracle& o, Index i, std::int64_t delta) {
    cm_update_key(o(i), delta);
  }
  void cm_update_key(const PartitionId& z, std::int64_t delta);

  // Signed variant: += delta * sigma_t(z) * beta_t(i).
  void pcs_update(const PartitionOracle& o, Index i, std::int64_t delta) {
    pcs_update_key(o(i), i, delta);
  }
  void pcs_update_key(const PartitionId& z, Index i, std::int64_t delta);

  // Dispatches on kind.
  void update_key(const PartitionId& z, Index i, std::int64_t delta) {
    if (kind_ == SketchKind::count_min)
      cm_update_key(z, delta);
    else
      pcs_update_key(z, i, delta);
  }

  std::int64_t cm_point_query(const PartitionId& z) const;
  // Lower median of |counter| over rows.
  double pcs_point_query(const PartitionId& z) const;
  // Signed median of sigma_t(z) * beta_t(i) * counter; for identity oracles.
  double signed_point_query(const PartitionId& z, Index i) const;

  double point_query(const PartitionId& z) const {
    return kind_ == SketchKind::count_min
               ? static_cast<double>(cm_point_query(z))
               : pcs_point_query(z);
  }

  // Per row: sum of squared counters after dropping the `drop` largest,
  // then the median over rows, square-rooted. Estimates an l2 tail norm.
  double tail_l2_estimate(std::uint64_t drop) const;

  void merge(const CounterTable& other);
  bool all_zero() const;

  SketchKind kind() const { return kind_; }
  std::uint32_t rows() const { return shape_.rows; }
  std::uint64_t width() const { return shape_.width; }
  unsigned key_bits() const { return key_bits_; }
  std::int64_t counter(std::uint32_t row, std::uint64_t col) const {
    return counters_[row * shape_.width + col];
  }
  // A table with no more partitions than buckets indexes them directly.
  bool direct() const { return direct_; }
  std::uint64_t bucket(std::uint32_t row, const PartitionId& z) const {
    return direct_ ? z.low64() : bucket_[row].eval(z);
  }
  std::size_t space_words() const;

  void serialize(std::vector<std::uint8_t>& out) const;
  static CounterTable deserialize(std::span<const std::uint8_t>& in);

  bool operator==(const CounterTable& o) const {
    return kind_ == o.kind_ && shape_.rows == o.shape_.rows &&
           shape_.width == o.shape_.width && seed_ == o.seed_ &&
           counters_ == o.counters_;
  }

 private:
  void init_hashes();

  SketchKind kind_ = SketchKind::count_min;
  TableShape shape_;
  unsigned key_bits_ = 0;
  unsigned index_bits_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<WideKeyHash> bucket_;
  std::vector<WideKeyHash> sigma_;
  std::vector<KWiseHash> beta_;
  std::vector<std::int64_t> counters_;
  bool direct_ = false;
};

class ExactL1Tracker {
 public:
  void track(std::int64_t delta);
  std::int64_t read() const { return total_; }

 private:
  std::int64_t total_ = 0;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

}  // namespace hh
