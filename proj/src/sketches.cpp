#include "hh/sketches.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <stdexcept>

namespace hh {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw std::overflow_error("counter overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw std::overflow_error("counter overflow");
  return r;
}

PartitionOracle::PartitionOracle(std::uint64_t n, unsigned key_bits, Fn fn)
    : n_(n), key_bits_(key_bits), fn_(std::move(fn)) {
  if (n == 0) throw std::invalid_argument("oracle: empty universe");
  if (key_bits > PartitionId::kMaxBits)
    throw std::invalid_argument("oracle: key too wide");
}

PartitionOracle PartitionOracle::identity(std::uint64_t n) {
  return PartitionOracle(n, std::max(1u, ceil_log2(n)),
                         [](Index i) { return PartitionId(i); });
}

PartitionOracle PartitionOracle::from_array(std::vector<std::uint64_t> map,
                                            std::uint64_t partition_count) {
  for (auto v : map)
    if (v >= partition_count)
      throw std::invalid_argument("oracle: partition id out of range");
  const std::uint64_t n = map.size();
  auto shared = std::make_shared<std::vector<std::uint64_t>>(std::move(map));
  return PartitionOracle(n, std::max(1u, ceil_log2(partition_count)),
                         [shared](Index i) { return PartitionId((*shared)[i]); });
}

TableShape count_min_shape(double eps, double delta) {
  if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
    throw std::invalid_argument("count_min_shape: bad eps/delta");
  TableShape s;
  s.width = next_pow2(static_cast<std::uint64_t>(std::ceil(2.0 / eps - 1e-9)));
  s.rows = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::ceil(std::log2(1.0 / delta) - 1e-9)));
  return s;
}

TableShape count_sketch_shape(double eps, double delta, double width_c,
                              double rows_c) {
  if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
    throw std::invalid_argument("count_sketch_shape: bad eps/delta");
  TableShape s;
  s.width = next_pow2(
      static_cast<std::uint64_t>(std::ceil(width_c / (eps * eps) - 1e-9)));
  s.rows = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(
             std::ceil(rows_c * std::log2(1.0 / delta) - 1e-9)));
  return s;
}

CounterTable::CounterTable(SketchKind kind, TableShape shape,
                           unsigned key_bits, unsigned index_bits,
                           std::uint64_t seed)
    : kind_(kind),
      shape_(shape),
      key_bits_(key_bits),
      index_bits_(index_bits),
      seed_(seed) {
  if (shape.rows == 0 || shape.width == 0)
    throw std::invalid_argument("CounterTable: empty shape");
  init_hashes();
  counters_.assign(static_cast<std::size_t>(shape.rows) * shape.width, 0);
}

void CounterTable::init_hashes() {
  direct_ = key_bits_ < 64 && (std::uint64_t{1} << key_bits_) <= shape_.width;
  bucket_.clear();
  sigma_.clear();
  beta_.clear();
  for (std::uint32_t t = 0; t < shape_.rows; ++t) {
    bucket_.emplace_back(key_bits_, shape_.width, splitmix_at(seed_, 3 * t));
    if (kind_ == SketchKind::count_sketch) {
      sigma_.emplace_back(key_bits_, 2, splitmix_at(seed_, 3 * t + 1));
      beta_.emplace_back(2, std::min(61u, index_bits_), 2,
                         splitmix_at(seed_, 3 * t + 2));
    }
  }
}

void CounterTable::cm_update_key(const PartitionId& z, std::int64_t delta) {
  if (kind_ != SketchKind::count_min)
    throw std::logic_error("cm_update on a signed table");
  for (std::uint32_t t = 0; t < shape_.rows; ++t) {
    auto& c = counters_[t * shape_.width + bucket(t, z)];
    c = checked_add(c, delta);
  }
}

void CounterTable::pcs_update_key(const PartitionId& z, Index i,
                                  std::int64_t delta) {
  if (kind_ != SketchKind::count_sketch)
    throw std::logic_error("pcs_update on an unsigned table");
  for (std::uint32_t t = 0; t < shape_.rows; ++t) {
    const int s = sigma_[t].sign_eval(z) * beta_[t].sign_eval(i);
    auto& c = counters_[t * shape_.width + bucket(t, z)];
    c = checked_add(c, s > 0 ? delta : checked_mul(delta, -1));
  }
}

std::int64_t CounterTable::cm_point_query(const PartitionId& z) const {
  std::int64_t best = counters_[bucket(0, z)];
  for (std::uint32_t t = 1; t < shape_.rows; ++t)
    best = std::min(best, counters_[t * shape_.width + bucket(t, z)]);
  return best;
}

double CounterTable::pcs_point_query(const PartitionId& z) const {
  std::vector<double> v(shape_.rows);
  for (std::uint32_t t = 0; t < shape_.rows; ++t)
    v[t] = std::fabs(static_cast<double>(
        counters_[t * shape_.width + bucket(t, z)]));
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

double CounterTable::signed_point_query(const PartitionId& z, Index i) const {
  if (kind_ != SketchKind::count_sketch)
    throw std::logic_error("signed query on an unsigned table");
  std::vector<double> v(shape_.rows);
  for (std::uint32_t t = 0; t < shape_.rows; ++t) {
    const int s = sigma_[t].sign_eval(z) * beta_[t].sign_eval(i);
    v[t] = s * static_cast<double>(
                   counters_[t * shape_.width + bucket(t, z)]);
  }
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

double CounterTable::tail_l2_estimate(std::uint64_t drop) const {
  std::vector<double> per_row(shape_.rows);
  std::vector<double> sq(shape_.width);
  for (std::uint32_t t = 0; t < shape_.rows; ++t) {
    for (std::uint64_t b = 0; b < shape_.width; ++b) {
      const double c = static_cast<double>(counters_[t * shape_.width + b]);
      sq[b] = c * c;
    }
    double sum = 0;
    if (drop < shape_.width) {
      std::nth_element(sq.begin(), sq.begin() + drop, sq.end(),
                       std::greater<>());
      for (std::uint64_t b = drop; b < shape_.width; ++b) sum += sq[b];
    }
    per_row[t] = sum;
  }
  const std::size_t mid = (per_row.size() - 1) / 2;
  std::nth_element(per_row.begin(), per_row.begin() + mid, per_row.end());
  return std::sqrt(per_row[mid]);
}

void CounterTable::merge(const CounterTable& other) {
  if (other.kind_ != kind_ || other.shape_.rows != shape_.rows ||
      other.shape_.width != shape_.width || other.seed_ != seed_ ||
      other.key_bits_ != key_bits_)
    throw std::invalid_argument("merge: incompatible tables");
  for (std::size_t k = 0; k < counters_.size(); ++k)
    counters_[k] = checked_add(counters_[k], other.counters_[k]);
}

bool CounterTable::all_zero() const {
  return std::all_of(counters_.begin(), counters_.end(),
                     [](std::int64_t c) { return c == 0; });
}

std::size_t CounterTable::space_words() const {
  std::size_t w = counters_.size();
  for (const auto& h : bucket_) w += h.space_words();
  for (const auto& h : sigma_) w += h.space_words();
  for (const auto& h : beta_) w += h.space_words();
  return w;
}

namespace {
constexpr std::uint32_t kTableMagic = 0x54434848;  // "HHCT"
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void CounterTable::serialize(std::vector<std::uint8_t>& out) const {
  io::put_u32(out, kTableMagic);
  io::put_u32(out, kTableVersion);
  io::put_u8(out, static_cast<std::uint8_t>(kind_));
  io::put_u32(out, shape_.rows);
  io::put_u64(out, shape_.width);
  io::put_u32(out, key_bits_);
  io::put_u32(out, index_bits_);
  io::put_u64(out, seed_);
  for (auto c : counters_) io::put_i64(out, c);
}

CounterTable CounterTable::deserialize(std::span<const std::uint8_t>& in) {
  if (io::get_u32(in) != kTableMagic) throw std::runtime_error("bad table magic");
  if (io::get_u32(in) != kTableVersion)
    throw std::runtime_error("unsupported table version");
  const auto kind = static_cast<SketchKind>(io::get_u8(in));
  if (kind != SketchKind::count_min && kind != SketchKind::count_sketch)
    throw std::runtime_error("bad table kind");
  TableShape shape;
  shape.rows = io::get_u32(in);
  shape.width = io::get_u64(in);
  const unsigned key_bits = io::get_u32(in);
  const unsigned index_bits = io::get_u32(in);
  const std::uint64_t seed = io::get_u64(in);
  if (shape.rows == 0 || shape.width == 0 ||
      in.size() / 8 < static_cast<std::size_t>(shape.rows) * shape.width)
    throw std::runtime_error("truncated table blob");
  CounterTable t(kind, shape, key_bits, index_bits, seed);
  for (auto& c : t.counters_) c = io::get_i64(in);
  return t;
}

void ExactL1Tracker::track(std::int64_t delta) {
  total_ = checked_add(total_, delta);
}

}  // namespace hh
