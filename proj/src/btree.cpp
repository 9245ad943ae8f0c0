#include "hh/btree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hh {

unsigned default_branching(unsigned key_bits, double eps, double delta,
                           double gamma) {
  const double base = std::max(1.0, double(key_bits)) / (eps * delta);
  const double b = std::pow(base, gamma);
  int e = static_cast<int>(std::lround(std::log2(std::max(2.0, b))));
  e = std::max(1, e);
  if (key_bits >= 1) e = std::min<int>(e, static_cast<int>(key_bits));
  return 1u << e;
}

namespace {

void validate(const BTreeParams& p) {
  if (p.key_bits == 0 || p.key_bits > PartitionId::kMaxBits)
    throw std::invalid_argument("btree: key_bits out of range");
  if (!(p.epsilon > 0 && p.epsilon < 1))
    throw std::invalid_argument("btree: epsilon must lie in (0,1)");
  if (!(p.delta > 0 && p.delta < 1))
    throw std::invalid_argument("btree: delta must lie in (0,1)");
  if (!(p.gamma > 0 && p.gamma < 0.5))
    throw std::invalid_argument("btree: gamma must lie in (0, 0.5)");
  if (p.branching != 0 &&
      (p.branching < 2 || (p.branching & (p.branching - 1)) != 0))
    throw std::invalid_argument("btree: branching must be a power of two >= 2");
}

std::uint64_t ceil_u64(double x) {
  return static_cast<std::uint64_t>(std::ceil(x - 1e-9));
}

}  // namespace

BTreeSketch::BTreeSketch(const BTreeParams& p) : params_(p) {
  validate(p);
  const unsigned b = p.branching ? p.branching
                                 : default_branching(p.key_bits, p.epsilon,
                                                     p.delta, p.gamma);
  ell_ = static_cast<unsigned>(std::countr_zero(b));
  depth_ = (p.key_bits + ell_ - 1) / ell_;
  if (depth_ * ell_ > PartitionId::kMaxBits)
    throw std::invalid_argument("btree: padded key exceeds 256 bits");
  params_.branching = b;

  const double eps = p.epsilon;
  SketchKind kind;
  TableShape shape;
  if (p.mode == BTreeMode::l2_general) {
    const double eps1 = eps / 60, eps2 = eps / 180;
    keep_ = p.keep ? p.keep : ceil_u64(2 / (eps2 * eps2));
    const double q = 2.0 * b * depth_ * double(keep_);
    eta_ = p.delta / q;
    const double wc = p.width_c > 0 ? p.width_c : 1.0 / 64;
    const double rc = p.rows_c > 0 ? p.rows_c : 0.25;
    std::uint64_t w = p.width ? p.width : ceil_u64(wc / (eps1 * eps1));
    if (!p.width && p.pow2_width) w = next_pow2(w);
    shape.width = std::max<std::uint64_t>(1, w);
    shape.rows = p.rows ? p.rows
                        : std::max<std::uint32_t>(
                              1, static_cast<std::uint32_t>(
                                     ceil_u64(rc * std::log2(1 / eta_))));
    kind = SketchKind::count_sketch;
  } else {
    keep_ = ceil_u64(3 / eps);
    eta_ = p.delta * eps / (double(b) * depth_);
    const double rc = p.rows_c > 0 ? p.rows_c : 1.0;
    std::uint64_t w = p.width ? p.width : ceil_u64(4 / eps);
    if (!p.width && p.pow2_width) w = next_pow2(w);
    shape.width = std::max<std::uint64_t>(1, w);
    shape.rows = p.rows ? p.rows
                        : std::max<std::uint32_t>(
                              1, static_cast<std::uint32_t>(
                                     ceil_u64(rc * std::log2(1 / eta_))));
    kind = SketchKind::count_min;
  }

  tables_.reserve(depth_ + 1);
  // The root holds a single partition, one counter suffices.
  tables_.emplace_back(kind, TableShape{1, 1}, 1, p.index_bits,
                       splitmix_at(p.seed, 0));
  for (unsigned r = 1; r <= depth_; ++r) {
    TableShape s = shape;
    // A level with fewer partitions than buckets needs no more buckets.
    if (ell_ * r < 64) s.width = std::min<std::uint64_t>(s.width, std::uint64_t{1} << (ell_ * r));
    tables_.emplace_back(kind, s, ell_ * r, p.index_bits,
                         splitmix_at(p.seed, r));
  }
}

void BTreeSketch::update_key(const PartitionId& z, Index i,
                             std::int64_t delta) {
  for (unsigned r = 0; r <= depth_; ++r)
    tables_[r].update_key(level_key(z, r), i, delta);
}

BTreeResult BTreeSketch::query() const {
  BTreeResult res;
  std::vector<PartitionId> cur{PartitionId(0)};
  std::vector<std::pair<double, PartitionId>> cand;
  const std::uint64_t b = branching();
  for (unsigned r = 1; r <= depth_; ++r) {
    cand.clear();
    cand.reserve(cur.size() * b);
    for (const auto& parent : cur) {
      const PartitionId base = parent << ell_;
      for (std::uint64_t d = 0; d < b; ++d) {
        PartitionId child = base;
        child.set_word(0, child.word(0) | d);
        cand.emplace_back(tables_[r].point_query(child), child);
      }
    }
    res.point_queries += cand.size();
    auto by_rank = [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return x.second < y.second;
    };
    if (cand.size() > keep_) {
      std::nth_element(cand.begin(), cand.begin() + keep_, cand.end(), by_rank);
      cand.resize(keep_);
    }
    std::sort(cand.begin(), cand.end(), by_rank);
    cur.clear();
    for (const auto& c : cand) cur.push_back(c.second);
    if (r == depth_) {
      for (const auto& c : cand) {
        res.items.push_back(c.second);
        res.estimates.push_back(c.first);
      }
    }
  }
  return res;
}

BTreeResult BTreeSketch::threshold_query(double phi) const {
  if (params_.mode != BTreeMode::l1_strict)
    throw std::logic_error("threshold_query needs a strict-mode b-tree");
  BTreeResult res;
  const std::uint64_t cap = ceil_u64(3 / params_.epsilon);
  std::vector<PartitionId> cur{PartitionId(0)};
  std::vector<PartitionId> next;
  std::vector<double> est;
  const std::uint64_t b = branching();
  for (unsigned r = 1; r <= depth_; ++r) {
    next.clear();
    est.clear();
    for (const auto& parent : cur) {
      const PartitionId base = parent << ell_;
      for (std::uint64_t d = 0; d < b; ++d) {
        PartitionId child = base;
        child.set_word(0, child.word(0) | d);
        const double e = static_cast<double>(tables_[r].cm_point_query(child));
        ++res.point_queries;
        if (e >= phi) {
          next.push_back(child);
          est.push_back(e);
        }
      }
    }
    if (next.size() > cap) {
      res.aborted = true;
      return res;
    }
    cur.swap(next);
  }
  res.items = std::move(cur);
  res.estimates = std::move(est);
  return res;
}

std::size_t BTreeSketch::space_words() const {
  std::size_t w = 0;
  for (const auto& t : tables_) w += t.space_words();
  return w;
}

namespace {
constexpr std::uint32_t kTreeMagic = 0x54424848;  // "HHBT"
constexpr std::uint32_t kTreeVersion = 1;
}  // namespace

void BTreeSketch::serialize(std::vector<std::uint8_t>& out) const {
  io::put_u32(out, kTreeMagic);
  io::put_u32(out, kTreeVersion);
  io::put_u8(out, static_cast<std::uint8_t>(params_.mode));
  io::put_u32(out, params_.branching);
  io::put_u32(out, params_.key_bits);
  io::put_u32(out, params_.index_bits);
  io::put_f64(out, params_.epsilon);
  io::put_f64(out, params_.delta);
  io::put_f64(out, params_.gamma);
  io::put_f64(out, params_.width_c);
  io::put_f64(out, params_.rows_c);
  io::put_u64(out, params_.width);
  io::put_u32(out, params_.rows);
  io::put_u64(out, params_.keep);
  io::put_u8(out, params_.pow2_width ? 1 : 0);
  io::put_u64(out, params_.seed);
  io::put_u32(out, static_cast<std::uint32_t>(tables_.size()));
  for (const auto& t : tables_) t.serialize(out);
}

BTreeSketch BTreeSketch::deserialize(std::span<const std::uint8_t>& in) {
  if (io::get_u32(in) != kTreeMagic) throw std::runtime_error("bad b-tree magic");
  if (io::get_u32(in) != kTreeVersion)
    throw std::runtime_error("unsupported b-tree version");
  BTreeParams p;
  p.mode = static_cast<BTreeMode>(io::get_u8(in));
  p.branching = io::get_u32(in);
  p.key_bits = io::get_u32(in);
  p.index_bits = io::get_u32(in);
  p.epsilon = io::get_f64(in);
  p.delta = io::get_f64(in);
  p.gamma = io::get_f64(in);
  p.width_c = io::get_f64(in);
  p.rows_c = io::get_f64(in);
  p.width = io::get_u64(in);
  p.rows = io::get_u32(in);
  p.keep = io::get_u64(in);
  p.pow2_width = io::get_u8(in) != 0;
  p.seed = io::get_u64(in);
  BTreeSketch t(p);
  const std::uint32_t count = io::get_u32(in);
  if (count != t.tables_.size()) throw std::runtime_error("b-tree level count mismatch");
  for (auto& table : t.tables_) {
    CounterTable loaded = CounterTable::deserialize(in);
    if (loaded.rows() != table.rows() || loaded.width() != table.width())
      throw std::runtime_error("b-tree level shape mismatch");
    table = std::move(loaded);
  }
  return t;
}

ExpectedTimeSketch::ExpectedTimeSketch(const ExpectedTimeParams& p)
    : params_(p), depth_(std::max(1u, ceil_log2(p.n))) {
  if (!(p.epsilon > 0 && p.epsilon < 1))
    throw std::invalid_argument("expected-time: epsilon must lie in (0,1)");
  if (!(p.level_failure > 0 && p.level_failure < 1))
    throw std::invalid_argument("expected-time: level failure must lie in (0,1)");
  const TableShape level = count_min_shape(p.epsilon / 2, p.level_failure);
  for (unsigned r = 1; r <= depth_; ++r) {
    TableShape s = level;
    if (r < 64) s.width = std::min<std::uint64_t>(s.width, std::uint64_t{1} << r);
    // independent seeds per level
    levels_.emplace_back(SketchKind::count_min, s, r, depth_,
                         splitmix_at(p.seed, 1000 + r));
  }
  TableShape vs = count_min_shape(p.epsilon / 2, 0.5);
  vs.rows = static_cast<std::uint32_t>(
      std::ceil(p.verifier_rows_c * std::log2(double(std::max<std::uint64_t>(2, p.n)))));
  verifier_ = CounterTable(SketchKind::count_min, vs, depth_, depth_,
                           splitmix_at(p.seed, 7));
}

void ExpectedTimeSketch::update(Index i, std::int64_t delta) {
  const PartitionId z(i);
  for (unsigned r = 1; r <= depth_; ++r)
    levels_[r - 1].cm_update_key(z >> (depth_ - r), delta);
  verifier_.cm_update_key(z, delta);
  tracker_.track(delta);
}

ExpectedTimeResult ExpectedTimeSketch::query() const {
  ExpectedTimeResult res;
  const double phi = params_.epsilon * static_cast<double>(tracker_.read());
  if (tracker_.read() <= 0) return res;
  std::vector<std::uint64_t> cur{0}, next;
  res.visited = 1;  // the root
  for (unsigned r = 1; r <= depth_; ++r) {
    next.clear();
    for (auto parent : cur) {
      for (std::uint64_t d = 0; d < 2; ++d) {
        const std::uint64_t child = (parent << 1) | d;
        ++res.visited;
        if (levels_[r - 1].cm_point_query(PartitionId(child)) >= phi)
          next.push_back(child);
      }
    }
    cur.swap(next);
    if (cur.empty()) break;
  }
  for (auto leaf : cur) {
    if (leaf >= params_.n) continue;
    if (static_cast<double>(verifier_.cm_point_query(PartitionId(leaf))) >= phi)
      res.items.push_back(leaf);
  }
  std::sort(res.items.begin(), res.items.end());
  return res;
}

std::size_t ExpectedTimeSketch::space_words() const {
  std::size_t w = verifier_.space_words() + 1;
  for (const auto& t : levels_) w += t.space_words();
  return w;
}

}  // namespace hh
