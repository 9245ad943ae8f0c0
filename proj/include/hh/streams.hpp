#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hh/types.hpp"

namespace hh {

enum class StreamModel : std::uint8_t { cash_register, strict_turnstile, general_turnstile };

std::string to_string(StreamModel m);
StreamModel parse_stream_model(const std::string& s);

// Which threshold planted heavies are scaled against.
enum class ThresholdKind : std::uint8_t {
  tail,   // eps * |x_tail(1/eps^p)|_p
  total,  // eps * |x|_p
};

struct GeneratorSpec {
  std::uint64_t n = 1024;
  StreamModel model = StreamModel::general_turnstile;
  double p = 2;
  double eps = 1.0 / 16;
  ThresholdKind threshold = ThresholdKind::tail;

  double zipf = 1.1;
  std::uint64_t support = 0;     // noise coordinates; 0 means n minus the planted ones
  double noise_scale = 1000;     // magnitude of the rank-1 noise coordinate
  std::uint64_t updates = 0;     // cash register: number of +1 noise updates

  unsigned planted = 0;
  double planted_lo = 1.0;       // multiples of the final threshold
  double planted_hi = 2.0;

  double deletion_fraction = 0;  // share of updates that move a coordinate toward zero
};

struct GeneratedStream {
  Stream updates;
  std::vector<Index> planted;     // ascending
  std::vector<double> multiples;  // |x_i| / threshold for each planted index
  double threshold = 0;           // final threshold of the requested kind
};

// Deterministic per (spec, seed). Throws std::invalid_argument on a bad spec.
GeneratedStream generate_stream(const GeneratorSpec& spec, std::uint64_t seed);

// Binary records: op (1 byte, 0 = update), index (u64 LE), delta (i64 LE).
void write_stream(std::ostream& os, const Stream& s);
Stream read_stream(std::istream& is);

// ceil(1/eps^p), the number of entries zeroed by the tail.
std::uint64_t tail_count(double p, double eps);

class ExactOracle {
 public:
  explicit ExactOracle(std::uint64_t n);

  void update(Index i, std::int64_t delta);
  void apply(const Stream& s) {
    for (const auto& u : s) update(u.index, u.delta);
  }

  std::uint64_t size() const { return x_.size(); }
  std::int64_t value(Index i) const { return x_[i]; }
  const std::vector<std::int64_t>& vector() const { return x_; }
  // True once any coordinate went negative at some prefix.
  bool ever_negative() const { return ever_negative_; }

  double lp_norm(double p) const;
  // |x with its k largest-magnitude entries zeroed|_p.
  double tail_norm(std::uint64_t k, double p) const;
  double tail_threshold(double p, double eps) const {
    return eps * tail_norm(tail_count(p, eps), p);
  }
  double total_threshold(double p, double eps) const { return eps * lp_norm(p); }

  // Nonzero i with |x_i| >= threshold, ascending.
  std::vector<Index> at_least(double threshold) const;

 private:
  std::vector<std::int64_t> x_;
  bool ever_negative_ = false;
};

// Tail definition: nonzero i with |x_i| >= eps * |x_tail(1/eps^p)|_p.
std::vector<Index> oracle_heavy_hitters(const ExactOracle& o, double p, double eps);
// Classic definition: nonzero i with |x_i| >= eps * |x|_p.
std::vector<Index> oracle_heavy_hitters_total(const ExactOracle& o, double p, double eps);

}  // namespace hh
