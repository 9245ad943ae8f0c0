#include "hh/streams.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "hh/hashing.hpp"
#include "hh/rng.hpp"
#include "hh/sketches.hpp"

namespace hh {

std::string to_string(StreamModel m) {
  switch (m) {
    case StreamModel::cash_register: return "cash_register";
    case StreamModel::strict_turnstile: return "strict_turnstile";
    case StreamModel::general_turnstile: return "general_turnstile";
  }
  return "?";
}

StreamModel parse_stream_model(const std::string& s) {
  if (s == "cash_register") return StreamModel::cash_register;
  if (s == "strict_turnstile") return StreamModel::strict_turnstile;
  if (s == "general_turnstile") return StreamModel::general_turnstile;
  throw std::invalid_argument("unknown stream model: " + s);
}

std::uint64_t tail_count(double p, double eps) {
  return static_cast<std::uint64_t>(std::ceil(std::pow(eps, -p) - 1e-9));
}

ExactOracle::ExactOracle(std::uint64_t n) : x_(n, 0) {}

void ExactOracle::update(Index i, std::int64_t delta) {
  if (i >= x_.size()) throw std::out_of_range("oracle: index out of range");
  x_[i] = checked_add(x_[i], delta);
  if (x_[i] < 0) ever_negative_ = true;
}

namespace {

long double lp_sum(const std::vector<long double>& mags, std::size_t from, double p) {
  long double s = 0;
  for (std::size_t k = from; k < mags.size(); ++k) s += std::pow(mags[k], (long double)p);
  return s;
}

}  // namespace

double ExactOracle::lp_norm(double p) const { return tail_norm(0, p); }

double ExactOracle::tail_norm(std::uint64_t k, double p) const {
  std::vector<long double> mags;
  for (auto v : x_)
    if (v != 0) mags.push_back(std::fabs(static_cast<long double>(v)));
  if (k >= mags.size()) return 0;
  if (k > 0) {
    std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(), std::greater<>());
  }
  // Entries k.. are the tail; their order does not matter for the sum.
  return static_cast<double>(std::pow(lp_sum(mags, k, p), 1.0L / p));
}

std::vector<Index> ExactOracle::at_least(double threshold) const {
  std::vector<Index> out;
  for (Index i = 0; i < x_.size(); ++i)
    if (x_[i] != 0 && std::fabs(static_cast<double>(x_[i])) >= threshold) out.push_back(i);
  return out;
}

std::vector<Index> oracle_heavy_hitters(const ExactOracle& o, double p, double eps) {
  return o.at_least(o.tail_threshold(p, eps));
}

std::vector<Index> oracle_heavy_hitters_total(const ExactOracle& o, double p, double eps) {
  return o.at_least(o.total_threshold(p, eps));
}

void write_stream(std::ostream& os, const Stream& s) {
  std::vector<std::uint8_t> buf;
  buf.reserve(17);
  for (const auto& u : s) {
    buf.clear();
    io::put_u8(buf, 0);
    io::put_u64(buf, u.index);
    io::put_i64(buf, u.delta);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw std::runtime_error("stream file: write failed");
}

Stream read_stream(std::istream& is) {
  Stream s;
  std::uint8_t rec[17];
  for (;;) {
    is.read(reinterpret_cast<char*>(rec), sizeof rec);
    const auto got = is.gcount();
    if (got == 0) break;
    if (got != sizeof rec) throw std::runtime_error("stream file: truncated record");
    std::span<const std::uint8_t> in(rec, sizeof rec);
    if (io::get_u8(in) != 0) throw std::runtime_error("stream file: unknown op");
    const Index i = io::get_u64(in);
    s.push_back({i, io::get_i64(in)});
  }
  return s;
}

namespace {

void validate(const GeneratorSpec& g) {
  if (g.n < 2) throw std::invalid_argument("generator: n must be >= 2");
  if (!(g.p > 0 && g.p <= 2)) throw std::invalid_argument("generator: p must lie in (0,2]");
  if (!(g.eps > 0 && g.eps < 1)) throw std::invalid_argument("generator: eps must lie in (0,1)");
  if (!(g.deletion_fraction >= 0 && g.deletion_fraction < 0.9))
    throw std::invalid_argument("generator: deletion fraction must lie in [0, 0.9)");
  if (g.model == StreamModel::cash_register && g.deletion_fraction > 0)
    throw std::invalid_argument("generator: cash register streams have no deletions");
  if (g.planted > g.n) throw std::invalid_argument("generator: more planted heavies than n");
  if (!(g.planted_lo > 0 && g.planted_hi >= g.planted_lo))
    throw std::invalid_argument("generator: bad planted multiple range");
  if (g.zipf < 0) throw std::invalid_argument("generator: zipf exponent must be >= 0");
}

double threshold_of(const ExactOracle& o, const GeneratorSpec& g) {
  return g.threshold == ThresholdKind::tail ? o.tail_threshold(g.p, g.eps)
                                            : o.total_threshold(g.p, g.eps);
}

// Zipf ranks by inverse CDF.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t support, double s) : cdf_(support) {
    double acc = 0;
    for (std::uint64_t r = 0; r < support; ++r) cdf_[r] = acc += std::pow(double(r + 1), -s);
    for (auto& c : cdf_) c /= acc;
  }
  std::uint64_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::uint64_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

GeneratedStream generate_stream(const GeneratorSpec& g, std::uint64_t seed) {
  validate(g);
  Rng rng(seed);
  GeneratedStream out;

  std::vector<Index> perm(g.n);
  for (Index i = 0; i < g.n; ++i) perm[i] = i;
  rng.shuffle(perm);
  const std::uint64_t support =
      std::min<std::uint64_t>(g.support ? g.support : g.n - g.planted, g.n - g.planted);
  std::vector<Index> planted(perm.begin(), perm.begin() + g.planted);
  std::vector<Index> noise(perm.begin() + g.planted, perm.begin() + g.planted + support);

  // Final noise vector.
  std::vector<std::int64_t> x(g.n, 0);
  if (g.model == StreamModel::cash_register) {
    if (support > 0) {
      ZipfSampler zipf(support, g.zipf);
      for (std::uint64_t u = 0; u < g.updates; ++u) ++x[noise[zipf(rng)]];
    }
  } else {
    for (std::uint64_t r = 0; r < support; ++r) {
      auto v = static_cast<std::int64_t>(std::llround(g.noise_scale * std::pow(double(r + 1), -g.zipf)));
      v = std::max<std::int64_t>(v, 1);
      if (g.model == StreamModel::general_turnstile && rng.coin(0.5)) v = -v;
      x[noise[r]] = v;
    }
  }

  // Planted magnitudes: raise until each sits at its multiple of the final
  // threshold (the threshold itself may move as they grow).
  std::vector<double> mult(g.planted);
  std::vector<int> sign(g.planted, 1);
  for (unsigned h = 0; h < g.planted; ++h) {
    mult[h] = g.planted_lo + (g.planted_hi - g.planted_lo) * rng.uniform();
    if (g.model == StreamModel::general_turnstile && rng.coin(0.5)) sign[h] = -1;
  }
  if (g.planted) {
    ExactOracle o(g.n);
    for (Index i = 0; i < g.n; ++i)
      if (x[i]) o.update(i, x[i]);
    std::vector<std::int64_t> mag(g.planted, 0);
    for (int iter = 0; iter < 200; ++iter) {
      const double thr = threshold_of(o, g);
      bool done = true;
      for (unsigned h = 0; h < g.planted; ++h) {
        const auto want = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(mult[h] * thr)));
        if (want > mag[h]) {
          o.update(planted[h], sign[h] * (want - mag[h]));
          mag[h] = want;
          done = false;
        }
      }
      if (done) break;
      if (iter == 199) throw std::runtime_error("generator: planted magnitudes did not settle");
    }
    for (unsigned h = 0; h < g.planted; ++h) x[planted[h]] = sign[h] * mag[h];
  }

  // Realize x as updates. Coordinates get one or two carrying updates plus,
  // with the requested frequency, excursions that are undone later.
  struct Ev {
    Index i;
    std::int64_t d;
  };
  std::vector<Ev> ev;
  if (g.model == StreamModel::cash_register) {
    for (Index i = 0; i < g.n; ++i)
      for (std::int64_t c = 0; c < x[i]; ++c) ev.push_back({i, 1});
    rng.shuffle(ev);
  } else {
    const double f = g.deletion_fraction;
    const double per_coord = f / (1 - f);  // deletions per carrying update
    for (Index i = 0; i < g.n; ++i) {
      if (x[i] == 0) continue;
      const std::int64_t v = x[i];
      const std::int64_t s = v > 0 ? 1 : -1;
      unsigned dels = static_cast<unsigned>(per_coord);
      if (rng.coin(per_coord - dels)) ++dels;
      std::int64_t extra = 0;
      std::vector<std::int64_t> back;
      for (unsigned k = 0; k < dels; ++k) {
        const auto w = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::llabs(v))));
        back.push_back(-s * w);
        extra += w;
      }
      ev.push_back({i, s * (std::llabs(v) + extra)});  // carrying update first
      for (auto d : back) ev.push_back({i, d});
    }
    // Shuffle, then restore each coordinate's carrying update to its first slot.
    std::vector<std::size_t> order(ev.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);
    std::vector<Ev> mixed(ev.size());
    std::vector<std::size_t> first_slot(g.n, SIZE_MAX);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      mixed[pos] = ev[order[pos]];
      const Index i = mixed[pos].i;
      if (first_slot[i] == SIZE_MAX) first_slot[i] = pos;
    }
    if (g.model == StreamModel::strict_turnstile) {
      for (std::size_t pos = 0; pos < mixed.size(); ++pos) {
        const Index i = mixed[pos].i;
        const std::int64_t s = x[i] > 0 ? 1 : -1;
        if (mixed[pos].d * s > 0 && pos != first_slot[i]) std::swap(mixed[pos], mixed[first_slot[i]]);
      }
    }
    ev = std::move(mixed);
  }
  out.updates.reserve(ev.size());
  for (const auto& e : ev) out.updates.push_back({e.i, e.d});

  ExactOracle final_o(g.n);
  final_o.apply(out.updates);
  out.threshold = threshold_of(final_o, g);
  std::vector<std::pair<Index, double>> pl;
  for (unsigned h = 0; h < g.planted; ++h)
    pl.emplace_back(planted[h], out.threshold > 0
                                    ? std::fabs(double(x[planted[h]])) / out.threshold
                                    : 0);
  std::sort(pl.begin(), pl.end());
  for (auto [i, m] : pl) {
    out.planted.push_back(i);
    out.multiples.push_back(m);
  }
  return out;
}

}  // namespace hh
