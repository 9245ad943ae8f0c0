#include "hh/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hh/btree.hpp"

namespace hh {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::countmin: return "countmin";
    case Algorithm::countsketch_pcs: return "countsketch_pcs";
    case Algorithm::btree: return "btree";
    case Algorithm::expander_sketch: return "expander_sketch";
    case Algorithm::strict_l1: return "strict_l1";
    case Algorithm::expected_time_l1: return "expected_time_l1";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::countmin, Algorithm::countsketch_pcs, Algorithm::btree,
                 Algorithm::expander_sketch, Algorithm::strict_l1, Algorithm::expected_time_l1})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown algorithm: " + s);
}

bool requires_strict(Algorithm a) {
  return a == Algorithm::countmin || a == Algorithm::strict_l1 ||
         a == Algorithm::expected_time_l1;
}

void ExperimentConfig::validate() const {
  if (n < 4) throw std::invalid_argument("config: n must be >= 4");
  if (!(p > 0 && p <= 2)) throw std::invalid_argument("config: p must lie in (0,2]");
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("config: eps must lie in (0,1)");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("config: delta must lie in (0,1)");
  if (trials == 0) throw std::invalid_argument("config: trials must be >= 1");
  if (requires_strict(algorithm) && model == StreamModel::general_turnstile)
    throw std::invalid_argument("config: " + to_string(algorithm) +
                                " needs a cash_register or strict_turnstile stream");
  if (requires_strict(algorithm) && p != 1)
    throw std::invalid_argument("config: " + to_string(algorithm) + " solves p = 1 only");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    // Allow "1/16" for convenience.
    const auto slash = v.find('/');
    if (slash != std::string::npos)
      return to_double(key, v.substr(0, slash)) / to_double(key, v.substr(slash + 1));
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": not a number: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config: " + key + ": not a number: " + v);
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0 || x != std::floor(x) || x > 1.8e19)
    throw std::invalid_argument("config: " + key + ": not a non-negative integer: " + v);
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: " + key + ": not a boolean: " + v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&](const char* k, double ExperimentConfig::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.*f = to_double(key, v);
      };
    };
    auto es_dbl = [&](const char* k, double ExpanderSketchParams::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.es.*f = to_double(key, v);
      };
    };
    auto st_dbl = [&](const char* k, double StrictSketchParams::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.strict.*f = to_double(key, v);
      };
    };
    auto gen_dbl = [&](const char* k, double GeneratorSpec::*f) {
      t[k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.generator.*f = to_double(key, v);
      };
    };
    t["n"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n = to_u64(k, v); };
    dbl("p", &ExperimentConfig::p);
    dbl("eps", &ExperimentConfig::eps);
    dbl("delta", &ExperimentConfig::delta);
    t["model"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.model = parse_stream_model(v);
    };
    t["algorithm"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.algorithm = parse_algorithm(v);
    };
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
    t["trials"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.trials = static_cast<unsigned>(to_u64(k, v));
    };
    t["timing"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.timing = to_bool(k, v); };

    gen_dbl("zipf", &GeneratorSpec::zipf);
    gen_dbl("noise_scale", &GeneratorSpec::noise_scale);
    gen_dbl("planted_lo", &GeneratorSpec::planted_lo);
    gen_dbl("planted_hi", &GeneratorSpec::planted_hi);
    gen_dbl("deletion_fraction", &GeneratorSpec::deletion_fraction);
    t["support"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.generator.support = to_u64(k, v);
    };
    t["updates"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.generator.updates = to_u64(k, v);
    };
    t["planted"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.generator.planted = static_cast<unsigned>(to_u64(k, v));
    };
    t["threshold"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "tail") c.generator.threshold = ThresholdKind::tail;
      else if (v == "total") c.generator.threshold = ThresholdKind::total;
      else throw std::invalid_argument("config: " + k + ": expected tail or total");
    };

    dbl("btree.gamma", &ExperimentConfig::btree_gamma);
    dbl("btree.width_c", &ExperimentConfig::btree_width_c);
    dbl("btree.rows_c", &ExperimentConfig::btree_rows_c);
    t["btree.branching"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.btree_branching = static_cast<unsigned>(to_u64(k, v));
    };
    dbl("cs.width_c", &ExperimentConfig::cs_width_c);
    dbl("verify_frac", &ExperimentConfig::verify_frac);

    t["es.kwise_c"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.es.kwise_c = static_cast<unsigned>(to_u64(k, v));
    };
    t["es.min_m"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.es.min_m = static_cast<unsigned>(to_u64(k, v));
    };
    t["es.degree"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.es.degree = static_cast<unsigned>(to_u64(k, v));
    };
    es_dbl("es.c_red", &ExpanderSketchParams::c_red);
    es_dbl("es.c_m", &ExpanderSketchParams::c_m);
    es_dbl("es.c_s", &ExpanderSketchParams::c_s);
    es_dbl("es.expander_eps", &ExpanderSketchParams::expander_eps);
    es_dbl("es.gamma", &ExpanderSketchParams::gamma);
    es_dbl("es.q_c", &ExpanderSketchParams::q_c);
    es_dbl("es.btree_width_c", &ExpanderSketchParams::btree_width_c);
    es_dbl("es.btree_rows_c", &ExpanderSketchParams::btree_rows_c);
    es_dbl("es.btree_keep_c", &ExpanderSketchParams::btree_keep_c);
    es_dbl("es.q_width_c", &ExpanderSketchParams::q_width_c);
    es_dbl("es.q_rows_c", &ExpanderSketchParams::q_rows_c);
    es_dbl("es.verifier_width_c", &ExpanderSketchParams::verifier_width_c);
    es_dbl("es.verifier_rows_c", &ExpanderSketchParams::verifier_rows_c);
    es_dbl("es.verify_frac", &ExpanderSketchParams::verify_frac);
    es_dbl("es.cap_c", &ExpanderSketchParams::cap_c);

    t["strict.min_m"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.strict.min_m = static_cast<unsigned>(to_u64(k, v));
    };
    st_dbl("strict.c_m", &StrictSketchParams::c_m);
    st_dbl("strict.c_s", &StrictSketchParams::c_s);
    st_dbl("strict.gamma", &StrictSketchParams::gamma);
    st_dbl("strict.fail_exp", &StrictSketchParams::fail_exp);
    st_dbl("strict.rows_c", &StrictSketchParams::rows_c);
    st_dbl("strict.verifier_rows_c", &StrictSketchParams::verifier_rows_c);
    st_dbl("strict.component_frac", &StrictSketchParams::component_frac);
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto& t = setters();
  auto it = t.find(key);
  if (it == t.end()) throw std::invalid_argument("config: unknown key: " + key);
  it->second(c, key, value);
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::string line;
  unsigned lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

GeneratorSpec generator_for(const ExperimentConfig& c) {
  GeneratorSpec g = c.generator;
  g.n = c.n;
  g.p = c.p;
  g.eps = c.eps;
  g.model = c.model;
  return g;
}

double truth_threshold(const ExperimentConfig& c, const ExactOracle& o) {
  if (requires_strict(c.algorithm)) return o.total_threshold(1, c.eps);
  return o.tail_threshold(c.p, c.eps);
}

namespace {

// Common face of the algorithms for the driver.
struct Runner {
  std::function<void(Index, std::int64_t)> update;
  std::function<std::vector<Index>(ReportDiagnostics&)> query;
  std::function<std::size_t()> space;
};

Runner make_runner(const ExperimentConfig& c, std::uint64_t seed) {
  Runner r;
  const unsigned log_n = std::max(1u, ceil_log2(c.n));
  const double eps2 = lp_to_l2(c.p, c.eps);
  switch (c.algorithm) {
    case Algorithm::countmin: {
      auto t = std::make_shared<CounterTable>(SketchKind::count_min,
                                              count_min_shape(c.eps, c.delta), log_n, log_n, seed);
      auto l1 = std::make_shared<ExactL1Tracker>();
      const std::uint64_t n = c.n;
      const double eps = c.eps;
      r.update = [t, l1](Index i, std::int64_t d) {
        t->cm_update_key(PartitionId(i), d);
        l1->track(d);
      };
      r.query = [t, l1, n, eps](ReportDiagnostics& diag) {
        std::vector<Index> out;
        const double phi = eps * static_cast<double>(l1->read());
        diag.threshold = phi;
        if (!(phi > 0)) return out;
        for (Index i = 0; i < n; ++i)
          if (static_cast<double>(t->cm_point_query(PartitionId(i))) >= phi) out.push_back(i);
        return out;
      };
      r.space = [t] { return t->space_words() + 1; };
      break;
    }
    case Algorithm::countsketch_pcs: {
      auto t = std::make_shared<CounterTable>(
          SketchKind::count_sketch, count_sketch_shape(eps2, c.delta, c.cs_width_c), log_n, log_n,
          seed);
      const std::uint64_t n = c.n;
      const double frac = c.verify_frac;
      const std::uint64_t drop = tail_count(2, eps2);
      r.update = [t](Index i, std::int64_t d) { t->pcs_update_key(PartitionId(i), i, d); };
      r.query = [t, n, frac, eps2, drop](ReportDiagnostics& diag) {
        std::vector<Index> out;
        diag.tail_estimate = t->tail_l2_estimate(drop);
        diag.threshold = frac * eps2 * diag.tail_estimate;
        for (Index i = 0; i < n; ++i) {
          const double e = std::fabs(t->signed_point_query(PartitionId(i), i));
          if (e > 0 && e >= diag.threshold) out.push_back(i);
        }
        return out;
      };
      r.space = [t] { return t->space_words(); };
      break;
    }
    case Algorithm::btree: {
      BTreeParams bp;
      bp.key_bits = log_n;
      bp.index_bits = log_n;
      bp.epsilon = eps2;
      bp.delta = c.delta;
      bp.gamma = c.btree_gamma;
      bp.branching = c.btree_branching;
      bp.width_c = c.btree_width_c;
      bp.rows_c = c.btree_rows_c;
      bp.seed = seed;
      auto t = std::make_shared<BTreeSketch>(bp);
      const double frac = c.verify_frac;
      const std::uint64_t drop = tail_count(2, eps2);
      const std::uint64_t n = c.n;
      r.update = [t](Index i, std::int64_t d) { t->update_key(PartitionId(i), i, d); };
      r.query = [t, frac, eps2, drop, n](ReportDiagnostics& diag) {
        const auto res = t->query();
        diag.tail_estimate = t->level(t->depth()).tail_l2_estimate(drop);
        diag.threshold = frac * eps2 * diag.tail_estimate;
        std::vector<Index> out;
        for (std::size_t k = 0; k < res.items.size(); ++k) {
          const Index i = res.items[k].low64();
          if (i < n && res.estimates[k] > 0 && res.estimates[k] >= diag.threshold) out.push_back(i);
        }
        std::sort(out.begin(), out.end());
        return out;
      };
      r.space = [t] { return t->space_words(); };
      break;
    }
    case Algorithm::expander_sketch: {
      ExpanderSketchParams ep = c.es;
      ep.n = c.n;
      ep.p = c.p;
      ep.eps = c.eps;
      ep.seed = seed;
      auto s = std::make_shared<ExpanderSketch>(ep);
      r.update = [s](Index i, std::int64_t d) { s->update(i, d); };
      r.query = [s](ReportDiagnostics& diag) {
        auto rep = s->query();
        diag = rep.diagnostics;
        return rep.indices;
      };
      r.space = [s] { return s->space_words(); };
      break;
    }
    case Algorithm::strict_l1: {
      StrictSketchParams sp = c.strict;
      sp.n = c.n;
      sp.eps = c.eps;
      sp.seed = seed;
      auto s = std::make_shared<StrictSketch>(sp);
      r.update = [s](Index i, std::int64_t d) { s->update(i, d); };
      r.query = [s](ReportDiagnostics& diag) {
        auto rep = s->query();
        diag = rep.diagnostics;
        return rep.indices;
      };
      r.space = [s] { return s->space_words(); };
      break;
    }
    case Algorithm::expected_time_l1: {
      ExpectedTimeParams xp;
      xp.n = c.n;
      xp.epsilon = c.eps;
      xp.seed = seed;
      auto s = std::make_shared<ExpectedTimeSketch>(xp);
      r.update = [s](Index i, std::int64_t d) { s->update(i, d); };
      r.query = [s](ReportDiagnostics& diag) {
        auto res = s->query();
        diag.threshold = static_cast<double>(res.visited);
        return res.items;
      };
      r.space = [s] { return s->space_words(); };
      break;
    }
  }
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return -1;
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

TrialResult run_on_stream(const ExperimentConfig& c, const Stream& s, std::uint64_t algo_seed,
                          unsigned trial) {
  TrialResult res;
  res.trial = trial;
  res.seed = algo_seed;
  res.updates = s.size();
  try {
    ExactOracle oracle(c.n);
    oracle.apply(s);
    if (requires_strict(c.algorithm) && oracle.ever_negative())
      throw std::invalid_argument("stream leaves the strict turnstile model");

    Runner r = make_runner(c, algo_seed);
    using clock = std::chrono::steady_clock;
    constexpr std::size_t kBatch = 10000;
    std::vector<double> per_op;
    for (std::size_t b = 0; b < s.size(); b += kBatch) {
      const std::size_t e = std::min(s.size(), b + kBatch);
      const auto t0 = clock::now();
      for (std::size_t k = b; k < e; ++k) r.update(s[k].index, s[k].delta);
      const auto t1 = clock::now();
      per_op.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / double(e - b));
    }
    const auto q0 = clock::now();
    std::vector<Index> reported = r.query(res.diag);
    const auto q1 = clock::now();
    if (c.timing) {
      res.update_ns = median(per_op);
      res.query_ns = std::chrono::duration<double, std::nano>(q1 - q0).count();
    }
    std::sort(reported.begin(), reported.end());
    reported.erase(std::unique(reported.begin(), reported.end()), reported.end());

    const double thr = truth_threshold(c, oracle);
    const auto truth = oracle.at_least(thr);
    std::size_t hit = 0;
    for (Index i : truth) hit += std::binary_search(reported.begin(), reported.end(), i);
    std::size_t good = 0;
    for (Index i : reported)
      good += i < c.n && std::fabs(static_cast<double>(oracle.value(i))) >= thr / 2 &&
              oracle.value(i) != 0;
    res.truth_size = truth.size();
    res.list_size = reported.size();
    res.recall = truth.empty() ? 1.0 : double(hit) / double(truth.size());
    res.precision = reported.empty() ? 1.0 : double(good) / double(reported.size());
    res.space_words = r.space();
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

TrialResult run_trial(const ExperimentConfig& c, unsigned trial) {
  const std::uint64_t stream_seed = splitmix_at(c.seed, 2 * std::uint64_t{trial});
  const std::uint64_t algo_seed = splitmix_at(c.seed, 2 * std::uint64_t{trial} + 1);
  try {
    const auto gen = generate_stream(generator_for(c), stream_seed);
    return run_on_stream(c, gen.updates, algo_seed, trial);
  } catch (const std::exception& e) {
    TrialResult r;
    r.trial = trial;
    r.seed = algo_seed;
    r.error = e.what();
    return r;
  }
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& c) {
  c.validate();
  std::vector<TrialResult> out;
  for (unsigned t = 0; t < c.trials; ++t) out.push_back(run_trial(c, t));
  return out;
}

void write_csv_header(std::ostream& os) {
  os << "trial,seed,algorithm,model,n,p,eps,recall,precision,list_size,truth_size,"
        "space_words,updates,update_ns,query_ns,chunk_vertices,chunk_edges,clusters,"
        "decode_failures,verify_rejections,failed_layers,bad_level_estimate,error\n";
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

void write_csv_row(std::ostream& os, const ExperimentConfig& c, const TrialResult& r) {
  const bool ok = r.error.empty();
  const auto opt = [&](auto v) { return ok ? num(static_cast<double>(v)) : std::string(); };
  const auto timed = [](double v) { return v < 0 ? std::string() : num(v); };
  const bool es = c.algorithm == Algorithm::expander_sketch || c.algorithm == Algorithm::strict_l1;
  const auto diag = [&](auto v) { return ok && es ? num(static_cast<double>(v)) : std::string(); };
  os << r.trial << ',' << r.seed << ',' << to_string(c.algorithm) << ',' << to_string(c.model)
     << ',' << c.n << ',' << num(c.p) << ',' << num(c.eps) << ',' << opt(r.recall) << ','
     << opt(r.precision) << ',' << opt(r.list_size) << ',' << opt(r.truth_size) << ','
     << opt(r.space_words) << ',' << opt(r.updates) << ',' << timed(r.update_ns) << ','
     << timed(r.query_ns) << ',' << diag(r.diag.chunk_vertices) << ','
     << diag(r.diag.chunk_edges) << ',' << diag(r.diag.clusters_found) << ','
     << diag(r.diag.decode_failures) << ',' << diag(r.diag.verify_rejections) << ','
     << diag(r.diag.failed_layers) << ',' << diag(r.diag.bad_level_estimate) << ','
     << csv_escape(r.error) << '\n';
}

void write_csv(std::ostream& os, const ExperimentConfig& c, const std::vector<TrialResult>& rows) {
  write_csv_header(os);
  for (const auto& r : rows) write_csv_row(os, c, r);
}

}  // namespace hh
