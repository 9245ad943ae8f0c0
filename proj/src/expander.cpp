#include "hh/expander.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hh/hashing.hpp"
#include "hh/rng.hpp"

namespace hh::coding {

bool ExpanderGraph::has_edge(unsigned u, unsigned v) const {
  return std::binary_search(adj[u].begin(), adj[u].end(), v);
}

namespace {

using Adj = std::vector<std::vector<unsigned>>;

// Pairing model: repeatedly join two random free stubs whose vertices are
// distinct and not yet adjacent; restart when stuck.
bool try_pairing(unsigned m, unsigned d, Rng& rng, Adj& adj) {
  adj.assign(m, {});
  std::vector<unsigned> stubs;
  stubs.reserve(std::size_t(m) * d);
  for (unsigned v = 0; v < m; ++v)
    for (unsigned c = 0; c < d; ++c) stubs.push_back(v);
  std::vector<std::vector<char>> linked(m, std::vector<char>(m, 0));
  while (!stubs.empty()) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const std::size_t a = rng.below(stubs.size());
      const std::size_t b = rng.below(stubs.size());
      const unsigned u = stubs[a], v = stubs[b];
      if (a == b || u == v || linked[u][v]) continue;
      linked[u][v] = linked[v][u] = 1;
      adj[u].push_back(v);
      adj[v].push_back(u);
      // remove the larger index first so the smaller stays valid
      const std::size_t hi = std::max(a, b), lo = std::min(a, b);
      stubs[hi] = stubs.back();
      stubs.pop_back();
      stubs[lo] = stubs.back();
      stubs.pop_back();
      placed = true;
    }
    if (!placed) {
      // exhaustive scan before giving up on this attempt
      for (std::size_t a = 0; a < stubs.size() && !placed; ++a)
        for (std::size_t b = a + 1; b < stubs.size() && !placed; ++b) {
          const unsigned u = stubs[a], v = stubs[b];
          if (u == v || linked[u][v]) continue;
          linked[u][v] = linked[v][u] = 1;
          adj[u].push_back(v);
          adj[v].push_back(u);
          stubs[b] = stubs.back();
          stubs.pop_back();
          stubs[a] = stubs.back();
          stubs.pop_back();
          placed = true;
        }
      if (!placed) return false;
    }
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return true;
}

Adj complete_graph(unsigned m) {
  Adj adj(m);
  for (unsigned u = 0; u < m; ++u)
    for (unsigned v = 0; v < m; ++v)
      if (u != v) adj[u].push_back(v);
  return adj;
}

Adj complement(const Adj& g) {
  const unsigned m = static_cast<unsigned>(g.size());
  Adj c(m);
  for (unsigned u = 0; u < m; ++u) {
    std::vector<char> mark(m, 0);
    for (unsigned v : g[u]) mark[v] = 1;
    for (unsigned v = 0; v < m; ++v)
      if (v != u && !mark[v]) c[u].push_back(v);
  }
  return c;
}

void check_params(unsigned m, unsigned d) {
  if (m == 0 || d == 0) throw std::invalid_argument("expander: m and d must be positive");
  if (d >= m) throw std::invalid_argument("expander: need d < m");
  if ((std::uint64_t(m) * d) % 2 != 0)
    throw std::invalid_argument("expander: m*d must be even");
}

}  // namespace

Adj random_regular_graph(unsigned m, unsigned d, std::uint64_t seed) {
  check_params(m, d);
  if (d == m - 1) return complete_graph(m);
  // dense targets are generated through their sparse complement
  if (2 * d > m - 1) return complement(random_regular_graph(m, m - 1 - d, seed));
  Rng rng(seed);
  Adj adj;
  for (int restart = 0; restart < 10000; ++restart)
    if (try_pairing(m, d, rng, adj)) return adj;
  throw std::runtime_error("random_regular_graph: pairing kept failing");
}

std::vector<double> adjacency_spectrum(const Adj& adj) {
  const Eigen::Index m = static_cast<Eigen::Index>(adj.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index u = 0; u < m; ++u)
    for (unsigned v : adj[u]) a(u, v) += 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + m);
  return ev;
}

double second_eigenvalue(const ExpanderGraph& g) {
  if (g.m < 2) return 0;
  const auto ev = adjacency_spectrum(g.adj);
  return std::max(std::fabs(ev[g.m - 2]), std::fabs(ev[0]));
}

ExpanderGraph build_expander(unsigned m, unsigned d, double lambda_target,
                             std::uint64_t seed) {
  check_params(m, d);
  ExpanderGraph best;
  best.lambda = std::numeric_limits<double>::infinity();
  for (unsigned attempt = 0; attempt < kExpanderRetries; ++attempt) {
    ExpanderGraph g;
    g.m = m;
    g.d = d;
    g.target = lambda_target;
    g.adj = random_regular_graph(m, d, splitmix_at(seed, attempt));
    g.lambda = second_eigenvalue(g);
    g.attempts = attempt + 1;
    g.meets_target = g.lambda <= lambda_target + 1e-9;
    if (g.meets_target) return g;
    if (g.lambda < best.lambda) best = g;
    if (d == m - 1) break;  // only one graph exists
  }
  best.attempts = d == m - 1 ? 1 : kExpanderRetries;
  return best;
}

ExpanderGraph build_edge_expander(unsigned m, std::uint64_t seed) {
  if (m < 13) throw std::invalid_argument("edge expander: need m >= 13");
  ExpanderGraph best;
  best.lambda = std::numeric_limits<double>::infinity();
  for (unsigned attempt = 0; attempt < kExpanderRetries; ++attempt) {
    ExpanderGraph g;
    g.m = m;
    g.d = 12;
    g.flavor = ExpanderFlavor::edge12;
    g.adj = random_regular_graph(m, 12, splitmix_at(seed, attempt));
    g.lambda = second_eigenvalue(g);
    if (g.lambda < best.lambda) best = std::move(g);
    if (m == 13) break;
  }
  best.target = best.lambda;
  best.meets_target = true;
  best.attempts = m == 13 ? 1 : kExpanderRetries;
  return best;
}

bool edge_expansion_is_exact(const ExpanderGraph& g) { return g.m <= 24; }

double edge_expansion(const ExpanderGraph& g) {
  const unsigned m = g.m;
  if (m < 2) return 0;
  if (!edge_expansion_is_exact(g)) {
    const auto ev = adjacency_spectrum(g.adj);
    return std::max(0.0, (g.d - ev[m - 2]) / (2.0 * g.d));
  }
  // Gray-code walk over all subsets, tracking boundary incrementally.
  std::vector<int> in_s(m, 0), nbr_in(m, 0);
  long long boundary = 0;
  int size = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t step = 1; step < total; ++step) {
    const unsigned v = static_cast<unsigned>(std::countr_zero(step));
    if (!in_s[v]) {
      boundary += static_cast<long long>(g.adj[v].size()) - 2 * nbr_in[v];
      in_s[v] = 1;
      ++size;
      for (unsigned u : g.adj[v]) ++nbr_in[u];
    } else {
      boundary -= static_cast<long long>(g.adj[v].size()) - 2 * nbr_in[v];
      in_s[v] = 0;
      --size;
      for (unsigned u : g.adj[v]) --nbr_in[u];
    }
    if (size > 0 && 2 * size <= static_cast<int>(m))
      best = std::min(best, double(boundary) / (double(g.d) * size));
  }
  return best;
}

void write_expander(std::ostream& os, const ExpanderGraph& g) {
  std::ostringstream lam;
  lam.precision(17);
  lam << g.lambda;
  os << g.m << ' ' << g.d << ' ' << lam.str() << '\n';
  for (const auto& row : g.adj) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? " " : "") << row[k];
    os << '\n';
  }
}

ExpanderGraph read_expander(std::istream& is) {
  ExpanderGraph g;
  if (!(is >> g.m >> g.d >> g.lambda)) throw std::runtime_error("expander: bad header");
  g.adj.assign(g.m, {});
  for (unsigned u = 0; u < g.m; ++u) {
    g.adj[u].resize(g.d);
    for (unsigned k = 0; k < g.d; ++k) {
      if (!(is >> g.adj[u][k]) || g.adj[u][k] >= g.m || g.adj[u][k] == u)
        throw std::runtime_error("expander: bad adjacency row");
    }
    std::sort(g.adj[u].begin(), g.adj[u].end());
  }
  for (unsigned u = 0; u < g.m; ++u)
    for (unsigned v : g.adj[u])
      if (!g.has_edge(v, u)) throw std::runtime_error("expander: asymmetric adjacency");
  g.target = g.lambda;
  g.meets_target = true;
  return g;
}

}  // namespace hh::coding
