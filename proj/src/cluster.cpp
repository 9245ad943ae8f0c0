#include "hh/cluster.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hh/rng.hpp"

namespace hh::cluster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kDenseLimit = 512;
constexpr double kPowerTol = 1e-8;
constexpr std::uint64_t kPowerMaxIter = 100000;

double ratio(std::uint64_t cut, std::uint64_t vs, std::uint64_t vsb) {
  const std::uint64_t lo = std::min(vs, vsb);
  if (lo == 0) return kInf;
  return static_cast<double>(cut) / static_cast<double>(lo);
}

void check_trajectory(const CutState& cut, ClusterTrace* trace) {
  if (!trace) return;
  const double phi = cut.conductance();
  ++trace->conductance_checks;
  trace->max_trajectory_conductance = std::max(trace->max_trajectory_conductance, phi);
  if (!(phi < 1.0 / 9)) ++trace->conductance_violations;
}

}  // namespace

double conductance(const WorkGraph& g, const VertexSet& s) {
  std::vector<char> in(g.base().size(), 0);
  std::uint64_t vol_s = 0, cut = 0;
  for (VertexId v : s) {
    if (!g.alive(v)) throw std::invalid_argument("conductance: vertex not in graph");
    in[v] = 1;
  }
  for (VertexId v : g.vertices()) {
    if (!in[v]) continue;
    vol_s += g.degree(v);
    g.for_each_neighbor(v, [&](VertexId u) { cut += !in[u]; });
  }
  return ratio(cut, vol_s, g.volume() - vol_s);
}

CutState::CutState(const WorkGraph& g, const VertexSet& s)
    : g_(&g), side_(g.base().size(), 0), crossing_(g.base().size(), 0) {
  for (VertexId v : s) {
    if (!g.alive(v)) throw std::invalid_argument("cut: vertex not in graph");
    side_[v] = 1;
  }
  for (VertexId v : g.vertices()) {
    std::uint32_t c = 0;
    g.for_each_neighbor(v, [&](VertexId u) { c += side_[u] != side_[v]; });
    crossing_[v] = c;
    if (side_[v]) {
      vol_s_ += g.degree(v);
      ++size_s_;
      cut_ += c;
    } else {
      vol_sbar_ += g.degree(v);
    }
  }
}

void CutState::move(VertexId v) {
  const std::uint32_t deg = g_->degree(v);
  const std::uint32_t c = crossing_[v];
  const char old = side_[v];
  g_->for_each_neighbor(v, [&](VertexId u) {
    if (side_[u] == old)
      ++crossing_[u];
    else
      --crossing_[u];
  });
  cut_ = cut_ + deg - 2 * static_cast<std::uint64_t>(c);
  crossing_[v] = deg - c;
  side_[v] = !old;
  if (old) {
    vol_s_ -= deg;
    vol_sbar_ += deg;
    --size_s_;
  } else {
    vol_s_ += deg;
    vol_sbar_ -= deg;
    ++size_s_;
  }
}

double CutState::conductance() const { return ratio(cut_, vol_s_, vol_sbar_); }

VertexSet CutState::s_set() const {
  VertexSet out;
  for (VertexId v : g_->vertices())
    if (side_[v]) out.push_back(v);
  return out;
}

VertexSet CutState::sbar_set() const {
  VertexSet out;
  for (VertexId v : g_->vertices())
    if (!side_[v]) out.push_back(v);
  return out;
}

bool CutState::consistent() const {
  CutState fresh(*g_, s_set());
  if (fresh.cut_ != cut_ || fresh.vol_s_ != vol_s_ || fresh.vol_sbar_ != vol_sbar_ ||
      fresh.size_s_ != size_s_)
    return false;
  for (VertexId v : g_->vertices())
    if (fresh.crossing_[v] != crossing_[v]) return false;
  return true;
}

namespace {

// Fiedler vector of the normalized Laplacian, returned as D^{-1/2} u.
std::vector<double> fiedler_vector(const WorkGraph& g, FiedlerInfo& info) {
  const auto& vs = g.vertices();
  const std::size_t n = vs.size();
  std::vector<std::int64_t> local(g.base().size(), -1);
  for (std::size_t k = 0; k < n; ++k) local[vs[k]] = static_cast<std::int64_t>(k);
  std::vector<double> isd(n);
  for (std::size_t k = 0; k < n; ++k) isd[k] = 1.0 / std::sqrt(double(g.degree(vs[k])));

  std::vector<double> u(n);
  if (n <= kDenseLimit) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t k = 0; k < n; ++k)
      g.for_each_neighbor(vs[k], [&](VertexId w) {
        const auto j = local[w];
        lap(k, j) -= isd[k] * isd[j];
      });
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw std::runtime_error("fiedler: dense eigensolver failed");
    info.lambda2 = es.eigenvalues()(1);
    for (std::size_t k = 0; k < n; ++k) u[k] = es.eigenvectors()(k, 1);
  } else {
    // Power iteration on I + D^{-1/2} A D^{-1/2} = 2I - L with the top
    // eigenvector (sqrt degrees) projected out.
    info.used_power_iteration = true;
    std::vector<double> top(n), x(n), y(n);
    double tn = 0;
    for (std::size_t k = 0; k < n; ++k) {
      top[k] = std::sqrt(double(g.degree(vs[k])));
      tn += top[k] * top[k];
    }
    tn = std::sqrt(tn);
    for (auto& t : top) t /= tn;
    Rng rng(0x5eed0000ULL + n);
    for (auto& v : x) v = rng.uniform() - 0.5;
    auto project_normalize = [&](std::vector<double>& z) {
      double dot = 0;
      for (std::size_t k = 0; k < n; ++k) dot += z[k] * top[k];
      double nn = 0;
      for (std::size_t k = 0; k < n; ++k) {
        z[k] -= dot * top[k];
        nn += z[k] * z[k];
      }
      nn = std::sqrt(nn);
      if (nn == 0) throw std::runtime_error("fiedler: power iteration collapsed");
      for (auto& v : z) v /= nn;
    };
    project_normalize(x);
    double rho_prev = kInf;
    std::uint64_t it = 0;
    for (; it < kPowerMaxIter; ++it) {
      for (std::size_t k = 0; k < n; ++k) {
        double acc = x[k];
        g.for_each_neighbor(vs[k], [&](VertexId w) {
          const auto j = local[w];
          acc += isd[k] * isd[j] * x[j];
        });
        y[k] = acc;
      }
      double rho = 0;
      for (std::size_t k = 0; k < n; ++k) rho += x[k] * y[k];
      project_normalize(y);
      x.swap(y);
      if (std::fabs(rho - rho_prev) < kPowerTol && it >= 16) {
        info.lambda2 = 2 - rho;
        break;
      }
      rho_prev = rho;
    }
    info.iterations = it;
    if (it == kPowerMaxIter) {
      std::ostringstream msg;
      msg << "fiedler: power iteration did not converge (n=" << n
          << ", last rayleigh=" << rho_prev << ")";
      throw std::runtime_error(msg.str());
    }
    u = x;
  }
  for (std::size_t k = 0; k < n; ++k) u[k] *= isd[k];
  return u;
}

}  // namespace

CutState fiedler_cut(const WorkGraph& g, FiedlerInfo* info, ClusterTrace* trace) {
  if (g.size() < 2) throw std::invalid_argument("fiedler_cut: need at least 2 vertices");
  if (trace) ++trace->fiedler_calls;
  FiedlerInfo local_info;
  FiedlerInfo& fi = info ? *info : local_info;
  auto comps = g.components();
  if (comps.size() > 1) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < comps.size(); ++c)
      if (comps[c].size() < comps[best].size()) best = c;
    fi.lambda2 = 0;
    return CutState(g, comps[best]);
  }

  const auto& vs = g.vertices();
  const std::size_t n = vs.size();
  const auto f = fiedler_vector(g, fi);
  if (trace && fi.used_power_iteration) trace->power_iterations += fi.iterations;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (f[a] != f[b]) return f[a] < f[b];
    return vs[a] < vs[b];
  });

  std::vector<char> in(g.base().size(), 0);
  std::uint64_t cut = 0, vol_s = 0;
  const std::uint64_t vol = g.volume();
  double best_phi = kInf;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const VertexId v = vs[order[k]];
    std::uint64_t inside = 0;
    g.for_each_neighbor(v, [&](VertexId u) { inside += in[u]; });
    in[v] = 1;
    cut = cut + g.degree(v) - 2 * inside;
    vol_s += g.degree(v);
    const double phi = ratio(cut, vol_s, vol - vol_s);
    if (phi < best_phi) {
      best_phi = phi;
      best_k = k + 1;
    }
  }

  VertexSet s;
  if (best_k == 0) {
    // no prefix had finite conductance: best single vertex instead
    double bv = kInf;
    VertexId pick = vs[0];
    for (VertexId v : vs) {
      const double phi = ratio(g.degree(v), g.degree(v), vol - g.degree(v));
      if (phi < bv) {
        bv = phi;
        pick = v;
      }
    }
    s = {pick};
  } else if (best_k <= n - best_k) {
    for (std::size_t k = 0; k < best_k; ++k) s.push_back(vs[order[k]]);
  } else {
    for (std::size_t k = best_k; k < n; ++k) s.push_back(vs[order[k]]);
  }
  std::sort(s.begin(), s.end());
  return CutState(g, s);
}

void local_improvements(CutState& cut, const VertexSet& movable, ClusterTrace* trace) {
  const WorkGraph& g = cut.graph();
  std::vector<char> can(g.base().size(), 0), queued(g.base().size(), 0);
  std::deque<VertexId> queue;
  for (VertexId v : movable) {
    if (!g.alive(v)) throw std::invalid_argument("local_improvements: vertex not in graph");
    can[v] = 1;
    if (!queued[v]) {
      queued[v] = 1;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    const std::uint32_t deg = g.degree(v);
    const std::uint32_t c = cut.crossing(v);
    if (deg == 0 || 9ull * c < 5ull * deg) continue;
    const std::int64_t before = static_cast<std::int64_t>(cut.cut_size());
    cut.move(v);
    const std::int64_t reduction = before - static_cast<std::int64_t>(cut.cut_size());
    if (trace) {
      ++trace->moves;
      if (9 * reduction < static_cast<std::int64_t>(deg)) ++trace->improve_violations;
      if (trace->record_moves) trace->move_log.push_back({deg, reduction});
    }
    if (9 * reduction < static_cast<std::int64_t>(deg))
      throw std::logic_error("local_improvements: move reduced cut by less than deg/9");
    g.for_each_neighbor(v, [&](VertexId u) {
      if (can[u] && !queued[u]) {
        queued[u] = 1;
        queue.push_back(u);
      }
    });
    if (can[v] && !queued[v]) {
      queued[v] = 1;
      queue.push_back(v);
    }
  }
}

void grab(CutState& cut, ClusterTrace* trace) {
  const WorkGraph& g = cut.graph();
  VertexSet take;
  for (VertexId v : g.vertices()) {
    if (cut.in_s(v)) continue;
    const std::uint32_t deg = g.degree(v);
    if (deg > 0 && 6ull * cut.crossing(v) >= deg) take.push_back(v);
  }
  const std::uint64_t cut0 = cut.cut_size(), vol0 = cut.vol_s();
  for (VertexId v : take) cut.move(v);
  const bool ok = cut.cut_size() <= 5 * cut0 && cut.vol_s() <= vol0 + 6 * cut0;
  if (trace) {
    ++trace->grabs;
    if (!ok) ++trace->grab_violations;
  }
}

bool is_closed(const WorkGraph& g, const VertexSet& a) {
  std::vector<char> in(g.base().size(), 0);
  for (VertexId v : a) in[v] = 1;
  for (VertexId v : g.vertices()) {
    if (in[v]) continue;
    const std::uint32_t deg = g.degree(v);
    if (deg == 0) continue;
    std::uint64_t inside = 0;
    g.for_each_neighbor(v, [&](VertexId u) { inside += in[u]; });
    if (9 * inside >= 5ull * deg) return false;
  }
  return true;
}

ClusterPartition cut_grab_close(const WorkGraph& g, ClusterTrace* trace) {
  ClusterPartition out;
  std::vector<VertexSet> stack;
  if (g.size() > 0) stack.push_back(g.vertices());
  while (!stack.empty()) {
    VertexSet vset = std::move(stack.back());
    stack.pop_back();
    if (trace) ++trace->recursion_nodes;
    if (vset.size() <= 1) {
      out.sets.push_back(std::move(vset));
      continue;
    }
    WorkGraph view(g.base_ptr(), vset);
    auto comps = view.components();
    if (comps.size() > 1) {
      if (trace) ++trace->component_splits;
      for (auto& c : comps) stack.push_back(std::move(c));
      continue;
    }
    CutState cut = fiedler_cut(view, nullptr, trace);
    if (cut.conductance() >= kStopConductance) {
      out.sets.push_back(std::move(vset));
      continue;
    }
    local_improvements(cut, view.vertices(), trace);
    check_trajectory(cut, trace);
    grab(cut, trace);
    check_trajectory(cut, trace);
    local_improvements(cut, cut.sbar_set(), trace);
    check_trajectory(cut, trace);
    grab(cut, trace);
    check_trajectory(cut, trace);
    local_improvements(cut, cut.sbar_set(), trace);
    check_trajectory(cut, trace);
    local_improvements(cut, cut.s_set(), trace);
    check_trajectory(cut, trace);

    VertexSet a = cut.s_set(), b = cut.sbar_set();
    if (a.empty() || b.empty()) {
      // cannot happen while conductance stays below 1/9; stop here if it does
      out.sets.push_back(std::move(vset));
      continue;
    }
    if (trace && trace->record_nodes) trace->nodes.push_back({vset, a, b});
    stack.push_back(std::move(b));
    stack.push_back(std::move(a));
  }
  std::sort(out.sets.begin(), out.sets.end(),
            [](const VertexSet& x, const VertexSet& y) { return x.front() < y.front(); });
  fill_diagnostics(g, out);
  return out;
}

VertexSet clean_set(const WorkGraph& g, const VertexSet& u,
                    const std::vector<VertexId>& order) {
  std::vector<char> in(g.base().size(), 0), queued(g.base().size(), 0);
  std::vector<std::uint32_t> outside(g.base().size(), 0);
  for (VertexId v : u) in[v] = 1;
  for (VertexId v : u) {
    std::uint32_t inside = 0;
    g.for_each_neighbor(v, [&](VertexId w) { inside += in[w]; });
    outside[v] = g.degree(v) - inside;
  }
  std::deque<VertexId> queue;
  for (VertexId v : order)
    if (in[v] && !queued[v]) {
      queued[v] = 1;
      queue.push_back(v);
    }
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    if (!in[v]) continue;
    if (9ull * outside[v] < 5ull * g.degree(v)) continue;
    in[v] = 0;
    g.for_each_neighbor(v, [&](VertexId w) {
      if (!in[w]) return;
      ++outside[w];
      if (!queued[w]) {
        queued[w] = 1;
        queue.push_back(w);
      }
    });
  }
  VertexSet kept;
  for (VertexId v : u)
    if (in[v]) kept.push_back(v);
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  for (VertexId v : kept)
    if (!(9ull * outside[v] < 5ull * g.degree(v)))
      throw std::logic_error("clean: fixed point violated");
  return kept;
}

ClusterPartition clean(const WorkGraph& g, const ClusterPartition& parts) {
  ClusterPartition out;
  for (const auto& u : parts.sets) {
    VertexSet kept = clean_set(g, u, u);
    if (!kept.empty()) out.sets.push_back(std::move(kept));
  }
  fill_diagnostics(g, out);
  return out;
}

ClusterPartition find_clusters(const WorkGraph& g, ClusterTrace* trace) {
  return clean(g, cut_grab_close(g, trace));
}

void fill_diagnostics(const WorkGraph& g, ClusterPartition& parts) {
  parts.diagnostics.clear();
  std::vector<char> in(g.base().size(), 0);
  for (const auto& s : parts.sets) {
    SetDiagnostics d;
    for (VertexId v : s) in[v] = 1;
    for (VertexId v : s) {
      d.internal_volume += g.degree(v);
      g.for_each_neighbor(v, [&](VertexId u) { d.boundary += !in[u]; });
    }
    d.conductance = ratio(d.boundary, d.internal_volume, g.volume() - d.internal_volume);
    for (VertexId v : s) in[v] = 0;
    parts.diagnostics.push_back(d);
  }
}

}  // namespace hh::cluster
