#include "hh/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hh::cluster {

Graph::Graph(std::size_t n,
             const std::vector<std::pair<VertexId, VertexId>>& edges) {
  std::vector<std::size_t> deg(n, 0);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw std::invalid_argument("graph: vertex out of range");
    if (u == v) throw std::invalid_argument("graph: self-loop");
    ++deg[u];
    ++deg[v];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  targets_.assign(offsets_[n], 0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [u, v] : edges) {
    targets_[fill[u]++] = v;
    targets_[fill[v]++] = u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto b = targets_.begin() + offsets_[v], e = targets_.begin() + offsets_[v + 1];
    std::sort(b, e);
    if (std::adjacent_find(b, e) != e)
      throw std::invalid_argument("graph: parallel edge");
  }
}

bool Graph::has_edge(VertexId u, VertexId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<VertexId, VertexId>> Graph::edges() const {
  std::vector<std::pair<VertexId, VertexId>> out;
  for (VertexId u = 0; u < size(); ++u)
    for (VertexId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

WorkGraph::WorkGraph(std::shared_ptr<const Graph> g0)
    : WorkGraph(g0, [&] {
        VertexSet all(g0->size());
        for (VertexId v = 0; v < all.size(); ++v) all[v] = v;
        return all;
      }()) {}

WorkGraph::WorkGraph(std::shared_ptr<const Graph> g0, VertexSet vertices)
    : g0_(std::move(g0)), vertices_(std::move(vertices)) {
  std::sort(vertices_.begin(), vertices_.end());
  vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
  alive_.assign(g0_->size(), 0);
  deg_.assign(g0_->size(), 0);
  for (VertexId v : vertices_) {
    if (v >= g0_->size()) throw std::invalid_argument("view: vertex out of range");
    alive_[v] = 1;
  }
  for (VertexId v : vertices_) {
    std::uint32_t d = 0;
    for (VertexId u : g0_->neighbors(v)) d += alive_[u];
    deg_[v] = d;
    volume_ += d;
  }
}

std::vector<VertexSet> WorkGraph::components() const {
  std::vector<VertexSet> out;
  std::vector<char> seen(g0_->size(), 0);
  std::vector<VertexId> stack;
  for (VertexId s : vertices_) {
    if (seen[s]) continue;
    VertexSet comp;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for_each_neighbor(v, [&](VertexId u) {
        if (!seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
      });
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::shared_ptr<const Graph> read_edge_list(std::istream& is, std::size_t n) {
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::string line;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;
    if (!(ls >> v) || u < 0 || v < 0) throw std::runtime_error("edge list: bad line: " + line);
    edges.emplace_back(static_cast<VertexId>(u), static_cast<VertexId>(v));
    max_id = std::max<std::size_t>(max_id, std::max(u, v));
    any = true;
  }
  if (n == 0) n = any ? max_id + 1 : 0;
  return std::make_shared<const Graph>(n, edges);
}

void write_edge_list(std::ostream& os, const Graph& g) {
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

void write_partition(std::ostream& os, const std::vector<VertexSet>& sets) {
  for (const auto& s : sets) {
    for (std::size_t k = 0; k < s.size(); ++k) os << (k ? " " : "") << s[k];
    os << '\n';
  }
}

std::vector<VertexSet> read_partition(std::istream& is) {
  std::vector<VertexSet> sets;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    VertexSet s;
    long long v;
    while (ls >> v) {
      if (v < 0) throw std::runtime_error("partition: negative vertex id");
      s.push_back(static_cast<VertexId>(v));
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

}  // namespace hh::cluster
