#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace hh::cluster {

using VertexId = std::uint32_t;
using VertexSet = std::vector<VertexId>;

// Simple undirected graph in CSR form. Immutable once built.
class Graph {
 public:
  Graph() = default;
  // Throws on self-loops, parallel edges and out-of-range endpoints.
  Graph(std::size_t n, const std::vector<std::pair<VertexId, VertexId>>& edges);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const VertexId> neighbors(VertexId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::uint32_t degree(VertexId v) const {
    return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]);
  }
  std::size_t edge_count() const { return targets_.size() / 2; }
  bool has_edge(VertexId u, VertexId v) const;
  std::vector<std::pair<VertexId, VertexId>> edges() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<VertexId> targets_;  // sorted per vertex
};

// Induced subgraph G0|V. Edges of G0 are masked, never copied.
class WorkGraph {
 public:
  explicit WorkGraph(std::shared_ptr<const Graph> g0);
  WorkGraph(std::shared_ptr<const Graph> g0, VertexSet vertices);

  const Graph& base() const { return *g0_; }
  const std::shared_ptr<const Graph>& base_ptr() const { return g0_; }
  const VertexSet& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool alive(VertexId v) const { return alive_[v] != 0; }
  std::uint32_t degree(VertexId v) const { return deg_[v]; }
  std::uint64_t volume() const { return volume_; }

  template <class F>
  void for_each_neighbor(VertexId v, F&& f) const {
    for (VertexId u : g0_->neighbors(v))
      if (alive_[u]) f(u);
  }

  WorkGraph induced(VertexSet subset) const { return WorkGraph(g0_, std::move(subset)); }
  // Connected components, each sorted, ordered by smallest member.
  std::vector<VertexSet> components() const;

 private:
  std::shared_ptr<const Graph> g0_;
  VertexSet vertices_;  // sorted
  std::vector<char> alive_;
  std::vector<std::uint32_t> deg_;
  std::uint64_t volume_ = 0;
};

// "u v" per line, 0-based; n = 1 + largest id unless given.
std::shared_ptr<const Graph> read_edge_list(std::istream& is, std::size_t n = 0);
void write_edge_list(std::ostream& os, const Graph& g);
void write_partition(std::ostream& os, const std::vector<VertexSet>& sets);
std::vector<VertexSet> read_partition(std::istream& is);

}  // namespace hh::cluster
