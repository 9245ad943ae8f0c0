#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "hh/graph.hpp"

namespace hh::cluster {

// |dS| / min(vol S, vol S-bar); +inf if either side is empty or has no volume.
double conductance(const WorkGraph& g, const VertexSet& s);

class CutState {
 public:
  CutState(const WorkGraph& g, const VertexSet& s);

  bool in_s(VertexId v) const { return side_[v] != 0; }
  // Flips v to the other side, updating cut, volumes and crossing degrees.
  void move(VertexId v);

  std::uint64_t cut_size() const { return cut_; }
  std::uint64_t vol_s() const { return vol_s_; }
  std::uint64_t vol_sbar() const { return vol_sbar_; }
  std::size_t size_s() const { return size_s_; }
  std::size_t size_sbar() const { return g_->size() - size_s_; }
  std::uint32_t crossing(VertexId v) const { return crossing_[v]; }
  double conductance() const;

  VertexSet s_set() const;
  VertexSet sbar_set() const;
  // Recomputes everything from side_ and compares.
  bool consistent() const;

  const WorkGraph& graph() const { return *g_; }

 private:
  const WorkGraph* g_;
  std::vector<char> side_;
  std::vector<std::uint32_t> crossing_;
  std::uint64_t cut_ = 0, vol_s_ = 0, vol_sbar_ = 0;
  std::size_t size_s_ = 0;
};

struct MoveRecord {
  std::uint32_t degree;
  std::int64_t cut_reduction;
};

struct RecursionNode {
  VertexSet v;  // the set being split
  VertexSet a;  // final S
  VertexSet b;  // final S-bar
};

struct ClusterTrace {
  std::uint64_t moves = 0;
  std::uint64_t improve_violations = 0;  // moves with cut reduction < deg/9
  std::uint64_t grabs = 0;
  std::uint64_t grab_violations = 0;
  std::uint64_t conductance_checks = 0;
  std::uint64_t conductance_violations = 0;  // phi >= 1/9 mid-recursion
  std::uint64_t recursion_nodes = 0;
  std::uint64_t component_splits = 0;
  std::uint64_t fiedler_calls = 0;
  std::uint64_t power_iterations = 0;
  double max_trajectory_conductance = 0;
  bool record_moves = false;
  std::vector<MoveRecord> move_log;
  bool record_nodes = false;
  std::vector<RecursionNode> nodes;
};

struct FiedlerInfo {
  double lambda2 = 0;
  bool used_power_iteration = false;
  std::uint64_t iterations = 0;
};

// Sweep cut over the Fiedler vector of the normalized Laplacian. On a
// disconnected graph S is the smallest component (conductance 0).
CutState fiedler_cut(const WorkGraph& g, FiedlerInfo* info = nullptr,
                     ClusterTrace* trace = nullptr);

// Moves movable vertices with >= 5/9 of their edges crossing until none.
void local_improvements(CutState& cut, const VertexSet& movable,
                        ClusterTrace* trace = nullptr);

// Moves every S-bar vertex with >= 1/6 of its neighbors in S into S at once.
void grab(CutState& cut, ClusterTrace* trace = nullptr);

// No outside vertex has >= 5/9 of its neighbors in a.
bool is_closed(const WorkGraph& g, const VertexSet& a);

struct SetDiagnostics {
  std::uint64_t internal_volume = 0;  // sum of degrees inside the set
  std::uint64_t boundary = 0;
  double conductance = 0;
};

struct ClusterPartition {
  std::vector<VertexSet> sets;
  std::vector<SetDiagnostics> diagnostics;
};

inline constexpr double kStopConductance = 1.0 / 500;

ClusterPartition cut_grab_close(const WorkGraph& g, ClusterTrace* trace = nullptr);

// Per set: peel vertices with >= 5/9 of their g-neighbors outside, to a fixed
// point. Empty results are dropped.
ClusterPartition clean(const WorkGraph& g, const ClusterPartition& parts);
// Same for one set with an explicit initial queue order (for order tests).
VertexSet clean_set(const WorkGraph& g, const VertexSet& u,
                    const std::vector<VertexId>& order);

// cut_grab_close followed by clean.
ClusterPartition find_clusters(const WorkGraph& g, ClusterTrace* trace = nullptr);

void fill_diagnostics(const WorkGraph& g, ClusterPartition& parts);

}  // namespace hh::cluster
