#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hh/graph.hpp"

namespace hh::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct Options {
  bool quick = false;        // fewer trials, same pass rules
  std::vector<int> only;     // empty: all ten
  std::ostream* log = nullptr;
};

inline constexpr int kCriteria = 10;

CriterionResult run_criterion(int id, const Options& opt);
std::vector<CriterionResult> run_all(const Options& opt);
// "[PASS] 3 name: detail (1.2 s)"
std::string format(const CriterionResult& r);

// Planted-cluster instance: k disjoint random d-regular expanders inside a
// sparse noise graph, joined by max(min_cross, floor(cross_frac*vol(W)))
// edges per cluster.
struct PlantedInstance {
  std::shared_ptr<const cluster::Graph> graph;
  std::vector<cluster::VertexSet> planted;  // sorted
  std::vector<double> lambda;               // second eigenvalue per cluster
  unsigned degree = 8;
};

PlantedInstance make_planted_clusters(unsigned k, std::uint64_t seed, double noise_ratio,
                                      double cross_frac = 1e-3, unsigned degree = 8,
                                      unsigned min_size = 32, unsigned max_size = 64,
                                      unsigned min_cross = 0);

// max(|l2|, |lm|) of a d-regular graph by power iteration on (A - (d/m)J)^2.
double power_iteration_lambda(const std::vector<std::vector<unsigned>>& adj,
                              double tol = 1e-13, unsigned max_iter = 200000);

}  // namespace hh::acceptance
