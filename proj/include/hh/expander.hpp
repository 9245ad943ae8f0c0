#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace hh::coding {

enum class ExpanderFlavor : std::uint8_t { spectral = 0, edge12 = 1 };

struct ExpanderGraph {
  unsigned m = 0;
  unsigned d = 0;
  std::vector<std::vector<unsigned>> adj;  // each row sorted, size d
  double lambda = 0;                       // max(|l2|, |lm|)
  ExpanderFlavor flavor = ExpanderFlavor::spectral;
  double target = 0;
  bool meets_target = false;
  unsigned attempts = 0;

  bool has_edge(unsigned u, unsigned v) const;
};

inline constexpr unsigned kExpanderRetries = 64;

// Random simple d-regular graph on m vertices, accepted when its second
// eigenvalue in magnitude is at most lambda_target. After the retry budget
// the best graph seen is returned with meets_target = false. d = m-1 yields
// the complete graph directly.
ExpanderGraph build_expander(unsigned m, unsigned d, double lambda_target,
                             std::uint64_t seed);

// 12-regular graph on m >= 13 vertices; the best of the retry budget by
// second eigenvalue.
ExpanderGraph build_edge_expander(unsigned m, std::uint64_t seed);

// Uniform-ish random simple d-regular graph (pairing with restarts).
std::vector<std::vector<unsigned>> random_regular_graph(unsigned m, unsigned d,
                                                        std::uint64_t seed);

// Full adjacency spectrum, ascending.
std::vector<double> adjacency_spectrum(const std::vector<std::vector<unsigned>>& adj);
double second_eigenvalue(const ExpanderGraph& g);

// min over |S| <= m/2 of |dS| / (d |S|). Exact enumeration for m <= 24;
// otherwise the spectral lower bound (d - l2) / (2d).
double edge_expansion(const ExpanderGraph& g);
bool edge_expansion_is_exact(const ExpanderGraph& g);

void write_expander(std::ostream& os, const ExpanderGraph& g);
ExpanderGraph read_expander(std::istream& is);

}  // namespace hh::coding
