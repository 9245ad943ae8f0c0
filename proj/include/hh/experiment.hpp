#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hh/hh.hpp"
#include "hh/streams.hpp"

namespace hh {

enum class Algorithm : std::uint8_t {
  countmin,
  countsketch_pcs,
  btree,
  expander_sketch,
  strict_l1,
  expected_time_l1,
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);
// Whether the algorithm needs x >= 0 throughout.
bool requires_strict(Algorithm a);

struct ExperimentConfig {
  std::uint64_t n = 1024;
  double p = 2;
  double eps = 1.0 / 16;
  double delta = 1.0 / 16;
  StreamModel model = StreamModel::general_turnstile;
  Algorithm algorithm = Algorithm::expander_sketch;
  GeneratorSpec generator;  // n, p, eps and model are copied over from above
  std::uint64_t seed = 1;
  unsigned trials = 1;
  bool timing = false;  // wall-clock columns make output nondeterministic

  ExpanderSketchParams es;
  StrictSketchParams strict;
  double btree_gamma = 0.25;
  unsigned btree_branching = 0;
  double btree_width_c = 0;
  double btree_rows_c = 0;
  double cs_width_c = 16;   // countsketch_pcs: width = ceil(c/eps^2)
  double verify_frac = 0.75;

  void validate() const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_text(const std::string& text);
void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value);

struct TrialResult {
  unsigned trial = 0;
  std::uint64_t seed = 0;
  double recall = 0;
  double precision = 0;  // share of reported i with |x_i| >= threshold/2
  std::uint64_t list_size = 0;
  std::uint64_t truth_size = 0;
  std::uint64_t space_words = 0;
  std::uint64_t updates = 0;
  double update_ns = -1;  // -1: not measured
  double query_ns = -1;
  ReportDiagnostics diag;
  std::string error;
};

// Heavy-hitter set the algorithm is judged against: tail definition for the
// general algorithms, eps*|x|_1 for the strict ones.
double truth_threshold(const ExperimentConfig& c, const ExactOracle& o);

TrialResult run_trial(const ExperimentConfig& c, unsigned trial);
TrialResult run_on_stream(const ExperimentConfig& c, const Stream& s, std::uint64_t algo_seed,
                          unsigned trial = 0);
std::vector<TrialResult> run_experiment(const ExperimentConfig& c);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ExperimentConfig& c, const TrialResult& r);
void write_csv(std::ostream& os, const ExperimentConfig& c, const std::vector<TrialResult>& rows);

GeneratorSpec generator_for(const ExperimentConfig& c);

}  // namespace hh
