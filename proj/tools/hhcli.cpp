// hhcli: stream generation, experiment runs, replays and the acceptance self-test.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "hh/acceptance.hpp"
#include "hh/experiment.hpp"
#include "hh/hashing.hpp"
#include "hh/streams.hpp"

namespace {

hh::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  hh::ExperimentConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    c = hh::parse_config(in);
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    hh::apply_setting(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  c.validate();
  return c;
}

// Writes to the named file, or stdout for "" and "-".
template <class F>
void with_output(const std::string& path, bool binary, F&& f) {
  if (path.empty() || path == "-") {
    f(std::cout);
    return;
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  f(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-hitter sketches: experiments and self-test"};
  app.require_subcommand(1);

  std::string config, out, stream_path, algo;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  unsigned trial = 0;
  bool quick = false;
  std::vector<int> criteria;

  auto* run = app.add_subcommand("run", "Run trials from a config and write CSV");
  run->add_option("-c,--config", config, "Config file (key = value lines)");
  run->add_option("-s,--set", sets, "Override one setting, key=value");
  run->add_option("-o,--out", out, "CSV output (default stdout)");

  auto* gen = app.add_subcommand("gen", "Generate one stream and write it in binary form");
  gen->add_option("-c,--config", config, "Config file");
  gen->add_option("-s,--set", sets, "Override one setting, key=value");
  gen->add_option("-t,--trial", trial, "Trial number whose stream to emit");
  gen->add_option("-o,--out", out, "Stream file")->required();

  auto* replay = app.add_subcommand("replay", "Feed a stored stream to one algorithm");
  replay->add_option("--stream", stream_path, "Stream file")->required()->check(CLI::ExistingFile);
  replay->add_option("-c,--config", config, "Config file");
  replay->add_option("-s,--set", sets, "Override one setting, key=value");
  replay->add_option("-a,--algo", algo, "Algorithm name (overrides the config)");
  replay->add_option("--seed", seed, "Algorithm seed (default: derived from config seed)");
  replay->add_option("-o,--out", out, "CSV output (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "Exact heavy hitters of a stored stream");
  oracle->add_option("--stream", stream_path, "Stream file")->required()->check(CLI::ExistingFile);
  oracle->add_option("-c,--config", config, "Config file (n, p, eps, algorithm)");
  oracle->add_option("-s,--set", sets, "Override one setting, key=value");

  auto* self = app.add_subcommand("selftest", "Run the acceptance criteria");
  self->add_flag("-q,--quick", quick, "Fewer trials per criterion");
  self->add_option("-k,--criterion", criteria, "Only these criteria (1-10)")
      ->check(CLI::Range(1, hh::acceptance::kCriteria));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto c = load_config(config, sets);
      const auto rows = hh::run_experiment(c);
      with_output(out, false, [&](std::ostream& os) { hh::write_csv(os, c, rows); });
      for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "trial " << r.trial << ": " << r.error << "\n";
    } else if (*gen) {
      const auto c = load_config(config, sets);
      const auto g = hh::generate_stream(hh::generator_for(c), hh::splitmix_at(c.seed, 2 * trial));
      with_output(out, true, [&](std::ostream& os) { hh::write_stream(os, g.updates); });
      std::cerr << g.updates.size() << " updates, threshold " << g.threshold << ", "
                << g.planted.size() << " planted\n";
    } else if (*replay) {
      if (!algo.empty()) sets.push_back("algorithm=" + algo);
      const auto c = load_config(config, sets);
      std::ifstream in(stream_path, std::ios::binary);
      const auto s = hh::read_stream(in);
      const std::uint64_t algo_seed = replay->count("--seed") ? seed : hh::splitmix_at(c.seed, 1);
      const auto r = hh::run_on_stream(c, s, algo_seed);
      with_output(out, false, [&](std::ostream& os) { hh::write_csv(os, c, {r}); });
      if (!r.error.empty()) {
        std::cerr << r.error << "\n";
        return 1;
      }
    } else if (*oracle) {
      const auto c = load_config(config, sets);
      std::ifstream in(stream_path, std::ios::binary);
      hh::ExactOracle o(c.n);
      o.apply(hh::read_stream(in));
      const double thr = hh::truth_threshold(c, o);
      std::cout << "threshold " << thr << "\n";
      for (auto i : o.at_least(thr)) std::cout << i << " " << o.value(i) << "\n";
    } else if (*self) {
      hh::acceptance::Options opt;
      opt.quick = quick;
      opt.only = criteria;
      opt.log = &std::cout;
      const auto res = hh::acceptance::run_all(opt);
      for (const auto& r : res)
        if (!r.pass) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
