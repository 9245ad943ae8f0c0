// Runs all ten acceptance criteria at full size; one line per criterion.
#include <cstring>
#include <iostream>

#include "hh/acceptance.hpp"

int main(int argc, char** argv) {
  hh::acceptance::Options opt;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--quick") == 0) opt.quick = true;
    else opt.only.push_back(std::atoi(argv[a]));
  }
  opt.log = &std::cout;
  int failed = 0;
  for (const auto& r : hh::acceptance::run_all(opt)) failed += !r.pass;
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing criteria\n";
  return failed ? 1 : 0;
}
