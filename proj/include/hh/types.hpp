#pragma once

#include <cstdint>
#include <vector>

namespace hh {

using Index = std::uint64_t;

struct Update {
  Index index = 0;
  std::int64_t delta = 0;

  bool operator==(const Update&) const = default;
};

using Stream = std::vector<Update>;

// ceil(log2(x)) for x >= 1; 0 for x <= 1.
inline unsigned ceil_log2(std::uint64_t x) {
  unsigned r = 0;
  while (r < 64 && (std::uint64_t{1} << r) < x) ++r;
  return r;
}

inline std::uint64_t next_pow2(std::uint64_t x) {
  return x <= 1 ? 1 : std::uint64_t{1} << ceil_log2(x);
}

}  // namespace hh
