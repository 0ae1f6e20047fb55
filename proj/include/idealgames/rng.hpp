#pragma once

// Seed splitting and the memory guard shared by samplers and builders.

#include <cstdint>
#include <cstdlib>
#include <string>

#include "idealgames/error.hpp"
#include "idealgames/nat.hpp"

namespace idealgames {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of task i under a master seed. Depends only on (master, i), so
// batches can be scheduled in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i) { return splitmix64(master ^ splitmix64(i)); }

inline constexpr Index kDefaultHorizonCap = 10'000'000;

// Largest index any scan may materialize; IDEALGAMES_HORIZON_CAP overrides.
inline Index horizon_cap() {
  if (const char* env = std::getenv("IDEALGAMES_HORIZON_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v < 100)
      throw Error(Errc::Range, std::string("IDEALGAMES_HORIZON_CAP must be an integer >= 100, got '") + env + "'");
    return static_cast<Index>(v);
  }
  return kDefaultHorizonCap;
}

}  // namespace idealgames
