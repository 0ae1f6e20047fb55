#pragma once

// 128-bit naturals for interval-schedule endpoints and game thresholds.
// Sequence positions stay 64-bit (Index); only quantities that grow with
// the number of played rounds need the extra headroom.

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "idealgames/error.hpp"

namespace idealgames {

__extension__ using Nat = unsigned __int128;
using Index = std::uint64_t;

inline constexpr Nat kNatMax = ~Nat{0};
inline constexpr Index kIndexMax = std::numeric_limits<Index>::max();

inline std::string to_string(Nat v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {out.rbegin(), out.rend()};
}

inline Nat parse_nat(std::string_view s) {
  if (s.empty()) throw Error(Errc::Parse, "empty natural number");
  Nat v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw Error(Errc::Parse, "not a natural number: " + std::string(s));
    const Nat digit = static_cast<Nat>(ch - '0');
    if (v > (kNatMax - digit) / 10) throw Error(Errc::Overflow, "natural number exceeds 128 bits");
    v = v * 10 + digit;
  }
  return v;
}

inline bool fits_index(Nat v) { return v <= static_cast<Nat>(kIndexMax); }

// Saturating arithmetic; schedule values never wrap.
inline Nat sat_add(Nat a, Nat b) { return a > kNatMax - b ? kNatMax : a + b; }
inline Nat sat_mul(Nat a, Nat b) {
  if (a == 0 || b == 0) return 0;
  return a > kNatMax / b ? kNatMax : a * b;
}

// JSON: plain integers while they fit in 64 bits, decimal strings beyond.
inline nlohmann::json nat_to_json(Nat v) {
  if (fits_index(v)) return static_cast<std::uint64_t>(v);
  return to_string(v);
}

inline Nat nat_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw Error(Errc::Parse, "negative value where a natural number was expected");
    return static_cast<Nat>(v);
  }
  if (j.is_string()) return parse_nat(j.get<std::string>());
  throw Error(Errc::Parse, "expected a natural number");
}

}  // namespace idealgames
