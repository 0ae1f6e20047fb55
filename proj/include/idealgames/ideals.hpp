#pragma once

// Built-in ideals on N with symbolic and finite-horizon membership
// classifiers, plus Talagrand interval witnesses of meagerness.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/error.hpp"
#include "idealgames/generators.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

enum class IdealKind { Fin, Density0, Summable, FubiniOddFin };

struct IdealParams {
  double theta_low = 0.02;
  double theta_high = 0.10;
  double b_sum = 4.0;
  Index c_fin = 50;
  Index c_odd = 50;
  Index evidence_intervals = 10;

  void validate() const {
    if (!(0 < theta_low && theta_low < theta_high && theta_high < 1))
      throw Error(Errc::Range, "density thresholds need 0 < theta_low < theta_high < 1");
    if (!(b_sum > 0)) throw Error(Errc::Range, "summable bound must be positive");
    if (c_fin < 1 || c_odd < 1) throw Error(Errc::Range, "count cutoffs must be >= 1");
  }
};

struct IdealDescriptor {
  IdealKind kind = IdealKind::Fin;
  IdealParams params;

  static IdealDescriptor fin() { return {IdealKind::Fin, {}}; }
  static IdealDescriptor density0() { return {IdealKind::Density0, {}}; }
  static IdealDescriptor summable() { return {IdealKind::Summable, {}}; }
  static IdealDescriptor fubini_odd() { return {IdealKind::FubiniOddFin, {}}; }

  std::string name() const {
    switch (kind) {
      case IdealKind::Fin: return "fin";
      case IdealKind::Density0: return "density0";
      case IdealKind::Summable: return "summable";
      case IdealKind::FubiniOddFin: return "fubini-odd";
    }
    return "?";
  }
};

inline IdealDescriptor parse_ideal(std::string_view name) {
  if (name == "fin") return IdealDescriptor::fin();
  if (name == "density0") return IdealDescriptor::density0();
  if (name == "summable") return IdealDescriptor::summable();
  if (name == "fubini-odd") return IdealDescriptor::fubini_odd();
  throw Error(Errc::Parse, "unknown ideal '" + std::string(name) + "' (fin, density0, summable, fubini-odd)");
}

inline std::vector<IdealDescriptor> builtin_ideals() {
  return {IdealDescriptor::fin(), IdealDescriptor::density0(), IdealDescriptor::summable(),
          IdealDescriptor::fubini_odd()};
}

// Maximal ideals (complements of free ultrafilters) exist only by choice and
// have no finite description; this type documents that and cannot be built.
struct MaximalIdeal {
  MaximalIdeal() = delete;
};

enum class VerdictValue { InIdeal, NotInIdeal, Undecided };

inline const char* verdict_name(VerdictValue v) {
  switch (v) {
    case VerdictValue::InIdeal: return "InIdeal";
    case VerdictValue::NotInIdeal: return "NotInIdeal";
    case VerdictValue::Undecided: return "Undecided";
  }
  return "?";
}

inline VerdictValue parse_verdict_value(std::string_view s) {
  if (s == "InIdeal") return VerdictValue::InIdeal;
  if (s == "NotInIdeal") return VerdictValue::NotInIdeal;
  if (s == "Undecided") return VerdictValue::Undecided;
  throw Error(Errc::Parse, "unknown verdict '" + std::string(s) + "'");
}

struct Verdict {
  VerdictValue value = VerdictValue::Undecided;
  bool symbolic = false;
  Index horizon = 0;  // meaningful when !symbolic
  std::string evidence;

  bool in() const { return value == VerdictValue::InIdeal; }
  bool not_in() const { return value == VerdictValue::NotInIdeal; }
  bool undecided() const { return value == VerdictValue::Undecided; }

  std::string mode() const { return symbolic ? "Symbolic" : "Horizon(" + std::to_string(horizon) + ")"; }

  nlohmann::json to_json() const {
    return {{"value", verdict_name(value)}, {"mode", mode()}, {"evidence", evidence}};
  }

  static Verdict from_json(const nlohmann::json& j) {
    Verdict v;
    v.value = parse_verdict_value(j.at("value").get<std::string>());
    const auto mode = j.at("mode").get<std::string>();
    v.symbolic = mode == "Symbolic";
    if (!v.symbolic) {
      if (mode.rfind("Horizon(", 0) != 0 || mode.back() != ')') throw Error(Errc::Parse, "bad verdict mode " + mode);
      v.horizon = std::stoull(mode.substr(8, mode.size() - 9));
    }
    v.evidence = j.at("evidence").get<std::string>();
    return v;
  }

  bool operator==(const Verdict&) const = default;
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline Verdict symbolic_verdict(VerdictValue v, std::string evidence) { return {v, true, 0, std::move(evidence)}; }

inline std::string share_evidence(const EventualPattern& pat) {
  if (!pat.expanding) return "eventually periodic mod " + std::to_string(pat.period) + ", residue share " + fmt_num(pat.share(0));
  return "eventually periodic mod " + std::to_string(pat.period) + " on " + pat.expanding->name() +
         " blocks, share even=" + fmt_num(pat.share(0)) + " odd=" + fmt_num(pat.share(1));
}

}  // namespace detail

// Exact verdict over the decidable fragment (Boolean combinations of
// finite sets, progressions, tails and interval schedules with at most one
// expanding generator). In this fragment an infinite set always has
// positive upper density, so for all four built-ins membership reduces to a
// finiteness test, of S itself or of S ∩ odds.
inline Verdict classify_symbolic(const IdealDescriptor& ideal, const SetExpr& s) {
  ideal.params.validate();
  using detail::symbolic_verdict;
  if (ideal.kind == IdealKind::FubiniOddFin) {
    const auto pat = analyze(SetExpr::intersect(s, SetExpr::odds()));
    if (pat.finite()) return symbolic_verdict(VerdictValue::InIdeal, "finitely many odd elements");
    return symbolic_verdict(VerdictValue::NotInIdeal, "infinitely many odd elements: " + detail::share_evidence(pat));
  }
  const auto pat = analyze(s);
  if (pat.finite()) return symbolic_verdict(VerdictValue::InIdeal, "finite: empty beyond " + to_string(pat.threshold));
  switch (ideal.kind) {
    case IdealKind::Fin:
      return symbolic_verdict(VerdictValue::NotInIdeal, "infinite: " + detail::share_evidence(pat));
    case IdealKind::Density0:
      return symbolic_verdict(VerdictValue::NotInIdeal, "positive upper density: " + detail::share_evidence(pat));
    case IdealKind::Summable:
      return symbolic_verdict(VerdictValue::NotInIdeal,
                              "reciprocal sum diverges (positive upper density): " + detail::share_evidence(pat));
    case IdealKind::FubiniOddFin: break;
  }
  throw Error(Errc::InvalidArgument, "unreachable ideal kind");
}

inline bool in_fragment(const SetExpr& s) {
  try {
    analyze(s);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::OutsideFragment) return false;
    throw;
  }
}

inline constexpr Index kMinHorizon = 100;

// Finite-horizon verdict from the sorted elements <= N of an index set.
// `tail_density` is a certified upper bound on the density of the set
// beyond N; only the summable classifier uses it, and without one it never
// answers InIdeal.
inline Verdict classify_indices(const IdealDescriptor& ideal, std::span<const Index> hits, Index N,
                                std::optional<double> tail_density = std::nullopt) {
  const IdealParams& p = ideal.params;
  p.validate();
  if (N < kMinHorizon) throw Error(Errc::HorizonTooSmall, "horizon " + std::to_string(N) + " < 100");
  Verdict v;
  v.horizon = N;
  switch (ideal.kind) {
    case IdealKind::Density0: {
      // max over n in [ceil(N/2), N] of count(n)/n; the maximum sits at the
      // window start or at an element.
      const Index start = (N + 1) / 2;
      std::size_t rank = static_cast<std::size_t>(std::upper_bound(hits.begin(), hits.end(), start) - hits.begin());
      double best = static_cast<double>(rank) / static_cast<double>(start);
      for (std::size_t i = rank; i < hits.size() && hits[i] <= N; ++i)
        best = std::max(best, static_cast<double>(i + 1) / static_cast<double>(hits[i]));
      v.evidence = "d_hat=" + detail::fmt_num(best);
      v.value = best < p.theta_low ? VerdictValue::InIdeal
                : best > p.theta_high ? VerdictValue::NotInIdeal
                                      : VerdictValue::Undecided;
      return v;
    }
    case IdealKind::Summable: {
      double s = 0;
      for (auto it = hits.rbegin(); it != hits.rend(); ++it)
        if (*it <= N) s += 1.0 / static_cast<double>(*it);
      v.evidence = "partial_sum=" + detail::fmt_num(s);
      if (s > p.b_sum) {
        v.value = VerdictValue::NotInIdeal;
      } else if (tail_density && s + std::log(2.0) * *tail_density < p.b_sum) {
        v.value = VerdictValue::InIdeal;
        v.evidence += " tail_density<=" + detail::fmt_num(*tail_density);
      } else {
        v.value = VerdictValue::Undecided;
      }
      return v;
    }
    case IdealKind::Fin: {
      Index c = 0;
      for (Index h : hits) c += h <= N;
      v.evidence = "count=" + std::to_string(c);
      v.value = c >= p.c_fin ? VerdictValue::NotInIdeal : VerdictValue::Undecided;
      return v;
    }
    case IdealKind::FubiniOddFin: {
      Index c = 0;
      for (Index h : hits) c += (h <= N && h % 2 == 1);
      v.evidence = "odd_count=" + std::to_string(c);
      v.value = c >= p.c_odd ? VerdictValue::NotInIdeal : VerdictValue::Undecided;
      return v;
    }
  }
  return v;
}

namespace detail {

// Density bound beyond N certified from the symbolic structure: 0 when the
// set provably has no element past N, none otherwise.
inline std::optional<double> symbolic_tail_density(const SetExpr& s, Index N) {
  try {
    const auto pat = analyze(s);
    if (!pat.finite()) return std::nullopt;  // infinite here means positive density
    if (pat.threshold <= static_cast<Nat>(N) + 1) return 0.0;
    constexpr Index kScanCap = 10'000'000;
    if (pat.threshold > static_cast<Nat>(N) + kScanCap) return std::nullopt;
    const Index last = static_cast<Index>(pat.threshold);
    const auto m = s.mask(last);
    for (Index n = N + 1; n < last; ++n)
      if (m[n]) return std::nullopt;
    return 0.0;
  } catch (const Error& e) {
    if (e.code() == Errc::OutsideFragment) return std::nullopt;
    throw;
  }
}

}  // namespace detail

inline Verdict classify_horizon(const IdealDescriptor& ideal, const SetExpr& s, Index N,
                                std::optional<IdealParams> override_params = std::nullopt) {
  IdealDescriptor eff = ideal;
  if (override_params) eff.params = *override_params;
  if (N < kMinHorizon) throw Error(Errc::HorizonTooSmall, "horizon " + std::to_string(N) + " < 100");
  const auto hits = prefix(s, N);
  std::optional<double> tail;
  if (eff.kind == IdealKind::Summable) tail = detail::symbolic_tail_density(s, N);
  return classify_indices(eff, hits, N, tail);
}

// Symbolic when the expression is in the fragment, horizon otherwise.
inline Verdict classify_auto(const IdealDescriptor& ideal, const SetExpr& s, Index N) {
  try {
    return classify_symbolic(ideal, s);
  } catch (const Error& e) {
    if (e.code() != Errc::OutsideFragment) throw;
  }
  return classify_horizon(ideal, s, N);
}

// ---------------------------------------------------------------------------
// Talagrand witnesses: any set containing infinitely many full blocks
// [iota_n, iota_{n+1}) lies outside the ideal.

struct TalagrandWitness {
  IdealDescriptor ideal;
  GeneratorPtr iota;

  Nat at(Index n) const { return iota->at(n); }
  // Block I_n = [iota_n, iota_{n+1}).
  SetExpr block(Index n) const { return SetExpr::range(at(n), at(n + 1)); }
};

inline TalagrandWitness talagrand_witness(const IdealDescriptor& ideal) {
  switch (ideal.kind) {
    case IdealKind::Fin: return {ideal, find_generator("linear")};
    case IdealKind::Density0: return {ideal, find_generator("pow2")};
    case IdealKind::Summable: return {ideal, find_generator("harm")};
    case IdealKind::FubiniOddFin: return {ideal, find_generator("odd")};  // [2n-1, 2n+1) holds the odd 2n-1
  }
  throw Error(Errc::InvalidArgument, "no witness for ideal");
}

struct SoundnessFailure {
  Index trial = 0;
  std::string set;
  Verdict verdict;
};

struct SoundnessReport {
  std::string ideal;
  std::string generator;
  Index trials = 0;
  Index horizon = 0;
  std::uint64_t seed = 0;
  Index not_in = 0;
  std::vector<SoundnessFailure> failures;

  double fraction() const { return trials ? static_cast<double>(not_in) / static_cast<double>(trials) : 0.0; }

  nlohmann::json to_json() const {
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : failures)
      fails.push_back({{"trial", f.trial}, {"set", f.set}, {"verdict", f.verdict.to_json()}});
    return {{"ideal", ideal}, {"generator", generator}, {"trials", trials}, {"horizon", horizon},
            {"seed", seed}, {"not_in", not_in}, {"fraction", fraction()}, {"failures", fails}};
  }
};

// Each trial selects full blocks inside the horizon starting at a random
// offset in [1, max(1, J/4)] (J = number of full blocks below N), keeping
// each block with probability 1/2 but never skipping two in a row, and
// takes every block past the horizon. The union is classified at horizon N.
inline SoundnessReport witness_soundness_report(const IdealDescriptor& ideal, const TalagrandWitness& w, Index trials,
                                                std::uint64_t seed, Index N = 100'000) {
  if (trials < 1) throw Error(Errc::Range, "trials must be >= 1");
  SoundnessReport rep;
  rep.ideal = ideal.name();
  rep.generator = w.iota->name();
  rep.trials = trials;
  rep.horizon = N;
  rep.seed = seed;

  Index full = 0;  // blocks I_1..I_full end at or before N
  while (w.at(full + 2) <= static_cast<Nat>(N) + 1) ++full;
  const Index offset_cap = std::max<Index>(1, full / 4);

  std::mt19937_64 rng(seed);
  for (Index t = 0; t < trials; ++t) {
    const Index offset = 1 + rng() % offset_cap;
    std::vector<Index> chosen;
    bool skipped_last = false;
    std::uint64_t bits = 0;
    int left = 0;
    for (Index j = offset; j <= full; ++j) {
      if (left == 0) {
        bits = rng();
        left = 64;
      }
      const bool coin = bits & 1;
      bits >>= 1;
      --left;
      if (coin || skipped_last) {
        chosen.push_back(j);
        skipped_last = false;
      } else {
        skipped_last = true;
      }
    }
    const SetExpr tail_blocks = SetExpr::intersect(SetExpr::schedule(w.iota), SetExpr::tail(w.at(full + 1)));
    const SetExpr s = SetExpr::unite(SetExpr::schedule(w.iota, Selector::explicit_list(chosen)), tail_blocks);
    const Verdict v = classify_horizon(ideal, s, N);
    if (v.not_in()) {
      ++rep.not_in;
    } else {
      rep.failures.push_back({t, "offset=" + std::to_string(offset) + " blocks=" + std::to_string(chosen.size()), v});
    }
  }
  return rep;
}

}  // namespace idealgames
