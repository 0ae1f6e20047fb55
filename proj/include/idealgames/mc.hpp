#pragma once

// Monte Carlo estimates under the fair-coin measure on subsequences.
//
// Sample i of a run with master seed s uses derive_seed(s, i), so any
// partition of the sample range into batches gives the same outcomes and
// merged totals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/convergence.hpp"
#include "idealgames/error.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/rng.hpp"
#include "idealgames/seqspace.hpp"

namespace idealgames {

struct Interval {
  double lo = 0, hi = 1;
};

inline Interval wilson95(std::uint64_t hits, std::uint64_t n) {
  if (n == 0) return {0, 1};
  constexpr double z = 1.959963984540054;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double denom = 1 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == n ? 1.0 : std::min(1.0, centre + half)};
}

struct McBatch {
  std::uint64_t first = 0;  // index of the first sample
  std::uint64_t samples = 0, hits = 0, undecided = 0;

  bool operator==(const McBatch&) const = default;
};

struct McReport {
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::uint64_t samples = 0, hits = 0, undecided = 0;
  std::optional<double> expected;  // cylinder masses only
  std::vector<McBatch> batches;

  std::uint64_t decided() const { return samples - undecided; }
  // Hits over decided outcomes; undecided ones are reported, not counted.
  double fraction() const { return decided() ? static_cast<double>(hits) / static_cast<double>(decided()) : 0.0; }
  double raw_fraction() const { return samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0; }
  Interval wilson() const { return wilson95(hits, decided()); }
  double std_error() const {
    const double p = fraction();
    return decided() ? std::sqrt(p * (1 - p) / static_cast<double>(decided())) : 0.0;
  }

  nlohmann::json to_json() const {
    const Interval w = wilson();
    nlohmann::json j = {{"config", config},   {"seed", seed},
                        {"samples", samples}, {"hits", hits},
                        {"undecided", undecided}, {"decided", decided()},
                        {"fraction", fraction()}, {"raw_fraction", raw_fraction()},
                        {"wilson95", {w.lo, w.hi}}};
    if (expected) j["expected"] = *expected;
    return j;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "first,samples,hits,undecided\n";
    for (const auto& b : batches) os << b.first << ',' << b.samples << ',' << b.hits << ',' << b.undecided << '\n';
    return os.str();
  }
};

// Combines reports over disjoint sample ranges of one configuration.
inline McReport merge(const McReport& a, const McReport& b) {
  if (a.config != b.config || a.seed != b.seed)
    throw Error(Errc::InvalidArgument, "merging reports of different configurations");
  McReport r = a;
  r.samples += b.samples;
  r.hits += b.hits;
  r.undecided += b.undecided;
  r.batches.insert(r.batches.end(), b.batches.begin(), b.batches.end());
  std::sort(r.batches.begin(), r.batches.end(), [](const McBatch& x, const McBatch& y) { return x.first < y.first; });
  for (std::size_t i = 1; i < r.batches.size(); ++i)
    if (r.batches[i].first < r.batches[i - 1].first + r.batches[i - 1].samples)
      throw Error(Errc::InvalidArgument, "merging overlapping sample ranges");
  return r;
}

class PreservationEstimator {
 public:
  PreservationEstimator(Sequence x, IdealDescriptor I, PointKind kind, Index N, double eps, std::uint64_t seed)
      : x_(std::move(x)), I_(std::move(I)), kind_(kind), N_(N), eps_(eps), seed_(seed) {
    if (N_ < kMinHorizon) throw Error(Errc::HorizonTooSmall, "horizon " + std::to_string(N_) + " < 100");
    if (!(eps_ > 0)) throw Error(Errc::Range, "eps must be positive");
    original_ = detail::point_set(kind_, x_, I_, N_, eps_);
  }

  nlohmann::json config(std::uint64_t samples) const {
    return {{"seq", x_.to_dsl()}, {"ideal", I_.name()},        {"kind", point_kind_name(kind_)},
            {"N", N_},           {"eps", eps_},               {"samples", samples}};
  }

  Preservation sample(std::uint64_t i) const {
    const Subseq sigma = sample_subseq_positions(derive_seed(seed_, i), N_);
    return preserves_against(original_, kind_, x_.subseq(sigma), I_, N_, eps_).outcome;
  }

  // Samples [first, first + count) as one batch; `total` is the configured run size.
  McReport batch(std::uint64_t first, std::uint64_t count, std::uint64_t total) const {
    McReport r;
    r.config = config(total);
    r.seed = seed_;
    McBatch b{first, count, 0, 0};
    for (std::uint64_t i = first; i < first + count; ++i) {
      const Preservation p = sample(i);
      if (p == Preservation::Preserved) ++b.hits;
      else if (p == Preservation::Undecided) ++b.undecided;
    }
    r.samples = b.samples;
    r.hits = b.hits;
    r.undecided = b.undecided;
    r.batches.push_back(b);
    return r;
  }

  const ClusterResult& original() const { return original_; }

 private:
  Sequence x_;
  IdealDescriptor I_;
  PointKind kind_;
  Index N_;
  double eps_;
  std::uint64_t seed_;
  ClusterResult original_;
};

inline constexpr std::uint64_t kDefaultBatch = 100;

// Fraction of sampled subsequences sigma with preserves(kind, x, sigma, I, N, eps).
inline McReport estimate_preservation(const Sequence& x, const IdealDescriptor& I, PointKind kind,
                                      std::uint64_t samples, Index N, double eps, std::uint64_t seed,
                                      std::uint64_t batch_size = kDefaultBatch) {
  if (samples < 100) throw Error(Errc::Range, "need at least 100 samples");
  if (batch_size < 1) throw Error(Errc::Range, "batch size must be >= 1");
  const PreservationEstimator est(x, I, kind, N, eps, seed);
  std::optional<McReport> total;
  for (std::uint64_t first = 0; first < samples; first += batch_size) {
    McReport b = est.batch(first, std::min(batch_size, samples - first), samples);
    total = total ? merge(*total, b) : b;
  }
  return *total;
}

// Empirical probability that a sampled subsequence starts with `stem`.
inline McReport dyadic_cylinder_mass(const std::vector<Index>& stem, std::uint64_t samples, std::uint64_t seed,
                                     std::uint64_t batch_size = 1000) {
  if (stem.empty() || stem.size() > 8) throw Error(Errc::Range, "stem length must be in 1..8");
  Subseq::stem_only(stem);  // validates
  if (stem.back() > 62) throw Error(Errc::Range, "stem values above 62 have no representable mass");
  if (samples < 1 || batch_size < 1) throw Error(Errc::Range, "need samples >= 1 and batch size >= 1");
  McReport r;
  r.config = {{"stem", stem}, {"samples", samples}};
  r.seed = seed;
  r.expected = std::ldexp(1.0, -static_cast<int>(stem.back()));
  for (std::uint64_t first = 0; first < samples; first += batch_size) {
    McBatch b{first, std::min(batch_size, samples - first), 0, 0};
    for (std::uint64_t i = first; i < first + b.samples; ++i) {
      detail::CoinStream coins(derive_seed(seed, i));
      bool match = true;
      std::size_t next = 0;
      for (Index n = 1; n <= stem.back(); ++n) {
        const bool in = coins.flip();
        const bool want = next < stem.size() && stem[next] == n;
        if (want) ++next;
        if (in != want) {
          match = false;
          break;
        }
      }
      if (match) ++b.hits;
    }
    r.samples += b.samples;
    r.hits += b.hits;
    r.batches.push_back(b);
  }
  return r;
}

}  // namespace idealgames
