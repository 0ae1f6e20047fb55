#pragma once

// Finite-horizon approximations of the accumulation points L_x, the
// I-cluster points Gamma_x(I) and the I-limit points Lambda_x(I) of a real
// sequence, and preservation checks under index maps.
//
// Candidates are sequence values snapped to a grid of pitch eps/2 plus the
// descriptor's special values. A candidate eta is
//   accumulation  if at least c_fin indices n <= N have |x_n - eta| <= eps;
//   cluster       if it is an accumulation candidate and its hit-set is
//                 classified NotInIdeal;
//   limit         if it is a cluster candidate and the ladder set
//                 W(eta) = U_j {n in (N_{j-1}, N_j] : |x_n - eta| <= eps_j}
//                 is classified NotInIdeal.
// Kept candidates are then merged to representatives at resolution eps/2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/error.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/seqspace.hpp"

namespace idealgames {

struct PointSet {
  std::vector<double> points;  // sorted, pairwise distance > eps/2
  double eps = 0;

  bool operator==(const PointSet&) const = default;
};

struct LadderSpec {
  double eps = 0.05;
  std::vector<Index> splits;  // N_0 = 0 < N_1 < ... < N_J = N

  static LadderSpec equal(double eps, Index N, Index depth = 6) {
    if (depth < 1 || depth > N) throw Error(Errc::Range, "ladder depth must be in [1, N]");
    LadderSpec l;
    l.eps = eps;
    for (Index j = 0; j <= depth; ++j) l.splits.push_back(j * N / depth);
    return l;
  }

  Index depth() const { return splits.empty() ? 0 : splits.size() - 1; }
  Index horizon() const { return splits.empty() ? 0 : splits.back(); }
  double eps_at(Index j) const { return std::ldexp(eps, -static_cast<int>(j)); }

  void validate() const {
    if (!(eps > 0)) throw Error(Errc::Range, "ladder eps must be positive");
    if (splits.size() < 2 || splits.front() != 0) throw Error(Errc::Range, "ladder splits must start at 0");
    for (std::size_t i = 1; i < splits.size(); ++i)
      if (splits[i] <= splits[i - 1]) throw Error(Errc::Range, "ladder splits must be strictly increasing");
  }
};

struct ClusterResult {
  PointSet points;
  std::vector<std::string> flags;
  Index evaluated = 0;              // candidates that reached this stage's test
  std::vector<double> undecided;    // candidates left out for lack of a decision

  nlohmann::json to_json() const {
    return {{"points", points.points}, {"eps", points.eps}, {"flags", flags}, {"evaluated", evaluated},
            {"undecided", undecided}};
  }
};

inline constexpr double kUndecidedDominates = 0.25;

namespace detail {

inline double tol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

// Representatives of sorted kept candidates: runs with gaps <= eps/2 of
// span <= eps collapse to the member nearest the median of the late-window
// values near the run; longer runs are thinned greedily.
inline std::vector<double> merge_candidates(const std::vector<double>& kept, const std::vector<double>& late_sorted,
                                            const std::vector<double>& all_sorted, double eps) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < kept.size()) {
    std::size_t j = i + 1;
    while (j < kept.size() && kept[j] - kept[j - 1] <= eps / 2 + tol(kept[j])) ++j;
    const double lo = kept[i], hi = kept[j - 1];
    if (hi - lo <= eps + tol(hi)) {
      auto median_near = [&](const std::vector<double>& v) -> std::optional<double> {
        auto a = std::lower_bound(v.begin(), v.end(), lo - eps);
        auto b = std::upper_bound(v.begin(), v.end(), hi + eps);
        if (a == b) return std::nullopt;
        return *(a + (b - a - 1) / 2);
      };
      auto med = median_near(late_sorted);
      if (!med) med = median_near(all_sorted);
      double best = kept[i + (j - i - 1) / 2];
      if (med) {
        best = kept[i];
        for (std::size_t k = i; k < j; ++k)
          if (std::abs(kept[k] - *med) < std::abs(best - *med)) best = kept[k];
      }
      out.push_back(best);
    } else {
      out.push_back(kept[i]);
      for (std::size_t k = i + 1; k < j; ++k)
        if (kept[k] - out.back() > eps / 2 + tol(kept[k])) out.push_back(kept[k]);
    }
    i = j;
  }
  return out;
}

}  // namespace detail

// Shared state for one sequence at one horizon and resolution.
class ClusterAnalysis {
 public:
  ClusterAnalysis(Sequence x, Index N, double eps, Index c_fin = IdealParams{}.c_fin)
      : x_(std::move(x)), N_(N), eps_(eps), c_fin_(c_fin) {
    if (N < kMinHorizon) throw Error(Errc::HorizonTooSmall, "horizon " + std::to_string(N) + " < 100");
    if (!(eps > 0) || !std::isfinite(eps)) throw Error(Errc::Range, "eps must be a positive finite number");
    if (N > horizon_cap()) throw Error(Errc::Range, "horizon exceeds IDEALGAMES_HORIZON_CAP");
    values_ = x_.values(N);
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
    late_.assign(values_.begin() + static_cast<std::ptrdiff_t>(N / 2), values_.end());
    std::sort(late_.begin(), late_.end());

    const double pitch = eps / 2;
    std::set<long long> grid;
    for (double v : values_) {
      if (!std::isfinite(v)) continue;
      const double k = std::round(v / pitch);
      if (std::abs(k) < 1e15) grid.insert(static_cast<long long>(k));
    }
    for (long long k : grid) candidates_.push_back(static_cast<double>(k) * pitch);
    for (double s : x_.special_values()) candidates_.push_back(s);
    std::sort(candidates_.begin(), candidates_.end());
    candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());

    for (double eta : candidates_)
      if (hit_count(eta, eps_) >= c_fin_) acc_.push_back(eta);
  }

  const Sequence& sequence() const { return x_; }
  Index horizon() const { return N_; }
  double eps() const { return eps_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& candidates() const { return candidates_; }
  const std::vector<double>& acc_candidates() const { return acc_; }

  // |{n <= N : |x_n - eta| <= r}|; the hit predicate is monotone along the
  // sorted values, so the hits form one contiguous run.
  Index hit_count(double eta, double r) const {
    auto a = std::partition_point(sorted_.begin(), sorted_.end(), [&](double v) { return v - eta < -r; });
    auto b = std::partition_point(a, sorted_.end(), [&](double v) { return v - eta <= r; });
    return static_cast<Index>(b - a);
  }

  std::vector<Index> hit_set(double eta, double r) const {
    std::vector<Index> out;
    for (Index n = 1; n <= N_; ++n)
      if (within(values_[n - 1], eta, r)) out.push_back(n);
    return out;
  }

  // Verdict on the eps hit-set: symbolic when the fiber has a description
  // inside the fragment, finite-horizon otherwise.
  Verdict hit_verdict(const IdealDescriptor& I, double eta) const {
    if (auto expr = x_.fiber_expr(eta, eps_)) {
      if (in_fragment(*expr)) return classify_symbolic(I, *expr);
      return classify_horizon(I, *expr, N_);
    }
    return classify_indices(I, hit_set(eta, eps_), N_);
  }

  Verdict ladder_verdict(const IdealDescriptor& I, double eta, const LadderSpec& ladder) const {
    ladder.validate();
    if (ladder.horizon() != N_) throw Error(Errc::Range, "ladder must end at the analysis horizon");
    std::vector<Index> w;
    for (Index j = 1; j <= ladder.depth(); ++j) {
      const double r = ladder.eps_at(j);
      for (Index n = ladder.splits[j - 1] + 1; n <= ladder.splits[j]; ++n)
        if (within(values_[n - 1], eta, r)) w.push_back(n);
    }
    return classify_indices(I, w, N_);
  }

  ClusterResult acc() const { return finish(acc_, acc_.size(), {}); }

  ClusterResult gamma(const IdealDescriptor& I) const {
    std::vector<double> kept, undecided;
    gamma_split(I, kept, undecided);
    return finish(kept, acc_.size(), undecided);
  }

  ClusterResult lambda(const IdealDescriptor& I, const LadderSpec& ladder) const {
    std::vector<double> gkept, gundecided;
    gamma_split(I, gkept, gundecided);
    std::vector<double> kept, undecided = gundecided;
    for (double eta : gkept) {
      const Verdict v = ladder_verdict(I, eta, ladder);
      if (v.not_in()) kept.push_back(eta);
      else if (v.undecided()) undecided.push_back(eta);
    }
    std::sort(undecided.begin(), undecided.end());
    return finish(kept, acc_.size(), undecided);
  }

 private:
  void gamma_split(const IdealDescriptor& I, std::vector<double>& kept, std::vector<double>& undecided) const {
    for (double eta : acc_) {
      const Verdict v = hit_verdict(I, eta);
      if (v.not_in()) kept.push_back(eta);
      else if (v.undecided()) undecided.push_back(eta);
    }
  }

  ClusterResult finish(const std::vector<double>& kept, Index evaluated, std::vector<double> undecided) const {
    ClusterResult r;
    r.points.eps = eps_;
    r.points.points = detail::merge_candidates(kept, late_, sorted_, eps_);
    r.evaluated = evaluated;
    r.undecided = std::move(undecided);
    if (evaluated > 0 && static_cast<double>(r.undecided.size()) > kUndecidedDominates * static_cast<double>(evaluated))
      r.flags.push_back("UndecidedDominates");
    return r;
  }

  Sequence x_;
  Index N_;
  double eps_;
  Index c_fin_;
  std::vector<double> values_, sorted_, late_;
  std::vector<double> candidates_, acc_;
};

inline ClusterResult acc_points(const Sequence& x, Index N, double eps) { return ClusterAnalysis(x, N, eps).acc(); }

inline ClusterResult gamma_hat(const Sequence& x, const IdealDescriptor& I, Index N, double eps) {
  return ClusterAnalysis(x, N, eps).gamma(I);
}

inline ClusterResult lambda_hat(const Sequence& x, const IdealDescriptor& I, Index N, const LadderSpec& ladder) {
  return ClusterAnalysis(x, N, ladder.eps).lambda(I, ladder);
}

inline ClusterResult lambda_hat(const Sequence& x, const IdealDescriptor& I, Index N, double eps) {
  return lambda_hat(x, I, N, LadderSpec::equal(eps, N));
}

// ---------------------------------------------------------------------------
// Set comparisons

inline double hausdorff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() && b.empty()) return 0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
    double worst = 0;
    for (double p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (double q : to) best = std::min(best, std::abs(p - q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

// Every point of `inner` lies within eps of some point of `outer`.
inline bool eps_subset(const PointSet& inner, const PointSet& outer, double eps) {
  for (double p : inner.points) {
    bool ok = false;
    for (double q : outer.points) ok = ok || std::abs(p - q) <= eps + detail::tol(p);
    if (!ok) return false;
  }
  return true;
}

enum class PointKind { Gamma, Lambda };

inline PointKind parse_point_kind(std::string_view s) {
  if (s == "gamma") return PointKind::Gamma;
  if (s == "lambda") return PointKind::Lambda;
  throw Error(Errc::Parse, "unknown kind '" + std::string(s) + "' (gamma, lambda)");
}

inline const char* point_kind_name(PointKind k) { return k == PointKind::Gamma ? "gamma" : "lambda"; }

enum class Preservation { Preserved, NotPreserved, Undecided };

inline const char* preservation_name(Preservation p) {
  switch (p) {
    case Preservation::Preserved: return "Preserved";
    case Preservation::NotPreserved: return "NotPreserved";
    case Preservation::Undecided: return "Undecided";
  }
  return "?";
}

struct PreserveReport {
  Preservation outcome = Preservation::Undecided;
  PointKind kind = PointKind::Gamma;
  ClusterResult original, transformed;
  Index horizon = 0, transformed_horizon = 0;
  double distance = 0;

  bool preserved() const { return outcome == Preservation::Preserved; }

  nlohmann::json to_json() const {
    return {{"outcome", preservation_name(outcome)},
            {"kind", point_kind_name(kind)},
            {"horizon", horizon},
            {"transformed_horizon", transformed_horizon},
            {"hausdorff", std::isfinite(distance) ? nlohmann::json(distance) : nlohmann::json("inf")},
            {"original", original.to_json()},
            {"transformed", transformed.to_json()}};
  }
};

namespace detail {

inline ClusterResult point_set(PointKind kind, const Sequence& s, const IdealDescriptor& I, Index n, double eps) {
  ClusterAnalysis a(s, n, eps, I.params.c_fin);
  return kind == PointKind::Gamma ? a.gamma(I) : a.lambda(I, LadderSpec::equal(eps, n));
}

}  // namespace detail

// As preserves() below, with the point set of x at horizon N precomputed.
inline PreserveReport preserves_against(const ClusterResult& original, PointKind kind, const Sequence& tx,
                                        const IdealDescriptor& I, Index N, double eps) {
  PreserveReport rep;
  rep.kind = kind;
  rep.horizon = N;
  rep.transformed_horizon = N;
  if (auto len = tx.defined_length()) rep.transformed_horizon = std::min(N, *len);
  rep.original = original;
  rep.transformed = detail::point_set(kind, tx, I, rep.transformed_horizon, eps);
  rep.distance = hausdorff(rep.original.points.points, rep.transformed.points.points);
  if (!rep.original.undecided.empty() || !rep.transformed.undecided.empty()) rep.outcome = Preservation::Undecided;
  else if (rep.distance <= eps + detail::tol(eps)) rep.outcome = Preservation::Preserved;
  else rep.outcome = Preservation::NotPreserved;
  return rep;
}

// Compares the point sets of x at horizon N and of tx at min(N, length of tx).
// Any candidate left undecided on either side makes the outcome Undecided.
inline PreserveReport preserves(PointKind kind, const Sequence& x, const Sequence& tx, const IdealDescriptor& I,
                                Index N, double eps) {
  return preserves_against(detail::point_set(kind, x, I, N, eps), kind, tx, I, N, eps);
}

inline PreserveReport preserves(PointKind kind, const Sequence& x, const Subseq& sigma, const IdealDescriptor& I,
                                Index N, double eps) {
  return preserves(kind, x, x.subseq(sigma), I, N, eps);
}

inline PreserveReport preserves(PointKind kind, const Sequence& x, const Perm& pi, const IdealDescriptor& I, Index N,
                                double eps) {
  return preserves(kind, x, x.permute(pi), I, N, eps);
}

}  // namespace idealgames
