#pragma once

// Partial sums, boundedness modulo an ideal, and the subsequences along
// which the partial sums stay bounded modulo an ideal.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/error.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/rational.hpp"
#include "idealgames/seqspace.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

inline constexpr Index kDefaultKMax = 8;

namespace detail {

inline Nat floor_nat(const Rational& q) {
  if (q < 0) return 0;
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return parse_nat(f.get_str());
}

// {n : |r(n)| > K} for K >= 0.
inline SetExpr rule_exceedance(const TermRule& r, const Rational& K) {
  switch (r.kind) {
    case TermRule::Kind::Const: return abs(r.c) > K ? SetExpr::all() : SetExpr::empty();
    case TermRule::Kind::Sign: return K < 1 ? SetExpr::all() : SetExpr::empty();
    case TermRule::Kind::Id: return SetExpr::tail(floor_nat(K) + 1);
    case TermRule::Kind::Inv: {
      if (K == 0) return SetExpr::all();
      // 1/n > K  <=>  n < 1/K
      const Rational inv = 1 / K;
      Nat hi = floor_nat(inv);
      if (Rational(mpz_class(to_string(hi))) == inv) --hi;
      return SetExpr::range(1, hi + 1);
    }
  }
  return SetExpr::empty();
}

inline std::optional<Rational> base_constant(const Sequence& x) {
  if (auto c = x.constant_value()) return c;
  if (const auto* s = std::get_if<seqnode::SubseqOf>(&x.node())) return base_constant(s->base);
  if (const auto* p = std::get_if<seqnode::PermOf>(&x.node())) return base_constant(p->base);
  return std::nullopt;
}

}  // namespace detail

// {n : |y_n| > K} as a set expression, when y's structure determines it.
inline std::optional<SetExpr> exceedance_expr(const Sequence& y, const Rational& K) {
  if (K < 0) throw Error(Errc::Range, "bound must be >= 0");
  if (auto c = detail::base_constant(y)) return abs(*c) > K ? SetExpr::all() : SetExpr::empty();
  if (const auto* e = std::get_if<seqnode::Explicit>(&y.node())) {
    std::vector<Nat> hits;
    for (Index i = 0; i < e->prefix.size(); ++i)
      if (abs(e->prefix[i]) > K) hits.push_back(i + 1);
    return SetExpr::unite(SetExpr::finite(std::move(hits)),
                          SetExpr::intersect(detail::rule_exceedance(e->rule, K), SetExpr::tail(e->prefix.size() + 1)));
  }
  if (const auto* p = std::get_if<seqnode::Piecewise>(&y.node()))
    return SetExpr::unite(SetExpr::intersect(p->set, detail::rule_exceedance(p->on, K)),
                          SetExpr::intersect(SetExpr::complement(p->set), detail::rule_exceedance(p->off, K)));
  if (const auto* a = std::get_if<seqnode::Alternating>(&y.node())) {
    const bool odd = abs(a->v0) > K, even = abs(a->v1) > K;
    if (odd && even) return SetExpr::all();
    if (odd) return SetExpr::odds();
    if (even) return SetExpr::evens();
    return SetExpr::empty();
  }
  return std::nullopt;
}

// S_1..S_N of a rational-valued sequence, exact.
struct PartialSumView {
  enum class Shape { None, Linear, Alternating, EventuallyConstant };

  std::string source;
  Index horizon = 0;
  std::vector<Rational> sums;
  // Closed forms recognised from the source:
  //   Linear: S_n = c n; Alternating: S_n = c (n odd), 0 (n even);
  //   EventuallyConstant: S_n = c for n > cutoff.
  Shape shape = Shape::None;
  Rational c;
  Index cutoff = 0;

  const Rational& at(Index n) const {
    if (n == 0 || n > horizon) throw Error(Errc::Range, "partial sum index " + std::to_string(n) + " outside 1.." +
                                                            std::to_string(horizon));
    return sums[n - 1];
  }

  // {n <= N : |S_n| > K}, or >= K when !strict.
  std::vector<Index> exceedance(const Rational& K, bool strict = true) const {
    std::vector<Index> out;
    for (Index n = 1; n <= horizon; ++n) {
      const Rational a = abs(sums[n - 1]);
      if (strict ? a > K : a >= K) out.push_back(n);
    }
    return out;
  }

  // {n : |S_n| > K} over all n, when the closed form fixes it.
  std::optional<SetExpr> exceedance_expr(const Rational& K) const {
    switch (shape) {
      case Shape::None: return std::nullopt;
      case Shape::Linear:
        if (c == 0) return SetExpr::empty();
        return SetExpr::tail(detail::floor_nat(K / abs(c)) + 1);
      case Shape::Alternating: return abs(c) > K ? SetExpr::odds() : SetExpr::empty();
      case Shape::EventuallyConstant: {
        std::vector<Nat> hits;
        for (Index n = 1; n <= cutoff; ++n)
          if (abs(sums[n - 1]) > K) hits.push_back(n);
        SetExpr head = SetExpr::finite(std::move(hits));
        return abs(c) > K ? SetExpr::unite(head, SetExpr::tail(cutoff + 1)) : head;
      }
    }
    return std::nullopt;
  }

  nlohmann::json to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& q : sums) s.push_back(q.get_str());
    return {{"source", source}, {"horizon", horizon}, {"sums", s}};
  }
};

inline PartialSumView partial_sums(const Sequence& x, Index N) {
  if (N < 1) throw Error(Errc::Range, "partial sums need N >= 1");
  if (auto len = x.defined_length(); len && *len < N)
    throw Error(Errc::Range, "sequence defined on " + std::to_string(*len) + " terms, asked for " + std::to_string(N));
  PartialSumView v;
  v.source = x.to_dsl();
  v.horizon = N;
  v.sums.reserve(N);
  Rational s = 0;
  for (Index n = 1; n <= N; ++n) {
    s += x.exact(n);
    v.sums.push_back(s);
  }
  if (auto c = detail::base_constant(x)) {
    v.shape = PartialSumView::Shape::Linear;
    v.c = *c;
  } else if (const auto* a = std::get_if<seqnode::Alternating>(&x.node()); a && a->v0 + a->v1 == 0) {
    v.shape = PartialSumView::Shape::Alternating;
    v.c = a->v0;
  } else if (const auto* e = std::get_if<seqnode::Explicit>(&x.node());
             e && e->rule.kind == TermRule::Kind::Const && e->rule.c == 0 && e->prefix.size() <= N) {
    v.shape = PartialSumView::Shape::EventuallyConstant;
    v.cutoff = e->prefix.size();
    v.c = v.cutoff ? v.sums[v.cutoff - 1] : Rational(0);
  }
  return v;
}

struct BoundedReport {
  Verdict verdict;
  std::optional<Index> bound;   // least K with an InIdeal exceedance set
  std::vector<Verdict> per_k;   // K = 1, 2, ...

  nlohmann::json to_json() const {
    nlohmann::json ks = nlohmann::json::array();
    for (const auto& v : per_k) ks.push_back(v.to_json());
    return {{"verdict", verdict.to_json()}, {"bound", bound ? nlohmann::json(*bound) : nlohmann::json(nullptr)},
            {"per_k", ks}};
  }
};

namespace detail {

template <typename Expr, typename Hits>
BoundedReport sweep_bounds(const IdealDescriptor& I, Index k_max, Index N, Expr expr_at, Hits hits_at) {
  if (k_max < 1) throw Error(Errc::Range, "K sweep needs K_max >= 1");
  BoundedReport rep;
  bool all_symbolic_not_in = true;
  for (Index K = 1; K <= k_max; ++K) {
    const Rational k(static_cast<unsigned long>(K));
    Verdict v;
    std::optional<SetExpr> e = expr_at(k);
    bool done = false;
    if (e) {
      try {
        v = classify_symbolic(I, *e);
        done = true;
      } catch (const Error& err) {
        if (err.code() != Errc::OutsideFragment) throw;
      }
    }
    if (!done) {
      const std::vector<Index> hits = hits_at(k);
      v = classify_indices(I, hits, N);
    }
    if (!(v.not_in() && v.symbolic)) all_symbolic_not_in = false;
    rep.per_k.push_back(v);
    if (v.in() && !rep.bound) rep.bound = K;
  }
  if (rep.bound) {
    const Verdict& v = rep.per_k[*rep.bound - 1];
    rep.verdict = {VerdictValue::InIdeal, v.symbolic, v.horizon,
                   "exceedance set for K = " + std::to_string(*rep.bound) + " is small: " + v.evidence};
  } else if (all_symbolic_not_in) {
    rep.verdict = {VerdictValue::NotInIdeal, true, 0,
                   "exceedance set not small for every K <= " + std::to_string(k_max) + " (nested, so for all K)"};
  } else {
    const Verdict& v = rep.per_k.back();
    rep.verdict = {VerdictValue::Undecided, false, N,
                   "no K <= " + std::to_string(k_max) + " certified; at K = " + std::to_string(k_max) + ": " +
                       verdict_name(v.value) + " (" + v.evidence + ")"};
  }
  return rep;
}

}  // namespace detail

// Is y bounded modulo I, i.e. {n : |y_n| > K} in I for some K in 1..k_max?
// NotIn needs a symbolic NotIn at every tested K.
inline BoundedReport i_bounded(const PartialSumView& y, const IdealDescriptor& I, Index k_max = kDefaultKMax) {
  return detail::sweep_bounds(
      I, k_max, y.horizon, [&](const Rational& K) { return y.exceedance_expr(K); },
      [&](const Rational& K) { return y.exceedance(K); });
}

inline BoundedReport i_bounded(const Sequence& y, const IdealDescriptor& I, Index k_max, Index N) {
  if (auto len = y.defined_length(); len && *len < N)
    throw Error(Errc::Range, "sequence defined on " + std::to_string(*len) + " terms, asked for " + std::to_string(N));
  std::vector<Rational> vals = y.exact_values(N);
  return detail::sweep_bounds(
      I, k_max, N, [&](const Rational& K) { return exceedance_expr(y, K); },
      [&](const Rational& K) {
        std::vector<Index> out;
        for (Index n = 1; n <= N; ++n)
          if (abs(vals[n - 1]) > K) out.push_back(n);
        return out;
      });
}

struct SigmaSxReport {
  BoundedReport bounded;
  Index horizon = 0;
  std::vector<Index> reach_one;  // {n <= N : |S_n| >= 1}, the set the steering game records

  nlohmann::json to_json() const {
    return {{"bounded", bounded.to_json()}, {"horizon", horizon}, {"reach_one", reach_one}};
  }
};

// Membership of sigma in the set of subsequences whose partial sums are
// bounded modulo I, judged at horizon N.
inline SigmaSxReport in_sigma_Sx(const Subseq& sigma, const Sequence& x, const IdealDescriptor& I, Index N,
                                 Index k_max = kDefaultKMax) {
  const PartialSumView view = partial_sums(x.subseq(sigma), N);
  SigmaSxReport rep;
  rep.horizon = N;
  rep.bounded = i_bounded(view, I, k_max);
  rep.reach_one = view.exceedance(1, false);
  return rep;
}

}  // namespace idealgames
