#pragma once

// Computable rational-valued sequences, subsequence and permutation index
// maps, cylinders of the spaces Sigma (strictly increasing maps) and Pi
// (bijections), and fair-coin subsequence sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/dsl.hpp"
#include "idealgames/error.hpp"
#include "idealgames/nat.hpp"
#include "idealgames/rational.hpp"
#include "idealgames/rng.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

// |v - eta| <= r in double arithmetic. Every hit-set computation, symbolic
// or by enumeration, goes through this one predicate so they agree.
inline bool within(double v, double eta, double r) { return std::abs(v - eta) <= r; }

namespace detail {

// Least n in [1, 2^62] with pred(n), for pred monotone false..true.
template <typename Pred>
std::optional<Index> first_true(Pred pred) {
  Index lo = 1, hi = Index{1} << 62;
  if (!pred(hi)) return std::nullopt;
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (pred(mid)) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

inline SetExpr interval_set(std::optional<Index> lo, std::optional<Index> hi) {
  if (!lo) return SetExpr::empty();
  if (!hi) return SetExpr::tail(*lo);
  return SetExpr::range(*lo, *hi);
}

}  // namespace detail

// n-th term formulas for sequence tails.
struct TermRule {
  enum class Kind { Const, Inv, Id, Sign };
  Kind kind = Kind::Const;
  Rational c;

  static TermRule constant(Rational v) { return {Kind::Const, std::move(v)}; }
  static TermRule inv() { return {Kind::Inv, 0}; }
  static TermRule id() { return {Kind::Id, 0}; }
  static TermRule sign() { return {Kind::Sign, 0}; }

  Rational exact(Index n) const {
    switch (kind) {
      case Kind::Const: return c;
      case Kind::Inv: return Rational(mpz_class(1), mpz_class(std::to_string(n)));
      case Kind::Id: return Rational(mpz_class(std::to_string(n)));
      case Kind::Sign: return n % 2 ? Rational(-1) : Rational(1);
    }
    return 0;
  }

  double eval(Index n) const {
    switch (kind) {
      case Kind::Const: return c.get_d();
      case Kind::Inv: return 1.0 / static_cast<double>(n);
      case Kind::Id: return static_cast<double>(n);
      case Kind::Sign: return n % 2 ? -1.0 : 1.0;
    }
    return 0;
  }

  std::vector<double> special_values() const {
    switch (kind) {
      case Kind::Const: return {c.get_d()};
      case Kind::Inv: return {0.0};
      case Kind::Id: return {};
      case Kind::Sign: return {-1.0, 1.0};
    }
    return {};
  }

  // {n >= 1 : |rule(n) - eta| <= r}
  SetExpr fiber(double eta, double r) const {
    switch (kind) {
      case Kind::Const: return within(c.get_d(), eta, r) ? SetExpr::all() : SetExpr::empty();
      case Kind::Sign: {
        const bool odd = within(-1.0, eta, r), even = within(1.0, eta, r);
        if (odd && even) return SetExpr::all();
        if (odd) return SetExpr::odds();
        if (even) return SetExpr::evens();
        return SetExpr::empty();
      }
      case Kind::Id: {
        auto lo = detail::first_true([&](Index n) { return static_cast<double>(n) - eta >= -r; });
        auto hi = detail::first_true([&](Index n) { return static_cast<double>(n) - eta > r; });
        return detail::interval_set(lo, hi);
      }
      case Kind::Inv: {
        auto lo = detail::first_true([&](Index n) { return 1.0 / static_cast<double>(n) - eta <= r; });
        auto hi = detail::first_true([&](Index n) { return 1.0 / static_cast<double>(n) - eta < -r; });
        return detail::interval_set(lo, hi);
      }
    }
    return SetExpr::empty();
  }

  std::string to_dsl() const {
    switch (kind) {
      case Kind::Const: return to_string(c);
      case Kind::Inv: return "inv";
      case Kind::Id: return "n";
      case Kind::Sign: return "sign";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Index maps

class Subseq {
 public:
  enum class Tail { IdentityShift, FromSet, StemOnly };

  static Subseq identity() { return Subseq(Tail::IdentityShift, {}, std::nullopt); }
  // Beyond the stem, sigma continues by +1 steps.
  static Subseq shifted(std::vector<Index> stem) { return Subseq(Tail::IdentityShift, std::move(stem), std::nullopt); }
  // Defined on positions 1..|stem| only.
  static Subseq stem_only(std::vector<Index> stem) { return Subseq(Tail::StemOnly, std::move(stem), std::nullopt); }
  // Beyond the stem, the elements of s above the last stem value, in order.
  static Subseq from_set(SetExpr s, std::vector<Index> stem = {}) {
    try {
      if (analyze(s).finite()) throw Error(Errc::InvalidArgument, "set(" + idealgames::to_dsl(s) + ") is finite");
    } catch (const Error& e) {
      if (e.code() != Errc::OutsideFragment) throw;
    }
    return Subseq(Tail::FromSet, std::move(stem), std::move(s));
  }

  const std::vector<Index>& stem() const { return impl_->stem; }
  Tail tail() const { return impl_->tail; }
  const std::optional<SetExpr>& set() const { return impl_->set; }

  // Number of positions on which sigma is defined; nullopt when infinite.
  std::optional<Index> defined_length() const {
    if (impl_->tail == Tail::StemOnly) return impl_->stem.size();
    return std::nullopt;
  }

  Index at(Index n) const {
    if (n == 0) throw Error(Errc::InvalidArgument, "positions start at 1");
    const auto& st = impl_->stem;
    if (n <= st.size()) return st[n - 1];
    const Index beyond = n - st.size();
    switch (impl_->tail) {
      case Tail::IdentityShift: return (st.empty() ? 0 : st.back()) + beyond;
      case Tail::StemOnly:
        throw Error(Errc::Range, "subsequence defined on " + std::to_string(st.size()) + " positions, asked for " +
                                     std::to_string(n));
      case Tail::FromSet: return impl_->from_set_at(beyond);
    }
    return 0;
  }

  // sigma(1..n)
  std::vector<Index> first(Index n) const {
    std::vector<Index> out;
    out.reserve(n);
    for (Index i = 1; i <= n; ++i) out.push_back(at(i));
    return out;
  }

  std::string to_dsl() const {
    const auto& st = impl_->stem;
    std::string stem = "stem[";
    for (std::size_t i = 0; i < st.size(); ++i) stem += (i ? "," : "") + std::to_string(st[i]);
    stem += "]";
    switch (impl_->tail) {
      case Tail::StemOnly: return stem;
      case Tail::IdentityShift: return st.empty() ? "identity" : stem + "+shift";
      case Tail::FromSet: {
        const std::string s = "set(" + idealgames::to_dsl(*impl_->set) + ")";
        return st.empty() ? s : stem + "+" + s;
      }
    }
    return stem;
  }

 private:
  struct Impl {
    Tail tail;
    std::vector<Index> stem;
    std::optional<SetExpr> set;
    mutable std::mutex mu;
    mutable std::vector<Index> tail_values;
    mutable Index scanned = 0;

    Index from_set_at(Index i) const {
      std::lock_guard lock(mu);
      const Index cap = horizon_cap();
      const Index floor = stem.empty() ? 0 : stem.back();
      if (scanned < floor) scanned = floor;
      while (tail_values.size() < i) {
        if (scanned >= cap)
          throw Error(Errc::ExhaustedIndices, "set(" + idealgames::to_dsl(*set) + ") has fewer than " + std::to_string(i) +
                                                   " elements above " + std::to_string(floor) + " below the horizon cap");
        const Index bound = std::min(cap, std::max<Index>(2 * scanned, scanned + 1024));
        const auto m = set->mask(bound);
        for (Index n = scanned + 1; n <= bound; ++n)
          if (m[n]) tail_values.push_back(n);
        scanned = bound;
      }
      return tail_values[i - 1];
    }
  };

  Subseq(Tail tail, std::vector<Index> stem, std::optional<SetExpr> set) {
    for (std::size_t i = 0; i < stem.size(); ++i) {
      if (stem[i] == 0) throw Error(Errc::InvalidArgument, "subsequence values start at 1");
      if (i && stem[i] <= stem[i - 1]) throw Error(Errc::InvalidArgument, "subsequence stem must be strictly increasing");
    }
    auto p = std::make_shared<Impl>();
    p->tail = tail;
    p->stem = std::move(stem);
    p->set = std::move(set);
    impl_ = std::move(p);
  }

  std::shared_ptr<const Impl> impl_;
};

class Perm {
 public:
  enum class Tail { Identity, SwapPairs, StemOnly };

  static Perm identity() { return Perm(Tail::Identity, {}, {}); }
  // (1 2)(3 4)(5 6)... beyond the stem.
  static Perm swap_pairs(std::vector<Index> stem = {}) { return Perm(Tail::SwapPairs, std::move(stem), {}); }
  static Perm with_identity_tail(std::vector<Index> stem) { return Perm(Tail::Identity, std::move(stem), {}); }
  // A finite injective stem; `checkpoints` are positions m whose prefix is a
  // permutation of 1..m and are validated.
  static Perm stem_only(std::vector<Index> stem, std::vector<Index> checkpoints = {}) {
    return Perm(Tail::StemOnly, std::move(stem), std::move(checkpoints));
  }

  const std::vector<Index>& stem() const { return stem_; }
  Tail tail() const { return tail_; }
  const std::vector<Index>& checkpoints() const { return checkpoints_; }

  std::optional<Index> defined_length() const {
    if (tail_ == Tail::StemOnly) return stem_.size();
    return std::nullopt;
  }

  Index at(Index n) const {
    if (n == 0) throw Error(Errc::InvalidArgument, "positions start at 1");
    if (n <= stem_.size()) return stem_[n - 1];
    switch (tail_) {
      case Tail::Identity: return n;
      case Tail::SwapPairs: return n % 2 ? n + 1 : n - 1;
      case Tail::StemOnly:
        throw Error(Errc::Range, "permutation defined on " + std::to_string(stem_.size()) + " positions, asked for " +
                                     std::to_string(n));
    }
    return 0;
  }

  std::vector<Index> first(Index n) const {
    std::vector<Index> out;
    out.reserve(n);
    for (Index i = 1; i <= n; ++i) out.push_back(at(i));
    return out;
  }

  // Every m <= |stem| with {pi(1..m)} = {1..m}.
  std::vector<Index> all_checkpoints() const {
    std::vector<Index> out;
    Index mx = 0;
    for (Index i = 0; i < stem_.size(); ++i) {
      mx = std::max(mx, stem_[i]);
      if (mx == i + 1) out.push_back(i + 1);  // distinct values, max = count
    }
    return out;
  }

  std::string to_dsl() const {
    std::string stem = "perm[";
    for (std::size_t i = 0; i < stem_.size(); ++i) stem += (i ? "," : "") + std::to_string(stem_[i]);
    stem += "]";
    switch (tail_) {
      case Tail::StemOnly: return stem;
      case Tail::Identity: return stem_.empty() ? "identity" : stem + "+identity";
      case Tail::SwapPairs: return stem_.empty() ? "swap-pairs" : stem + "+swap-pairs";
    }
    return stem;
  }

 private:
  Perm(Tail tail, std::vector<Index> stem, std::vector<Index> checkpoints)
      : tail_(tail), stem_(std::move(stem)), checkpoints_(std::move(checkpoints)) {
    std::vector<Index> sorted = stem_;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty() && sorted.front() == 0) throw Error(Errc::InvalidArgument, "permutation values start at 1");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(Errc::InvalidArgument, "permutation stem values must be distinct");
    const bool initial_segment = sorted.empty() || sorted.back() == sorted.size();
    if (tail_ != Tail::StemOnly && !initial_segment)
      throw Error(Errc::InvalidArgument, "a permutation with an infinite tail needs a stem that permutes 1..|stem|");
    if (tail_ == Tail::SwapPairs && stem_.size() % 2)
      throw Error(Errc::InvalidArgument, "swap-pairs tail needs an even-length stem");
    const auto valid = all_checkpoints();
    for (Index m : checkpoints_)
      if (!std::binary_search(valid.begin(), valid.end(), m))
        throw Error(Errc::CheckpointImpossible, "stem prefix of length " + std::to_string(m) + " is not a permutation of 1.." +
                                                    std::to_string(m));
  }

  Tail tail_;
  std::vector<Index> stem_;
  std::vector<Index> checkpoints_;
};

// ---------------------------------------------------------------------------
// Cylinders: all index maps extending a finite stem.

enum class Space { Sigma, Pi };

inline const char* space_name(Space s) { return s == Space::Sigma ? "sigma" : "pi"; }

inline Space parse_space(std::string_view s) {
  if (s == "sigma") return Space::Sigma;
  if (s == "pi") return Space::Pi;
  throw Error(Errc::Parse, "unknown space '" + std::string(s) + "' (sigma, pi)");
}

struct Cylinder {
  Space space = Space::Sigma;
  std::vector<Index> stem;

  static Cylinder sigma(std::vector<Index> stem) {
    Subseq::stem_only(stem);  // validates
    return {Space::Sigma, std::move(stem)};
  }
  static Cylinder pi(std::vector<Index> stem) {
    Perm::stem_only(stem);
    return {Space::Pi, std::move(stem)};
  }

  // Last stem value on Sigma, largest on Pi; 0 for the empty stem.
  Index m() const {
    if (stem.empty()) return 0;
    return space == Space::Sigma ? stem.back() : *std::max_element(stem.begin(), stem.end());
  }

  bool contains(const Subseq& t) const {
    if (space != Space::Sigma) throw Error(Errc::SpaceMismatch, "subsequence tested against a Pi cylinder");
    return matches([&](Index n) { return t.at(n); }, t.defined_length());
  }
  bool contains(const Perm& t) const {
    if (space != Space::Pi) throw Error(Errc::SpaceMismatch, "permutation tested against a Sigma cylinder");
    return matches([&](Index n) { return t.at(n); }, t.defined_length());
  }
  // inner is a sub-cylinder of *this.
  bool contains(const Cylinder& inner) const {
    if (space != inner.space) throw Error(Errc::SpaceMismatch, "cylinders from different spaces");
    return inner.stem.size() >= stem.size() && std::equal(stem.begin(), stem.end(), inner.stem.begin());
  }

  nlohmann::json to_json() const { return {{"space", space_name(space)}, {"stem", stem}}; }
  static Cylinder from_json(const nlohmann::json& j) {
    const Space s = parse_space(j.at("space").get<std::string>());
    auto st = j.at("stem").get<std::vector<Index>>();
    return s == Space::Sigma ? sigma(std::move(st)) : pi(std::move(st));
  }

  bool operator==(const Cylinder&) const = default;

 private:
  template <typename At>
  bool matches(At at, std::optional<Index> len) const {
    if (len && *len < stem.size())
      throw Error(Errc::Range, "map defined on " + std::to_string(*len) + " positions, cylinder stem has " +
                                   std::to_string(stem.size()));
    for (Index n = 1; n <= stem.size(); ++n)
      if (at(n) != stem[n - 1]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Rational enumeration of Q ∩ (0,1): 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...

namespace detail {

struct RationalTable {
  std::mutex mu;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> fracs;
  std::uint32_t next_q = 2;

  std::pair<std::uint32_t, std::uint32_t> at(Index n) {
    std::lock_guard lock(mu);
    if (n > horizon_cap()) throw Error(Errc::Range, "rational enumeration index beyond the horizon cap");
    while (fracs.size() < n) {
      for (std::uint32_t p = 1; p < next_q; ++p)
        if (std::gcd(p, next_q) == 1) fracs.emplace_back(p, next_q);
      ++next_q;
    }
    return fracs[n - 1];
  }
};

inline RationalTable& rational_table() {
  static RationalTable t;
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sequences

class Sequence;

namespace seqnode {
struct Explicit {
  std::vector<Rational> prefix;
  std::vector<double> prefix_d;
  TermRule rule;
};
struct Piecewise {
  SetExpr set;
  TermRule on, off;
};
struct RatEnum {
  bool is_signed = false;
};
struct Alternating {
  Rational v0, v1;  // v0 at odd positions
};
struct SubseqOf;
struct PermOf;
}  // namespace seqnode

class Sequence {
 public:
  using Node = std::variant<seqnode::Explicit, seqnode::Piecewise, seqnode::RatEnum, seqnode::Alternating,
                            seqnode::SubseqOf, seqnode::PermOf>;

  static Sequence explicit_tail(std::vector<Rational> prefix, TermRule rule);
  static Sequence constant(Rational c) { return explicit_tail({}, TermRule::constant(std::move(c))); }
  static Sequence rule(TermRule r) { return explicit_tail({}, std::move(r)); }
  static Sequence inv() { return rule(TermRule::inv()); }
  static Sequence id() { return rule(TermRule::id()); }
  static Sequence sign() { return rule(TermRule::sign()); }
  static Sequence piecewise(SetExpr s, TermRule on, TermRule off);
  static Sequence ratenum();
  // q_1, -q_1, q_2, -q_2, ... over the enumeration above; dense in (-1,1).
  static Sequence ratenum_signed();
  static Sequence alternating(Rational v0, Rational v1);

  // eval(result, n) = eval(*this, sigma(n)); constants stay constants.
  Sequence subseq(const Subseq& sigma) const;
  Sequence permute(const Perm& pi) const;

  const Node& node() const;

  Rational exact(Index n) const;
  double eval(Index n) const;
  // x_1..x_N as a 0-based vector.
  std::vector<double> values(Index N) const;
  std::vector<Rational> exact_values(Index N) const;

  // Positions on which the sequence is defined; nullopt when infinite.
  std::optional<Index> defined_length() const;

  // Values that candidate generation must always consider (limits of tails).
  std::vector<double> special_values() const;

  // {n : |x_n - eta| <= r} as a set expression when the shape allows one.
  std::optional<SetExpr> fiber_expr(double eta, double r) const;

  // Constant value when the sequence is constant from position 1.
  std::optional<Rational> constant_value() const;

  std::string to_dsl() const;

 private:
  explicit Sequence(Node n);
  std::shared_ptr<const Node> node_;
};

namespace seqnode {
struct SubseqOf {
  Subseq sigma;
  Sequence base;
};
struct PermOf {
  Perm pi;
  Sequence base;
};
}  // namespace seqnode

inline Sequence::Sequence(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
inline const Sequence::Node& Sequence::node() const { return *node_; }

inline Sequence Sequence::explicit_tail(std::vector<Rational> prefix, TermRule rule) {
  std::vector<double> d;
  for (const auto& q : prefix) d.push_back(q.get_d());
  return Sequence(seqnode::Explicit{std::move(prefix), std::move(d), std::move(rule)});
}
inline Sequence Sequence::piecewise(SetExpr s, TermRule on, TermRule off) {
  return Sequence(seqnode::Piecewise{std::move(s), std::move(on), std::move(off)});
}
inline Sequence Sequence::ratenum() { return Sequence(seqnode::RatEnum{false}); }
inline Sequence Sequence::ratenum_signed() { return Sequence(seqnode::RatEnum{true}); }
inline Sequence Sequence::alternating(Rational v0, Rational v1) {
  return Sequence(seqnode::Alternating{std::move(v0), std::move(v1)});
}

inline std::optional<Rational> Sequence::constant_value() const {
  if (const auto* e = std::get_if<seqnode::Explicit>(node_.get()))
    if (e->prefix.empty() && e->rule.kind == TermRule::Kind::Const) return e->rule.c;
  if (const auto* a = std::get_if<seqnode::Alternating>(node_.get()))
    if (a->v0 == a->v1) return a->v0;
  return std::nullopt;
}

inline Sequence Sequence::subseq(const Subseq& sigma) const {
  if (auto c = constant_value(); c && !sigma.defined_length()) return constant(*c);
  if (sigma.tail() == Subseq::Tail::IdentityShift && sigma.stem().empty()) return *this;
  return Sequence(seqnode::SubseqOf{sigma, *this});
}
inline Sequence Sequence::permute(const Perm& pi) const {
  if (auto c = constant_value(); c && !pi.defined_length()) return constant(*c);
  if (pi.tail() == Perm::Tail::Identity && pi.stem().empty()) return *this;
  return Sequence(seqnode::PermOf{pi, *this});
}

inline Rational Sequence::exact(Index n) const {
  if (n == 0) throw Error(Errc::InvalidArgument, "positions start at 1");
  struct V {
    Index n;
    Rational operator()(const seqnode::Explicit& e) const {
      return n <= e.prefix.size() ? e.prefix[n - 1] : e.rule.exact(n);
    }
    Rational operator()(const seqnode::Piecewise& p) const {
      return p.set.contains(n) ? p.on.exact(n) : p.off.exact(n);
    }
    Rational operator()(const seqnode::RatEnum& r) const {
      const Index k = r.is_signed ? (n + 1) / 2 : n;
      const auto [p, q] = detail::rational_table().at(k);
      Rational v{mpz_class(p), mpz_class(q)};
      return r.is_signed && n % 2 == 0 ? Rational(-v) : v;
    }
    Rational operator()(const seqnode::Alternating& a) const { return n % 2 ? a.v0 : a.v1; }
    Rational operator()(const seqnode::SubseqOf& s) const { return s.base.exact(s.sigma.at(n)); }
    Rational operator()(const seqnode::PermOf& p) const { return p.base.exact(p.pi.at(n)); }
  };
  return std::visit(V{n}, *node_);
}

inline double Sequence::eval(Index n) const {
  if (n == 0) throw Error(Errc::InvalidArgument, "positions start at 1");
  struct V {
    Index n;
    double operator()(const seqnode::Explicit& e) const {
      return n <= e.prefix_d.size() ? e.prefix_d[n - 1] : e.rule.eval(n);
    }
    double operator()(const seqnode::Piecewise& p) const { return p.set.contains(n) ? p.on.eval(n) : p.off.eval(n); }
    double operator()(const seqnode::RatEnum& r) const {
      const Index k = r.is_signed ? (n + 1) / 2 : n;
      const auto [p, q] = detail::rational_table().at(k);
      const double v = static_cast<double>(p) / static_cast<double>(q);
      return r.is_signed && n % 2 == 0 ? -v : v;
    }
    double operator()(const seqnode::Alternating& a) const { return n % 2 ? a.v0.get_d() : a.v1.get_d(); }
    double operator()(const seqnode::SubseqOf& s) const { return s.base.eval(s.sigma.at(n)); }
    double operator()(const seqnode::PermOf& p) const { return p.base.eval(p.pi.at(n)); }
  };
  return std::visit(V{n}, *node_);
}

inline std::optional<Index> Sequence::defined_length() const {
  if (const auto* s = std::get_if<seqnode::SubseqOf>(node_.get())) {
    auto own = s->sigma.defined_length();
    if (!own) return std::nullopt;
    // beyond the base's domain the composition is undefined too
    if (auto base = s->base.defined_length()) {
      Index n = 0;
      while (n < *own && s->sigma.at(n + 1) <= *base) ++n;
      return n;
    }
    return own;
  }
  if (const auto* p = std::get_if<seqnode::PermOf>(node_.get())) {
    auto own = p->pi.defined_length();
    auto base = p->base.defined_length();
    if (!own && !base) return std::nullopt;
    const Index lim = own ? *own : kIndexMax;
    Index n = 0;
    while (n < lim && (!base || p->pi.at(n + 1) <= *base)) ++n;
    return n;
  }
  return std::nullopt;
}

inline std::vector<double> Sequence::values(Index N) const {
  if (auto len = defined_length(); len && *len < N)
    throw Error(Errc::Range, "sequence defined on " + std::to_string(*len) + " positions, asked for " + std::to_string(N));
  std::vector<double> out;
  out.reserve(N);
  if (const auto* pw = std::get_if<seqnode::Piecewise>(node_.get())) {
    const auto m = pw->set.mask(N);
    for (Index n = 1; n <= N; ++n) out.push_back(m[n] ? pw->on.eval(n) : pw->off.eval(n));
    return out;
  }
  for (Index n = 1; n <= N; ++n) out.push_back(eval(n));
  return out;
}

inline std::vector<Rational> Sequence::exact_values(Index N) const {
  if (auto len = defined_length(); len && *len < N)
    throw Error(Errc::Range, "sequence defined on " + std::to_string(*len) + " positions, asked for " + std::to_string(N));
  std::vector<Rational> out;
  out.reserve(N);
  for (Index n = 1; n <= N; ++n) out.push_back(exact(n));
  return out;
}

inline std::vector<double> Sequence::special_values() const {
  struct V {
    std::vector<double> operator()(const seqnode::Explicit& e) const { return e.rule.special_values(); }
    std::vector<double> operator()(const seqnode::Piecewise& p) const {
      auto a = p.on.special_values();
      const auto b = p.off.special_values();
      a.insert(a.end(), b.begin(), b.end());
      return a;
    }
    std::vector<double> operator()(const seqnode::RatEnum&) const { return {}; }
    std::vector<double> operator()(const seqnode::Alternating& a) const { return {a.v0.get_d(), a.v1.get_d()}; }
    std::vector<double> operator()(const seqnode::SubseqOf& s) const { return s.base.special_values(); }
    std::vector<double> operator()(const seqnode::PermOf& p) const { return p.base.special_values(); }
  };
  auto out = std::visit(V{}, *node_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::optional<SetExpr> Sequence::fiber_expr(double eta, double r) const {
  struct V {
    double eta, r;
    std::optional<SetExpr> operator()(const seqnode::Explicit& e) const {
      const SetExpr rule = e.rule.fiber(eta, r);
      if (e.prefix.empty()) return rule;
      std::vector<Nat> hits;
      for (Index i = 0; i < e.prefix_d.size(); ++i)
        if (within(e.prefix_d[i], eta, r)) hits.push_back(i + 1);
      return SetExpr::unite(SetExpr::finite(std::move(hits)),
                            SetExpr::intersect(rule, SetExpr::tail(e.prefix.size() + 1)));
    }
    std::optional<SetExpr> operator()(const seqnode::Piecewise& p) const {
      return SetExpr::unite(SetExpr::intersect(p.set, p.on.fiber(eta, r)),
                            SetExpr::intersect(SetExpr::complement(p.set), p.off.fiber(eta, r)));
    }
    std::optional<SetExpr> operator()(const seqnode::RatEnum&) const { return std::nullopt; }
    std::optional<SetExpr> operator()(const seqnode::Alternating& a) const {
      const bool odd = within(a.v0.get_d(), eta, r), even = within(a.v1.get_d(), eta, r);
      if (odd && even) return SetExpr::all();
      if (odd) return SetExpr::odds();
      if (even) return SetExpr::evens();
      return SetExpr::empty();
    }
    std::optional<SetExpr> operator()(const seqnode::SubseqOf&) const { return std::nullopt; }
    std::optional<SetExpr> operator()(const seqnode::PermOf&) const { return std::nullopt; }
  };
  return std::visit(V{eta, r}, *node_);
}

inline std::string Sequence::to_dsl() const {
  struct V {
    std::string operator()(const seqnode::Explicit& e) const {
      if (e.prefix.empty()) {
        if (e.rule.kind == TermRule::Kind::Const) return "const(" + to_string(e.rule.c) + ")";
        return e.rule.to_dsl();
      }
      std::string out = "explicit({";
      for (std::size_t i = 0; i < e.prefix.size(); ++i) out += (i ? "," : "") + to_string(e.prefix[i]);
      return out + "}," + e.rule.to_dsl() + ")";
    }
    std::string operator()(const seqnode::Piecewise& p) const {
      return "piecewise(" + idealgames::to_dsl(p.set) + "," + p.on.to_dsl() + "," + p.off.to_dsl() + ")";
    }
    std::string operator()(const seqnode::RatEnum& r) const { return r.is_signed ? "ratenum-signed" : "ratenum"; }
    std::string operator()(const seqnode::Alternating& a) const {
      return "alt(" + to_string(a.v0) + "," + to_string(a.v1) + ")";
    }
    std::string operator()(const seqnode::SubseqOf& s) const {
      return "sub(" + s.sigma.to_dsl() + "," + s.base.to_dsl() + ")";
    }
    std::string operator()(const seqnode::PermOf& p) const {
      return "rearr(" + p.pi.to_dsl() + "," + p.base.to_dsl() + ")";
    }
  };
  return std::visit(V{}, *node_);
}

inline Sequence subseq_apply(const Subseq& sigma, const Sequence& x) { return x.subseq(sigma); }
inline Sequence perm_apply(const Perm& pi, const Sequence& x) { return x.permute(pi); }

inline bool cylinder_contains(const Cylinder& d, const Subseq& t) { return d.contains(t); }
inline bool cylinder_contains(const Cylinder& d, const Perm& t) { return d.contains(t); }

// ---------------------------------------------------------------------------
// Sampling under the fair-coin measure on Sigma: each index is included
// independently with probability 1/2. Bits come straight from mt19937_64
// output words, low bit first, so streams are identical across platforms.

namespace detail {

class CoinStream {
 public:
  explicit CoinStream(std::uint64_t seed) : rng_(seed) {}
  bool flip() {
    if (left_ == 0) {
      bits_ = rng_();
      left_ = 64;
    }
    const bool b = bits_ & 1;
    bits_ >>= 1;
    --left_;
    return b;
  }

 private:
  std::mt19937_64 rng_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

}  // namespace detail

// Included indices among 1..N; an empty draw is redrawn.
inline Subseq sample_subseq(std::uint64_t seed, Index N) {
  if (N < 1) throw Error(Errc::Range, "sampling horizon must be >= 1");
  detail::CoinStream coins(seed);
  for (;;) {
    std::vector<Index> stem;
    for (Index n = 1; n <= N; ++n)
      if (coins.flip()) stem.push_back(n);
    if (!stem.empty()) return Subseq::stem_only(std::move(stem));
  }
}

// sigma(1..len) of a fair-coin subsequence: coins are flipped until len
// indices are included, which is the exact law of the first len values.
inline Subseq sample_subseq_positions(std::uint64_t seed, Index len) {
  if (len < 1) throw Error(Errc::Range, "sample length must be >= 1");
  detail::CoinStream coins(seed);
  const Index cap = horizon_cap();
  std::vector<Index> stem;
  stem.reserve(len);
  for (Index n = 1; stem.size() < len; ++n) {
    if (n > cap) throw Error(Errc::ExhaustedIndices, "sampled subsequence ran past the horizon cap");
    if (coins.flip()) stem.push_back(n);
  }
  return Subseq::stem_only(std::move(stem));
}

// ---------------------------------------------------------------------------
// Literals:
//   seq    := alt(q,q) | inv | n | id | sign | const(q) | q | ratenum | ratenum-signed
//           | piecewise(SET, rule, rule) | explicit({q,...}, rule)
//   rule   := n | id | inv | sign | const(q) | q
//   subseq := identity | set(SET) | stem[i,...] | stem[i,...]+shift | stem[i,...]+set(SET)
//   perm   := identity | swap-pairs | perm[i,...] | perm[i,...]+identity | perm[i,...]+swap-pairs

namespace detail {

inline Rational parse_rational_token(const Token& t) {
  try {
    return parse_rational(t.text);
  } catch (const Error&) {
    DslLexer::fail_at(t, "expected a rational number");
  }
}

inline std::optional<TermRule> try_parse_rule(DslLexer& lx) {
  if (lx.peek().kind == Token::Kind::Number) return TermRule::constant(parse_rational_token(lx.next()));
  if (lx.peek().kind != Token::Kind::Ident) return std::nullopt;
  const std::string& w = lx.peek().text;
  if (w == "n" || w == "id") {
    lx.next();
    return TermRule::id();
  }
  if (w == "inv") {
    lx.next();
    return TermRule::inv();
  }
  if (w == "sign") {
    lx.next();
    return TermRule::sign();
  }
  if (w == "const") {
    lx.next();
    lx.expect_punct('(');
    auto c = parse_rational_token(lx.expect_number());
    lx.expect_punct(')');
    return TermRule::constant(std::move(c));
  }
  return std::nullopt;
}

inline TermRule parse_rule(DslLexer& lx) {
  if (auto r = try_parse_rule(lx)) return *r;
  lx.fail("expected a term rule (n, inv, sign, const(q) or a number)");
}

inline std::vector<Index> parse_index_list(DslLexer& lx) {
  lx.expect_punct('[');
  std::vector<Index> out;
  while (!lx.at_punct(']')) {
    if (!out.empty()) lx.expect_punct(',');
    const Token t = lx.expect_number();
    const Nat v = parse_nat_token(t);
    if (v == 0 || !fits_index(v)) DslLexer::fail_at(t, "expected a positive 64-bit index");
    out.push_back(static_cast<Index>(v));
  }
  lx.expect_punct(']');
  return out;
}

template <typename Make>
auto wrap_invalid(const Token& at, Make make) {
  try {
    return make();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    DslLexer::fail_at(at, e.what());
  }
}

}  // namespace detail

inline Sequence parse_sequence_expr(DslLexer& lx) {
  if (auto r = detail::try_parse_rule(lx)) return Sequence::rule(*r);
  const Token head = lx.expect_ident();
  const std::string& kw = head.text;
  if (kw == "ratenum") return Sequence::ratenum();
  if (kw == "ratenum-signed") return Sequence::ratenum_signed();
  if (kw == "alt") {
    lx.expect_punct('(');
    auto v0 = detail::parse_rational_token(lx.expect_number());
    lx.expect_punct(',');
    auto v1 = detail::parse_rational_token(lx.expect_number());
    lx.expect_punct(')');
    return Sequence::alternating(std::move(v0), std::move(v1));
  }
  if (kw == "piecewise") {
    lx.expect_punct('(');
    SetExpr s = parse_set_expr(lx);
    lx.expect_punct(',');
    TermRule on = detail::parse_rule(lx);
    lx.expect_punct(',');
    TermRule off = detail::parse_rule(lx);
    lx.expect_punct(')');
    return Sequence::piecewise(std::move(s), std::move(on), std::move(off));
  }
  if (kw == "explicit") {
    lx.expect_punct('(');
    lx.expect_punct('{');
    std::vector<Rational> prefix;
    while (!lx.at_punct('}')) {
      if (!prefix.empty()) lx.expect_punct(',');
      prefix.push_back(detail::parse_rational_token(lx.expect_number()));
    }
    lx.expect_punct('}');
    lx.expect_punct(',');
    TermRule rule = detail::parse_rule(lx);
    lx.expect_punct(')');
    return Sequence::explicit_tail(std::move(prefix), std::move(rule));
  }
  DslLexer::fail_at(head, "unknown sequence '" + kw + "'");
}

inline Sequence parse_sequence(std::string_view text) {
  DslLexer lx(text);
  Sequence s = parse_sequence_expr(lx);
  lx.expect_end();
  return s;
}

inline Subseq parse_subseq(std::string_view text) {
  DslLexer lx(text);
  const Token head = lx.expect_ident();
  auto parse_set_arg = [&] {
    lx.expect_punct('(');
    SetExpr s = parse_set_expr(lx);
    lx.expect_punct(')');
    return s;
  };
  Subseq out = Subseq::identity();
  if (head.text == "identity") {
    out = Subseq::identity();
  } else if (head.text == "set") {
    SetExpr s = parse_set_arg();
    out = detail::wrap_invalid(head, [&] { return Subseq::from_set(s); });
  } else if (head.text == "stem") {
    auto stem = detail::parse_index_list(lx);
    if (lx.at_punct('+')) {
      lx.next();
      const Token t = lx.expect_ident();
      if (t.text == "shift") {
        out = detail::wrap_invalid(head, [&] { return Subseq::shifted(stem); });
      } else if (t.text == "set") {
        SetExpr s = parse_set_arg();
        out = detail::wrap_invalid(head, [&] { return Subseq::from_set(s, stem); });
      } else {
        DslLexer::fail_at(t, "expected shift or set(...) after '+'");
      }
    } else {
      out = detail::wrap_invalid(head, [&] { return Subseq::stem_only(stem); });
    }
  } else {
    DslLexer::fail_at(head, "unknown subsequence '" + head.text + "' (identity, set(S), stem[...])");
  }
  lx.expect_end();
  return out;
}

inline Perm parse_perm(std::string_view text) {
  DslLexer lx(text);
  const Token head = lx.expect_ident();
  Perm out = Perm::identity();
  if (head.text == "identity") {
    out = Perm::identity();
  } else if (head.text == "swap-pairs") {
    out = Perm::swap_pairs();
  } else if (head.text == "perm") {
    auto stem = detail::parse_index_list(lx);
    if (lx.at_punct('+')) {
      lx.next();
      const Token t = lx.expect_ident();
      if (t.text == "identity") out = detail::wrap_invalid(head, [&] { return Perm::with_identity_tail(stem); });
      else if (t.text == "swap-pairs") out = detail::wrap_invalid(head, [&] { return Perm::swap_pairs(stem); });
      else DslLexer::fail_at(t, "expected identity or swap-pairs after '+'");
    } else {
      out = detail::wrap_invalid(head, [&] { return Perm::stem_only(stem); });
    }
  } else {
    DslLexer::fail_at(head, "unknown permutation '" + head.text + "' (identity, swap-pairs, perm[...])");
  }
  lx.expect_end();
  return out;
}

}  // namespace idealgames
