#pragma once

// Described subsets of N = {1, 2, 3, ...} closed under Boolean operations.
//
// A SetExpr is an immutable expression tree; copies share nodes. Membership
// is exact and total. Complement is taken relative to N, so 0 never belongs
// to any set.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "idealgames/error.hpp"
#include "idealgames/generators.hpp"
#include "idealgames/nat.hpp"

namespace idealgames {

struct Selector {
  enum class Kind { All, Even, Explicit };
  Kind kind = Kind::All;
  std::vector<Index> indices;  // sorted, Explicit only

  static Selector all() { return {}; }
  static Selector even() { return {Kind::Even, {}}; }
  static Selector explicit_list(std::vector<Index> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (!idx.empty() && idx.front() == 0) throw Error(Errc::InvalidArgument, "interval indices start at 1");
    return {Kind::Explicit, std::move(idx)};
  }

  bool selects(Index j) const {
    switch (kind) {
      case Kind::All: return true;
      case Kind::Even: return j % 2 == 0;
      case Kind::Explicit: return std::binary_search(indices.begin(), indices.end(), j);
    }
    return false;
  }

  bool operator==(const Selector&) const = default;
};

class SetExpr;

namespace setnode {
struct Finite { std::vector<Nat> elems; };
struct Arith { Nat first; Nat step; };
struct Schedule { GeneratorPtr gen; Selector sel; };
struct Points { GeneratorPtr gen; };
struct Tail { Nat from; };
struct Union;
struct Intersect;
struct Complement;
}  // namespace setnode

class SetExpr {
 public:
  using FiniteNode = setnode::Finite;
  using ArithNode = setnode::Arith;
  using ScheduleNode = setnode::Schedule;
  using PointsNode = setnode::Points;
  using TailNode = setnode::Tail;
  using UnionNode = setnode::Union;
  using IntersectNode = setnode::Intersect;
  using ComplementNode = setnode::Complement;
  using Node = std::variant<FiniteNode, ArithNode, ScheduleNode, PointsNode, TailNode, UnionNode, IntersectNode,
                            ComplementNode>;

  static SetExpr finite(std::vector<Nat> elems);
  static SetExpr finite_indices(const std::vector<Index>& elems) {
    return finite(std::vector<Nat>(elems.begin(), elems.end()));
  }
  static SetExpr empty() { return finite({}); }
  static SetExpr arith(Nat first, Nat step);
  static SetExpr schedule(GeneratorPtr gen, Selector sel = Selector::all());
  // {iota_n : n >= 1}; membership is exact but the node is outside the symbolic fragment.
  static SetExpr points(GeneratorPtr gen);
  static SetExpr tail(Nat from);
  static SetExpr all() { return tail(1); }
  static SetExpr unite(SetExpr a, SetExpr b);
  static SetExpr intersect(SetExpr a, SetExpr b);
  static SetExpr complement(SetExpr a);
  // [lo, hi) as inter(tail(lo), compl(tail(hi))).
  static SetExpr range(Nat lo, Nat hi) {
    if (lo < 1) lo = 1;
    if (hi <= lo) return empty();
    return intersect(tail(lo), complement(tail(hi)));
  }
  static SetExpr odds() { return arith(1, 2); }
  static SetExpr evens() { return arith(2, 2); }

  const Node& node() const;

  bool contains(Nat n) const;

  // mask[n] for 0 <= n <= N (mask[0] is always 0).
  std::vector<char> mask(Index N) const {
    std::vector<char> out(N + 1, 0);
    fill_mask(out, N);
    out[0] = 0;
    return out;
  }

 private:
  explicit SetExpr(Node n);
  void fill_mask(std::vector<char>& out, Index N) const;

  std::shared_ptr<const Node> node_;
};

namespace setnode {
struct Union { SetExpr left, right; };
struct Intersect { SetExpr left, right; };
struct Complement { SetExpr inner; };
}  // namespace setnode

inline const SetExpr::Node& SetExpr::node() const { return *node_; }

inline SetExpr::SetExpr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

inline SetExpr SetExpr::finite(std::vector<Nat> elems) {
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  if (!elems.empty() && elems.front() == 0) throw Error(Errc::InvalidArgument, "0 is not a positive integer");
  return SetExpr(FiniteNode{std::move(elems)});
}
inline SetExpr SetExpr::arith(Nat first, Nat step) {
  if (first < 1 || step < 1) throw Error(Errc::InvalidArgument, "ap(a,d) needs a >= 1 and d >= 1");
  return SetExpr(ArithNode{first, step});
}
inline SetExpr SetExpr::schedule(GeneratorPtr gen, Selector sel) {
  if (!gen) throw Error(Errc::InvalidArgument, "null generator");
  return SetExpr(ScheduleNode{std::move(gen), std::move(sel)});
}
inline SetExpr SetExpr::points(GeneratorPtr gen) {
  if (!gen) throw Error(Errc::InvalidArgument, "null generator");
  return SetExpr(PointsNode{std::move(gen)});
}
inline SetExpr SetExpr::tail(Nat from) {
  if (from < 1) throw Error(Errc::InvalidArgument, "tail(k) needs k >= 1");
  return SetExpr(TailNode{from});
}
inline SetExpr SetExpr::unite(SetExpr a, SetExpr b) { return SetExpr(UnionNode{std::move(a), std::move(b)}); }
inline SetExpr SetExpr::intersect(SetExpr a, SetExpr b) { return SetExpr(IntersectNode{std::move(a), std::move(b)}); }
inline SetExpr SetExpr::complement(SetExpr a) { return SetExpr(ComplementNode{std::move(a)}); }

namespace detail {

struct ContainsVisitor {
  Nat n;
  bool operator()(const setnode::Finite& f) const { return std::binary_search(f.elems.begin(), f.elems.end(), n); }
  bool operator()(const setnode::Arith& a) const { return n >= a.first && (n - a.first) % a.step == 0; }
  bool operator()(const setnode::Schedule& s) const {
    const Index j = s.gen->block_of(n);
    return j != 0 && s.sel.selects(j);
  }
  bool operator()(const setnode::Points& p) const {
    const Index j = p.gen->block_of(n);
    return j != 0 && p.gen->at(j) == n;
  }
  bool operator()(const setnode::Tail& t) const { return n >= t.from; }
  bool operator()(const setnode::Union& u) const { return u.left.contains(n) || u.right.contains(n); }
  bool operator()(const setnode::Intersect& i) const { return i.left.contains(n) && i.right.contains(n); }
  bool operator()(const setnode::Complement& c) const { return !c.inner.contains(n); }
};

struct MaskVisitor {
  std::vector<char>& out;
  Index N;

  void operator()(const setnode::Finite& f) const {
    std::fill(out.begin(), out.end(), 0);
    for (Nat e : f.elems) {
      if (e > N) break;
      out[static_cast<Index>(e)] = 1;
    }
  }
  void operator()(const setnode::Arith& a) const {
    std::fill(out.begin(), out.end(), 0);
    for (Nat n = a.first; n <= N; n += a.step) out[static_cast<Index>(n)] = 1;
  }
  void operator()(const setnode::Schedule& s) const {
    std::fill(out.begin(), out.end(), 0);
    Index j = 1;
    Nat lo = s.gen->at(1);
    while (lo <= N) {
      const Nat hi = s.gen->at(j + 1);
      if (s.sel.selects(j)) {
        const Index end = static_cast<Index>(std::min<Nat>(hi, static_cast<Nat>(N) + 1));
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(lo), out.begin() + static_cast<std::ptrdiff_t>(end), 1);
      }
      lo = hi;
      ++j;
    }
  }
  void operator()(const setnode::Points& p) const {
    std::fill(out.begin(), out.end(), 0);
    for (Index j = 1;; ++j) {
      const Nat v = p.gen->at(j);
      if (v > N) break;
      out[static_cast<Index>(v)] = 1;
    }
  }
  void operator()(const setnode::Tail& t) const {
    std::fill(out.begin(), out.end(), 0);
    for (Nat n = t.from; n <= N; ++n) out[static_cast<Index>(n)] = 1;
  }
  void operator()(const setnode::Union& u) const {
    std::vector<char> rhs(N + 1, 0);
    std::visit(MaskVisitor{out, N}, u.left.node());
    std::visit(MaskVisitor{rhs, N}, u.right.node());
    for (Index n = 0; n <= N; ++n) out[n] = out[n] | rhs[n];
  }
  void operator()(const setnode::Intersect& i) const {
    std::vector<char> rhs(N + 1, 0);
    std::visit(MaskVisitor{out, N}, i.left.node());
    std::visit(MaskVisitor{rhs, N}, i.right.node());
    for (Index n = 0; n <= N; ++n) out[n] = out[n] & rhs[n];
  }
  void operator()(const setnode::Complement& c) const {
    std::visit(MaskVisitor{out, N}, c.inner.node());
    for (Index n = 0; n <= N; ++n) out[n] = !out[n];
  }
};

}  // namespace detail

inline bool SetExpr::contains(Nat n) const {
  if (n == 0) return false;
  return std::visit(detail::ContainsVisitor{n}, *node_);
}

inline void SetExpr::fill_mask(std::vector<char>& out, Index N) const { std::visit(detail::MaskVisitor{out, N}, *node_); }

inline bool member(const SetExpr& s, Nat n) { return s.contains(n); }

// { n <= N : n in S }, strictly increasing.
inline std::vector<Index> prefix(const SetExpr& s, Index N) {
  const auto m = s.mask(N);
  std::vector<Index> out;
  for (Index n = 1; n <= N; ++n)
    if (m[n]) out.push_back(n);
  return out;
}

inline Index count(const SetExpr& s, Index N) {
  const auto m = s.mask(N);
  return static_cast<Index>(std::count(m.begin() + 1, m.end(), 1));
}

// ---------------------------------------------------------------------------
// Textual form

inline std::string to_dsl(const SetExpr& s);

namespace detail {

inline std::string selector_dsl(const Selector& sel) {
  switch (sel.kind) {
    case Selector::Kind::All: return "";
    case Selector::Kind::Even: return ",even";
    case Selector::Kind::Explicit: {
      std::string out = ",idx{";
      for (std::size_t i = 0; i < sel.indices.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(sel.indices[i]);
      }
      return out + "}";
    }
  }
  return "";
}

}  // namespace detail

inline std::string to_dsl(const SetExpr& s) {
  struct V {
    std::string operator()(const SetExpr::FiniteNode& f) const {
      std::string out = "finite{";
      for (std::size_t i = 0; i < f.elems.size(); ++i) {
        if (i) out += ",";
        out += to_string(f.elems[i]);
      }
      return out + "}";
    }
    std::string operator()(const SetExpr::ArithNode& a) const {
      return "ap(" + to_string(a.first) + "," + to_string(a.step) + ")";
    }
    std::string operator()(const SetExpr::ScheduleNode& n) const {
      return "isch(" + n.gen->name() + detail::selector_dsl(n.sel) + ")";
    }
    std::string operator()(const SetExpr::PointsNode& p) const { return "pts(" + p.gen->name() + ")"; }
    std::string operator()(const SetExpr::TailNode& t) const { return "tail(" + to_string(t.from) + ")"; }
    std::string operator()(const SetExpr::UnionNode& u) const {
      return "union(" + to_dsl(u.left) + "," + to_dsl(u.right) + ")";
    }
    std::string operator()(const SetExpr::IntersectNode& i) const {
      return "inter(" + to_dsl(i.left) + "," + to_dsl(i.right) + ")";
    }
    std::string operator()(const SetExpr::ComplementNode& c) const { return "compl(" + to_dsl(c.inner) + ")"; }
  };
  return std::visit(V{}, s.node());
}

// ---------------------------------------------------------------------------
// Eventual structure of the decidable fragment.
//
// Beyond a threshold T every expression built from Finite, ArithProg, Tail
// and interval schedules over at most one expanding generator (any number
// of affine ones) is described by a table f(p, r): n belongs iff
// f(parity of n's block under the expanding generator, n mod L). Expanding
// blocks eventually contain every residue mod L and both parities recur, so
// the set is infinite iff some table entry is set.

struct EventualPattern {
  Index period = 1;
  GeneratorPtr expanding;          // null when no expanding schedule occurs
  std::vector<char> table[2];      // table[p][r]; p is the block-index parity
  Nat threshold = 1;               // pattern holds for all n >= threshold

  bool finite() const {
    for (const auto& t : table)
      for (char c : t)
        if (c) return false;
    return true;
  }

  // Fraction of residues present on blocks of parity p.
  double share(int p) const {
    const auto& t = table[expanding ? p : 0];
    return static_cast<double>(std::count(t.begin(), t.end(), 1)) / static_cast<double>(period);
  }
};

namespace detail {

inline constexpr Index kMaxPeriod = 1'000'000;

struct PatternScan {
  Index period = 1;
  GeneratorPtr expanding;
  Nat threshold = 1;

  void add_period(Index d) {
    const Index l = std::lcm(period, d);
    if (l > kMaxPeriod || l < period) throw Error(Errc::OutsideFragment, "eventual period exceeds 10^6");
    period = l;
  }
  void bump(Nat t) { threshold = std::max(threshold, t); }

  void scan(const SetExpr& s) {
    std::visit(
        [&](const auto& nd) {
          using T = std::decay_t<decltype(nd)>;
          if constexpr (std::is_same_v<T, SetExpr::FiniteNode>) {
            if (!nd.elems.empty()) bump(sat_add(nd.elems.back(), 1));
          } else if constexpr (std::is_same_v<T, SetExpr::ArithNode>) {
            if (nd.step > kMaxPeriod) throw Error(Errc::OutsideFragment, "progression step exceeds 10^6");
            add_period(static_cast<Index>(nd.step));
            bump(nd.first);
          } else if constexpr (std::is_same_v<T, SetExpr::ScheduleNode>) {
            bump(nd.gen->at(1));
            if (nd.sel.kind == Selector::Kind::Explicit && !nd.sel.indices.empty())
              bump(nd.gen->at(nd.sel.indices.back() + 1));
            if (nd.gen->is_affine()) {
              if (nd.sel.kind == Selector::Kind::Even) add_period(2 * static_cast<Index>(nd.gen->slope()));
            } else if (nd.sel.kind != Selector::Kind::Explicit) {
              if (expanding && expanding.get() != nd.gen.get())
                throw Error(Errc::OutsideFragment, "more than one expanding interval schedule");
              expanding = nd.gen;
            }
          } else if constexpr (std::is_same_v<T, SetExpr::PointsNode>) {
            throw Error(Errc::OutsideFragment, "pts(" + nd.gen->name() + ") is not symbolically decidable");
          } else if constexpr (std::is_same_v<T, SetExpr::TailNode>) {
            bump(nd.from);
          } else if constexpr (std::is_same_v<T, SetExpr::ComplementNode>) {
            scan(nd.inner);
          } else {
            scan(nd.left);
            scan(nd.right);
          }
        },
        s.node());
  }
};

inline bool eval_eventual(const SetExpr& s, int parity, Index r, Index period) {
  return std::visit(
      [&](const auto& nd) -> bool {
        using T = std::decay_t<decltype(nd)>;
        if constexpr (std::is_same_v<T, SetExpr::FiniteNode>) {
          return false;
        } else if constexpr (std::is_same_v<T, SetExpr::ArithNode>) {
          const Index d = static_cast<Index>(nd.step);
          return r % d == static_cast<Index>(nd.first % nd.step);
        } else if constexpr (std::is_same_v<T, SetExpr::ScheduleNode>) {
          switch (nd.sel.kind) {
            case Selector::Kind::All: return true;
            case Selector::Kind::Explicit: return false;
            case Selector::Kind::Even:
              if (nd.gen->is_affine()) {
                const std::int64_t a = nd.gen->slope(), b = nd.gen->offset();
                const std::int64_t m = 2 * a;
                const std::int64_t rr = static_cast<std::int64_t>(r % static_cast<Index>(m));
                const std::int64_t shifted = ((rr - b) % m + m) % m;
                return shifted / a == 0;
              }
              return parity == 0;
          }
          return false;
        } else if constexpr (std::is_same_v<T, SetExpr::PointsNode>) {
          throw Error(Errc::OutsideFragment, "pts() in eventual evaluation");
        } else if constexpr (std::is_same_v<T, SetExpr::TailNode>) {
          return true;
        } else if constexpr (std::is_same_v<T, SetExpr::UnionNode>) {
          return eval_eventual(nd.left, parity, r, period) || eval_eventual(nd.right, parity, r, period);
        } else if constexpr (std::is_same_v<T, SetExpr::IntersectNode>) {
          return eval_eventual(nd.left, parity, r, period) && eval_eventual(nd.right, parity, r, period);
        } else {
          return !eval_eventual(nd.inner, parity, r, period);
        }
      },
      s.node());
}

}  // namespace detail

// Throws Error(OutsideFragment) for expressions outside the decidable fragment.
inline EventualPattern analyze(const SetExpr& s) {
  detail::PatternScan scan;
  scan.scan(s);
  EventualPattern pat;
  pat.period = scan.period;
  pat.expanding = scan.expanding;
  pat.threshold = scan.threshold;
  const int parities = pat.expanding ? 2 : 1;
  for (int p = 0; p < parities; ++p) {
    pat.table[p].assign(pat.period, 0);
    for (Index r = 0; r < pat.period; ++r) pat.table[p][r] = detail::eval_eventual(s, p, r, pat.period) ? 1 : 0;
  }
  return pat;
}

}  // namespace idealgames
