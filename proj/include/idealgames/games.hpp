#pragma once

// The Laflamme game and the generic-element builders for Sigma and Pi.
//
// In the game, Player I plays cofinite sets [c_k, inf) with c_k
// nondecreasing and Player II answers with finite F_k inside [c_k, inf);
// Player II wins when the union of the F_k is not in the ideal.
//
// The builders interleave game rounds with cylinder refinement. Cylinder
// sizes are measured in stem positions: the window of round k is
// [max(c_k, |B_{k-1}| + 1), |B_k|], so windows of distinct rounds are
// disjoint and every position outside all windows is a filler position.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/error.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/rational.hpp"
#include "idealgames/rng.hpp"
#include "idealgames/seqspace.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

namespace detail {

// Malformed transcript JSON surfaces as a Parse error.
template <typename F>
auto json_guard(const char* what, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

// Finite union of half-open ranges [lo, hi), kept sorted, disjoint and
// non-adjacent so that equal sets have equal representations.
class RangeSet {
 public:
  RangeSet() = default;

  static RangeSet range(Nat lo, Nat hi) {
    RangeSet r;
    if (lo < 1) lo = 1;
    if (lo < hi) r.ranges_.emplace_back(lo, hi);
    return r;
  }

  static RangeSet from_sorted(const std::vector<Index>& xs) {
    RangeSet r;
    for (Index v : xs) {
      if (v == 0) throw Error(Errc::InvalidArgument, "sets of positions start at 1");
      if (!r.ranges_.empty() && static_cast<Nat>(v) < r.ranges_.back().second)
        throw Error(Errc::InvalidArgument, "positions must be strictly increasing");
      if (!r.ranges_.empty() && r.ranges_.back().second == v) r.ranges_.back().second = static_cast<Nat>(v) + 1;
      else r.ranges_.emplace_back(v, static_cast<Nat>(v) + 1);
    }
    return r;
  }

  static RangeSet unite(const RangeSet& a, const RangeSet& b) {
    std::vector<std::pair<Nat, Nat>> all;
    std::merge(a.ranges_.begin(), a.ranges_.end(), b.ranges_.begin(), b.ranges_.end(), std::back_inserter(all));
    RangeSet r;
    for (const auto& [lo, hi] : all) {
      if (!r.ranges_.empty() && lo <= r.ranges_.back().second) r.ranges_.back().second = std::max(r.ranges_.back().second, hi);
      else r.ranges_.emplace_back(lo, hi);
    }
    return r;
  }

  const std::vector<std::pair<Nat, Nat>>& ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }
  Nat min() const {
    if (ranges_.empty()) throw Error(Errc::Range, "min of an empty set");
    return ranges_.front().first;
  }
  Nat size() const {
    Nat s = 0;
    for (const auto& [lo, hi] : ranges_) s = sat_add(s, hi - lo);
    return s;
  }
  bool contains(Nat n) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), n, [](Nat v, const auto& r) { return v < r.first; });
    return it != ranges_.begin() && n < std::prev(it)->second;
  }

  std::vector<Index> elements_upto(Index N) const {
    std::vector<Index> out;
    for (const auto& [lo, hi] : ranges_) {
      if (lo > N) break;
      const Nat end = std::min<Nat>(hi, static_cast<Nat>(N) + 1);
      for (Nat n = lo; n < end; ++n) out.push_back(static_cast<Index>(n));
    }
    return out;
  }

  // Balanced union of range nodes (keeps expression depth logarithmic).
  SetExpr to_expr() const { return build(0, ranges_.size()); }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [lo, hi] : ranges_) j.push_back({nat_to_json(lo), nat_to_json(hi)});
    return j;
  }
  static RangeSet from_json(const nlohmann::json& j) {
    RangeSet r;
    for (const auto& e : j) {
      if (!e.is_array() || e.size() != 2) throw Error(Errc::Parse, "ranges are [lo, hi] pairs");
      r = unite(r, range(nat_from_json(e[0]), nat_from_json(e[1])));
    }
    return r;
  }

  bool operator==(const RangeSet&) const = default;

 private:
  SetExpr build(std::size_t a, std::size_t b) const {
    if (a == b) return SetExpr::empty();
    if (b - a == 1) return SetExpr::range(ranges_[a].first, ranges_[a].second);
    const std::size_t mid = a + (b - a) / 2;
    return SetExpr::unite(build(a, mid), build(mid, b));
  }

  std::vector<std::pair<Nat, Nat>> ranges_;
};

struct Round {
  Index k = 0;
  Nat c = 1;
  RangeSet F;
  std::optional<Cylinder> A, B;

  // Cylinders are prefixes of the transcript's final stem and are stored as
  // lengths.
  nlohmann::json to_json() const {
    auto len = [](const std::optional<Cylinder>& c) {
      return c ? nlohmann::json{{"len", c->stem.size()}} : nlohmann::json(nullptr);
    };
    return {{"k", k}, {"c", nat_to_json(c)}, {"F", F.to_json()}, {"A", len(A)}, {"B", len(B)}};
  }
  static Round from_json(const nlohmann::json& j, std::optional<Space> space, const std::vector<Index>& stem) {
    Round r;
    r.k = j.at("k").get<Index>();
    r.c = nat_from_json(j.at("c"));
    r.F = RangeSet::from_json(j.at("F"));
    auto prefix = [&](const nlohmann::json& c) -> std::optional<Cylinder> {
      if (c.is_null()) return std::nullopt;
      const Index len = c.at("len").get<Index>();
      if (!space || len > stem.size())
        throw Error(Errc::Parse, "round " + std::to_string(r.k) + ": cylinder is not a prefix of the stem");
      return Cylinder{*space, std::vector<Index>(stem.begin(), stem.begin() + static_cast<std::ptrdiff_t>(len))};
    };
    r.A = prefix(j.at("A"));
    r.B = prefix(j.at("B"));
    return r;
  }
};

// ---------------------------------------------------------------------------
// Player I

class PlayerI {
 public:
  enum class Kind { Linear, Exponential, RandomJump, Schedule, Custom };
  using Fn = std::function<Nat(Index k, const std::vector<Round>& history)>;

  static PlayerI linear(Nat step) {
    if (step < 1) throw Error(Errc::Range, "linear step must be >= 1");
    PlayerI p(Kind::Linear);
    p.step_ = step;
    return p;
  }
  static PlayerI exponential() { return PlayerI(Kind::Exponential); }
  // c_k = c_{k-1} + jump_k capped at max_c, jumps drawn from a per-round seed.
  static PlayerI random_jump(std::uint64_t seed, Nat max_c = 1'000'000) {
    if (max_c < 1 || !fits_index(max_c)) throw Error(Errc::Range, "random-jump cap must be in [1, 2^64)");
    PlayerI p(Kind::RandomJump);
    p.seed_ = seed;
    p.max_c_ = max_c;
    return p;
  }
  // c_k = list[k-1]; the last value repeats once the list runs out.
  static PlayerI schedule(std::vector<Nat> list) {
    if (list.empty()) throw Error(Errc::Range, "schedule needs at least one value");
    PlayerI p(Kind::Schedule);
    p.list_ = std::move(list);
    return p;
  }
  static PlayerI custom(std::string name, Fn fn) {
    PlayerI p(Kind::Custom);
    p.name_ = std::move(name);
    p.fn_ = std::move(fn);
    return p;
  }

  Kind kind() const { return kind_; }

  Nat move(Index k, const std::vector<Round>& history) const {
    switch (kind_) {
      case Kind::Linear: return sat_mul(step_, k);
      case Kind::Exponential: return k >= 127 ? kNatMax : Nat{1} << k;
      case Kind::RandomJump: {
        std::mt19937_64 rng(derive_seed(seed_, k));
        const Index span = static_cast<Index>(max_c_ / 25) + 1;
        const Nat prev = history.empty() ? 1 : history.back().c;
        return std::min<Nat>(max_c_, prev + rng() % span);
      }
      case Kind::Schedule: return list_[std::min<std::size_t>(k, list_.size()) - 1];
      case Kind::Custom: return fn_(k, history);
    }
    return 1;
  }

  nlohmann::json to_json() const {
    switch (kind_) {
      case Kind::Linear: return {{"kind", "linear"}, {"step", nat_to_json(step_)}};
      case Kind::Exponential: return {{"kind", "exp"}};
      case Kind::RandomJump: return {{"kind", "random-jump"}, {"seed", seed_}, {"max", nat_to_json(max_c_)}};
      case Kind::Schedule: {
        nlohmann::json l = nlohmann::json::array();
        for (Nat v : list_) l.push_back(nat_to_json(v));
        return {{"kind", "schedule"}, {"list", l}};
      }
      case Kind::Custom: return {{"kind", "custom"}, {"name", name_}};
    }
    return nullptr;
  }

  static PlayerI from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return linear(nat_from_json(j.at("step")));
    if (kind == "exp") return exponential();
    if (kind == "random-jump") return random_jump(j.at("seed").get<std::uint64_t>(), nat_from_json(j.at("max")));
    if (kind == "schedule") {
      std::vector<Nat> l;
      for (const auto& v : j.at("list")) l.push_back(nat_from_json(v));
      return schedule(std::move(l));
    }
    throw Error(Errc::InvalidArgument, "Player I strategy '" + kind + "' cannot be rebuilt from a transcript");
  }

  // linear[:step] | exp | random-jump:seed[:max] | schedule:c1,c2,...
  static PlayerI parse(std::string_view text) {
    const std::string s(text);
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
    auto split = [](const std::string& t, char sep) {
      std::vector<std::string> out;
      std::stringstream ss(t);
      std::string item;
      while (std::getline(ss, item, sep)) out.push_back(item);
      return out;
    };
    if (head == "linear") return linear(rest.empty() ? 100 : parse_nat(rest));
    if (head == "exp" && rest.empty()) return exponential();
    if (head == "random-jump") {
      const auto parts = split(rest, ':');
      if (parts.empty() || parts.size() > 2) throw Error(Errc::Parse, "random-jump:SEED[:MAX]");
      const Nat seed = parse_nat(parts[0]);
      if (!fits_index(seed)) throw Error(Errc::Range, "seed must fit in 64 bits");
      return random_jump(static_cast<std::uint64_t>(seed), parts.size() == 2 ? parse_nat(parts[1]) : 1'000'000);
    }
    if (head == "schedule") {
      std::vector<Nat> l;
      for (const auto& p : split(rest, ',')) l.push_back(parse_nat(p));
      return schedule(std::move(l));
    }
    throw Error(Errc::Parse, "unknown Player I strategy '" + s + "' (linear[:step], exp, random-jump:seed[:max], schedule:c1,...)");
  }

 private:
  explicit PlayerI(Kind k) : kind_(k) {}
  Kind kind_;
  Nat step_ = 1;
  std::uint64_t seed_ = 0;
  Nat max_c_ = 1'000'000;
  std::vector<Nat> list_;
  std::string name_;
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Player II

class PlayerII {
 public:
  enum class Kind { Talagrand, Empty, Custom };
  using Fn = std::function<RangeSet(Index k, Nat c, const std::vector<Round>& history)>;

  // F_k = [iota_j, iota_{j+1}) for the least unused j with iota_j >= c_k.
  static PlayerII talagrand(GeneratorPtr gen) {
    if (!gen) throw Error(Errc::InvalidArgument, "null generator");
    PlayerII p(Kind::Talagrand);
    p.gen_ = std::move(gen);
    return p;
  }
  static PlayerII talagrand(const TalagrandWitness& w) { return talagrand(w.iota); }
  static PlayerII empty() { return PlayerII(Kind::Empty); }
  static PlayerII custom(std::string name, Fn fn) {
    PlayerII p(Kind::Custom);
    p.name_ = std::move(name);
    p.fn_ = std::move(fn);
    return p;
  }

  Kind kind() const { return kind_; }

  RangeSet move(Index k, Nat c, const std::vector<Round>& history) const {
    switch (kind_) {
      case Kind::Talagrand: {
        const Index j = talagrand_block(c, history);
        return RangeSet::range(gen_->at(j), gen_->at(j + 1));
      }
      case Kind::Empty: return {};
      case Kind::Custom: return fn_(k, c, history);
    }
    return {};
  }

  // The rest of the play this strategy commits to: the Talagrand strategy
  // keeps taking full blocks, so every even-indexed block past the last one
  // played is declared.
  std::optional<SetExpr> declared_tail(const std::vector<Round>& history) const {
    if (kind_ != Kind::Talagrand) return std::nullopt;
    Nat from = gen_->at(1);
    for (const auto& r : history)
      if (!r.F.empty()) from = std::max(from, r.F.ranges().back().second);
    return SetExpr::intersect(SetExpr::schedule(gen_, Selector::even()), SetExpr::tail(from));
  }

  nlohmann::json to_json() const {
    switch (kind_) {
      case Kind::Talagrand: return {{"kind", "talagrand"}, {"generator", gen_->name()}};
      case Kind::Empty: return {{"kind", "empty"}};
      case Kind::Custom: return {{"kind", "custom"}, {"name", name_}};
    }
    return nullptr;
  }
  static PlayerII from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "talagrand") return talagrand(find_generator(j.at("generator").get<std::string>()));
    if (kind == "empty") return empty();
    throw Error(Errc::InvalidArgument, "Player II strategy '" + kind + "' cannot be rebuilt from a transcript");
  }

 private:
  explicit PlayerII(Kind k) : kind_(k) {}

  Index talagrand_block(Nat c, const std::vector<Round>& history) const {
    std::vector<Index> used;
    for (const auto& r : history)
      if (!r.F.empty()) used.push_back(gen_->block_of(r.F.min()));
    std::sort(used.begin(), used.end());
    Index j = gen_->first_at_least(c);
    while (std::binary_search(used.begin(), used.end(), j)) ++j;
    return j;
  }

  Kind kind_;
  GeneratorPtr gen_;
  std::string name_;
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Dense-open sets as refinement oracles: refine(A) must extend A's stem.

struct Ball {
  double center = 0;
  double radius = 1;
  bool contains(double v) const { return std::abs(v - center) < radius; }  // open ball
  nlohmann::json to_json() const { return {{"center", center}, {"radius", radius}}; }
  static Ball from_json(const nlohmann::json& j) {
    Ball b{j.at("center").get<double>(), j.at("radius").get<double>()};
    if (!(b.radius > 0)) throw Error(Errc::Range, "ball radius must be positive");
    return b;
  }
};

namespace detail {

// Least n > after with pred(x_n), scanning at most to the horizon cap.
template <typename Pred>
Index next_index_where(const Sequence& x, Index after, Pred pred, const char* what) {
  const Index cap = horizon_cap();
  for (Index n = after + 1; n <= cap; ++n)
    if (pred(n)) return n;
  (void)x;
  throw Error(Errc::ExhaustedIndices, std::string(what) + " has no element in (" + std::to_string(after) + ", " +
                                          std::to_string(cap) + "]");
}

// Increasing scan over values not yet in a stem (for Pi choices).
class UnusedScan {
 public:
  explicit UnusedScan(const std::vector<Index>& stem) {
    for (Index v : stem) mark(v);
  }
  void mark(Index v) {
    if (v >= used_.size()) used_.resize(std::max<std::size_t>(v + 1, 2 * used_.size()), 0);
    used_[v] = 1;
  }
  bool used(Index v) const { return v < used_.size() && used_[v]; }

  // Smallest unused v >= 1 with pred(v).
  template <typename Pred>
  Index smallest(Pred pred, const char* what) const {
    const Index cap = horizon_cap();
    for (Index v = 1; v <= cap; ++v)
      if (!used(v) && pred(v)) return v;
    throw Error(Errc::ExhaustedIndices, std::string(what) + " has no unused element below the horizon cap");
  }

 private:
  std::vector<char> used_;
};

}  // namespace detail

class Oracle {
 public:
  enum class Kind { Trivial, RandomExtension, HitInterval, Force, Custom };
  using Fn = std::function<Cylinder(const Cylinder& A, Index k, const Sequence& x)>;

  static Oracle trivial() { return Oracle(Kind::Trivial); }
  static Oracle random_extension(std::uint64_t seed) {
    Oracle o(Kind::RandomExtension);
    o.seed_ = seed;
    return o;
  }
  // Extends the stem through the next full block [iota_j, iota_{j+1}) of
  // positions (j least with iota_j > |stem|), every new position mapped into
  // the hit-set {n : |x_n - eta| < radius}.
  static Oracle hit_interval(Ball ball, GeneratorPtr gen) {
    Oracle o(Kind::HitInterval);
    o.ball_ = ball;
    o.gen_ = std::move(gen);
    return o;
  }
  // Appends positive terms until the partial sum of x along the stem is >= 1.
  static Oracle force() { return Oracle(Kind::Force); }
  static Oracle custom(std::string name, Fn fn) {
    Oracle o(Kind::Custom);
    o.name_ = std::move(name);
    o.fn_ = std::move(fn);
    return o;
  }

  Kind kind() const { return kind_; }

  Cylinder refine(const Cylinder& A, Index k, const Sequence& x) const {
    switch (kind_) {
      case Kind::Trivial: return A;
      case Kind::RandomExtension: return random_extend(A, k);
      case Kind::HitInterval: return hit_extend(A, x);
      case Kind::Force: return force_extend(A, x);
      case Kind::Custom: return fn_(A, k, x);
    }
    return A;
  }

  nlohmann::json to_json() const {
    switch (kind_) {
      case Kind::Trivial: return {{"kind", "trivial"}};
      case Kind::RandomExtension: return {{"kind", "random-extension"}, {"seed", seed_}};
      case Kind::HitInterval: return {{"kind", "hit-interval"}, {"ball", ball_.to_json()}, {"generator", gen_->name()}};
      case Kind::Force: return {{"kind", "force"}};
      case Kind::Custom: return {{"kind", "custom"}, {"name", name_}};
    }
    return nullptr;
  }
  static Oracle from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "trivial") return trivial();
    if (kind == "random-extension") return random_extension(j.at("seed").get<std::uint64_t>());
    if (kind == "hit-interval")
      return hit_interval(Ball::from_json(j.at("ball")), find_generator(j.at("generator").get<std::string>()));
    if (kind == "force") return force();
    throw Error(Errc::InvalidArgument, "oracle '" + kind + "' cannot be rebuilt from a transcript");
  }

  // trivial | random-extension:seed | force | hit-interval:center:radius[:generator]
  static Oracle parse(std::string_view text) {
    const std::string s(text);
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw Error(Errc::Parse, "empty oracle");
    if (parts[0] == "trivial" && parts.size() == 1) return trivial();
    if (parts[0] == "force" && parts.size() == 1) return force();
    if (parts[0] == "random-extension" && parts.size() == 2) {
      const Nat seed = parse_nat(parts[1]);
      if (!fits_index(seed)) throw Error(Errc::Range, "seed must fit in 64 bits");
      return random_extension(static_cast<std::uint64_t>(seed));
    }
    if (parts[0] == "hit-interval" && (parts.size() == 3 || parts.size() == 4)) {
      Ball b{parse_rational(parts[1]).get_d(), parse_rational(parts[2]).get_d()};
      if (!(b.radius > 0)) throw Error(Errc::Range, "ball radius must be positive");
      return hit_interval(b, find_generator(parts.size() == 4 ? parts[3] : "pow2"));
    }
    throw Error(Errc::Parse, "unknown oracle '" + s + "' (trivial, force, random-extension:seed, hit-interval:c:r[:gen])");
  }

 private:
  explicit Oracle(Kind k) : kind_(k) {}

  Cylinder random_extend(const Cylinder& A, Index k) const {
    std::mt19937_64 rng(derive_seed(seed_, k));
    Cylinder B = A;
    const Index len = 1 + rng() % 8;
    if (A.space == Space::Sigma) {
      Index last = A.stem.empty() ? 0 : A.stem.back();
      for (Index i = 0; i < len; ++i) {
        last += 1 + rng() % 4;
        B.stem.push_back(last);
      }
    } else {
      detail::UnusedScan unused(A.stem);
      const Index span = A.m() + 16;
      for (Index i = 0; i < len; ++i) {
        Index v;
        do v = 1 + rng() % span;
        while (unused.used(v));
        unused.mark(v);
        B.stem.push_back(v);
      }
    }
    return B;
  }

  Cylinder hit_extend(const Cylinder& A, const Sequence& x) const {
    Cylinder B = A;
    const Index len = A.stem.size();
    const Index j = gen_->block_of(len) + 1;
    const Nat end = gen_->at(j + 1);  // positions up to end - 1
    if (end - 1 > horizon_cap()) throw Error(Errc::ExhaustedIndices, "hit-interval block ends past the horizon cap");
    auto hit = [&](Index n) { return ball_.contains(x.eval(n)); };
    if (A.space == Space::Sigma) {
      Index last = A.stem.empty() ? 0 : A.stem.back();
      while (B.stem.size() + 1 < end) {
        last = detail::next_index_where(x, last, hit, "hit-set");
        B.stem.push_back(last);
      }
    } else {
      detail::UnusedScan unused(A.stem);
      Index from = 0;
      while (B.stem.size() + 1 < end) {
        Index v = from + 1;
        const Index cap = horizon_cap();
        while (v <= cap && (unused.used(v) || !hit(v))) ++v;
        if (v > cap) throw Error(Errc::ExhaustedIndices, "hit-set has no unused element below the horizon cap");
        unused.mark(v);
        B.stem.push_back(v);
        from = v;
      }
    }
    return B;
  }

  Cylinder force_extend(const Cylinder& A, const Sequence& x) const {
    if (A.space != Space::Sigma) throw Error(Errc::SpaceMismatch, "the force oracle refines Sigma cylinders only");
    Cylinder B = A;
    Rational s = 0;
    for (Index v : A.stem) s += x.exact(v);
    Index last = A.stem.empty() ? 0 : A.stem.back();
    while (s < 1) {
      last = detail::next_index_where(x, last, [&](Index n) { return x.exact(n) > 0; }, "positive terms");
      s += x.exact(last);
      B.stem.push_back(last);
    }
    return B;
  }

  Kind kind_;
  std::uint64_t seed_ = 0;
  Ball ball_;
  GeneratorPtr gen_;
  std::string name_;
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Transcripts

struct Transcript {
  nlohmann::json header = nlohmann::json::object();  // full configuration, enough to replay
  std::vector<Round> rounds;
  RangeSet unionF;
  std::optional<SetExpr> tail;
  Verdict verdict;
  std::optional<Space> space;       // set when a builder produced a stem
  std::vector<Index> stem;
  std::vector<Index> checkpoints;   // Pi builders

  std::vector<std::string> to_jsonl_lines() const {
    std::vector<std::string> out;
    out.push_back(nlohmann::json{{"header", header}}.dump());
    for (const auto& r : rounds) out.push_back(r.to_json().dump());
    nlohmann::json fin = {{"unionF", unionF.to_json()},
                          {"tail", tail ? nlohmann::json(to_dsl(*tail)) : nlohmann::json(nullptr)},
                          {"verdict", verdict.to_json()},
                          {"space", space ? nlohmann::json(space_name(*space)) : nlohmann::json(nullptr)},
                          {"stem", space ? nlohmann::json(stem) : nlohmann::json(nullptr)}};
    if (space == Space::Pi) fin["checkpoints"] = checkpoints;
    out.push_back(fin.dump());
    return out;
  }

  std::string to_jsonl() const {
    std::string s;
    for (const auto& l : to_jsonl_lines()) s += l + "\n";
    return s;
  }

  static Transcript from_jsonl(const std::vector<std::string>& lines) {
    std::vector<std::string> ls;
    for (const auto& l : lines)
      if (!l.empty()) ls.push_back(l);
    if (ls.size() < 2) throw Error(Errc::Parse, "a transcript has a header line and a final line");
    Transcript t;
    auto parse_line = [](const std::string& l, std::size_t i) {
      try {
        return nlohmann::json::parse(l);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), static_cast<int>(i + 1), 1);
      }
    };
    const auto head = parse_line(ls.front(), 0);
    const auto fin = parse_line(ls.back(), ls.size() - 1);
    return detail::json_guard("malformed transcript", [&] {
      t.header = head.at("header");
      t.unionF = RangeSet::from_json(fin.at("unionF"));
      if (!fin.at("tail").is_null()) t.tail = parse_set(fin.at("tail").get<std::string>());
      t.verdict = Verdict::from_json(fin.at("verdict"));
      if (!fin.at("space").is_null()) {
        t.space = parse_space(fin.at("space").get<std::string>());
        t.stem = fin.at("stem").get<std::vector<Index>>();
        if (fin.contains("checkpoints")) t.checkpoints = fin.at("checkpoints").get<std::vector<Index>>();
      }
      for (std::size_t i = 1; i + 1 < ls.size(); ++i)
        t.rounds.push_back(Round::from_json(parse_line(ls[i], i), t.space, t.stem));
      return t;
    });
  }

  static Transcript from_jsonl(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string l;
    while (std::getline(ss, l)) lines.push_back(l);
    return from_jsonl(lines);
  }

  Subseq sigma() const {
    if (space != Space::Sigma) throw Error(Errc::SpaceMismatch, "transcript has no Sigma stem");
    return Subseq::stem_only(stem);
  }
  Perm pi() const {
    if (space != Space::Pi) throw Error(Errc::SpaceMismatch, "transcript has no Pi stem");
    return Perm::stem_only(stem, nonzero(checkpoints));
  }

  static std::vector<Index> nonzero(std::vector<Index> cps) {
    cps.erase(std::remove(cps.begin(), cps.end(), Index{0}), cps.end());
    return cps;
  }
};

namespace detail {

inline IdealDescriptor ideal_from_json(const nlohmann::json& j) {
  IdealDescriptor d = parse_ideal(j.at("name").get<std::string>());
  const auto& p = j.at("params");
  d.params.theta_low = p.at("theta_low").get<double>();
  d.params.theta_high = p.at("theta_high").get<double>();
  d.params.b_sum = p.at("b_sum").get<double>();
  d.params.c_fin = p.at("c_fin").get<Index>();
  d.params.c_odd = p.at("c_odd").get<Index>();
  d.params.evidence_intervals = p.at("evidence_intervals").get<Index>();
  d.params.validate();
  return d;
}

inline nlohmann::json ideal_to_json(const IdealDescriptor& d) {
  const auto& p = d.params;
  return {{"name", d.name()},
          {"params",
           {{"theta_low", p.theta_low}, {"theta_high", p.theta_high}, {"b_sum", p.b_sum}, {"c_fin", p.c_fin},
            {"c_odd", p.c_odd}, {"evidence_intervals", p.evidence_intervals}}}};
}

inline void check_move(Index k, Nat c, const RangeSet& F, const std::vector<Round>& history) {
  if (c < 1) throw Error(Errc::InvalidMove, "round " + std::to_string(k) + ": c_k must be >= 1");
  if (!history.empty() && c < history.back().c)
    throw Error(Errc::InvalidMove, "round " + std::to_string(k) + ": c_k decreased from " + to_string(history.back().c) +
                                       " to " + to_string(c));
  if (!F.empty() && F.min() < c)
    throw Error(Errc::InvalidMove, "round " + std::to_string(k) + ": F_k contains " + to_string(F.min()) +
                                       " below c_k = " + to_string(c));
}

// Horizon verdict of the played union up to the stem length.
inline Verdict stem_verdict(const IdealDescriptor& I, const RangeSet& unionF, Index len) {
  if (len < kMinHorizon) return {VerdictValue::Undecided, false, len, "stem shorter than 100 positions"};
  return classify_indices(I, unionF.elements_upto(len), len);
}

inline void check_extension(const Cylinder& A, const Cylinder& B, Index k) {
  if (B.space != A.space)
    throw Error(Errc::OracleViolation, "round " + std::to_string(k) + ": oracle changed the space");
  if (!A.contains(B))
    throw Error(Errc::OracleViolation, "round " + std::to_string(k) + ": refinement does not extend the stem");
  try {
    if (B.space == Space::Sigma) Cylinder::sigma(B.stem);
    else Cylinder::pi(B.stem);
  } catch (const Error& e) {
    throw Error(Errc::OracleViolation, "round " + std::to_string(k) + ": refinement is not a valid stem: " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The game

inline Transcript play_laflamme(const IdealDescriptor& I, const PlayerI& one, const PlayerII& two, Index R) {
  if (R < 1) throw Error(Errc::Range, "the game needs R >= 1 rounds");
  Transcript t;
  t.header = {{"kind", "laflamme"}, {"ideal", detail::ideal_to_json(I)}, {"strat_i", one.to_json()},
              {"strat_ii", two.to_json()}, {"rounds", R}};
  for (Index k = 1; k <= R; ++k) {
    const Nat c = one.move(k, t.rounds);
    detail::check_move(k, c, {}, t.rounds);
    RangeSet F = two.move(k, c, t.rounds);
    detail::check_move(k, c, F, t.rounds);
    t.unionF = RangeSet::unite(t.unionF, F);
    t.rounds.push_back({k, c, std::move(F), std::nullopt, std::nullopt});
  }
  t.tail = two.declared_tail(t.rounds);
  const SetExpr played = t.tail ? SetExpr::unite(t.unionF.to_expr(), *t.tail) : t.unionF.to_expr();
  t.verdict = classify_auto(I, played, kMinHorizon);
  return t;
}

// ---------------------------------------------------------------------------
// Witness-mode builders: a round-robin over (eta, m) pairs, each round
// mapping one full block [iota_k, iota_{k+1}) of positions into the open
// ball of radius 1/m around eta. Block indices strictly increase; positions
// before a block are filled with consecutive (Sigma) or smallest unused (Pi)
// values.

struct WitnessPlan {
  std::vector<double> etas;
  Index m_max = 1;

  // (eta, m) ordered by m, then by position in etas.
  std::vector<std::pair<double, Index>> schedule() const {
    std::vector<std::pair<double, Index>> out;
    for (Index m = 1; m <= m_max; ++m)
      for (double eta : etas) out.emplace_back(eta, m);
    return out;
  }

  nlohmann::json to_json() const { return {{"etas", etas}, {"m_max", m_max}}; }
  static WitnessPlan from_json(const nlohmann::json& j) {
    return {j.at("etas").get<std::vector<double>>(), j.at("m_max").get<Index>()};
  }
};

namespace detail {

inline Transcript build_witness(Space space, const Sequence& x, const IdealDescriptor& I, const WitnessPlan& plan,
                                Index R) {
  if (plan.etas.empty() || plan.m_max < 1) throw Error(Errc::Range, "witness mode needs etas and m_max >= 1");
  const TalagrandWitness w = talagrand_witness(I);
  Transcript t;
  t.header = {{"kind", space == Space::Sigma ? "sigma-witness" : "pi-witness"},
              {"ideal", ideal_to_json(I)},
              {"seq", x.to_dsl()},
              {"plan", plan.to_json()},
              {"rounds", R}};
  t.space = space;
  const auto sched = plan.schedule();
  std::vector<Index> stem;
  UnusedScan unused(stem);
  Index block = 0;
  const Index cap = horizon_cap();
  auto push = [&](Index v) {
    stem.push_back(v);
    if (space == Space::Pi) unused.mark(v);
  };
  for (Index k = 1; k <= R; ++k) {
    const auto [eta, m] = sched[(k - 1) % sched.size()];
    const Ball ball{eta, 1.0 / static_cast<double>(m)};
    const Index len = stem.size();
    block = std::max(block + 1, w.iota->block_of(len) + 1);
    const Nat lo = w.iota->at(block), hi = w.iota->at(block + 1);
    if (hi - 1 > cap) throw Error(Errc::ExhaustedIndices, "block " + std::to_string(block) + " ends past the horizon cap");
    const Cylinder B_prev{space, stem};

    // filler up to position lo - 1
    while (stem.size() + 1 < lo) {
      if (space == Space::Sigma) push((stem.empty() ? 0 : stem.back()) + 1);
      else push(unused.smallest([](Index) { return true; }, "N"));
    }
    const Cylinder A{space, stem};

    // the block itself, inside the ball
    auto hit = [&](Index n) { return ball.contains(x.eval(n)); };
    Index from = 0;
    while (stem.size() + 1 < hi) {
      if (space == Space::Sigma) {
        push(next_index_where(x, stem.empty() ? 0 : stem.back(), hit, "hit-set"));
      } else {
        Index v = from + 1;
        while (v <= cap && (unused.used(v) || !hit(v))) ++v;
        if (v > cap) throw Error(Errc::ExhaustedIndices, "hit-set has no unused element below the horizon cap");
        push(v);
        from = v;
      }
    }
    if (space == Space::Pi) {
      // complete to a permutation of 1..max
      const Index mx = *std::max_element(stem.begin(), stem.end());
      for (Index v = 1; v <= mx; ++v)
        if (!unused.used(v)) push(v);
      t.checkpoints.push_back(stem.size());
    }
    const RangeSet F = RangeSet::range(lo, hi);
    t.unionF = RangeSet::unite(t.unionF, F);
    t.rounds.push_back({k, lo, F, A, Cylinder{space, stem}});
    (void)B_prev;
  }
  t.stem = stem;
  if (R == 0) {
    t.verdict = {VerdictValue::Undecided, false, 0, "no rounds played"};
    return t;
  }
  t.tail = SetExpr::intersect(SetExpr::schedule(w.iota, Selector::even()), SetExpr::tail(w.iota->at(block + 1)));
  t.verdict = classify_symbolic(I, SetExpr::unite(t.unionF.to_expr(), *t.tail));
  return t;
}

}  // namespace detail

inline Transcript build_generic_sigma_witness(const Sequence& x, const IdealDescriptor& I, const WitnessPlan& plan,
                                              Index R) {
  return detail::build_witness(Space::Sigma, x, I, plan, R);
}

inline Transcript build_generic_pi_witness(const Sequence& x, const IdealDescriptor& I, const WitnessPlan& plan,
                                           Index R) {
  return detail::build_witness(Space::Pi, x, I, plan, R);
}

// ---------------------------------------------------------------------------
// Game-mode builders. Round k: Player I names c_k; positions
// |B_{k-1}|+1 .. c_k-1 are filled from E = {n : x_n not in U} (Sigma: least
// element of E above the last stem value; Pi: least unused element of E);
// oracle k refines the result (Pi: then completed to a permutation of an
// initial segment); F_k collects the window positions n with x at the
// stem value in U.

struct GamePlan {
  Ball U;
  PlayerI player_i = PlayerI::linear(10);
  std::vector<Oracle> oracles = {Oracle::trivial()};  // oracle k is oracles[(k-1) mod size]

  nlohmann::json to_json() const {
    nlohmann::json os = nlohmann::json::array();
    for (const auto& o : oracles) os.push_back(o.to_json());
    return {{"U", U.to_json()}, {"strat_i", player_i.to_json()}, {"oracles", os}};
  }
  static GamePlan from_json(const nlohmann::json& j) {
    GamePlan g;
    g.U = Ball::from_json(j.at("U"));
    g.player_i = PlayerI::from_json(j.at("strat_i"));
    g.oracles.clear();
    for (const auto& o : j.at("oracles")) g.oracles.push_back(Oracle::from_json(o));
    return g;
  }
};

namespace detail {

inline Transcript build_game(Space space, const Sequence& x, const IdealDescriptor& I, const GamePlan& plan, Index R) {
  if (plan.oracles.empty()) throw Error(Errc::Range, "game mode needs at least one oracle");
  Transcript t;
  t.header = {{"kind", space == Space::Sigma ? "sigma-game" : "pi-game"},
              {"ideal", ideal_to_json(I)},
              {"seq", x.to_dsl()},
              {"plan", plan.to_json()},
              {"rounds", R}};
  t.space = space;
  auto in_E = [&](Index n) { return !plan.U.contains(x.eval(n)); };
  Cylinder B{space, {}};
  for (Index k = 1; k <= R; ++k) {
    const Nat c = plan.player_i.move(k, t.rounds);
    check_move(k, c, {}, t.rounds);
    if (c > horizon_cap()) throw Error(Errc::ExhaustedIndices, "c_k beyond the horizon cap");
    Cylinder A = B;
    if (space == Space::Sigma) {
      while (A.stem.size() + 1 < c)
        A.stem.push_back(next_index_where(x, A.stem.empty() ? 0 : A.stem.back(), in_E, "E"));
    } else {
      UnusedScan unused(A.stem);
      while (A.stem.size() + 1 < c) {
        const Index v = unused.smallest(in_E, "E");
        unused.mark(v);
        A.stem.push_back(v);
      }
    }
    Cylinder Bk = plan.oracles[(k - 1) % plan.oracles.size()].refine(A, k, x);
    check_extension(A, Bk, k);
    if (space == Space::Pi) {
      UnusedScan unused(Bk.stem);
      const Index mx = Bk.m();
      if (mx > horizon_cap()) throw Error(Errc::CheckpointImpossible, "completion would pass the horizon cap");
      for (Index v = 1; v <= mx; ++v)
        if (!unused.used(v)) Bk.stem.push_back(v);
      if (!Bk.stem.empty()) Perm::stem_only(Bk.stem, {Bk.stem.size()});
      t.checkpoints.push_back(Bk.stem.size());
    }
    const Index lo = std::max<Index>(static_cast<Index>(c), B.stem.size() + 1);
    std::vector<Index> hits;
    for (Index n = lo; n <= Bk.stem.size(); ++n)
      if (plan.U.contains(x.eval(Bk.stem[n - 1]))) hits.push_back(n);
    RangeSet F = RangeSet::from_sorted(hits);
    check_move(k, c, F, t.rounds);
    t.unionF = RangeSet::unite(t.unionF, F);
    t.rounds.push_back({k, c, std::move(F), A, Bk});
    B = std::move(Bk);
  }
  t.stem = B.stem;
  t.verdict = stem_verdict(I, t.unionF, t.stem.size());
  return t;
}

}  // namespace detail

inline Transcript build_generic_sigma_game(const Sequence& x, const IdealDescriptor& I, const GamePlan& plan, Index R) {
  return detail::build_game(Space::Sigma, x, I, plan, R);
}

inline Transcript build_generic_pi_game(const Sequence& x, const IdealDescriptor& I, const GamePlan& plan, Index R) {
  return detail::build_game(Space::Pi, x, I, plan, R);
}

// ---------------------------------------------------------------------------
// Series steering on Sigma: filler positions take the least index above
// the last stem value whose term keeps the running sum inside (-1, 1);
// F_k collects window positions n with |S_n| >= 1.

inline Transcript steer_series_sigma(const Sequence& x, const IdealDescriptor& I, const PlayerI& one,
                                     const std::vector<Oracle>& oracles, Index R) {
  if (oracles.empty()) throw Error(Errc::Range, "steering needs at least one oracle");
  Transcript t;
  nlohmann::json os = nlohmann::json::array();
  for (const auto& o : oracles) os.push_back(o.to_json());
  t.header = {{"kind", "series"}, {"ideal", detail::ideal_to_json(I)}, {"seq", x.to_dsl()},
              {"strat_i", one.to_json()}, {"oracles", os}, {"rounds", R}};
  t.space = Space::Sigma;
  Cylinder B{Space::Sigma, {}};
  Rational s = 0;
  const Index cap = horizon_cap();
  for (Index k = 1; k <= R; ++k) {
    const Nat c = one.move(k, t.rounds);
    detail::check_move(k, c, {}, t.rounds);
    if (c > cap) throw Error(Errc::ExhaustedIndices, "c_k beyond the horizon cap");
    Cylinder A = B;
    while (A.stem.size() + 1 < c) {
      Index e = A.stem.empty() ? 0 : A.stem.back();
      for (;;) {
        if (++e > cap)
          throw Error(Errc::SteeringStuck, "no term lands in (-1 - s, 1 - s) for s = " + to_string(s) +
                                               " below the horizon cap");
        const Rational next = s + x.exact(e);
        if (abs(next) < 1) {
          s = next;
          break;
        }
      }
      A.stem.push_back(e);
    }
    Cylinder Bk = oracles[(k - 1) % oracles.size()].refine(A, k, x);
    detail::check_extension(A, Bk, k);
    const Index lo = std::max<Index>(static_cast<Index>(c), B.stem.size() + 1);
    std::vector<Index> hits;
    for (Index n = A.stem.size() + 1; n <= Bk.stem.size(); ++n) {
      s += x.exact(Bk.stem[n - 1]);
      if (n >= lo && abs(s) >= 1) hits.push_back(n);
    }
    // positions of A inside the window were filled with |S_n| < 1
    RangeSet F = RangeSet::from_sorted(hits);
    detail::check_move(k, c, F, t.rounds);
    t.unionF = RangeSet::unite(t.unionF, F);
    t.rounds.push_back({k, c, std::move(F), A, Bk});
    B = std::move(Bk);
  }
  t.stem = B.stem;
  t.verdict = detail::stem_verdict(I, t.unionF, t.stem.size());
  return t;
}

// ---------------------------------------------------------------------------
// Replay and verification

inline Transcript replay(const nlohmann::json& header) {
  return detail::json_guard("malformed transcript header", [&] {
    const auto kind = header.at("kind").get<std::string>();
    const IdealDescriptor I = detail::ideal_from_json(header.at("ideal"));
    const Index R = header.at("rounds").get<Index>();
    if (kind == "laflamme")
      return play_laflamme(I, PlayerI::from_json(header.at("strat_i")), PlayerII::from_json(header.at("strat_ii")), R);
    const Sequence x = parse_sequence(header.at("seq").get<std::string>());
    if (kind == "sigma-witness") return build_generic_sigma_witness(x, I, WitnessPlan::from_json(header.at("plan")), R);
    if (kind == "pi-witness") return build_generic_pi_witness(x, I, WitnessPlan::from_json(header.at("plan")), R);
    if (kind == "sigma-game") return build_generic_sigma_game(x, I, GamePlan::from_json(header.at("plan")), R);
    if (kind == "pi-game") return build_generic_pi_game(x, I, GamePlan::from_json(header.at("plan")), R);
    if (kind == "series") {
      std::vector<Oracle> os;
      for (const auto& o : header.at("oracles")) os.push_back(Oracle::from_json(o));
      return steer_series_sigma(x, I, PlayerI::from_json(header.at("strat_i")), os, R);
    }
    throw Error(Errc::Parse, "unknown transcript kind '" + kind + "'");
  });
}

// Structural invariants plus a replay diff; an empty result means valid.
inline std::vector<std::string> verify_transcript(const Transcript& t) {
  std::vector<std::string> issues;
  auto fail = [&](std::string msg) { issues.push_back(std::move(msg)); };
  RangeSet u;
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    const Round& r = t.rounds[i];
    const std::string at = "round " + std::to_string(r.k) + ": ";
    if (r.k != i + 1) fail(at + "round numbers out of order");
    if (i && r.c < t.rounds[i - 1].c) fail(at + "c_k decreased");
    if (!r.F.empty() && r.F.min() < r.c) fail(at + "F_k not inside [c_k, inf)");
    u = RangeSet::unite(u, r.F);
    if (t.space) {
      if (!r.A || !r.B) {
        fail(at + "builder round without cylinders");
        continue;
      }
      if (i && t.rounds[i - 1].B && !t.rounds[i - 1].B->contains(*r.A)) fail(at + "A_k not inside B_{k-1}");
      if (!r.A->contains(*r.B)) fail(at + "B_k not inside A_k");
      if (!r.B->contains(Cylinder{*t.space, t.stem})) fail(at + "output stem not inside B_k");
    }
  }
  if (!(u == t.unionF)) fail("unionF differs from the union of the F_k");
  if (t.space == Space::Sigma) {
    for (std::size_t i = 1; i < t.stem.size(); ++i)
      if (t.stem[i] <= t.stem[i - 1]) {
        fail("Sigma stem not strictly increasing");
        break;
      }
  }
  if (t.space == Space::Pi) {
    try {
      Perm::stem_only(t.stem, Transcript::nonzero(t.checkpoints));
    } catch (const Error& e) {
      fail(std::string("Pi stem invalid: ") + e.what());
    }
    if (t.checkpoints.size() != t.rounds.size()) fail("one checkpoint per round expected");
    for (std::size_t i = 0; i < t.checkpoints.size() && i < t.rounds.size(); ++i)
      if (t.rounds[i].B && t.checkpoints[i] != t.rounds[i].B->stem.size()) fail("checkpoint differs from |B_k|");
  }
  try {
    const auto again = replay(t.header).to_jsonl_lines();
    const auto mine = t.to_jsonl_lines();
    if (again.size() != mine.size()) fail("replay produced " + std::to_string(again.size()) + " lines, transcript has " +
                                          std::to_string(mine.size()));
    for (std::size_t i = 0; i < std::min(again.size(), mine.size()); ++i)
      if (again[i] != mine[i]) fail("replay differs at line " + std::to_string(i + 1));
  } catch (const Error& e) {
    fail(std::string("replay failed: ") + e.what());
  }
  return issues;
}

// Positions n <= |stem| in the round windows [max(c_k, |B_{k-1}|+1), |B_k|].
inline std::vector<std::pair<Index, Index>> round_windows(const Transcript& t) {
  std::vector<std::pair<Index, Index>> out;
  Index prev = 0;
  for (const auto& r : t.rounds) {
    const Index len = r.B ? r.B->stem.size() : 0;
    const Index lo = std::max<Index>(static_cast<Index>(std::min<Nat>(r.c, kIndexMax)), prev + 1);
    if (lo <= len) out.emplace_back(lo, len);
    prev = len;
  }
  return out;
}

}  // namespace idealgames
