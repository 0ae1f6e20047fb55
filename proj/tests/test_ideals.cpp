#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "idealgames/dsl.hpp"
#include "idealgames/ideals.hpp"
#include "oracles.hpp"

using namespace idealgames;

namespace {

VerdictValue sym(const IdealDescriptor& I, const char* dsl) { return classify_symbolic(I, parse_set(dsl)).value; }

constexpr auto In = VerdictValue::InIdeal;
constexpr auto NotIn = VerdictValue::NotInIdeal;
constexpr auto Und = VerdictValue::Undecided;

// Random members of the symbolic fragment (one expanding generator per set).
std::string fragment_set(std::mt19937_64& rng, int depth, const std::string& gen = "pow2") {
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::to_string(lo + rng() % (hi - lo + 1)); };
  if (depth == 0 || rng() % 3 == 0) {
    switch (rng() % 7) {
      case 0: return "ap(" + pick(1, 6) + "," + pick(1, 6) + ")";
      case 1: return "tail(" + pick(1, 200) + ")";
      case 2: return "range(" + pick(1, 100) + "," + pick(1, 300) + ")";
      case 3: return "finite{" + pick(1, 50) + "," + pick(1, 50) + "}";
      case 4: return "isch(" + gen + ",even)";
      case 5: return "isch(" + gen + ")";
      default: return "odds";
    }
  }
  switch (rng() % 3) {
    case 0: return "union(" + fragment_set(rng, depth - 1, gen) + "," + fragment_set(rng, depth - 1, gen) + ")";
    case 1: return "inter(" + fragment_set(rng, depth - 1, gen) + "," + fragment_set(rng, depth - 1, gen) + ")";
    default: return "compl(" + fragment_set(rng, depth - 1, gen) + ")";
  }
}

}  // namespace

TEST(Ideals, ParseAndValidate) {
  for (const auto& I : builtin_ideals()) EXPECT_EQ(parse_ideal(I.name()).kind, I.kind);
  EXPECT_THROW(parse_ideal("maximal"), Error);
  IdealParams p;
  p.theta_low = 0.2;
  p.theta_high = 0.1;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.c_fin = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Ideals, SymbolicExamples) {
  const auto fin = IdealDescriptor::fin(), d0 = IdealDescriptor::density0(), sum = IdealDescriptor::summable(),
             fub = IdealDescriptor::fubini_odd();
  EXPECT_EQ(sym(fin, "finite{3,9,27}"), In);
  EXPECT_EQ(sym(fin, "odds"), NotIn);
  EXPECT_EQ(sym(d0, "ap(2,2)"), NotIn);
  EXPECT_EQ(sym(d0, "inter(odds,range(1,1000))"), In);
  EXPECT_EQ(sym(d0, "isch(pow2,even)"), NotIn);
  EXPECT_EQ(sym(sum, "isch(harm,even)"), NotIn);
  EXPECT_EQ(sym(sum, "inter(evens,odds)"), In);
  EXPECT_EQ(sym(fub, "evens"), In);
  EXPECT_EQ(sym(fub, "odds"), NotIn);
  EXPECT_EQ(sym(fub, "union(evens,finite{1,3,5})"), In);
  EXPECT_EQ(sym(fub, "isch(odd,even)"), NotIn);
  EXPECT_TRUE(classify_symbolic(d0, parse_set("odds")).symbolic);
  EXPECT_THROW(classify_symbolic(d0, parse_set("pts(square)")), Error);
}

TEST(Ideals, HorizonDensityAgainstBruteForce) {
  const auto d0 = IdealDescriptor::density0();
  constexpr Index N = 10'000;
  struct Row {
    const char* dsl;
    std::function<bool(std::uint64_t)> in;
  };
  const std::vector<Row> rows = {
      {"pts(square)", [](std::uint64_t n) { return oracle::is_square(n); }},
      {"ap(1,7)", [](std::uint64_t n) { return n % 7 == 1; }},
      {"ap(3,20)", [](std::uint64_t n) { return n >= 3 && n % 20 == 3; }},
      {"ap(5,60)", [](std::uint64_t n) { return n >= 5 && n % 60 == 5; }},
  };
  for (const auto& r : rows) {
    const double d = oracle::window_density(r.in, N);
    const Verdict v = classify_horizon(d0, parse_set(r.dsl), N);
    const VerdictValue want = d < 0.02 ? In : d > 0.10 ? NotIn : Und;
    EXPECT_EQ(v.value, want) << r.dsl << " d=" << d;
    EXPECT_FALSE(v.symbolic);
    EXPECT_EQ(v.horizon, N);
  }
  // frozen from the brute-force oracle
  EXPECT_NEAR(oracle::window_density([](std::uint64_t n) { return oracle::is_square(n); }, N), 0.0140845, 1e-6);
  EXPECT_EQ(classify_horizon(d0, parse_set("pts(square)"), N).evidence, "d_hat=0.0140845");
}

TEST(Ideals, HorizonCountsAndSums) {
  constexpr Index N = 10'000;
  const SetExpr sq = parse_set("pts(square)");
  EXPECT_EQ(classify_horizon(IdealDescriptor::fin(), sq, N).value, NotIn);             // 100 squares
  EXPECT_EQ(classify_horizon(IdealDescriptor::fin(), sq, 2400).value, Und);            // 48 squares
  EXPECT_EQ(classify_horizon(IdealDescriptor::fubini_odd(), sq, N).value, NotIn);      // 50 odd squares
  EXPECT_EQ(classify_horizon(IdealDescriptor::fubini_odd(), sq, N - 200).value, Und);  // 49
  // sum 1/n^2 < pi^2/6 < 4, but nothing certifies the tail
  EXPECT_EQ(classify_horizon(IdealDescriptor::summable(), sq, N).value, Und);
  // harmonic sum over all n <= 10^4 is about 9.79
  EXPECT_EQ(classify_horizon(IdealDescriptor::summable(), parse_set("all"), N).value, NotIn);
  // finite set entirely below N: certified tail density 0
  const Verdict f = classify_horizon(IdealDescriptor::summable(), parse_set("finite{1,2}"), N);
  EXPECT_EQ(f.value, In);
  EXPECT_THROW(classify_horizon(IdealDescriptor::fin(), sq, 99), Error);
}

TEST(Ideals, AutoPrefersSymbolic) {
  const Verdict v = classify_auto(IdealDescriptor::density0(), parse_set("ap(2,2)"), 1000);
  EXPECT_TRUE(v.symbolic);
  EXPECT_EQ(v.mode(), "Symbolic");
  const Verdict h = classify_auto(IdealDescriptor::density0(), parse_set("pts(square)"), 1000);
  EXPECT_EQ(h.mode(), "Horizon(1000)");
}

TEST(Ideals, VerdictJsonRoundTrip) {
  for (const char* dsl : {"odds", "pts(square)", "finite{4}"}) {
    const Verdict v = classify_auto(IdealDescriptor::density0(), parse_set(dsl), 5000);
    EXPECT_EQ(Verdict::from_json(v.to_json()), v);
  }
}

// Ideals are closed under subsets and finite unions, and never contain N.
TEST(IdealProperties, HereditaryAndAdditiveOnRandomFragmentSets) {
  std::mt19937_64 rng(4242);
  for (const auto& I : builtin_ideals()) {
    EXPECT_EQ(classify_symbolic(I, parse_set("all")).value, NotIn) << I.name();
    for (int trial = 0; trial < 150; ++trial) {
      const std::string gen = trial % 2 ? "pow2" : "harm";
      const std::string a = fragment_set(rng, 3, gen), b = fragment_set(rng, 3, gen);
      const VerdictValue va = sym(I, a.c_str()), vb = sym(I, b.c_str());
      const VerdictValue vi = sym(I, ("inter(" + a + "," + b + ")").c_str());
      const VerdictValue vu = sym(I, ("union(" + a + "," + b + ")").c_str());
      if (va == In) ASSERT_EQ(vi, In) << I.name() << " " << a << " / " << b;
      if (va == In && vb == In) ASSERT_EQ(vu, In) << I.name() << " " << a << " / " << b;
      if (va == NotIn) ASSERT_EQ(vu, NotIn) << I.name() << " " << a << " / " << b;
      // an infinite set here meets every window long enough to hold two blocks
      if (I.kind == IdealKind::Fin && va == NotIn)
        ASSERT_GT(count(parse_set(a), 800'000), count(parse_set(a), 100'000)) << a;
    }
  }
}

TEST(Ideals, InclusionBetweenBuiltins) {
  // Fin is inside every other built-in ideal; Summable inside Density0.
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string s = fragment_set(rng, 3);
    const SetExpr e = parse_set(s);
    if (classify_symbolic(IdealDescriptor::fin(), e).in())
      for (const auto& I : builtin_ideals()) ASSERT_TRUE(classify_symbolic(I, e).in()) << s;
    if (classify_symbolic(IdealDescriptor::summable(), e).in())
      ASSERT_TRUE(classify_symbolic(IdealDescriptor::density0(), e).in()) << s;
  }
}

TEST(TalagrandWitness, BlocksAreNotInIdeal) {
  for (const auto& I : builtin_ideals()) {
    const TalagrandWitness w = talagrand_witness(I);
    // every second full block forever
    const SetExpr blocks = SetExpr::schedule(w.iota, Selector::even());
    EXPECT_EQ(classify_symbolic(I, blocks).value, NotIn) << I.name();
    // a single block is finite
    EXPECT_EQ(classify_symbolic(I, w.block(3)).value, In) << I.name();
  }
}

TEST(TalagrandWitness, SoundnessReportSmall) {
  for (const auto& I : builtin_ideals()) {
    const auto rep = witness_soundness_report(I, talagrand_witness(I), 10, 5, 20'000);
    EXPECT_EQ(rep.fraction(), 1.0) << I.name() << " " << rep.to_json().dump();
    EXPECT_TRUE(rep.failures.empty());
  }
  EXPECT_THROW(witness_soundness_report(IdealDescriptor::fin(), talagrand_witness(IdealDescriptor::fin()), 0, 1), Error);
}

TEST(MaximalIdeal, NotConstructible) { EXPECT_FALSE(std::is_default_constructible_v<MaximalIdeal>); }
