#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "idealgames/convergence.hpp"
#include "idealgames/dsl.hpp"
#include "idealgames/games.hpp"

using namespace idealgames;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

// Exact open-ball test on the rational value, independent of Sequence::eval.
bool in_ball_exact(const Rational& v, double center, double radius) {
  return abs(v - Rational(center)) < Rational(radius);
}

// U-hits of the output stem inside the played windows, recomputed from scratch.
std::set<Index> recomputed_hits(const Transcript& t, const Sequence& x, const Ball& U) {
  std::set<Index> out;
  Index prev = 0;
  for (const auto& r : t.rounds) {
    const Index len = r.B->stem.size();
    const Index lo = std::max<Index>(static_cast<Index>(r.c), prev + 1);
    for (Index n = lo; n <= len; ++n)
      if (in_ball_exact(x.exact(t.stem[n - 1]), U.center, U.radius)) out.insert(n);
    prev = len;
  }
  return out;
}

std::set<Index> as_set(const RangeSet& r) {
  std::set<Index> out;
  for (const auto& [lo, hi] : r.ranges())
    for (Nat n = lo; n < hi; ++n) out.insert(static_cast<Index>(n));
  return out;
}

}  // namespace

TEST(RangeSet, MatchesBruteForceSets) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    std::set<Index> a, b;
    for (int i = 0, m = static_cast<int>(rng() % 40); i < m; ++i) a.insert(1 + rng() % 120);
    for (int i = 0, m = static_cast<int>(rng() % 40); i < m; ++i) b.insert(1 + rng() % 120);
    const RangeSet ra = RangeSet::from_sorted({a.begin(), a.end()});
    const RangeSet rb = RangeSet::from_sorted({b.begin(), b.end()});
    std::set<Index> u = a;
    u.insert(b.begin(), b.end());
    const RangeSet ru = RangeSet::unite(ra, rb);
    ASSERT_EQ(as_set(ru), u);
    ASSERT_EQ(ru.size(), static_cast<Nat>(u.size()));
    ASSERT_EQ(RangeSet::from_json(ru.to_json()), ru);
    const SetExpr e = ru.to_expr();
    for (Index n = 1; n <= 130; ++n) {
      ASSERT_EQ(member(e, n), u.count(n) == 1);
      ASSERT_EQ(ru.contains(n), u.count(n) == 1);
    }
    for (std::size_t i = 1; i < ru.ranges().size(); ++i) ASSERT_LT(ru.ranges()[i - 1].second, ru.ranges()[i].first);
  }
  EXPECT_THROW(RangeSet::from_sorted({3, 2}), Error);
  EXPECT_TRUE(RangeSet::range(5, 5).empty());
}

TEST(PlayerI, BuiltinStrategies) {
  const std::vector<Round> none;
  EXPECT_EQ(PlayerI::linear(20).move(3, none), Nat{60});
  EXPECT_EQ(PlayerI::exponential().move(10, none), Nat{1024});
  const PlayerI s = PlayerI::parse("schedule:5,9");
  EXPECT_EQ(s.move(1, none), Nat{5});
  EXPECT_EQ(s.move(4, none), Nat{9});
  EXPECT_EQ(PlayerI::parse("linear").move(2, none), Nat{200});
  for (const char* bad : {"linear:0", "exp:3", "random-jump", "spiral", "schedule:"})
    EXPECT_THROW(PlayerI::parse(bad), Error) << bad;
  for (const char* ok : {"linear:7", "exp", "random-jump:4:900", "schedule:1,2,3"}) {
    const PlayerI p = PlayerI::parse(ok);
    EXPECT_EQ(PlayerI::from_json(p.to_json()).to_json(), p.to_json()) << ok;
  }
}

TEST(PlayerI, RandomJumpIsMonotoneCappedAndSeeded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PlayerI p = PlayerI::random_jump(seed, 5000);
    std::vector<Round> h;
    for (Index k = 1; k <= 60; ++k) {
      const Nat c = p.move(k, h);
      ASSERT_GE(c, h.empty() ? Nat{1} : h.back().c);
      ASSERT_LE(c, Nat{5000});
      h.push_back({k, c, {}, std::nullopt, std::nullopt});
    }
    std::vector<Round> h2;
    for (Index k = 1; k <= 60; ++k) {
      h2.push_back({k, p.move(k, h2), {}, std::nullopt, std::nullopt});
      ASSERT_EQ(h2.back().c, h[k - 1].c);
    }
  }
}

TEST(Laflamme, TalagrandBlocksFollowTheRules) {
  for (const auto& I : builtin_ideals()) {
    const auto w = talagrand_witness(I);
    const Transcript t = play_laflamme(I, PlayerI::random_jump(11), PlayerII::talagrand(w), 50);
    std::set<Index> used;
    for (const auto& r : t.rounds) {
      ASSERT_EQ(r.F.ranges().size(), 1u);
      const auto [lo, hi] = r.F.ranges().front();
      ASSERT_GE(lo, r.c);
      const Index j = w.iota->block_of(lo);
      ASSERT_EQ(w.iota->at(j), lo);
      ASSERT_EQ(w.iota->at(j + 1), hi);
      ASSERT_TRUE(used.insert(j).second) << "block reused";
      // least unused block starting at or above c
      for (Index i = w.iota->first_at_least(r.c); i < j; ++i) ASSERT_TRUE(used.count(i)) << I.name();
    }
    EXPECT_EQ(t.verdict.value, VerdictValue::NotInIdeal) << I.name();
    EXPECT_TRUE(verify_transcript(t).empty()) << I.name();
  }
}

TEST(Laflamme, EmptyStrategyLoses) {
  const Transcript t = play_laflamme(IdealDescriptor::density0(), PlayerI::linear(5), PlayerII::empty(), 10);
  EXPECT_TRUE(t.unionF.empty());
  EXPECT_EQ(t.verdict.value, VerdictValue::InIdeal);
  EXPECT_EQ(code_of([] { play_laflamme(IdealDescriptor::fin(), PlayerI::linear(5), PlayerII::empty(), 0); }),
            Errc::Range);
}

TEST(Laflamme, IllegalMovesAreRejected) {
  const auto I = IdealDescriptor::fin();
  const PlayerI down = PlayerI::custom("down", [](Index k, const std::vector<Round>&) { return Nat{100 - k}; });
  EXPECT_EQ(code_of([&] { play_laflamme(I, down, PlayerII::empty(), 3); }), Errc::InvalidMove);
  const PlayerII low = PlayerII::custom("low", [](Index, Nat c, const std::vector<Round>&) {
    return RangeSet::range(c - 1, c + 3);
  });
  EXPECT_EQ(code_of([&] { play_laflamme(I, PlayerI::linear(10), low, 2); }), Errc::InvalidMove);
  const PlayerI zero = PlayerI::custom("zero", [](Index, const std::vector<Round>&) { return Nat{0}; });
  EXPECT_EQ(code_of([&] { play_laflamme(I, zero, PlayerII::empty(), 1); }), Errc::InvalidMove);
}

TEST(Oracles, ParseAndRoundTrip) {
  for (const char* ok : {"trivial", "force", "random-extension:9", "hit-interval:0:1/2", "hit-interval:1:1/4:harm"}) {
    const Oracle o = Oracle::parse(ok);
    EXPECT_EQ(Oracle::from_json(o.to_json()).to_json(), o.to_json()) << ok;
  }
  for (const char* bad : {"", "oracle", "hit-interval:0", "hit-interval:0:0", "random-extension"})
    EXPECT_THROW(Oracle::parse(bad), Error) << bad;
}

TEST(Oracles, ViolationsAreReported) {
  const auto x = parse_sequence("alt(0,1)");
  const auto I = IdealDescriptor::density0();
  GamePlan plan;
  plan.U = {0, 0.5};
  plan.oracles = {Oracle::custom("shrink", [](const Cylinder& A, Index, const Sequence&) {
    Cylinder B = A;
    if (!B.stem.empty()) B.stem.pop_back();
    return B;
  })};
  EXPECT_EQ(code_of([&] { build_generic_sigma_game(x, I, plan, 3); }), Errc::OracleViolation);
  plan.oracles = {Oracle::custom("swap", [](const Cylinder& A, Index, const Sequence&) {
    return Cylinder{A.space == Space::Sigma ? Space::Pi : Space::Sigma, A.stem};
  })};
  EXPECT_EQ(code_of([&] { build_generic_sigma_game(x, I, plan, 3); }), Errc::OracleViolation);
  plan.oracles = {Oracle::custom("unsorted", [](const Cylinder& A, Index, const Sequence&) {
    Cylinder B = A;
    B.stem.push_back(1);
    return B;
  })};
  EXPECT_EQ(code_of([&] { build_generic_sigma_game(x, I, plan, 3); }), Errc::OracleViolation);
  plan.oracles = {Oracle::force()};
  EXPECT_EQ(code_of([&] { build_generic_pi_game(x, I, plan, 2); }), Errc::SpaceMismatch);
}

TEST(SigmaWitness, BlocksLandInTheirBalls) {
  const auto x = parse_sequence("alt(0,1)");
  const auto I = IdealDescriptor::density0();
  const WitnessPlan plan{{0, 1}, 3};
  const Transcript t = build_generic_sigma_witness(x, I, plan, 12);
  const auto sched = plan.schedule();
  for (const auto& r : t.rounds) {
    const auto [eta, m] = sched[(r.k - 1) % sched.size()];
    const auto [lo, hi] = r.F.ranges().front();
    for (Nat n = lo; n < hi; ++n)
      ASSERT_TRUE(in_ball_exact(x.exact(t.stem[static_cast<Index>(n) - 1]), eta, 1.0 / static_cast<double>(m)));
    ASSERT_GE(r.B->stem.size() + 1, static_cast<Index>(hi));
  }
  EXPECT_EQ(t.verdict.value, VerdictValue::NotInIdeal);
  EXPECT_TRUE(verify_transcript(t).empty());
  const Index N = 10'000;
  ASSERT_GE(t.stem.size(), Index{8000});
  const Sequence y = x.subseq(t.sigma());
  const Index h = std::min<Index>(N, t.stem.size());
  EXPECT_EQ(gamma_hat(y, I, h, 0.05).points.points, (std::vector<double>{0, 1}));
  EXPECT_TRUE(preserves(PointKind::Gamma, x, t.sigma(), I, N, 0.05).preserved());
  EXPECT_TRUE(preserves(PointKind::Lambda, x, t.sigma(), I, N, 0.05).preserved());
}

TEST(SigmaWitness, ZeroRoundsIsUndecided) {
  const Transcript t =
      build_generic_sigma_witness(parse_sequence("alt(0,1)"), IdealDescriptor::fin(), WitnessPlan{{0}, 1}, 0);
  EXPECT_TRUE(t.stem.empty());
  EXPECT_EQ(t.verdict.value, VerdictValue::Undecided);
  EXPECT_THROW(build_generic_sigma_witness(parse_sequence("alt(0,1)"), IdealDescriptor::fin(), WitnessPlan{{}, 1}, 3),
               Error);
}

TEST(PiWitness, CheckpointsAndPreservation) {
  const auto x = parse_sequence("alt(0,1)");
  const auto I = IdealDescriptor::density0();
  const Transcript t = build_generic_pi_witness(x, I, WitnessPlan{{0, 1}, 3}, 6);
  ASSERT_EQ(t.checkpoints.size(), 6u);
  for (Index m : t.checkpoints) {
    std::vector<Index> pre(t.stem.begin(), t.stem.begin() + m);
    std::sort(pre.begin(), pre.end());
    for (Index i = 0; i < m; ++i) ASSERT_EQ(pre[i], i + 1) << "checkpoint " << m;
  }
  EXPECT_TRUE(verify_transcript(t).empty());
  EXPECT_TRUE(preserves(PointKind::Gamma, x, t.pi(), I, 10'000, 0.05).preserved());
}

// The recorded union of the F_k equals the U-hits of the output stem inside
// the played windows.
TEST(SigmaGame, TranscriptIdentity) {
  const auto x = parse_sequence("alt(0,1)");
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GamePlan plan;
    plan.U = {0, 0.5};
    plan.player_i = PlayerI::random_jump(seed, 2000);
    plan.oracles = {Oracle::random_extension(seed), Oracle::hit_interval({0, 0.5}, find_generator("pow2"))};
    const Transcript t = build_generic_sigma_game(x, IdealDescriptor::density0(), plan, 10);
    ASSERT_EQ(as_set(t.unionF), recomputed_hits(t, x, plan.U)) << seed;
    std::set<Index> from_windows;
    for (const auto& [lo, hi] : round_windows(t))
      for (Index n = lo; n <= hi; ++n)
        if (plan.U.contains(x.eval(t.stem[n - 1]))) from_windows.insert(n);
    ASSERT_EQ(as_set(t.unionF), from_windows);
    ASSERT_TRUE(verify_transcript(t).empty()) << seed;
    // filler positions come from E = {n : x_n not in U}
    for (const auto& r : t.rounds)
      for (Index n = 1; n <= r.A->stem.size(); ++n)
        if (n > (r.k > 1 ? t.rounds[r.k - 2].B->stem.size() : 0))
          ASSERT_FALSE(plan.U.contains(x.eval(r.A->stem[n - 1])));
  }
}

TEST(PiGame, CompletesToPermutations) {
  const auto x = parse_sequence("alt(0,1)");
  GamePlan plan;
  plan.U = {1, 0.5};
  plan.player_i = PlayerI::linear(40);
  plan.oracles = {Oracle::random_extension(3), Oracle::hit_interval({1, 0.5}, find_generator("pow2"))};
  const Transcript t = build_generic_pi_game(x, IdealDescriptor::fin(), plan, 8);
  EXPECT_TRUE(verify_transcript(t).empty());
  EXPECT_NO_THROW(t.pi());
  EXPECT_EQ(as_set(t.unionF), recomputed_hits(t, x, plan.U));
}

TEST(Transcripts, JsonlRoundTripAndTamperDetection) {
  GamePlan plan;
  plan.U = {0, 0.5};
  plan.player_i = PlayerI::random_jump(5, 2000);
  plan.oracles = {Oracle::random_extension(5)};
  const Transcript t = build_generic_sigma_game(parse_sequence("alt(0,1)"), IdealDescriptor::density0(), plan, 10);
  const Transcript back = Transcript::from_jsonl(t.to_jsonl());
  EXPECT_EQ(back.to_jsonl(), t.to_jsonl());
  EXPECT_TRUE(verify_transcript(back).empty());

  Transcript bad = back;
  bad.rounds[3].c = 1;
  EXPECT_FALSE(verify_transcript(bad).empty());
  bad = back;
  bad.unionF = RangeSet::unite(bad.unionF, RangeSet::range(1, 2));
  EXPECT_FALSE(verify_transcript(bad).empty());
  bad = back;
  std::swap(bad.stem[0], bad.stem[1]);
  EXPECT_FALSE(verify_transcript(bad).empty());

  EXPECT_THROW(Transcript::from_jsonl("{\"header\":{}}"), Error);
  EXPECT_THROW(Transcript::from_jsonl("not json\n{}"), ParseError);
  EXPECT_EQ(code_of([] { Transcript::from_jsonl("{\"header\":{}}\n{}"); }), Errc::Parse);
  EXPECT_THROW(t.pi(), Error);
}

TEST(Transcripts, ReplayIsDeterministic) {
  const Transcript a =
      play_laflamme(IdealDescriptor::summable(), PlayerI::random_jump(77), PlayerII::talagrand(find_generator("harm")), 30);
  EXPECT_EQ(replay(a.header).to_jsonl(), a.to_jsonl());
  EXPECT_THROW(replay({{"kind", "chess"}, {"ideal", {{"name", "fin"}}}, {"rounds", 1}}), Error);
}
