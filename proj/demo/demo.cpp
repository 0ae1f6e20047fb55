// A short tour: membership, cluster points, the ideal game, a generic
// subsequence, series steering and a Monte Carlo fraction.

#include <iostream>
#include <string>

#include "idealgames/idealgames.hpp"

using namespace idealgames;

namespace {

std::string points(const ClusterResult& r) {
  std::string s = "{";
  for (std::size_t i = 0; i < r.points.points.size(); ++i)
    s += (i ? ", " : "") + detail::fmt_num(r.points.points[i]);
  return s + "}";
}

}  // namespace

int main() {
  std::cout << "membership\n";
  for (const char* set : {"ap(2,2)", "pts(square)", "pts(pow2)", "odds"})
    for (const auto& I : builtin_ideals()) {
      const Verdict v = classify_auto(I, parse_set(set), 100'000);
      std::cout << "  " << set << " in " << I.name() << ": " << verdict_name(v.value) << "\n";
    }

  std::cout << "\ncluster and limit points, N = 10^4\n";
  for (const char* seq : {"alt(0,1)", "piecewise(pts(square),n,0)", "alt(1,0)"})
    for (const auto& I : {IdealDescriptor::fin(), IdealDescriptor::density0(), IdealDescriptor::fubini_odd()}) {
      const auto x = parse_sequence(seq);
      std::cout << "  " << seq << " / " << I.name() << ": gamma " << points(gamma_hat(x, I, 10'000, 0.05))
                << ", lambda " << points(lambda_hat(x, I, 10'000, 0.05)) << "\n";
    }

  std::cout << "\nthe ideal game, 20 rounds against random jumps\n";
  for (const auto& I : builtin_ideals()) {
    const Transcript t = play_laflamme(I, PlayerI::random_jump(1), PlayerII::talagrand(talagrand_witness(I)), 20);
    std::cout << "  " << I.name() << ": union of F_k is " << verdict_name(t.verdict.value) << " ("
              << static_cast<unsigned long long>(t.unionF.size()) << " indices), verify issues " << verify_transcript(t).size() << "\n";
  }

  std::cout << "\ngeneric subsequence of alt(0,1) for density0\n";
  const auto x = parse_sequence("alt(0,1)");
  const Transcript w = build_generic_sigma_witness(x, IdealDescriptor::density0(), WitnessPlan{{0, 1}, 3}, 12);
  const auto g = preserves(PointKind::Gamma, x, w.sigma(), IdealDescriptor::density0(), 10'000, 0.05);
  std::cout << "  stem length " << w.stem.size() << ", gamma " << preservation_name(g.outcome) << "\n";
  const auto evens = preserves(PointKind::Gamma, x, Subseq::from_set(parse_set("evens")),
                               IdealDescriptor::density0(), 10'000, 0.05);
  std::cout << "  the even positions instead: gamma " << preservation_name(evens.outcome) << "\n";

  std::cout << "\nsteering partial sums of the signed rational enumeration\n";
  const Sequence r = Sequence::ratenum_signed();
  const Transcript s =
      steer_series_sigma(r, IdealDescriptor::density0(), PlayerI::linear(20), {Oracle::force()}, 10);
  const auto rep = in_sigma_Sx(s.sigma(), r, IdealDescriptor::density0(), s.stem.size());
  std::cout << "  stem length " << s.stem.size() << ", |S_n| >= 1 at " << rep.reach_one.size()
            << " positions, all inside the union of F_k: " << (rep.reach_one.size() == s.unionF.size() ? "yes" : "no")
            << "\n";

  std::cout << "\nrandom subsequences keeping the cluster points of alt(0,1)\n";
  for (const auto& I : {IdealDescriptor::fin(), IdealDescriptor::summable()}) {
    const McReport m = estimate_preservation(x, I, PointKind::Gamma, 300, 10'000, 0.05, 1);
    const Interval ci = m.wilson();
    std::cout << "  " << I.name() << ": " << detail::fmt_num(m.fraction()) << " of " << m.decided() << " decided, 95% ["
              << detail::fmt_num(ci.lo) << ", " << detail::fmt_num(ci.hi) << "]\n";
  }
}
