#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "idealgames/dsl.hpp"
#include "idealgames/mc.hpp"

using namespace idealgames;

namespace {

// Wilson score interval written out from the textbook formula.
std::pair<double, double> wilson_reference(double k, double n) {
  const double z = 1.959963984540054, p = k / n;
  const double c = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double h = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

}  // namespace

TEST(Wilson, MatchesFormulaAndEdges) {
  for (int n : {1, 10, 100, 1000})
    for (int k = 1; k < n; k += std::max(1, n / 7)) {
      const auto [lo, hi] = wilson_reference(k, n);
      const Interval w = wilson95(k, n);
      EXPECT_NEAR(w.lo, lo, 1e-12);
      EXPECT_NEAR(w.hi, hi, 1e-12);
      EXPECT_LE(w.lo, static_cast<double>(k) / n);
      EXPECT_GE(w.hi, static_cast<double>(k) / n);
    }
  EXPECT_EQ(wilson95(0, 50).lo, 0.0);
  EXPECT_EQ(wilson95(50, 50).hi, 1.0);
  EXPECT_EQ(wilson95(0, 0).lo, 0.0);
  EXPECT_EQ(wilson95(0, 0).hi, 1.0);
}

TEST(Preservation, AlternatingPairUnderFinAtDeskScale) {
  const McReport r = estimate_preservation(parse_sequence("alt(0,1)"), IdealDescriptor::fin(), PointKind::Gamma, 200,
                                           2000, 0.05, 42);
  EXPECT_EQ(r.samples, 200u);
  EXPECT_LE(r.hits + r.undecided, r.samples);
  EXPECT_EQ(r.fraction(), 1.0);
  EXPECT_EQ(r.batches.size(), 2u);
}

TEST(Preservation, ReproducibleAndBatchInvariant) {
  const auto x = parse_sequence("alt(0,1)");
  const auto I = IdealDescriptor::summable();
  const McReport a = estimate_preservation(x, I, PointKind::Gamma, 150, 10000, 0.05, 9, 100);
  const McReport b = estimate_preservation(x, I, PointKind::Gamma, 150, 10000, 0.05, 9, 100);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.to_csv(), b.to_csv());
  for (std::uint64_t batch : {1ULL, 7ULL, 150ULL}) {
    const McReport c = estimate_preservation(x, I, PointKind::Gamma, 150, 10000, 0.05, 9, batch);
    EXPECT_EQ(c.hits, a.hits) << batch;
    EXPECT_EQ(c.undecided, a.undecided) << batch;
    EXPECT_EQ(c.to_json(), a.to_json()) << batch;
  }
  const McReport d = estimate_preservation(x, I, PointKind::Gamma, 150, 10000, 0.05, 10, 100);
  EXPECT_NE(d.to_csv(), a.to_csv());
}

TEST(Preservation, SampleOutcomesMatchBatchTotals) {
  const PreservationEstimator est(parse_sequence("piecewise(ap(1,2),1,0)"), IdealDescriptor::fubini_odd(),
                                  PointKind::Gamma, 1000, 0.05, 3);
  std::uint64_t hits = 0, und = 0;
  for (std::uint64_t i = 0; i < 120; ++i) {
    const Preservation p = est.sample(i);
    hits += p == Preservation::Preserved;
    und += p == Preservation::Undecided;
  }
  const McReport r = est.batch(0, 120, 120);
  EXPECT_EQ(r.hits, hits);
  EXPECT_EQ(r.undecided, und);
}

TEST(Merge, AssociativeAndChecked) {
  const PreservationEstimator est(parse_sequence("alt(0,1)"), IdealDescriptor::density0(), PointKind::Gamma, 500,
                                  0.05, 1);
  const McReport p = est.batch(0, 30, 90), q = est.batch(30, 30, 90), r = est.batch(60, 30, 90);
  const McReport left = merge(merge(p, q), r), right = merge(p, merge(q, r)), shuffled = merge(merge(r, p), q);
  EXPECT_EQ(left.to_json(), right.to_json());
  EXPECT_EQ(left.to_csv(), right.to_csv());
  EXPECT_EQ(left.to_csv(), shuffled.to_csv());
  EXPECT_EQ(left.batches, right.batches);
  const McReport whole = est.batch(0, 90, 90);
  EXPECT_EQ(left.hits, whole.hits);
  EXPECT_EQ(left.undecided, whole.undecided);
  EXPECT_THROW(merge(p, est.batch(10, 30, 90)), Error);
  McReport other = q;
  other.seed = 2;
  EXPECT_THROW(merge(p, other), Error);
}

TEST(Preservation, Validation) {
  const auto x = parse_sequence("alt(0,1)");
  EXPECT_THROW(estimate_preservation(x, IdealDescriptor::fin(), PointKind::Gamma, 99, 1000, 0.05, 1), Error);
  EXPECT_THROW(estimate_preservation(x, IdealDescriptor::fin(), PointKind::Gamma, 100, 50, 0.05, 1), Error);
  EXPECT_THROW(estimate_preservation(x, IdealDescriptor::fin(), PointKind::Gamma, 100, 1000, 0.05, 1, 0), Error);
}

TEST(Cylinders, DyadicMassesWithinThreeStandardErrors) {
  const std::vector<std::vector<Index>> stems = {{1}, {2}, {1, 2}, {3}, {1, 3}, {2, 4}, {1, 2, 3, 4}};
  for (const auto& st : stems) {
    const McReport r = dyadic_cylinder_mass(st, 20'000, 5);
    const double p = std::ldexp(1.0, -static_cast<int>(st.back()));
    ASSERT_TRUE(r.expected);
    EXPECT_DOUBLE_EQ(*r.expected, p);
    EXPECT_NEAR(r.fraction(), p, 3 * std::sqrt(p * (1 - p) / 20'000.0)) << st.back();
  }
  // disjoint extensions of a stem share its sample stream and never outweigh it
  const McReport parent = dyadic_cylinder_mass({2}, 5000, 8);
  const McReport a = dyadic_cylinder_mass({2, 3}, 5000, 8);
  const McReport b = dyadic_cylinder_mass({2, 4}, 5000, 8);
  const McReport c = dyadic_cylinder_mass({2, 5}, 5000, 8);
  EXPECT_LE(a.hits + b.hits + c.hits, parent.hits);
  EXPECT_THROW(dyadic_cylinder_mass({}, 10, 1), Error);
  EXPECT_THROW(dyadic_cylinder_mass({1, 2, 3, 4, 5, 6, 7, 8, 9}, 10, 1), Error);
  EXPECT_THROW(dyadic_cylinder_mass({3, 2}, 10, 1), Error);
}
