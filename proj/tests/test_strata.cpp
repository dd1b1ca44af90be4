#include <gtest/gtest.h>

#include <algorithm>

#include "subcart/strata.hpp"

using namespace subcart;

namespace {

Point pt(std::initializer_list<double> v)
{
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) { p(i++) = c; }
  return p;
}

const SmoothExpr cone_eq = parse("x3^2 - x1^2 - x2^2", 3);
const TangentField rot = TangentField::parse({"-x2", "x1", "0"}, 3, "rot");
const TangentField radial = TangentField::parse({"x1", "x2", "x3"}, 3, "radial");
const TangentField dz = TangentField::parse({"0", "0", "1"}, 3, "dz");

StratifiedSpace cone()
{
  const SubcartesianSpace total(3, {{{cone_eq, Relation::EqZero}, {var(2), Relation::GeqZero}}}, 1e-8, true);
  const SubcartesianSpace apex(
      3, {{{var(0), Relation::EqZero}, {var(1), Relation::EqZero}, {var(2), Relation::EqZero}}}, 1e-8);
  const SubcartesianSpace big(3, {{{cone_eq, Relation::EqZero}, {var(2), Relation::GtZero}}}, 1e-8);
  return StratifiedSpace{total, {{"apex", apex, 0, {}}, {"cone", big, 2, {rot, radial}}}, true};
}

StratumSampler cone_sampler() { return StratumSampler{pt({0, 0, 0.5}), 1.0, 64, 5}; }

StratifiedSpace disk_and_half_circle()
{
  const SmoothExpr r = parse("1 - x1^2 - x2^2", 2);
  const SubcartesianSpace total(2, {{{r, Relation::GeqZero}}});
  const SubcartesianSpace disk(2, {{{r, Relation::GtZero}}});
  const SubcartesianSpace half(2, {{{r, Relation::EqZero}, {var(1), Relation::GtZero}}});
  return StratifiedSpace{total, {{"disk", disk, 2, {}}, {"half", half, 1, {}}}, false};
}

StratifiedSpace parallel_lines(bool swapped)
{
  const SubcartesianSpace a(2, {{{var(1), Relation::EqZero}}}), b(2, {{{var(1) - constant(1.0), Relation::EqZero}}});
  const SubcartesianSpace u(2, {{{var(1), Relation::EqZero}}, {{var(1) - constant(1.0), Relation::EqZero}}});
  std::vector<Stratum> s{{"a", a, 1, {}}, {"b", b, 1, {}}};
  if (swapped) { std::swap(s[0], s[1]); }
  return StratifiedSpace{u, s, false};
}

bool has_violation(const FrontierReport & r, const std::string & kind)
{
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const auto & v) { return v.kind == kind; });
}

}  // namespace

TEST(Frontier, ConePasses)
{
  const FrontierReport r = frontier_check(cone(), cone_sampler());
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.violations.empty());
  ASSERT_EQ(r.contacts.size(), 1u);
  EXPECT_EQ(r.contacts[0].stratum, "apex");
  EXPECT_EQ(r.contacts[0].closure_of, "cone");
}

TEST(Frontier, ParallelLinesPassVacuously)
{
  const FrontierReport r = frontier_check(parallel_lines(false), StratumSampler{pt({0, 0.5}), 1.5, 64, 1});
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.contacts.empty());
}

TEST(Frontier, MissingBoundaryHalfIsFlagged)
{
  const FrontierReport r = frontier_check(disk_and_half_circle(), StratumSampler{pt({0, 0}), 1.5, 64, 1});
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(has_violation(r, "coverage"));
}

TEST(Frontier, DeclarationOrderDoesNotMatter)
{
  const StratumSampler s{pt({0, 0.5}), 1.5, 64, 1};
  const FrontierReport a = frontier_check(parallel_lines(false), s), b = frontier_check(parallel_lines(true), s);
  EXPECT_EQ(a.pass, b.pass);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.contacts.size(), b.contacts.size());
}

TEST(Frontier, OverlapIsFlagged)
{
  const SubcartesianSpace line(2, {{{var(1), Relation::EqZero}}});
  const StratifiedSpace SS{line, {{"a", line, 1, {}}, {"b", line, 1, {}}}, false};
  EXPECT_TRUE(has_violation(frontier_check(SS, StratumSampler{pt({0, 0}), 1.0, 16, 1}), "overlap"));
}

TEST(Extend, BumpIsExactOutsideAndIdentityInside)
{
  const StratifiedSpace SS = cone();
  const Point x0 = pt({1, 0, 1});
  const TangentField X = extend_stratum_field(SS, 1, rot, x0, 0.5, 0.9);
  EXPECT_EQ(X.value_at(pt({0, 0, 0})).norm(), 0.0);
  EXPECT_EQ(X.value_at(pt({-1, 0, 1})).norm(), 0.0);
  for (const Point & y : {x0, pt({std::cos(0.3), std::sin(0.3), 1})}) {
    EXPECT_NEAR((X.value_at(y) - rot.value_at(y)).norm(), 0.0, 1e-15);
  }
  const Point mid = pt({std::cos(0.7), std::sin(0.7), 1});
  const double b = X.value_at(mid).norm() / rot.value_at(mid).norm();
  EXPECT_GT(b, 0.0);
  EXPECT_LT(b, 1.0);
}

TEST(Extend, Preconditions)
{
  const StratifiedSpace SS = cone();
  EXPECT_THROW(extend_stratum_field(SS, 1, rot, pt({1, 0, 0}), 0.5, 0.9), PreconditionError);
  EXPECT_THROW(extend_stratum_field(SS, 1, dz, pt({1, 0, 1}), 0.5, 0.9), PreconditionError);
  EXPECT_THROW(extend_stratum_field(SS, 1, rot, pt({1, 0, 1}), 0.9, 0.5), PreconditionError);
}

TEST(Extend, WholeSpaceWithHugeRadius)
{
  const SubcartesianSpace R2 = SubcartesianSpace::euclidean(2);
  const StratifiedSpace SS{R2, {{"plane", R2, 2, {}}}, true};
  const TangentField Y = TangentField::parse({"x2", "1"}, 2);
  const TangentField X = extend_stratum_field(SS, 0, Y, pt({0, 0}), 10, 100);
  EXPECT_NEAR((X.value_at(pt({0.5, 0.5})) - Y.value_at(pt({0.5, 0.5}))).norm(), 0.0, 1e-15);
}

TEST(Tangency, RotationAndZeroPass)
{
  EXPECT_TRUE(strongly_stratified_check(cone(), rot, cone_sampler()).pass);
  EXPECT_TRUE(strongly_stratified_check(cone(), TangentField::zero(3), cone_sampler()).pass);
}

TEST(Tangency, VerticalFieldFailsAtApex)
{
  const TangencyReport r = strongly_stratified_check(cone(), dz, cone_sampler(), 0.1);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.strata.size(), 2u);
  EXPECT_EQ(r.strata[0].stratum, "apex");
  EXPECT_NEAR(r.strata[0].max_drift, 0.1, 1e-9);
  EXPECT_GT(r.strata[1].max_drift, r.threshold);
}

TEST(Tangency, BumpExtendedRadialPasses)
{
  const StratifiedSpace SS = cone();
  const TangentField X = extend_stratum_field(SS, 1, radial, pt({1, 0, 1}), 0.5, 0.9);
  EXPECT_TRUE(strongly_stratified_check(SS, X, cone_sampler()).pass);
}

TEST(OrbitStrata, ConeOrbitStaysInStratum)
{
  const StratifiedSpace SS = cone();
  const TangentField X = extend_stratum_field(SS, 1, radial, pt({1, 0, 1}), 0.5, 0.9);
  const OrbitStrataReport r = orbit_vs_strata(SS, {rot, X}, {pt({1, 0, 1}), pt({0, 0, 0})}, 1000, 0.3, 7,
                                              cone_sampler());
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.seeds.size(), 2u);
  EXPECT_EQ(r.seeds[0].stratum, "cone");
  EXPECT_GE(r.seeds[0].points, 1000);
  EXPECT_EQ(r.seeds[0].escaped, 0);
  EXPECT_EQ(r.seeds[0].est_dimension, 2);
  EXPECT_GT(r.seeds[0].coverage, 0.0);
  EXPECT_EQ(r.seeds[1].stratum, "apex");
  EXPECT_EQ(r.seeds[1].points, 1);
}

TEST(OrbitStrata, NonTangentFamilyRejected)
{
  EXPECT_THROW(orbit_vs_strata(cone(), {dz}, {pt({1, 0, 1})}, 100, 0.3, 1, cone_sampler()), PreconditionError);
}
