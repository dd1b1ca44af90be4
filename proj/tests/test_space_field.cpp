#include <gtest/gtest.h>

#include <random>

#include "subcart/orbit.hpp"

using namespace subcart;

namespace {

Point pt(std::initializer_list<double> v)
{
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) { p(i++) = c; }
  return p;
}

SubcartesianSpace halfline() { return SubcartesianSpace(1, {{{var(0), Relation::GeqZero}}}, 1e-9, true); }

SubcartesianSpace example2()
{
  return SubcartesianSpace(2, {{{parse("1 - x1^2 - (x2 - 1)^2", 2), Relation::GtZero}}, {{var(1), Relation::EqZero}}});
}

}  // namespace

TEST(Space, HalflineMembershipWithTolerance)
{
  const auto S = halfline();
  EXPECT_TRUE(S.contains(pt({0.0})));
  EXPECT_TRUE(S.contains(pt({-1e-12})));
  EXPECT_FALSE(S.contains(pt({-1e-3})));
}

TEST(Space, UnitCircle)
{
  const SubcartesianSpace S(2, {{{parse("x1^2 + x2^2 - 1", 2), Relation::EqZero}}});
  EXPECT_TRUE(S.contains(pt({1, 0})));
  EXPECT_FALSE(S.contains(pt({0.5, 0})));
}

TEST(Space, UnionPicksSecondCell)
{
  const auto S = example2();
  const Membership m = S.membership(pt({0, 0}));
  EXPECT_TRUE(m.member);
  ASSERT_EQ(m.cells.size(), 1u);
  EXPECT_EQ(m.cells[0], 1);
  EXPECT_TRUE(S.contains(pt({0, 1})));
  EXPECT_FALSE(S.contains(pt({0, 2.5})));
}

TEST(Space, Slack)
{
  const auto H = halfline();
  EXPECT_DOUBLE_EQ(H.slack(pt({2.0})), 2.0);
  EXPECT_DOUBLE_EQ(H.slack(pt({0.0})), 0.0);
  const SubcartesianSpace D(2, {{{parse("1 - x1^2 - x2^2", 2), Relation::GeqZero}}});
  EXPECT_NEAR(D.slack(pt({0.6, 0})), 0.64, 1e-15);
  EXPECT_THROW(H.slack(pt({-1.0})), PreconditionError);
}

TEST(Space, DimensionMismatch)
{
  EXPECT_THROW(halfline().contains(pt({1, 2})), DimensionError);
  EXPECT_THROW(SubcartesianSpace(1, {{{var(1), Relation::GeqZero}}}), DimensionError);
}

TEST(Space, DomainGuardIsNotMembership)
{
  const SubcartesianSpace S(1, {{{parse("log(x1)", 1), Relation::GeqZero}}});
  const Membership m = S.membership(pt({-1.0}));
  EXPECT_FALSE(m.member);
  EXPECT_FALSE(m.diagnostics.empty());
}

TEST(Field, ApplyExamples)
{
  EXPECT_DOUBLE_EQ(apply(TangentField::parse({"1"}, 1), parse("x1^2", 1))(pt({3})), 6.0);
  EXPECT_DOUBLE_EQ(apply(TangentField::parse({"x1"}, 1), var(0))(pt({3})), 3.0);
  const TangentField rot = TangentField::parse({"-x2", "x1"}, 2);
  const SmoothExpr r = apply(rot, parse("x1^2 + x2^2", 2));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 20; ++k) { EXPECT_NEAR(r(pt({u(rng), u(rng)})), 0.0, 1e-14); }
}

TEST(Field, DerivationLaws)
{
  const TangentField X = TangentField::parse({"x2^2", "sin(x1)"}, 2);
  const SmoothExpr f = parse("x1*x2", 2), g = parse("exp(x2)", 2);
  const SmoothExpr leib = apply(X, f * g) - (f * apply(X, g) + g * apply(X, f));
  const SmoothExpr lin = apply(X, constant(3.0) * f + g) - (constant(3.0) * apply(X, f) + apply(X, g));
  for (const Point & x : {pt({0.3, -0.7}), pt({1.2, 0.4})}) {
    EXPECT_NEAR(leib(x), 0.0, 1e-13);
    EXPECT_NEAR(lin(x), 0.0, 1e-13);
  }
  EXPECT_TRUE(apply(X, constant(2.0)).is_zero());
}

TEST(Bracket, Examples)
{
  const TangentField X = TangentField::parse({"x2^2", "sin(x1)"}, 2);
  for (const Point & x : {pt({0.3, 0.8}), pt({-2, 1})}) { EXPECT_EQ(lie_bracket(X, X).value_at(x).norm(), 0.0); }
  const TangentField dx = TangentField::parse({"1", "0"}, 2), xdy = TangentField::parse({"0", "x1"}, 2);
  const TangentField b = lie_bracket(dx, xdy);
  for (const Point & x : {pt({0, 0}), pt({2, -1})}) {
    EXPECT_DOUBLE_EQ(b.value_at(x)(0), 0.0);
    EXPECT_DOUBLE_EQ(b.value_at(x)(1), 1.0);
  }
  const TangentField radial = TangentField::parse({"x1", "x2"}, 2), rot = TangentField::parse({"-x2", "x1"}, 2);
  for (const Point & x : {pt({0.3, 0.8}), pt({-2, 1})}) { EXPECT_EQ(lie_bracket(radial, rot).value_at(x).norm(), 0.0); }
}

TEST(Bracket, FlowCommutatorCrossCheck)
{
  const auto R2 = SubcartesianSpace::euclidean(2);
  const FieldFamily F({TangentField::parse({"1", "0"}, 2), TangentField::parse({"0", "x1"}, 2)}, R2);
  const double s = 1e-3;
  const Point x = pt({0.4, -0.2});
  FlowWord w;
  w.steps = {{0, s}, {1, s}, {0, -s}, {1, -s}};
  const Point y = reach(F, x, w);
  const Eigen::VectorXd est = (y - x) / (s * s);
  const Eigen::VectorXd exact = lie_bracket(F.fields[0], F.fields[1]).value_at(x);
  EXPECT_NEAR((est - exact).norm(), 0.0, 1e-5);
}

TEST(Bracket, AntisymmetryAndJacobiIdentity)
{
  const TangentField X = TangentField::parse({"x2", "x1*x3", "1"}, 3);
  const TangentField Y = TangentField::parse({"sin(x3)", "0", "x1^2"}, 3);
  const TangentField Z = TangentField::parse({"x1*x2", "exp(x3)", "x2"}, 3);
  const TangentField jac =
      lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y));
  const TangentField anti = lie_bracket(X, Y) + lie_bracket(Y, X);
  for (const Point & x : {pt({0.1, 0.2, 0.3}), pt({-1, 0.5, 2})}) {
    EXPECT_NEAR(jac.value_at(x).norm(), 0.0, 1e-12);
    EXPECT_NEAR(anti.value_at(x).norm(), 0.0, 1e-14);
  }
}

TEST(Field, DimensionMismatch)
{
  EXPECT_THROW(lie_bracket(TangentField::parse({"1"}, 1), TangentField::parse({"1", "0"}, 2)), DimensionError);
}
