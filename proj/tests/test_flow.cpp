#include <gtest/gtest.h>

#include <numbers>
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

const TangentField rot = TangentField::parse({"-x2", "x1"}, 2, "rot");

}  // namespace

TEST(Integrate, HalflineTranslation)
{
  const IntegralCurve c = integrate(halfline(), TangentField::parse({"1"}, 1), pt({0.0}), 1.0);
  EXPECT_NEAR(c.t_minus, 0.0, 1e-9);
  EXPECT_TRUE(c.exit_minus.has_value());
  EXPECT_TRUE(c.exit_minus->closed_endpoint);
  EXPECT_DOUBLE_EQ(c.t_plus, 1.0);
  EXPECT_TRUE(c.clipped_plus);
  EXPECT_NEAR(c.samples.back().second(0), 1.0, 1e-12);
}

TEST(Integrate, ZeroFieldIsFixed)
{
  const IntegralCurve c = integrate(SubcartesianSpace::euclidean(2), TangentField::zero(2), pt({0.3, 0.4}), 2.0);
  EXPECT_DOUBLE_EQ(c.t_minus, -2.0);
  EXPECT_DOUBLE_EQ(c.t_plus, 2.0);
  for (const auto & [t, x] : c.samples) { EXPECT_EQ((x - pt({0.3, 0.4})).norm(), 0.0); }
}

TEST(Integrate, RotationClosesUp)
{
  const double T = 2 * std::numbers::pi;
  const IntegralCurve c = integrate(SubcartesianSpace::euclidean(2), rot, pt({1, 0}), T);
  EXPECT_NEAR((c.samples.back().second - pt({1, 0})).norm(), 0.0, 1e-6);
  for (const auto & [t, x] : c.samples) { EXPECT_NEAR((x - pt({std::cos(t), std::sin(t)})).norm(), 0.0, 1e-7); }
}

TEST(FlowMap, Examples)
{
  const auto H = halfline();
  const TangentField d = TangentField::parse({"1"}, 1);
  EXPECT_EQ(flow_map(H, d, 0.0, pt({1.0}))(0), 1.0);
  EXPECT_NEAR(flow_map(H, d, -0.5, pt({1.0}))(0), 0.5, 1e-12);
  try {
    flow_map(H, d, -1.5, pt({1.0}));
    FAIL() << "expected an exit";
  } catch (const FlowExitError & e) {
    EXPECT_NEAR(e.t_exit(), -1.0, 1e-9);
  }
}

TEST(FlowMap, GroupLaw)
{
  const auto R2 = SubcartesianSpace::euclidean(2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const double t = u(rng), s = u(rng);
    const Point x = pt({u(rng), u(rng)});
    worst = std::max(worst, (flow_map(R2, rot, t + s, x) - flow_map(R2, rot, t, flow_map(R2, rot, s, x))).norm());
  }
  EXPECT_LE(worst, 1e-7);
}

TEST(Pushforward, Examples)
{
  const auto R2 = SubcartesianSpace::euclidean(2);
  const TangentField dx = TangentField::parse({"1", "0"}, 2), xdy = TangentField::parse({"0", "x1"}, 2);
  const Pushforward p0 = pushforward_at(R2, dx, 0.0, xdy, pt({2, 1}));
  EXPECT_EQ(p0.vector(1), 2.0);
  const Pushforward p1 = pushforward_at(R2, dx, 1.0, xdy, pt({0, 0}));
  EXPECT_NEAR((p1.image - pt({1, 0})).norm(), 0.0, 1e-12);
  EXPECT_NEAR(p1.vector.norm(), 0.0, 1e-12);
  const Pushforward p2 = pushforward_at(R2, dx, 1.0, xdy, pt({-1, 0}));
  EXPECT_NEAR(p2.vector(1), -1.0, 1e-10);
  const Point x = pt({0.7, -0.2});
  const Pushforward self = pushforward_at(R2, rot, 1.3, rot, x);
  EXPECT_NEAR((self.vector - rot.value_at(self.image)).norm(), 0.0, 1e-8);
}

TEST(Classify, HalflineTranslationIsNotAVectorField)
{
  ProbeOptions po;
  po.seeds = {pt({0.0}), pt({1.0})};
  const VectorFieldVerdict v = classify_vector_field(halfline(), TangentField::parse({"1"}, 1), po);
  EXPECT_EQ(v.classification, Classification::NotVectorField);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_LE(std::abs(v.witness->point(0)), 1e-9);
}

TEST(Classify, HalflineDilationIsAVectorField)
{
  ProbeOptions po;
  po.seeds = {pt({0.0}), pt({1.0})};
  const VectorFieldVerdict v = classify_vector_field(halfline(), TangentField::parse({"x1"}, 1), po);
  EXPECT_EQ(v.classification, Classification::VectorField);
  EXPECT_GE(v.probes_run, 100);
}

TEST(Classify, Example2IsNotAVectorField)
{
  ProbeOptions po;
  po.seeds = {pt({0, 0})};
  const VectorFieldVerdict v = classify_vector_field(example2(), TangentField::parse({"1", "0"}, 2), po);
  EXPECT_EQ(v.classification, Classification::NotVectorField);
  EXPECT_TRUE(v.witness.has_value());
}

TEST(EscapeTime, ChordLength)
{
  const TangentField d = TangentField::parse({"1", "0"}, 2);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto t = escape_time(example2(), d, pt({0, eps}), 1.0, 10.0);
    ASSERT_TRUE(t.has_value());
    const double guard = example2().tol();
    EXPECT_NEAR(*t, std::sqrt(2 * eps - eps * eps - guard), 1e-9);
    EXPECT_LE(*t, 2 * std::sqrt(2 * eps));
  }
}

TEST(Flow, RejectsPointsOutsideTheSpace)
{
  EXPECT_THROW(integrate(halfline(), TangentField::parse({"1"}, 1), pt({-1.0}), 1.0), PreconditionError);
}
