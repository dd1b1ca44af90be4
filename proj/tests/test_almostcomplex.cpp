#include <gtest/gtest.h>

#include <random>

#include "subcart/almostcomplex.hpp"

using namespace subcart;

namespace {

Point pt(std::initializer_list<double> v)
{
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) { p(i++) = c; }
  return p;
}

std::vector<Point> random_points(int n, int count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point x(n);
    for (int i = 0; i < n; ++i) { x(i) = u(rng); }
    out.push_back(x);
  }
  return out;
}

AlmostComplexStructure variable_j()
{
  return AlmostComplexStructure::parse({{"0", "-1", "0", "0"},
                                        {"1", "0", "0", "0"},
                                        {"0", "0", "0", "-(1 + x1^2)"},
                                        {"0", "0", "1/(1 + x1^2)", "0"}});
}

TangentField d(int i) { return TangentField::coordinate(4, i); }

/// Hand expansion: J∂1 = ∂2 and J∂3 = ∂4/a with a = 1 + x1², so only [∂1, J∂3] = −(2x1/a²)∂4
/// survives, J maps it to (2x1/a)∂3, and N(∂1,∂3) = −(4x1/a)∂3.
Point torsion_d1_d3(const Point & x)
{
  const double a = 1 + x(0) * x(0);
  return pt({0, 0, -4 * x(0) / a, 0});
}

TangentField random_field(int n, std::mt19937_64 & rng)
{
  std::uniform_int_distribution<int> c(-2, 2), v(0, n - 1);
  std::vector<SmoothExpr> comps;
  for (int i = 0; i < n; ++i) { comps.push_back(constant(c(rng)) * var(v(rng)) + constant(c(rng)) * pow(var(v(rng)), 2)); }
  return TangentField(comps, "R");
}

}  // namespace

TEST(Torsion, ConstantStructureVanishes)
{
  const auto J = AlmostComplexStructure::standard(1);
  const TangentField N = torsion(J, TangentField::coordinate(2, 0), TangentField::coordinate(2, 1));
  EXPECT_TRUE(N.is_zero());
}

TEST(Torsion, VariableStructureMatchesHandExpansion)
{
  const auto J = variable_j();
  const TangentField N = torsion(J, d(0), d(2));
  EXPECT_NEAR((N.value_at(pt({1, 0, 0, 0})) - pt({0, 0, -2, 0})).norm(), 0.0, 1e-12);
  for (const auto & x : random_points(4, 20, 1)) { EXPECT_NEAR((N.value_at(x) - torsion_d1_d3(x)).norm(), 0.0, 1e-12); }
}

TEST(Torsion, SkewSymmetric)
{
  const auto J = variable_j();
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const TangentField X = random_field(4, rng), Y = random_field(4, rng);
    const TangentField s = torsion(J, X, Y) + torsion(J, Y, X);
    const TangentField xx = torsion(J, X, X);
    for (const auto & x : random_points(4, 5, k)) {
      EXPECT_LE(s.value_at(x).norm(), 1e-12);
      EXPECT_LE(xx.value_at(x).norm(), 1e-12);
    }
  }
}

TEST(Structure, SquaresToMinusIdentity)
{
  EXPECT_LE(variable_j().square_residual(random_points(4, 50, 3)), 1e-10);
  EXPECT_EQ(AlmostComplexStructure::standard(2).square_residual(random_points(4, 5, 3)), 0.0);
}

TEST(Tensoriality, HoldsOnShippedStructures)
{
  const auto pts = random_points(4, 50, 4);
  EXPECT_LE(tensoriality_residual(variable_j(), d(0), d(2), var(0), var(2), pts), 1e-10);
  std::mt19937_64 rng(5);
  for (const auto & J : {variable_j(), AlmostComplexStructure::standard(2)}) {
    const TangentField X = random_field(4, rng), Y = random_field(4, rng);
    EXPECT_LE(tensoriality_residual(J, X, Y, parse("sin(x2) + x1", 4), parse("exp(x3)*x4", 4), pts), 1e-10);
    EXPECT_EQ(tensoriality_residual(J, X, Y, constant(1.0), constant(1.0), pts), 0.0);
  }
}

TEST(Eigenspace, QuarterOfTorsionNorm)
{
  const auto J = variable_j();
  const Point x = pt({1, 0, 0, 0});
  EXPECT_NEAR(eigenspace_closure_residual(J, d(0), d(2), {x}), torsion(J, d(0), d(2)).value_at(x).norm() / 4, 1e-10);
  std::mt19937_64 rng(6);
  for (const auto & p : random_points(4, 20, 7)) {
    const TangentField X = random_field(4, rng), Y = random_field(4, rng);
    EXPECT_NEAR(eigenspace_closure_residual(J, X, Y, {p}), torsion(J, X, Y).value_at(p).norm() / 4, 1e-10);
  }
  EXPECT_EQ(eigenspace_closure_residual(J, d(1), d(1), {x}), 0.0);
  EXPECT_EQ(eigenspace_closure_residual(AlmostComplexStructure::standard(2), d(0), d(2), {x}), 0.0);
}

TEST(CauchyRiemann, HolomorphicAndConjugate)
{
  const auto J = AlmostComplexStructure::standard(1);
  const auto R2 = SubcartesianSpace::euclidean(2);
  const FieldFamily F({TangentField::coordinate(2, 0)}, R2);
  const auto pts = random_points(2, 10, 8);
  EXPECT_EQ(cauchy_riemann_residual(J, F, var(0), var(1), pts), 0.0);
  EXPECT_EQ(cauchy_riemann_residual(J, F, var(0), -var(1), pts), 2.0);
  EXPECT_EQ(cauchy_riemann_residual(J, F, constant(0.0), constant(0.0), pts), 0.0);
  EXPECT_NEAR(cauchy_riemann_residual(J, F, parse("x1^2 - x2^2", 2), parse("2*x1*x2", 2), pts), 0.0, 1e-12);
}

TEST(Kahler, StandardPlane)
{
  const auto R2 = SubcartesianSpace::euclidean(2);
  const FieldFamily F({TangentField::coordinate(2, 0), TangentField::coordinate(2, 1)}, R2);
  const ExprMatrix omega = form_from_constant_bivector(PoissonStructure::canonical(1));
  const auto pts = random_points(2, 10, 9);
  const KahlerReport r = kahler_check(AlmostComplexStructure::standard(1), omega, F, pts);
  EXPECT_EQ(r.compatibility, 0.0);
  EXPECT_EQ(r.symmetry, 0.0);
  EXPECT_DOUBLE_EQ(r.min_eigenvalue, 1.0);
  EXPECT_TRUE(r.positive);
  EXPECT_TRUE(r.torsion_free);
  EXPECT_EQ(r.verdict, "Kahler at samples");

  const ExprMatrix m = AlmostComplexStructure::standard(1).matrix();
  ExprMatrix neg = m;
  for (auto & row : neg) {
    for (auto & e : row) { e = -e; }
  }
  const KahlerReport flipped = kahler_check(AlmostComplexStructure(neg), omega, F, pts);
  EXPECT_FALSE(flipped.positive);
  EXPECT_DOUBLE_EQ(flipped.min_eigenvalue, -1.0);
  EXPECT_EQ(flipped.verdict, "not Kahler at samples");
}

TEST(Kahler, SymmetryFollowsFromCompatibility)
{
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto R4 = SubcartesianSpace::euclidean(4);
  const FieldFamily F({d(0), d(1), d(2), d(3)}, R4);
  const auto pts = random_points(4, 5, 11);
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        W(i, j) = u(rng);
        W(j, i) = -W(i, j);
      }
    }
    if (std::abs(W.determinant()) < 1e-3) { continue; }
    ExprMatrix omega(4, std::vector<SmoothExpr>(4));
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) { omega[i][j] = constant(W(i, j)); }
    }
    for (const auto & J : {variable_j(), AlmostComplexStructure::standard(2)}) {
      const KahlerReport r = kahler_check(J, omega, F, pts);
      if (r.compatibility <= 1e-10) { EXPECT_LE(r.symmetry, 1e-10); }
    }
  }
  ExprMatrix omega(4, std::vector<SmoothExpr>(4, constant(0.0)));
  omega[0][1] = constant(1.0);
  omega[1][0] = constant(-1.0);
  omega[2][3] = constant(1.0);
  omega[3][2] = constant(-1.0);
  const KahlerReport r = kahler_check(AlmostComplexStructure::standard(2), omega, F, pts);
  EXPECT_LE(r.compatibility, 1e-10);
  EXPECT_LE(r.symmetry, 1e-10);
}

TEST(Kahler, DegenerateFormRejected)
{
  const auto R2 = SubcartesianSpace::euclidean(2);
  const FieldFamily F({TangentField::coordinate(2, 0), TangentField::coordinate(2, 1)}, R2);
  const ExprMatrix zero(2, std::vector<SmoothExpr>(2, constant(0.0)));
  EXPECT_THROW(kahler_check(AlmostComplexStructure::standard(1), zero, F, {pt({0, 0})}), PreconditionError);
  EXPECT_THROW(form_from_constant_bivector(PoissonStructure::parse({{"0", "x1"}, {"-x1", "0"}})), PreconditionError);
}
