#include "support.hpp"
#include "symflag/transgression.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace symflag;
using namespace symflag::testing;

namespace {

TransgressionSpec random_spec(const FlagEmbedding& flag, Rng& rng, int excess) {
  TransgressionSpec spec;
  spec.excess = excess;
  for (int i = 0; i < flag.depth(); ++i)
    spec.forms.push_back(FormField::from_trig(random_trig_form(flag.ambient(), rng, flag.level(i).dim + excess, 2, 2, 0.5)));
  return spec;
}

TransgressionSpec constant_spec(const FlagEmbedding& flag, int excess) {
  TransgressionSpec spec;
  spec.excess = excess;
  const int n = flag.ambient().dim();
  for (int i = 0; i < flag.depth(); ++i) {
    TrigForm f(n, flag.level(i).dim + excess);
    IndexSet idx;
    for (int a = 0; a < f.degree(); ++a) idx.push_back(a);
    f.add_component(idx, TrigFunction::constant(n, 1.0 + i));
    spec.forms.push_back(FormField::from_trig(f));
  }
  return spec;
}

VectorField random_field(const AmbientSpace& space, Rng& rng) {
  return VectorField::from_trig(random_trig_field(space, rng, 2, 2, 0.5));
}

const double kArea = 4 * M_PI * M_PI;

}  // namespace

TEST(Transgress, ExcessZeroIsLevelIntegrals) {
  const FlagEmbedding flag = canonical_flag(32);
  TransgressionSpec spec;
  spec.forms = {FormField::from_trig(TrigFunction::constant(4, 0.5)),
                FormField::from_trig(TrigForm::basis(4, {0, 1}, TrigFunction::constant(4, 1.0)))};
  EXPECT_NEAR(transgress_value(spec, flag, {}, 2), 1.0 + kArea, 1e-10);
}

TEST(Transgress, ZeroTangentGivesZero) {
  Rng rng(31);
  const FlagEmbedding flag = canonical_flag(16);
  const TransgressionSpec spec = random_spec(flag, rng, 1);
  const std::array<FlagTangent, 1> zero{zero_tangent(flag)};
  EXPECT_EQ(transgress_value(spec, flag, zero, 2), 0.0);
}

TEST(Transgress, AlternatesInTangents) {
  Rng rng(32);
  const FlagEmbedding flag = canonical_flag(16);
  for (int trial = 0; trial < 20; ++trial) {
    const TransgressionSpec spec = random_spec(flag, rng, 2);
    const FlagTangent a = random_compatible_tangent(flag, rng), b = random_compatible_tangent(flag, rng);
    const std::array<FlagTangent, 2> ab{a, b}, ba{b, a};
    const double v = transgress_value(spec, flag, ab, 2);
    EXPECT_LE(std::abs(v + transgress_value(spec, flag, ba, 2)), 1e-10 * std::max(1.0, std::abs(v)));
  }
}

TEST(Transgress, MatchesPointSumPlusTrapezoid) {
  // Independent oracle: evaluate alpha_i(X, e_u, e_v) directly at vertices.
  Rng rng(33);
  const int n = 32;
  const FlagEmbedding flag = canonical_flag(n);
  for (int trial = 0; trial < 5; ++trial) {
    const TransgressionSpec spec = random_spec(flag, rng, 1);
    const VectorField x = random_field(flag.ambient(), rng);
    const std::array<FlagTangent, 1> t{infinitesimal_action(flag, x)};
    double oracle = 0.0;
    for (const Vec& p : {vec4(0, 0, 0, 0), vec4(M_PI, M_PI, 0, 0)}) oracle += spec.forms[0](p, {x(p)});
    oracle += surface_trapezoid([&](const Vec& p) { return spec.forms[1](p, {x(p), unit_vec(4, 0), unit_vec(4, 1)}); }, n);
    EXPECT_NEAR(transgress_value(spec, flag, t, 2), oracle, 1e-11);
  }
}

TEST(DIdentity, ClosedFormsGiveVanishingDerivative) {
  Rng rng(34);
  const FlagEmbedding flag = canonical_flag(16);
  for (int excess : {0, 1}) {
    const IdentityResidual r =
        check_d_identity(constant_spec(flag, excess), flag, random_field(flag.ambient(), rng), random_field(flag.ambient(), rng), 1e-3, 2);
    EXPECT_LE(r.residual, 1e-4);
    EXPECT_LE(std::abs(r.rhs), 1e-12);
  }
}

TEST(DIdentity, SinAreaAlongX1) {
  const FlagEmbedding flag = canonical_surface(32);
  TransgressionSpec spec;
  spec.forms = {FormField::from_trig(TrigForm::basis(4, {0, 1}, expr("sin(x1)")))};
  const IdentityResidual r = check_d_identity(spec, flag, VectorField::constant(unit_vec(4, 0)), VectorField::zero(4), 1e-3, 2);
  EXPECT_LE(std::abs(r.lhs), 1e-6);
  EXPECT_LE(std::abs(r.rhs), 1e-6);
}

TEST(DIdentity, RandomDataConvergesUnderStepHalving) {
  Rng rng(35);
  const FlagEmbedding flag = canonical_flag(16);
  for (int excess : {0, 1}) {
    const TransgressionSpec spec = random_spec(flag, rng, excess);
    const VectorField x = random_field(flag.ambient(), rng), y = random_field(flag.ambient(), rng);
    std::vector<double> steps{1e-3, 5e-4, 2.5e-4}, res;
    for (double h : steps) res.push_back(check_d_identity(spec, flag, x, y, h, 2).residual);
    EXPECT_LE(res[0], 1e-4) << "excess " << excess;
    EXPECT_GE(log_slope(steps, res), 0.7) << "excess " << excess;
  }
}

TEST(DIdentity, RejectsHigherExcess) {
  Rng rng(36);
  const FlagEmbedding flag = canonical_flag(16);
  EXPECT_THROW(check_d_identity(random_spec(flag, rng, 2), flag, VectorField::zero(4), VectorField::zero(4), 1e-3, 2), Error);
}

TEST(Contraction, RandomFields) {
  Rng rng(37);
  const FlagEmbedding flag = canonical_flag(16);
  for (int trial = 0; trial < 10; ++trial) {
    const TransgressionSpec spec = random_spec(flag, rng, 2);
    const std::array<FlagTangent, 1> rest{random_compatible_tangent(flag, rng)};
    EXPECT_LE(check_contraction_identity(spec, flag, random_field(flag.ambient(), rng), rest, 2).residual, 1e-10);
  }
}

TEST(Contraction, VolumeFormOnSurface) {
  const FlagEmbedding flag = canonical_surface(16);
  TransgressionSpec spec;
  spec.excess = 2;
  spec.forms = {FormField::from_trig(symplectic_power(AmbientSpace::darboux(4), 2))};
  const std::array<FlagTangent, 1> rest{infinitesimal_action(flag, VectorField::constant(unit_vec(4, 3)))};
  const IdentityResidual r = check_contraction_identity(spec, flag, VectorField::constant(unit_vec(4, 2)), rest, 2);
  EXPECT_NEAR(r.lhs, kArea, 1e-10);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(LieIdentity, ZeroFieldAndSymmetryDirection) {
  Rng rng(38);
  const FlagEmbedding flag = canonical_flag(16);
  const TransgressionSpec spec = random_spec(flag, rng, 1);
  const std::array<FlagTangent, 1> t{random_compatible_tangent(flag, rng)};
  const IdentityResidual zero = check_lie_identity(spec, flag, VectorField::zero(4), t, 1e-3, 2);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_NEAR(zero.rhs, 0.0, 1e-14);

  const IdentityResidual sym =
      check_lie_identity(constant_spec(flag, 1), flag, VectorField::constant(vec4(0.3, -1, 0.2, 0.5)), t, 1e-3, 2);
  EXPECT_LE(sym.residual, 1e-8);
}

TEST(LieIdentity, CosAreaAlongX1) {
  const FlagEmbedding flag = canonical_surface(32);
  TransgressionSpec spec;
  spec.forms = {FormField::from_trig(TrigForm::basis(4, {0, 1}, expr("cos(x1)")))};
  const IdentityResidual r = check_lie_identity(spec, flag, VectorField::constant(unit_vec(4, 0)), {}, 1e-3, 2);
  EXPECT_LE(std::abs(r.lhs), 1e-6);
  EXPECT_LE(std::abs(r.rhs), 1e-6);
}

TEST(LieIdentity, ForwardDifferenceIsFirstOrder) {
  Rng rng(39);
  const FlagEmbedding flag = canonical_flag(16);
  const TransgressionSpec spec = random_spec(flag, rng, 1);
  const VectorField x = random_field(flag.ambient(), rng);
  const std::array<FlagTangent, 1> t{infinitesimal_action(flag, random_field(flag.ambient(), rng))};
  std::vector<double> steps{1e-3, 5e-4, 2.5e-4}, fwd, ctr;
  for (double h : steps) {
    fwd.push_back(check_lie_identity(spec, flag, x, t, h, 2, Difference::kForward).residual);
    ctr.push_back(check_lie_identity(spec, flag, x, t, h, 2, Difference::kCentral).residual);
  }
  EXPECT_NEAR(log_slope(steps, fwd), 1.0, 0.3);
  EXPECT_GE(log_slope(steps, ctr), 1.7);
  EXPECT_LE(ctr[0], 1e-4);
}

TEST(DiffEquivariance, IdentityAndTranslation) {
  Rng rng(40);
  const FlagEmbedding flag = canonical_flag(16);
  const std::array<FlagTangent, 1> t{infinitesimal_action(flag, random_field(flag.ambient(), rng))};
  const TransgressionSpec spec = random_spec(flag, rng, 1);
  EXPECT_LE(diff_equivariance_check(spec, flag, AffineMap(Mat::Identity(4, 4), Vec::Zero(4)), t, 2).residual, 1e-13);
  const IdentityResidual r =
      diff_equivariance_check(constant_spec(flag, 1), flag, AffineMap::translation(vec4(0.7, 0, -1.2, 0.1)), t, 2);
  EXPECT_LE(r.residual, 1e-13);
}

TEST(DiffEquivariance, SymplecticShearOnR4Fixture) {
  const Fixture fx = load_fixture(fixture_path("r4_oriented.json"));
  Rng rng(41);
  Mat a = Mat::Identity(4, 4);
  a(0, 1) = 1.0;
  a(2, 3) = -0.5;
  const AffineMap shear(a, vec4(0.1, -0.2, 0.3, 0.0));
  for (int excess : {0, 1}) {
    const TransgressionSpec spec = random_spec(fx.flag, rng, excess);
    std::vector<FlagTangent> t;
    if (excess == 1) t.push_back(infinitesimal_action(fx.flag, random_field(fx.flag.ambient(), rng)));
    EXPECT_LE(diff_equivariance_check(spec, fx.flag, shear, t, 4).residual, 1e-8);
  }
}

TEST(Slope, FitRecoversPowerLaw) {
  const std::vector<double> steps{1e-2, 5e-3, 2.5e-3}, values{3e-4, 7.5e-5, 1.875e-5};
  EXPECT_NEAR(fit_log_slope(steps, values), 2.0, 1e-12);
  EXPECT_THROW(fit_log_slope(std::span<const double>(steps).first(1), std::span<const double>(values).first(1)), Error);
}
