#include "support.hpp"
#include "symflag/currents.hpp"
#include "symflag/symplectic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace symflag;
using namespace symflag::testing;

namespace {

const double kArea = 4 * M_PI * M_PI;

// f + f omega: pairs a flag with the same weights as the moment map.
MixedForm moment_probe(const TrigFunction& f) {
  const TrigForm omega = TrigForm::two_form(AmbientSpace::darboux(4));
  return {{FormField::from_trig(f), FormField::from_trig(omega.times(f))}};
}

std::vector<MixedForm> dictionary_probes(int cap) {
  std::vector<MixedForm> probes{moment_probe(TrigFunction::constant(4, 1.0))};
  for (const auto& member : HamiltonianDictionary::trig_monomials(torus4(), cap).basis)
    probes.push_back(moment_probe(member.f));
  return probes;
}

MixedForm random_primitive(const FlagEmbedding& flag, Rng& rng) {
  MixedForm beta;
  for (int i = 0; i < flag.depth(); ++i)
    if (flag.level(i).dim >= 1)
      beta.components.push_back(FormField::from_trig(random_trig_form(flag.ambient(), rng, flag.level(i).dim - 1, 2, 3, 0.5)));
  return beta;
}

FlagEmbedding bumped(int n, double amplitude) {
  std::vector<TrigFunction> chart = flat_chart();
  chart[2] = parse_expression(std::to_string(amplitude) + "*sin(u)", {"u", "v"}, Vec::Ones(2));
  chart[3] = parse_expression(std::to_string(amplitude) + "*sin(v)", {"u", "v"}, Vec::Ones(2));
  return FlagEmbedding(torus_surface_data(n, chart, {{0, 0}, {n / 2, n / 2}}));
}

}  // namespace

TEST(Pair, PointCountPlusArea) {
  const FlagEmbedding flag = canonical_flag(64);
  EXPECT_NEAR(pair(flag, moment_probe(TrigFunction::constant(4, 1.0)), 2), 2 + kArea, 1e-10);
  const MixedForm only_dx1dy1{{FormField::from_trig(TrigForm::basis(4, {0, 1}, TrigFunction::constant(4, 1.0)))}};
  EXPECT_NEAR(pair(flag, only_dx1dy1, 2), kArea, 1e-10);
}

TEST(Pair, UnmatchedDegreesGiveZero) {
  const FlagEmbedding flag = canonical_flag(16);
  const MixedForm one_and_three{{FormField::from_trig(TrigForm::basis(4, {0}, TrigFunction::constant(4, 1.0))),
                                 FormField::from_trig(TrigForm::basis(4, {0, 1, 2}, TrigFunction::constant(4, 1.0)))}};
  EXPECT_EQ(pair(flag, one_and_three, 2), 0.0);
}

TEST(Pair, OrientationReversalNegatesThatLevel) {
  const FlagEmbedding flag = canonical_flag(16);
  const MixedForm probe = moment_probe(TrigFunction::constant(4, 1.0));
  const FlagEmbedding flipped = flag.with_orientations({{1, 1}, {-1}});
  EXPECT_NEAR(pair(flipped, probe, 2), 2 - kArea, 1e-10);
  const FlagEmbedding points_flipped = flag.with_orientations({{-1, -1}, {1}});
  EXPECT_NEAR(pair(points_flipped, probe, 2), kArea - 2, 1e-10);
  const FlagEmbedding one_flipped = flag.with_orientations({{1, -1}, {1}});
  EXPECT_NEAR(pair(one_flipped, probe, 2), kArea, 1e-10);
}

TEST(Pair, RejectsRepeatedDegrees) {
  const MixedForm twice{{FormField::from_trig(TrigFunction::constant(4, 1.0)), FormField::from_trig(TrigFunction::constant(4, 2.0))}};
  EXPECT_THROW(check_mixed(twice, 4), Error);
}

TEST(Stokes, ConstantPrimitiveIsExact) {
  const FlagEmbedding flag = canonical_flag(16);
  const MixedForm beta{{FormField::from_trig(TrigForm::basis(4, {1}, TrigFunction::constant(4, 0.7)))}};
  EXPECT_EQ(stokes_residual(flag, beta, 2), 0.0);
}

TEST(Stokes, SinDy1OnFlatSurface) {
  const FlagEmbedding flag = canonical_surface(64);
  const MixedForm beta{{FormField::from_trig(TrigForm::basis(4, {1}, expr("sin(x1)")))}};
  EXPECT_LE(stokes_residual(flag, beta, 2), 1e-10);
}

TEST(Stokes, GenericPrimitiveAndRefinementOrder) {
  Rng rng(51);
  const FlagEmbedding coarse = bumped(32, 0.3);
  const MixedForm beta = random_primitive(coarse, rng);
  EXPECT_LE(stokes_residual(bumped(64, 0.3), beta, 2), 1e-6);
  std::vector<double> sizes, res;
  for (int factor : {1, 2, 4}) {
    sizes.push_back(1.0 / factor);
    res.push_back(stokes_residual(refine(coarse, factor), beta, 1));
  }
  EXPECT_NEAR(log_slope(sizes, res), 2.0, 0.3);
}

TEST(Stokes, ClosedCurveTelescopes) {
  FlagData d;
  d.ambient = AmbientSpace::euclidean(4);
  Mesh m;
  m.dim = 1;
  m.vertex_count = 11;
  for (int k = 0; k < 11; ++k) {
    d.positions.push_back(0.2 * vec4(std::cos(0.3 * k * k), std::sin(k), 0.1 * k, 0.0));
    m.cells.push_back({k, (k + 1) % 11, 0});
  }
  d.levels.push_back(m);
  const FlagEmbedding loop(std::move(d));
  Rng rng(52);
  EXPECT_LE(stokes_residual(loop, MixedForm{{FormField::from_trig(random_trig_function(torus4(), rng, 2, 4, 1.0))}}, 19), 1e-12);
}

TEST(Separation, IdenticalFlagsAreNotSeparated) {
  const FlagEmbedding flag = canonical_flag(16);
  const SeparationVerdict v = separation_test(flag, flag, dictionary_probes(2), 2);
  EXPECT_FALSE(v.separated);
  EXPECT_EQ(v.witness, -1);
  EXPECT_EQ(v.difference, 0.0);
}

TEST(Separation, MovedPointWitnessIsCosX1) {
  const int n = 16;
  const FlagEmbedding flag = canonical_flag(n);
  FlagData d = torus_surface_data(n, flat_chart(), {{n / 2, 0}, {n / 2, n / 2}});
  const FlagEmbedding moved(std::move(d));
  const auto probes = dictionary_probes(2);
  const SeparationVerdict v = separation_test(flag, moved, probes, 2);
  ASSERT_TRUE(v.separated);
  // cos(x1) is the first frequency-1 monomial; every maximizer changes by 2.
  EXPECT_NEAR(v.difference, 2.0, 1e-12);
  const double cos_x1 = std::abs(pair(flag, probes[1], 2) - pair(moved, probes[1], 2));
  EXPECT_NEAR(cos_x1, v.difference, 1e-12);
  EXPECT_EQ(v.witness, 1);
}

TEST(Separation, SmallBumpIsSeparated) {
  const FlagEmbedding flat = canonical_flag(32);
  const FlagEmbedding bump = bumped(32, 0.1);
  const SeparationVerdict v = separation_test(flat, bump, dictionary_probes(2), 4);
  EXPECT_TRUE(v.separated);
  EXPECT_GT(v.difference, 1e-3);
}
