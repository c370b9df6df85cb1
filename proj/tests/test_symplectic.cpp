#include "support.hpp"
#include "symflag/symplectic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace symflag;
using namespace symflag::testing;

namespace {

const double kArea = 4 * M_PI * M_PI;

FormField trig(const std::string& text) { return FormField::from_trig(expr(text)); }

VectorField xh(const AmbientSpace& space, const TrigFunction& f) {
  return hamiltonian_vector_field(space, FormField::from_trig(f));
}

// omega(X_f, X_g) at the marked points plus the periodic trapezoid sum of
// det[X_f, X_g, e_x1, e_y1] over the flat surface.
double kks_oracle(const TrigFunction& f, const TrigFunction& g, int n) {
  const AmbientSpace space = torus4();
  const VectorField xf = xh(space, f), xg = xh(space, g);
  double total = 0.0;
  for (const Vec& p : {vec4(0, 0, 0, 0), vec4(M_PI, M_PI, 0, 0)}) total += space.omega(xf(p), xg(p));
  total += surface_trapezoid(
      [&](const Vec& p) {
        Eigen::Matrix4d m;
        m.col(0) = xf(p);
        m.col(1) = xg(p);
        m.col(2) = unit_vec(4, 0);
        m.col(3) = unit_vec(4, 1);
        return m.determinant();
      },
      n);
  return total;
}

double moment_oracle(const TrigFunction& f, int n) {
  return f.value(vec4(0, 0, 0, 0)) + f.value(vec4(M_PI, M_PI, 0, 0)) +
         surface_trapezoid([&](const Vec& p) { return f.value(p); }, n);
}

}  // namespace

TEST(IsSymplectic, CanonicalSurfaceIsSymplectic) {
  const SymplecticReport r = is_symplectic_flag(canonical_flag(16));
  EXPECT_TRUE(r.symplectic);
  EXPECT_NEAR(r.levels[1].min_ratio, 1.0, 1e-12);
}

TEST(IsSymplectic, LagrangianSurfaceFlagsEveryCell) {
  const std::vector<TrigFunction> chart{TrigFunction::coordinate(2, 0), TrigFunction(2), TrigFunction::coordinate(2, 1), TrigFunction(2)};
  const FlagEmbedding flag(torus_surface_data(16, chart));
  const SymplecticReport r = is_symplectic_flag(flag);
  EXPECT_FALSE(r.symplectic);
  EXPECT_EQ(r.levels[0].degenerate_cells.size(), static_cast<std::size_t>(flag.level(0).cell_count()));
}

TEST(IsSymplectic, OddLevelIsAnError) {
  const Fixture fx = load_fixture(fixture_path("r4_oriented.json"));
  EXPECT_THROW(is_symplectic_flag(fx.flag), Error);
}

TEST(LiouvilleOrientation, SignsFollowOmega) {
  const FlagEmbedding flag = canonical_flag(16);
  EXPECT_EQ(liouville_orientation(flag, 0), std::vector<int>({1, 1}));
  EXPECT_EQ(liouville_orientation(flag, 1), std::vector<int>({1}));
  FlagData d = torus_surface_data(16, flat_chart());
  for (auto& c : d.levels.back().cells) std::swap(c[1], c[2]);
  EXPECT_EQ(liouville_orientation(FlagEmbedding(std::move(d)), 0), std::vector<int>({-1}));
}

TEST(FlagOmega, PointLevelIsOmega) {
  const AmbientSpace space = torus4();
  const FlagEmbedding point = single_point_flag(vec4(0.5, 1, 2, 3), space);
  FlagTangent xi = zero_tangent(point), eta = zero_tangent(point);
  xi.values[0][0] = vec4(1, 2, 3, 4);
  eta.values[0][0] = vec4(-1, 0.5, 2, 1);
  EXPECT_NEAR(flag_omega(point, xi, eta, 2), space.omega(xi.values[0][0], eta.values[0][0]), 1e-15);
}

TEST(FlagOmega, ConstantNormalFields) {
  const double a = 1.3, b = -0.6;
  const FlagEmbedding surface = canonical_surface(32);
  const VectorField za = VectorField::constant(a * unit_vec(4, 2)), zb = VectorField::constant(b * unit_vec(4, 3));
  EXPECT_NEAR(flag_omega(surface, infinitesimal_action(surface, za), infinitesimal_action(surface, zb), 2), a * b * kArea, 1e-10);
  const FlagEmbedding flag = canonical_flag(32);
  EXPECT_NEAR(flag_omega(flag, infinitesimal_action(flag, za), infinitesimal_action(flag, zb), 2), a * b * (kArea + 2), 1e-10);
}

TEST(FlagOmega, Antisymmetric) {
  Rng rng(61);
  const FlagEmbedding flag = canonical_flag(16);
  for (int trial = 0; trial < 20; ++trial) {
    const FlagTangent xi = random_compatible_tangent(flag, rng), eta = random_compatible_tangent(flag, rng);
    EXPECT_LE(std::abs(flag_omega(flag, xi, xi, 2)), 1e-12);
    EXPECT_LE(std::abs(flag_omega(flag, xi, eta, 2) + flag_omega(flag, eta, xi, 2)), 1e-12);
  }
}

TEST(Moment, CanonicalProbes) {
  const FlagEmbedding flag = canonical_flag(64);
  EXPECT_NEAR(moment_pairing(flag, trig("1"), 2), 2 + kArea, 1e-8);
  EXPECT_NEAR(moment_pairing(flag, trig("cos(x1)"), 2), 0.0, 1e-10);
  // cos(x2) = 1 on the whole surface {x2 = y2 = 0}: point terms plus the area.
  EXPECT_NEAR(moment_pairing(flag, trig("cos(x2)"), 2), 2 + kArea, 1e-10);
}

TEST(Moment, MatchesIndependentQuadrature) {
  Rng rng(62);
  const FlagEmbedding flag = canonical_flag(32);
  for (int trial = 0; trial < 10; ++trial) {
    const TrigFunction f = random_trig_function(flag.ambient(), rng, 2, 5, 1.0);
    EXPECT_NEAR(moment_pairing(flag, FormField::from_trig(f), 2), moment_oracle(f, 32), 1e-10);
  }
}

TEST(Moment, VectorFollowsDictionary) {
  const FlagEmbedding flag = canonical_flag(16);
  const auto dict = HamiltonianDictionary::trig_monomials(flag.ambient(), 2, false, true);
  const auto values = moment_vector(flag, dict, 2);
  ASSERT_EQ(values.size(), 41u);
  for (int j = 0; j < dict.size(); ++j) EXPECT_NEAR(values[j], moment_oracle(dict.basis[j].f, 16), 1e-10) << dict.basis[j].name;
}

TEST(Moment, FlippedSurfaceIsReoriented) {
  FlagData d = torus_surface_data(16, flat_chart(), {{0, 0}, {8, 8}});
  for (auto& c : d.levels.back().cells) std::swap(c[1], c[2]);
  EXPECT_NEAR(moment_pairing(FlagEmbedding(std::move(d)), trig("1"), 2), 2 + kArea, 1e-10);
}

TEST(HamiltonianPairing, Examples) {
  const FlagEmbedding flag = canonical_flag(32);
  const IdentityResidual c = hamiltonian_pairing_identity(flag, trig("3"), VectorField::constant(unit_vec(4, 2)), 1e-3, 2);
  EXPECT_NEAR(c.lhs, 0.0, 1e-12);
  EXPECT_NEAR(c.rhs, 0.0, 1e-12);
  EXPECT_LE(hamiltonian_pairing_identity(flag, trig("y1"), VectorField::constant(unit_vec(4, 2)), 1e-3, 2).residual, 1e-4);
}

TEST(HamiltonianPairing, ForwardDifferenceConverges) {
  Rng rng(63);
  const FlagEmbedding flag = canonical_flag(16);
  const FormField f = FormField::from_trig(random_trig_function(flag.ambient(), rng, 2, 4, 1.0));
  const VectorField x = VectorField::from_trig(random_trig_field(flag.ambient(), rng, 2, 3, 0.5));
  std::vector<double> steps{1e-3, 5e-4, 2.5e-4}, res;
  for (double h : steps) res.push_back(hamiltonian_pairing_identity(flag, f, x, h, 2).residual);
  EXPECT_LE(res[0], 1e-2);
  EXPECT_GE(log_slope(steps, res), 0.7);
}

TEST(Equivariance, ConstantGeneratorIsTrivial) {
  const FlagEmbedding flag = canonical_flag(16);
  const IdentityResidual r = equivariance_check(flag, trig("cos(x1+y2)"), trig("2"), 1e-3, 2);
  EXPECT_NEAR(r.lhs, 0.0, 1e-12);
  EXPECT_NEAR(r.rhs, 0.0, 1e-12);
}

TEST(Equivariance, ClassicalPointParticle) {
  const FlagEmbedding point = single_point_flag(Vec::Zero(4), torus4());
  const IdentityResidual r = equivariance_check(point, trig("sin(x1)"), trig("y1"), 1e-4, 2);
  EXPECT_NEAR(r.rhs, 1.0, 1e-12);
  EXPECT_LE(r.residual, 1e-6);
}

TEST(Equivariance, RandomPairsOnCanonicalFlag) {
  Rng rng(64);
  const FlagEmbedding flag = canonical_flag(32);
  for (int trial = 0; trial < 10; ++trial) {
    const FormField f = FormField::from_trig(random_trig_function(flag.ambient(), rng, 2, 4, 1.0));
    const FormField g = FormField::from_trig(random_trig_function(flag.ambient(), rng, 2, 4, 1.0));
    EXPECT_LE(equivariance_check(flag, f, g, 1e-3, 2).residual, 1e-4);
  }
}

TEST(Kks, SelfPairVanishes) {
  const FlagEmbedding flag = canonical_flag(16);
  const FormField f = trig("cos(x1-y2) + sin(x2)");
  const IdentityResidual r = kks_check(flag, f, f, 2);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_NEAR(r.rhs, 0.0, 1e-13);
}

TEST(Kks, PointParticle) {
  const FlagEmbedding point = single_point_flag(Vec::Zero(4), torus4());
  const IdentityResidual r = kks_check(point, trig("sin(x1)"), trig("y1"), 2);
  EXPECT_NEAR(r.lhs, 1.0, 1e-12);
  EXPECT_NEAR(r.rhs, 1.0, 1e-12);
}

TEST(Kks, RandomPairsAgainstOracle) {
  Rng rng(65);
  const int n = 32;
  const FlagEmbedding flag = canonical_flag(n);
  for (int trial = 0; trial < 10; ++trial) {
    const TrigFunction f = random_trig_function(flag.ambient(), rng, 2, 4, 1.0);
    const TrigFunction g = random_trig_function(flag.ambient(), rng, 2, 4, 1.0);
    const IdentityResidual r = kks_check(flag, FormField::from_trig(f), FormField::from_trig(g), 2);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_NEAR(r.lhs, kks_oracle(f, g, n), 1e-10);
  }
}

TEST(Kks, FlippedSignFails) {
  Rng rng(66);
  const FlagEmbedding flag = canonical_flag(16);
  const FormField f = FormField::from_trig(random_trig_function(flag.ambient(), rng, 2, 4, 1.0));
  const FormField g = FormField::from_trig(random_trig_function(flag.ambient(), rng, 2, 4, 1.0));
  const IdentityResidual r = kks_check(flag, f, g, 2, true);
  EXPECT_GT(r.residual, 1e-3);
}

TEST(Nondegeneracy, AnalyticFrame) {
  const FlagEmbedding flag = canonical_flag(32);
  const std::vector<FlagTangent> frame{infinitesimal_action(flag, VectorField::constant(unit_vec(4, 2))),
                                       infinitesimal_action(flag, VectorField::constant(unit_vec(4, 3)))};
  const NondegeneracyResult r = nondegeneracy_probe(flag, frame, 2);
  EXPECT_EQ(r.rank, 2);
  EXPECT_NEAR(r.gram(0, 1), kArea + 2, 1e-8);
  EXPECT_NEAR(r.gram(1, 0), -(kArea + 2), 1e-8);
  EXPECT_NEAR(r.min_singular_value, kArea + 2, 1e-8);
}

TEST(Nondegeneracy, RandomFrameIsFullRank) {
  Rng rng(67);
  const FlagEmbedding flag = canonical_flag(16);
  std::vector<FlagTangent> frame;
  for (int a = 0; a < 20; ++a) frame.push_back(random_compatible_tangent(flag, rng));
  const NondegeneracyResult r = nondegeneracy_probe(flag, frame, 2);
  EXPECT_EQ(r.rank, 20);
  EXPECT_GT(r.min_singular_value, 1e-8);
  EXPECT_LE((r.gram + r.gram.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nondegeneracy, SingleMemberHasRankZero) {
  const FlagEmbedding flag = canonical_flag(16);
  const std::vector<FlagTangent> frame{infinitesimal_action(flag, VectorField::constant(unit_vec(4, 2)))};
  EXPECT_EQ(nondegeneracy_probe(flag, frame, 2).rank, 0);
}

TEST(Nondegeneracy, DependentFrameIsRejected) {
  const FlagEmbedding flag = canonical_flag(16);
  const FlagTangent z = infinitesimal_action(flag, VectorField::constant(unit_vec(4, 2)));
  const std::vector<FlagTangent> frame{z, z};
  try {
    nondegeneracy_probe(flag, frame, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(Specs, DegreesMatchLevels) {
  const FlagEmbedding flag = canonical_flag(16);
  const TransgressionSpec w = omega_spec(flag);
  EXPECT_EQ(w.excess, 2);
  EXPECT_EQ(w.forms[0].degree(), 2);
  EXPECT_EQ(w.forms[1].degree(), 4);
  const TransgressionSpec m = moment_spec(flag, trig("1"));
  EXPECT_EQ(m.excess, 0);
  EXPECT_EQ(m.forms[1].degree(), 2);
}
