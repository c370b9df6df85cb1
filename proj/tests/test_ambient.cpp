#include "support.hpp"
#include "symflag/ambient.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace symflag;
using namespace symflag::testing;

namespace {

const AmbientSpace kR4 = AmbientSpace::euclidean(4);

// Pointwise forms with no trig table force the finite-difference paths.
FormField opaque(const FormField& form) {
  return FormField(form.dim(), form.degree(), [form](const Vec& x, std::span<const Vec> v) { return form(x, v); });
}

FormField sin_x1_dy1() {
  return FormField(4, 1, [](const Vec& x, std::span<const Vec> v) { return std::sin(x[0]) * v[0][1]; });
}

std::vector<Vec> random_points(Rng& rng, int count) {
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) out.push_back(vec4(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)));
  return out;
}

void expect_vec_near(const Vec& a, const Vec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

}  // namespace

TEST(ExteriorDerivative, ConstantHasZeroDerivative) {
  const FormField c = opaque(FormField::from_trig(TrigFunction::constant(4, 2.5)));
  const FormField dc = exterior_derivative(c);
  Rng rng(1);
  for (const Vec& x : random_points(rng, 5)) EXPECT_NEAR(dc(x, {unit_vec(4, 0) + unit_vec(4, 2)}), 0.0, 1e-10);
}

TEST(ExteriorDerivative, FiniteDifferenceMatchesAnalytic) {
  const FormField d = exterior_derivative(sin_x1_dy1(), 1e-4);
  EXPECT_NEAR(d(Vec::Zero(4), {unit_vec(4, 0), unit_vec(4, 1)}), 1.0, 1e-8);
  EXPECT_NEAR(d(Vec::Zero(4), {unit_vec(4, 1), unit_vec(4, 0)}), -1.0, 1e-8);
}

TEST(ExteriorDerivative, SymplecticFormIsClosed) {
  const FormField w = opaque(FormField::from_trig(TrigForm::two_form(AmbientSpace::darboux(4))));
  const FormField dw = exterior_derivative(w);
  Rng rng(2);
  for (const Vec& x : random_points(rng, 10)) {
    const auto v = random_points(rng, 3);
    EXPECT_NEAR(dw(x, std::span<const Vec>(v)), 0.0, 1e-9);
  }
}

TEST(InteriorProduct, CoordinateExamples) {
  const FormField dx1dy1 = FormField::from_trig(TrigForm::basis(4, {0, 1}, TrigFunction::constant(4, 1.0)));
  const FormField i2 = interior_product(dx1dy1, VectorField::constant(unit_vec(4, 2)));
  Rng rng(3);
  for (const Vec& x : random_points(rng, 5)) EXPECT_EQ(i2(x, {random_points(rng, 1)[0]}), 0.0);
  const FormField i1 = interior_product(dx1dy1, VectorField::constant(unit_vec(4, 0)));
  EXPECT_DOUBLE_EQ(i1(Vec::Zero(4), {unit_vec(4, 1)}), 1.0);

  const double a = -0.8;
  const FormField vol = FormField::from_trig(symplectic_power(AmbientSpace::darboux(4), 2));
  const FormField ia = interior_product(opaque(vol), VectorField::constant(a * unit_vec(4, 2)));
  EXPECT_NEAR(ia(Vec::Zero(4), {unit_vec(4, 0), unit_vec(4, 1), unit_vec(4, 3)}), a, 1e-15);
}

TEST(HamiltonianField, CoordinateHamiltonians) {
  const Vec x = vec4(0.3, 0.1, -0.2, 0.9);
  expect_vec_near(hamiltonian_vector_field(kR4, FormField::from_trig(TrigFunction::coordinate(4, 1)))(x), unit_vec(4, 0), 1e-15);
  expect_vec_near(hamiltonian_vector_field(kR4, FormField::from_trig(TrigFunction::coordinate(4, 0)))(x), -unit_vec(4, 1), 1e-15);
  expect_vec_near(hamiltonian_vector_field(kR4, FormField::from_trig(TrigFunction::constant(4, 3.0)))(x), Vec::Zero(4), 0.0);
}

TEST(HamiltonianField, DefiningRelation) {
  // i_{X_f} omega = df at random points, for trig and pointwise f.
  Rng rng(4);
  const AmbientSpace space = torus4();
  for (int trial = 0; trial < 5; ++trial) {
    const TrigFunction f = random_trig_function(space, rng, 2, 4, 1.0);
    for (const FormField& ff : {FormField::from_trig(f), opaque(FormField::from_trig(f))}) {
      const VectorField xf = hamiltonian_vector_field(space, ff);
      for (const Vec& x : random_points(rng, 3)) {
        const Vec v = random_points(rng, 1)[0];
        EXPECT_NEAR(space.omega(xf(x), v), f.gradient(x).dot(v), 1e-8);
      }
    }
  }
}

TEST(PoissonBracket, Examples) {
  Rng rng(5);
  const FormField f = FormField::from_trig(expr("cos(x1+y2) + 0.5*sin(x2)"));
  const FormField ff = poisson_bracket(kR4, f, f);
  for (const Vec& x : random_points(rng, 5)) EXPECT_NEAR(ff(x), 0.0, 1e-12);

  const FormField sb = poisson_bracket(kR4, FormField::from_trig(expr("sin(x1)")), FormField::from_trig(expr("y1")));
  EXPECT_NEAR(sb(Vec::Zero(4)), 1.0, 1e-12);

  const FormField xx = poisson_bracket(kR4, FormField::from_trig(expr("x1")), FormField::from_trig(expr("x2")));
  for (const Vec& x : random_points(rng, 5)) EXPECT_EQ(xx(x), 0.0);
}

TEST(PoissonBracket, JacobiIdentity) {
  Rng rng(6);
  const AmbientSpace space = torus4();
  const FormField f = FormField::from_trig(random_trig_function(space, rng, 2, 3, 1.0));
  const FormField g = FormField::from_trig(random_trig_function(space, rng, 2, 3, 1.0));
  const FormField h = FormField::from_trig(random_trig_function(space, rng, 2, 3, 1.0));
  auto pb = [&](const FormField& a, const FormField& b) { return poisson_bracket(space, a, b); };
  const FormField j1 = pb(f, pb(g, h)), j2 = pb(g, pb(h, f)), j3 = pb(h, pb(f, g));
  for (const Vec& x : random_points(rng, 5)) EXPECT_NEAR(j1(x) + j2(x) + j3(x), 0.0, 1e-10);
}

TEST(Flow, ExactCases) {
  const std::vector<Vec> pts{vec4(0, 1, 0, 0), vec4(0.5, -2, 1, 3)};
  const auto still = flow(kR4, VectorField::zero(4), 2.0, 0.1, pts);
  for (std::size_t k = 0; k < pts.size(); ++k) expect_vec_near(still[k], pts[k], 0.0);

  const auto moved = flow(kR4, VectorField::constant(unit_vec(4, 0)), 1.0, 1e-2, pts);
  for (std::size_t k = 0; k < pts.size(); ++k) expect_vec_near(moved[k], pts[k] + unit_vec(4, 0), 1e-13);

  // X_{y1^2/2} = y1 dx1 integrates exactly with RK4.
  const VectorField y1dx1(4, [](double, const Vec& x) { return Vec(x[1] * unit_vec(4, 0)); });
  const std::vector<Vec> start{vec4(0, 1, 0, 0)};
  expect_vec_near(flow(kR4, y1dx1, 1.0, 1e-3, start)[0], vec4(1, 1, 0, 0), 1e-10);
}

TEST(Flow, TorusWrapsIntoFundamentalDomain) {
  const AmbientSpace space = torus4();
  const std::vector<Vec> start{vec4(6.0, 0, 0, 0)};
  const Vec end = flow(space, VectorField::constant(unit_vec(4, 0)), 1.0, 0.1, start)[0];
  EXPECT_NEAR(end[0], 7.0 - kTwoPi, 1e-12);
}

TEST(Flow, RejectsBadStep) {
  const std::vector<Vec> pts{Vec::Zero(4)};
  EXPECT_THROW(flow(kR4, VectorField::zero(4), 1.0, 0.0, pts), Error);
  EXPECT_THROW(flow(kR4, VectorField::zero(4), -1.0, 0.1, pts), Error);
}

TEST(Flow, BlowUpIsNumericalError) {
  const VectorField quadratic(4, [](double, const Vec& x) { return Vec(x[0] * x[0] * unit_vec(4, 0)); });
  const std::vector<Vec> pts{vec4(1, 0, 0, 0)};
  try {
    flow(kR4, quadratic, 2.0, 1e-2, pts);
    FAIL() << "expected a blow-up";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(Flow, BracketConsistencyIsSecondOrderForCentralDifferences) {
  Rng rng(7);
  const AmbientSpace space = torus4();
  const TrigFunction f = random_trig_function(space, rng, 2, 4, 1.0);
  const TrigFunction g = random_trig_function(space, rng, 2, 4, 1.0);
  const VectorField xg = hamiltonian_vector_field(space, FormField::from_trig(g));
  const FormField fg = poisson_bracket(space, FormField::from_trig(f), FormField::from_trig(g));
  const Vec x = vec4(0.4, -1.0, 2.0, 0.3);
  std::vector<double> steps{1e-2, 5e-3, 2.5e-3}, central, forward;
  for (double dt : steps) {
    const Vec plus = FlowMap(xg, dt, dt).apply(x);
    const Vec minus = FlowMap(xg, -dt, dt).apply(x);
    central.push_back(std::abs((f.value(plus) - f.value(minus)) / (2 * dt) - fg(x)));
    forward.push_back(std::abs((f.value(plus) - f.value(x)) / dt - fg(x)));
  }
  EXPECT_NEAR(log_slope(steps, central), 2.0, 0.3);
  EXPECT_NEAR(log_slope(steps, forward), 1.0, 0.3);
}

TEST(FlowMap, HamiltonianFlowIsSymplectic) {
  Rng rng(8);
  const AmbientSpace space = torus4();
  const TrigFunction h = random_trig_function(space, rng, 2, 4, 1.0);
  const FlowMap phi(hamiltonian_vector_field(space, FormField::from_trig(h)), 0.7, 1e-3);
  for (const Vec& x : random_points(rng, 5)) {
    std::array<Vec, 2> v{random_points(rng, 1)[0], random_points(rng, 1)[0]};
    const double before = space.omega(v[0], v[1]);
    phi.apply(x, std::span<Vec>(v));
    EXPECT_NEAR(space.omega(v[0], v[1]), before, 1e-9);
  }
}

TEST(FlowMap, PushforwardMatchesDifferences) {
  Rng rng(9);
  const AmbientSpace space = torus4();
  const VectorField field = VectorField::from_trig(random_trig_field(space, rng, 2, 3, 1.0));
  const FlowMap phi(field, 0.5, 1e-2);
  const Vec x = vec4(0.1, 0.2, 0.3, 0.4);
  std::array<Vec, 1> v{vec4(1, -0.5, 0.25, 2)};
  const Vec w = v[0];
  phi.apply(x, std::span<Vec>(v));
  const double h = 1e-6;
  expect_vec_near(v[0], (phi.apply(x + h * w) - phi.apply(x - h * w)) / (2 * h), 1e-7);
}

TEST(LieDerivative, Examples) {
  const FormField c = opaque(FormField::from_trig(TrigFunction::constant(4, 1.0)));
  EXPECT_NEAR(lie_derivative(c, VectorField::constant(unit_vec(4, 2)))(vec4(1, 2, 3, 4)), 0.0, 1e-10);
  const FormField l = lie_derivative(sin_x1_dy1(), VectorField::constant(unit_vec(4, 0)), 1e-4);
  EXPECT_NEAR(l(Vec::Zero(4), {unit_vec(4, 1)}), 1.0, 1e-8);
}

TEST(LieDerivative, HamiltonianFieldsPreserveOmega) {
  Rng rng(10);
  const AmbientSpace space = torus4();
  const FormField w = opaque(FormField::from_trig(TrigForm::two_form(space.omega())));
  for (int trial = 0; trial < 3; ++trial) {
    const VectorField xf = hamiltonian_vector_field(space, FormField::from_trig(random_trig_function(space, rng, 2, 4, 1.0)));
    const FormField l = lie_derivative(w, xf, 1e-4);
    for (const Vec& x : random_points(rng, 10)) {
      const auto v = random_points(rng, 2);
      EXPECT_NEAR(l(x, std::span<const Vec>(v)), 0.0, 1e-6);
    }
  }
}

TEST(LieBracket, MatchesCommutatorOfDerivations) {
  Rng rng(11);
  const AmbientSpace space = torus4();
  const VectorField x = VectorField::from_trig(random_trig_field(space, rng, 2, 2, 1.0));
  const VectorField y = VectorField::from_trig(random_trig_field(space, rng, 2, 2, 1.0));
  const TrigFunction f = random_trig_function(space, rng, 2, 3, 1.0);
  const VectorField xy = lie_bracket(x, y);
  // [X, Y] f = X(Y f) - Y(X f)
  auto deriv = [&](const VectorField& v, const std::function<double(const Vec&)>& g, const Vec& p) {
    const double h = 1e-4;
    return (g(p + h * v(p)) - g(p - h * v(p))) / (2 * h);
  };
  for (const Vec& p : random_points(rng, 3)) {
    auto yf = [&](const Vec& q) { return f.gradient(q).dot(y(q)); };
    auto xf = [&](const Vec& q) { return f.gradient(q).dot(x(q)); };
    EXPECT_NEAR(f.gradient(p).dot(xy(p)), deriv(x, yf, p) - deriv(y, xf, p), 1e-6);
  }
}

TEST(Pullback, AffineMapOfTrigFormIsExact) {
  Rng rng(12);
  const AmbientSpace space = torus4();
  const FormField alpha = FormField::from_trig(random_trig_form(space, rng, 2, 2, 3, 1.0));
  Mat a = Mat::Identity(4, 4);
  a(0, 1) = 1.0;
  auto phi = std::make_shared<AffineMap>(a, vec4(0.3, 0, 0, -0.2));
  const FormField pulled = pullback(alpha, phi);
  for (const Vec& x : random_points(rng, 5)) {
    const auto v = random_points(rng, 2);
    EXPECT_NEAR(pulled(x, std::span<const Vec>(v)), alpha(phi->apply(x), {a * v[0], a * v[1]}), 1e-12);
  }
}

TEST(AmbientSpace, TorusDisplacementIsShortest) {
  const AmbientSpace space = torus4();
  const Vec d = space.displacement(vec4(0.1, 0, 0, 0), vec4(kTwoPi - 0.1, 0, 0, 0));
  EXPECT_NEAR(d[0], -0.2, 1e-12);
  EXPECT_NEAR(space.wrap(vec4(-0.5, 7.0, 0, 0))[0], kTwoPi - 0.5, 1e-12);
}
