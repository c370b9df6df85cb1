#include "symflag/ambient.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace symflag {
namespace {

constexpr double kJacobianStep = 1e-6;

std::string describe_point(const Vec& x) {
  std::ostringstream out;
  out << "(";
  for (int i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ")";
  return out.str();
}

void check_omega(const Mat& omega) {
  const int n = static_cast<int>(omega.rows());
  if (n == 0 || n != omega.cols() || n % 2 != 0 || n > kMaxDim)
    fail(ErrorKind::kInvalidArgument, "omega must be a square matrix of even size at most 8");
  const double scale = std::max(1.0, omega.cwiseAbs().maxCoeff());
  if ((omega + omega.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::kInvalidArgument, "omega is not antisymmetric");
  if (std::abs(omega.determinant()) < 1e-12 * std::pow(scale, n))
    fail(ErrorKind::kInvalidArgument, "omega is degenerate");
}

FormField sum(const FormField& a, const FormField& b) {
  if (a.trig() && b.trig()) return FormField::from_trig(*a.trig() + *b.trig());
  return FormField(a.dim(), a.degree(), [a, b](const Vec& x, std::span<const Vec> v) {
    return a(x, v) + b(x, v);
  });
}

// Directional central difference of x -> form(x, vectors) along v.
double directional(const FormField& form, const Vec& x, const Vec& v, std::span<const Vec> vectors,
                   double step) {
  const double len = v.norm();
  if (len == 0.0) return 0.0;
  const Vec u = v / len;
  return len * (form(x + step * u, vectors) - form(x - step * u, vectors)) / (2.0 * step);
}

}  // namespace

AmbientSpace::AmbientSpace(Topology topology, Vec periods, Mat omega)
    : topology_(topology), periods_(std::move(periods)), omega_(std::move(omega)) {
  check_omega(omega_);
  if (topology_ == Topology::kTorus) {
    if (periods_.size() != omega_.rows())
      fail(ErrorKind::kInvalidArgument, "torus needs one period per coordinate");
    for (int i = 0; i < periods_.size(); ++i)
      if (!(periods_[i] > 0.0) || !std::isfinite(periods_[i]))
        fail(ErrorKind::kInvalidArgument, "torus periods must be positive");
  }
  poisson_ = -omega_.inverse();
}

Mat AmbientSpace::darboux(int dim) {
  if (dim <= 0 || dim % 2 != 0 || dim > kMaxDim)
    fail(ErrorKind::kInvalidArgument, "ambient dimension must be even, between 2 and 8");
  Mat w = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; i += 2) {
    w(i, i + 1) = 1.0;
    w(i + 1, i) = -1.0;
  }
  return w;
}

AmbientSpace AmbientSpace::euclidean(int dim) { return euclidean(darboux(dim)); }

AmbientSpace AmbientSpace::euclidean(const Mat& omega) {
  return AmbientSpace(Topology::kEuclidean, Vec(), omega);
}

AmbientSpace AmbientSpace::torus(const Vec& periods) {
  return torus(periods, darboux(static_cast<int>(periods.size())));
}

AmbientSpace AmbientSpace::torus(const Vec& periods, const Mat& omega) {
  return AmbientSpace(Topology::kTorus, periods, omega);
}

Vec AmbientSpace::wavenumbers() const {
  if (!is_torus()) return Vec::Ones(dim());
  Vec k(dim());
  for (int i = 0; i < dim(); ++i) k[i] = 2.0 * std::numbers::pi / periods_[i];
  return k;
}

Vec AmbientSpace::wrap(const Vec& x) const {
  if (!is_torus()) return x;
  Vec y = x;
  for (int i = 0; i < dim(); ++i) {
    y[i] = std::fmod(y[i], periods_[i]);
    if (y[i] < 0.0) y[i] += periods_[i];
    if (y[i] >= periods_[i]) y[i] = 0.0;
  }
  return y;
}

Vec AmbientSpace::displacement(const Vec& from, const Vec& to) const {
  Vec d = to - from;
  if (!is_torus()) return d;
  for (int i = 0; i < dim(); ++i) d[i] -= periods_[i] * std::round(d[i] / periods_[i]);
  return d;
}

FormField::FormField(int dim, int degree, Eval eval, std::shared_ptr<const FormField> d_analytic,
                     bool closed_hint)
    : dim_(dim),
      degree_(degree),
      eval_(std::move(eval)),
      d_analytic_(std::move(d_analytic)),
      closed_hint_(closed_hint) {
  if (degree < 0 || degree > dim) fail(ErrorKind::kInvalidArgument, "form degree out of range");
}

FormField FormField::from_trig(const TrigForm& form) {
  auto table = std::make_shared<const TrigForm>(form);
  FormField out(form.dim(), form.degree(),
                [table](const Vec& x, std::span<const Vec> v) { return table->eval(x, v); });
  out.trig_ = table;
  out.closed_hint_ = form.degree() == form.dim() || form.d().is_zero();
  return out;
}

FormField FormField::zero(int dim, int degree) { return from_trig(TrigForm(dim, degree)); }

VectorField::VectorField(int dim, Eval eval, Jacobian jacobian, bool time_dependent)
    : dim_(dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)), time_dependent_(time_dependent) {}

VectorField VectorField::from_trig(const TrigVectorField& components) {
  if (components.empty()) fail(ErrorKind::kInvalidArgument, "vector field needs components");
  auto table = std::make_shared<const TrigVectorField>(components);
  const int n = static_cast<int>(components.size());
  VectorField out(
      n,
      [table, n](double, const Vec& x) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = (*table)[i].value(x);
        return v;
      },
      [table, n](double, const Vec& x) {
        Mat j(n, n);
        for (int i = 0; i < n; ++i) j.row(i) = (*table)[i].gradient(x).transpose();
        return j;
      });
  out.trig_ = table;
  return out;
}

VectorField VectorField::constant(const Vec& value) {
  TrigVectorField components;
  const int n = static_cast<int>(value.size());
  for (int i = 0; i < n; ++i) components.push_back(TrigFunction::constant(n, value[i]));
  return from_trig(components);
}

Mat VectorField::jacobian(const Vec& x, double t) const {
  if (jacobian_) return jacobian_(t, x);
  Mat j(dim_, dim_);
  for (int m = 0; m < dim_; ++m) {
    const Vec e = unit_vec(dim_, m) * kJacobianStep;
    j.col(m) = (eval_(t, x + e) - eval_(t, x - e)) / (2.0 * kJacobianStep);
  }
  return j;
}

FormField exterior_derivative(const FormField& form, double step) {
  if (form.degree() >= form.dim()) fail(ErrorKind::kInvalidArgument, "top degree has no exterior derivative");
  if (!(step > 0.0)) fail(ErrorKind::kInvalidArgument, "finite-difference step must be positive");
  if (form.d_analytic()) return *form.d_analytic();
  if (form.trig()) return FormField::from_trig(form.trig()->d());
  const int k = form.degree();
  return FormField(form.dim(), k + 1, [form, k, step](const Vec& x, std::span<const Vec> v) {
    std::array<Vec, kMaxDim> rest;
    double total = 0.0;
    for (int i = 0; i <= k; ++i) {
      int m = 0;
      for (int j = 0; j <= k; ++j)
        if (j != i) rest[m++] = v[j];
      const double term = directional(form, x, v[i], std::span<const Vec>(rest.data(), k), step);
      total += (i % 2 == 0) ? term : -term;
    }
    return total;
  });
}

FormField interior_product(const FormField& form, const VectorField& field) {
  if (form.degree() == 0) fail(ErrorKind::kInvalidArgument, "interior product of a 0-form");
  if (form.trig() && field.trig()) {
    try {
      return FormField::from_trig(form.trig()->interior(*field.trig()));
    } catch (const Error&) {
      // non-periodic products; fall through to pointwise evaluation
    }
  }
  const int k = form.degree();
  return FormField(form.dim(), k - 1, [form, field, k](const Vec& x, std::span<const Vec> v) {
    std::array<Vec, kMaxDim> args;
    args[0] = field(x);
    for (int i = 0; i + 1 < k; ++i) args[i + 1] = v[i];
    return form(x, std::span<const Vec>(args.data(), k));
  });
}

FormField lie_derivative(const FormField& form, const VectorField& field, double step) {
  const int k = form.degree();
  if (k == 0) return interior_product(exterior_derivative(form, step), field);
  FormField d_of_i = exterior_derivative(interior_product(form, field), step);
  if (k == form.dim()) return d_of_i;
  return sum(interior_product(exterior_derivative(form, step), field), d_of_i);
}

FormField wedge(const FormField& a, const FormField& b) {
  const int p = a.degree();
  const int q = b.degree();
  if (p + q > a.dim()) fail(ErrorKind::kInvalidArgument, "wedge product exceeds ambient dimension");
  if (a.trig() && b.trig()) {
    try {
      return FormField::from_trig(a.trig()->wedge(*b.trig()));
    } catch (const Error&) {
    }
  }
  return FormField(a.dim(), p + q, [a, b, p, q](const Vec& x, std::span<const Vec> v) {
    // Sum over (p, q)-shuffles encoded as bitmasks of the first factor's slots.
    double total = 0.0;
    std::array<Vec, kMaxDim> left, right;
    for (unsigned mask = 0; mask < (1u << (p + q)); ++mask) {
      if (std::popcount(mask) != p) continue;
      int l = 0, r = 0, inversions = 0;
      for (int i = 0; i < p + q; ++i) {
        if (mask & (1u << i)) {
          left[l++] = v[i];
          inversions += r;
        } else {
          right[r++] = v[i];
        }
      }
      const double term = a(x, std::span<const Vec>(left.data(), p)) * b(x, std::span<const Vec>(right.data(), q));
      total += (inversions % 2 == 0) ? term : -term;
    }
    return total;
  });
}

Vec gradient(const FormField& f, const Vec& x, double step) {
  if (f.degree() != 0) fail(ErrorKind::kInvalidArgument, "gradient of a form of positive degree");
  const int n = f.dim();
  if (f.trig()) {
    const auto& comps = f.trig()->components();
    auto it = comps.find(IndexSet{});
    return it == comps.end() ? Vec(Vec::Zero(n)) : it->second.gradient(x);
  }
  Vec g(n);
  if (f.d_analytic()) {
    for (int i = 0; i < n; ++i) g[i] = (*f.d_analytic())(x, {unit_vec(n, i)});
    return g;
  }
  for (int i = 0; i < n; ++i) {
    const Vec e = unit_vec(n, i) * step;
    g[i] = (f(x + e) - f(x - e)) / (2.0 * step);
  }
  return g;
}

VectorField hamiltonian_vector_field(const AmbientSpace& space, const FormField& f, double step) {
  if (f.degree() != 0) fail(ErrorKind::kInvalidArgument, "Hamiltonian must be a 0-form");
  const int n = space.dim();
  const Mat p = space.poisson_tensor();
  if (f.trig()) {
    const auto& comps = f.trig()->components();
    auto it = comps.find(IndexSet{});
    const TrigFunction h = it == comps.end() ? TrigFunction(n) : it->second;
    TrigVectorField x(n, TrigFunction(n));
    for (int m = 0; m < n; ++m) {
      const TrigFunction dh = h.derivative(m);
      for (int j = 0; j < n; ++j)
        if (p(j, m) != 0.0) x[j] = x[j] + dh * p(j, m);
    }
    return VectorField::from_trig(x);
  }
  return VectorField(n, [f, p, step](double, const Vec& x) -> Vec { return p * gradient(f, x, step); });
}

FormField poisson_bracket(const AmbientSpace& space, const FormField& f, const FormField& g,
                          double step) {
  const VectorField xg = hamiltonian_vector_field(space, g, step);
  if (f.trig() && xg.trig()) {
    const int n = space.dim();
    const auto& comps = f.trig()->components();
    auto it = comps.find(IndexSet{});
    const TrigFunction h = it == comps.end() ? TrigFunction(n) : it->second;
    TrigFunction out(n);
    for (int m = 0; m < n; ++m) out = out + h.derivative(m) * (*xg.trig())[m];
    return FormField::from_trig(out);
  }
  return FormField(space.dim(), 0, [f, xg, step](const Vec& x, std::span<const Vec>) {
    return gradient(f, x, step).dot(xg(x));
  });
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  if (x.trig() && y.trig()) {
    const int n = x.dim();
    const auto& a = *x.trig();
    const auto& b = *y.trig();
    try {
      TrigVectorField out(n, TrigFunction(n));
      for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m) out[i] = out[i] + b[i].derivative(m) * a[m] - a[i].derivative(m) * b[m];
      return VectorField::from_trig(out);
    } catch (const Error&) {
    }
  }
  return VectorField(
      x.dim(),
      [x, y](double t, const Vec& p) -> Vec { return y.jacobian(p, t) * x(p, t) - x.jacobian(p, t) * y(p, t); },
      {}, x.time_dependent() || y.time_dependent());
}

namespace {

int step_count(double span, double dt) {
  if (span == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(span / dt * (1.0 - 1e-12))));
}

void check_finite(const Vec& v, double t, const Vec& x) {
  if (!v.allFinite()) {
    std::ostringstream out;
    out << "non-finite field value at t=" << t << ", x=" << describe_point(x);
    fail(ErrorKind::kNumerical, out.str());
  }
}

Vec rk4_step(const VectorField& field, double t, double h, const Vec& x) {
  const Vec k1 = field(x, t);
  check_finite(k1, t, x);
  const Vec k2 = field(x + 0.5 * h * k1, t + 0.5 * h);
  const Vec k3 = field(x + 0.5 * h * k2, t + 0.5 * h);
  const Vec k4 = field(x + h * k3, t + h);
  Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_finite(next, t + h, x);
  return next;
}

}  // namespace

std::vector<Vec> flow(const AmbientSpace& space, const VectorField& field, double t_final, double dt,
                      std::span<const Vec> points) {
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidArgument, "flow needs dt > 0");
  if (!(t_final >= 0.0)) fail(ErrorKind::kInvalidArgument, "flow needs t_final >= 0");
  const int steps = step_count(t_final, dt);
  const double h = steps ? t_final / steps : 0.0;
  std::vector<Vec> out;
  out.reserve(points.size());
  for (const Vec& p : points) {
    Vec x = p;
    for (int s = 0; s < steps; ++s) x = rk4_step(field, s * h, h, x);
    out.push_back(space.wrap(x));
  }
  return out;
}

Vec AmbientMap::apply(const Vec& x, std::span<Vec> directions) const {
  for (Vec& d : directions) {
    const double len = d.norm();
    if (len == 0.0) continue;
    const Vec u = d / len * kJacobianStep;
    d = len * (apply(x + u) - apply(x - u)) / (2.0 * kJacobianStep);
  }
  return apply(x);
}

Vec AffineMap::apply(const Vec& x, std::span<Vec> directions) const {
  for (Vec& d : directions) d = a_ * d;
  return apply(x);
}

FlowMap::FlowMap(VectorField field, double t, double dt) : field_(std::move(field)), t_(t) {
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidArgument, "flow needs dt > 0");
  steps_ = step_count(std::abs(t), dt);
}

Vec FlowMap::apply(const Vec& x) const {
  const double h = steps_ ? t_ / steps_ : 0.0;
  Vec y = x;
  for (int s = 0; s < steps_; ++s) y = rk4_step(field_, s * h, h, y);
  return y;
}

Vec FlowMap::apply(const Vec& x, std::span<Vec> directions) const {
  const double h = steps_ ? t_ / steps_ : 0.0;
  const int n = field_.dim();
  const int m = static_cast<int>(directions.size());
  Eigen::MatrixXd v(n, m);
  for (int j = 0; j < m; ++j) v.col(j) = directions[j];
  Vec y = x;
  for (int s = 0; s < steps_; ++s) {
    const double t = s * h;
    const Vec k1 = field_(y, t);
    check_finite(k1, t, y);
    const Eigen::MatrixXd q1 = field_.jacobian(y, t) * v;
    const Vec y2 = y + 0.5 * h * k1;
    const Eigen::MatrixXd v2 = v + 0.5 * h * q1;
    const Vec k2 = field_(y2, t + 0.5 * h);
    const Eigen::MatrixXd q2 = field_.jacobian(y2, t + 0.5 * h) * v2;
    const Vec y3 = y + 0.5 * h * k2;
    const Eigen::MatrixXd v3 = v + 0.5 * h * q2;
    const Vec k3 = field_(y3, t + 0.5 * h);
    const Eigen::MatrixXd q3 = field_.jacobian(y3, t + 0.5 * h) * v3;
    const Vec y4 = y + h * k3;
    const Eigen::MatrixXd v4 = v + h * q3;
    const Vec k4 = field_(y4, t + h);
    const Eigen::MatrixXd q4 = field_.jacobian(y4, t + h) * v4;
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    v = v + (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    check_finite(y, t + h, x);
  }
  for (int j = 0; j < m; ++j) directions[j] = v.col(j);
  return y;
}

FormField pullback(const FormField& form, std::shared_ptr<const AmbientMap> map) {
  if (form.trig()) {
    if (auto ab = map->affine()) return FormField::from_trig(form.trig()->pullback_affine(ab->first, ab->second));
  }
  const int k = form.degree();
  return FormField(form.dim(), k, [form, map, k](const Vec& y, std::span<const Vec> v) {
    std::array<Vec, kMaxDim> pushed;
    for (int i = 0; i < k; ++i) pushed[i] = v[i];
    const Vec x = map->apply(y, std::span<Vec>(pushed.data(), k));
    return form(x, std::span<const Vec>(pushed.data(), k));
  });
}

}  // namespace symflag
