#pragma once

#include "symflag/common.hpp"
#include "symflag/trig.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace symflag {

enum class Topology { kEuclidean, kTorus };

// Flat R^{2n} or flat torus with a constant symplectic matrix and the
// Euclidean metric. omega(a, b) = omega_matrix(a, b) on coordinate vectors;
// coordinates are ordered (x1, y1, x2, y2, ...).
class AmbientSpace {
 public:
  // Standard symplectic plane R^2.
  AmbientSpace() : AmbientSpace(Topology::kEuclidean, Vec(), darboux(2)) {}

  static AmbientSpace euclidean(int dim);
  static AmbientSpace euclidean(const Mat& omega);
  static AmbientSpace torus(const Vec& periods);
  static AmbientSpace torus(const Vec& periods, const Mat& omega);
  // dx1^dy1 + dx2^dy2 + ...
  static Mat darboux(int dim);

  int dim() const { return static_cast<int>(omega_.rows()); }
  Topology topology() const { return topology_; }
  bool is_torus() const { return topology_ == Topology::kTorus; }
  const Vec& periods() const { return periods_; }
  const Mat& omega() const { return omega_; }
  // Maps df to X_f: X_f = poisson_tensor() * grad f, i.e. i_{X_f} omega = df.
  const Mat& poisson_tensor() const { return poisson_; }
  // 2 pi / period on the torus, 1 otherwise; converts integer frequencies to wavevectors.
  Vec wavenumbers() const;

  Vec wrap(const Vec& x) const;
  // Shortest representative of to - from.
  Vec displacement(const Vec& from, const Vec& to) const;
  double distance(const Vec& a, const Vec& b) const { return displacement(a, b).norm(); }
  double omega(const Vec& u, const Vec& v) const { return u.dot(omega_ * v); }

 private:
  AmbientSpace(Topology topology, Vec periods, Mat omega);

  Topology topology_ = Topology::kEuclidean;
  Vec periods_;
  Mat omega_;
  Mat poisson_;
};

// Degree-k differential form evaluated as an alternating multilinear map on
// k tangent vectors at a point.
class FormField {
 public:
  using Eval = std::function<double(const Vec&, std::span<const Vec>)>;

  FormField() = default;
  FormField(int dim, int degree, Eval eval, std::shared_ptr<const FormField> d_analytic = nullptr,
            bool closed_hint = false);

  static FormField from_trig(const TrigForm& form);
  static FormField from_trig(const TrigFunction& f) { return from_trig(TrigForm::scalar(f)); }
  static FormField zero(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  bool closed_hint() const { return closed_hint_; }
  const FormField* d_analytic() const { return d_analytic_.get(); }
  // Coefficient table when the form came from (or reduces to) trig data.
  const TrigForm* trig() const { return trig_.get(); }

  double operator()(const Vec& x, std::span<const Vec> vectors) const { return eval_(x, vectors); }
  double operator()(const Vec& x) const { return eval_(x, {}); }
  double operator()(const Vec& x, std::initializer_list<Vec> vectors) const {
    return eval_(x, std::span<const Vec>(vectors.begin(), vectors.size()));
  }

 private:
  int dim_ = 0;
  int degree_ = 0;
  Eval eval_;
  std::shared_ptr<const FormField> d_analytic_;
  std::shared_ptr<const TrigForm> trig_;
  bool closed_hint_ = false;
};

// Possibly time-dependent vector field with an optional analytic Jacobian.
class VectorField {
 public:
  using Eval = std::function<Vec(double, const Vec&)>;
  using Jacobian = std::function<Mat(double, const Vec&)>;

  VectorField() = default;
  VectorField(int dim, Eval eval, Jacobian jacobian = {}, bool time_dependent = false);

  static VectorField from_trig(const TrigVectorField& components);
  static VectorField constant(const Vec& value);
  static VectorField zero(int dim) { return constant(Vec::Zero(dim)); }

  int dim() const { return dim_; }
  bool time_dependent() const { return time_dependent_; }
  const TrigVectorField* trig() const { return trig_.get(); }

  Vec operator()(const Vec& x, double t = 0.0) const { return eval_(t, x); }
  // Analytic when available, otherwise central differences with step 1e-6.
  Mat jacobian(const Vec& x, double t = 0.0) const;

 private:
  int dim_ = 0;
  Eval eval_;
  Jacobian jacobian_;
  std::shared_ptr<const TrigVectorField> trig_;
  bool time_dependent_ = false;
};

inline constexpr double kDefaultFdStep = 1e-5;

// Analytic d when the form carries one (or trig coefficients); otherwise the
// alternating sum of central directional differences with the given step.
FormField exterior_derivative(const FormField& form, double step = kDefaultFdStep);
FormField interior_product(const FormField& form, const VectorField& field);
FormField lie_derivative(const FormField& form, const VectorField& field, double step = kDefaultFdStep);
FormField wedge(const FormField& a, const FormField& b);

Vec gradient(const FormField& f, const Vec& x, double step = kDefaultFdStep);
VectorField hamiltonian_vector_field(const AmbientSpace& space, const FormField& f,
                                     double step = kDefaultFdStep);
FormField poisson_bracket(const AmbientSpace& space, const FormField& f, const FormField& g,
                          double step = kDefaultFdStep);
// [X, Y] = DY.X - DX.Y (the bracket with L_X Y = [X, Y]).
VectorField lie_bracket(const VectorField& x, const VectorField& y);

// Classical RK4 on a fixed grid of ceil(t_final / dt) equal steps. Torus
// points are wrapped into the fundamental domain.
std::vector<Vec> flow(const AmbientSpace& space, const VectorField& field, double t_final, double dt,
                      std::span<const Vec> points);

// Smooth ambient map with a pushforward on tangent vectors.
class AmbientMap {
 public:
  virtual ~AmbientMap() = default;
  virtual int dim() const = 0;
  virtual Vec apply(const Vec& x) const = 0;
  // Returns the image of x and overwrites each direction with its pushforward.
  // The default uses central differences.
  virtual Vec apply(const Vec& x, std::span<Vec> directions) const;
  // (A, b) when the map is x -> A x + b.
  virtual std::optional<std::pair<Mat, Vec>> affine() const { return std::nullopt; }
};

class AffineMap final : public AmbientMap {
 public:
  AffineMap(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {}
  static AffineMap translation(const Vec& b) {
    return AffineMap(Mat::Identity(b.size(), b.size()), b);
  }

  int dim() const override { return static_cast<int>(b_.size()); }
  Vec apply(const Vec& x) const override { return a_ * x + b_; }
  Vec apply(const Vec& x, std::span<Vec> directions) const override;
  std::optional<std::pair<Mat, Vec>> affine() const override { return std::make_pair(a_, b_); }

 private:
  Mat a_;
  Vec b_;
};

// Time-t map of a vector field (t may be negative), integrated with RK4 on
// ceil(|t| / dt) steps; pushforwards use the tangent-linear RK4 step, which is
// the exact differential of the discrete map.
class FlowMap final : public AmbientMap {
 public:
  FlowMap(VectorField field, double t, double dt);

  int dim() const override { return field_.dim(); }
  Vec apply(const Vec& x) const override;
  Vec apply(const Vec& x, std::span<Vec> directions) const override;

 private:
  VectorField field_;
  double t_;
  int steps_;
};

// (phi^* alpha)_x(v...) = alpha_{phi(x)}(dphi v...). Exact for affine maps of trig forms.
FormField pullback(const FormField& form, std::shared_ptr<const AmbientMap> map);

}  // namespace symflag
