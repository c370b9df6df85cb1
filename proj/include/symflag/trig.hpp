#pragma once

#include "symflag/common.hpp"

#include <map>
#include <span>
#include <vector>

namespace symflag {

// c cos(k.x) + s sin(k.x); k is a real wavevector (integer frequencies times
// the ambient wavenumbers).
struct TrigTerm {
  Vec k;
  double c = 0.0;
  double s = 0.0;
};

// Trigonometric polynomial with an optional affine part:
//   constant + linear.x + sum_j (c_j cos(k_j.x) + s_j sin(k_j.x)).
// The affine part exists for Euclidean test data (coordinate Hamiltonians);
// products are only defined between periodic functions.
class TrigFunction {
 public:
  TrigFunction() = default;
  explicit TrigFunction(int dim);

  static TrigFunction constant(int dim, double value);
  static TrigFunction coordinate(int dim, int axis);
  static TrigFunction cosine(const Vec& k, double amplitude = 1.0);
  static TrigFunction sine(const Vec& k, double amplitude = 1.0);

  int dim() const { return dim_; }
  double constant_term() const { return constant_; }
  const Vec& linear() const { return linear_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool periodic() const { return linear_.isZero(0.0); }
  bool is_zero() const;

  void add_constant(double value) { constant_ += value; }
  void add_linear(int axis, double value) { linear_[axis] += value; }
  void add_term(const Vec& k, double c, double s);

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  TrigFunction derivative(int axis) const;
  TrigFunction operator+(const TrigFunction& other) const;
  TrigFunction operator-(const TrigFunction& other) const;
  TrigFunction operator*(double factor) const;
  // Throws kInvalidArgument unless one factor is periodic and the other is
  // periodic or constant.
  TrigFunction operator*(const TrigFunction& other) const;

  // x -> f(A x + b).
  TrigFunction pullback_affine(const Mat& a, const Vec& b) const;

 private:
  int dim_ = 0;
  double constant_ = 0.0;
  Vec linear_;
  std::vector<TrigTerm> terms_;
};

using TrigVectorField = std::vector<TrigFunction>;

// Sorted coordinate index set selecting the basis form dx_{i1} ^ ... ^ dx_{ik}.
using IndexSet = std::vector<int>;

// Differential form with trigonometric coefficients in the coordinate basis.
class TrigForm {
 public:
  TrigForm() = default;
  TrigForm(int dim, int degree);

  static TrigForm scalar(const TrigFunction& f);
  // Constant 2-form with matrix entries omega(e_a, e_b).
  static TrigForm two_form(const Mat& omega);
  static TrigForm basis(int dim, IndexSet indices, const TrigFunction& coefficient);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  const std::map<IndexSet, TrigFunction>& components() const { return components_; }
  bool periodic() const;
  bool is_zero() const;

  void add_component(IndexSet indices, const TrigFunction& coefficient);

  // alpha_x(v_1, ..., v_k).
  double eval(const Vec& x, std::span<const Vec> vectors) const;

  TrigForm d() const;
  TrigForm interior(const TrigVectorField& field) const;
  TrigForm wedge(const TrigForm& other) const;
  TrigForm times(const TrigFunction& f) const;
  TrigForm operator+(const TrigForm& other) const;
  TrigForm operator*(double factor) const;
  TrigForm pullback_affine(const Mat& a, const Vec& b) const;

 private:
  int dim_ = 0;
  int degree_ = 0;
  std::map<IndexSet, TrigFunction> components_;
};

// omega^k / k! as a constant form; k = 0 gives the constant 0-form 1.
TrigForm symplectic_power(const Mat& omega, int k);

// Determinant of the k x k minor [v_j[rows_m]].
double minor_det(std::span<const Vec> vectors, const IndexSet& rows);

}  // namespace symflag
