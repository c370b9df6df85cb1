#include "symflag/trig.hpp"

#include <algorithm>
#include <cmath>

namespace symflag {
namespace {

constexpr double kFrequencySnap = 1e-12;

using TermKey = std::vector<double>;

struct TermAccumulator {
  explicit TermAccumulator(int d) : dim(d) {}

  int dim;
  double constant = 0.0;
  std::map<TermKey, std::pair<double, double>> terms;

  void add(Vec k, double c, double s) {
    int lead = -1;
    for (int i = 0; i < dim; ++i) {
      if (std::abs(k[i]) < kFrequencySnap) k[i] = 0.0;
      if (lead < 0 && k[i] != 0.0) lead = i;
    }
    if (lead < 0) {
      constant += c;
      return;
    }
    if (k[lead] < 0.0) {
      k = -k;
      s = -s;
    }
    auto& slot = terms[TermKey(k.data(), k.data() + dim)];
    slot.first += c;
    slot.second += s;
  }

  void emit(std::vector<TrigTerm>& out) const {
    out.clear();
    for (const auto& [key, cs] : terms) {
      if (cs.first == 0.0 && cs.second == 0.0) continue;
      Vec k(dim);
      for (int i = 0; i < dim; ++i) k[i] = key[i];
      out.push_back({k, cs.first, cs.second});
    }
  }
};

int parity_sort(IndexSet& idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
  return sign;
}

bool has_duplicates(const IndexSet& sorted) {
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

}  // namespace

TrigFunction::TrigFunction(int dim) : dim_(dim), linear_(Vec::Zero(dim)) {}

TrigFunction TrigFunction::constant(int dim, double value) {
  TrigFunction f(dim);
  f.constant_ = value;
  return f;
}

TrigFunction TrigFunction::coordinate(int dim, int axis) {
  TrigFunction f(dim);
  f.linear_[axis] = 1.0;
  return f;
}

TrigFunction TrigFunction::cosine(const Vec& k, double amplitude) {
  TrigFunction f(static_cast<int>(k.size()));
  f.add_term(k, amplitude, 0.0);
  return f;
}

TrigFunction TrigFunction::sine(const Vec& k, double amplitude) {
  TrigFunction f(static_cast<int>(k.size()));
  f.add_term(k, 0.0, amplitude);
  return f;
}

bool TrigFunction::is_zero() const {
  if (constant_ != 0.0 || !periodic()) return false;
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const TrigTerm& t) { return t.c == 0.0 && t.s == 0.0; });
}

void TrigFunction::add_term(const Vec& k, double c, double s) {
  TermAccumulator acc(dim_);
  for (const auto& t : terms_) acc.add(t.k, t.c, t.s);
  acc.add(k, c, s);
  constant_ += acc.constant;
  acc.emit(terms_);
}

double TrigFunction::value(const Vec& x) const {
  double v = constant_ + linear_.dot(x);
  for (const auto& t : terms_) {
    const double th = t.k.dot(x);
    v += t.c * std::cos(th) + t.s * std::sin(th);
  }
  return v;
}

Vec TrigFunction::gradient(const Vec& x) const {
  Vec g = linear_;
  for (const auto& t : terms_) {
    const double th = t.k.dot(x);
    g += (t.s * std::cos(th) - t.c * std::sin(th)) * t.k;
  }
  return g;
}

Mat TrigFunction::hessian(const Vec& x) const {
  Mat h = Mat::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    const double th = t.k.dot(x);
    h -= (t.c * std::cos(th) + t.s * std::sin(th)) * (t.k * t.k.transpose());
  }
  return h;
}

TrigFunction TrigFunction::derivative(int axis) const {
  TrigFunction out(dim_);
  out.constant_ = linear_[axis];
  TermAccumulator acc(dim_);
  for (const auto& t : terms_) {
    const double ka = t.k[axis];
    if (ka == 0.0) continue;
    acc.add(t.k, ka * t.s, -ka * t.c);
  }
  acc.emit(out.terms_);
  return out;
}

TrigFunction TrigFunction::operator+(const TrigFunction& other) const {
  if (dim_ == 0) return other;
  if (other.dim_ == 0) return *this;
  TrigFunction out(dim_);
  out.constant_ = constant_ + other.constant_;
  out.linear_ = linear_ + other.linear_;
  TermAccumulator acc(dim_);
  for (const auto& t : terms_) acc.add(t.k, t.c, t.s);
  for (const auto& t : other.terms_) acc.add(t.k, t.c, t.s);
  out.constant_ += acc.constant;
  acc.emit(out.terms_);
  return out;
}

TrigFunction TrigFunction::operator-(const TrigFunction& other) const { return *this + other * -1.0; }

TrigFunction TrigFunction::operator*(double factor) const {
  TrigFunction out = *this;
  out.constant_ *= factor;
  out.linear_ *= factor;
  for (auto& t : out.terms_) {
    t.c *= factor;
    t.s *= factor;
  }
  if (factor == 0.0) out.terms_.clear();
  return out;
}

TrigFunction TrigFunction::operator*(const TrigFunction& other) const {
  const bool this_const = periodic() && terms_.empty();
  const bool other_const = other.periodic() && other.terms_.empty();
  if (this_const) return other * constant_;
  if (other_const) return *this * other.constant_;
  if (!periodic() || !other.periodic())
    fail(ErrorKind::kInvalidArgument, "product of non-periodic trigonometric functions");

  TrigFunction out(dim_);
  out.constant_ = constant_ * other.constant_;
  TermAccumulator acc(dim_);
  for (const auto& t : terms_) acc.add(t.k, other.constant_ * t.c, other.constant_ * t.s);
  for (const auto& t : other.terms_) acc.add(t.k, constant_ * t.c, constant_ * t.s);
  for (const auto& a : terms_) {
    for (const auto& b : other.terms_) {
      acc.add(a.k + b.k, 0.5 * (a.c * b.c - a.s * b.s), 0.5 * (a.c * b.s + a.s * b.c));
      acc.add(a.k - b.k, 0.5 * (a.c * b.c + a.s * b.s), 0.5 * (a.s * b.c - a.c * b.s));
    }
  }
  out.constant_ += acc.constant;
  acc.emit(out.terms_);
  return out;
}

TrigFunction TrigFunction::pullback_affine(const Mat& a, const Vec& b) const {
  TrigFunction out(static_cast<int>(a.cols()));
  out.constant_ = constant_ + linear_.dot(b);
  out.linear_ = a.transpose() * linear_;
  TermAccumulator acc(out.dim_);
  for (const auto& t : terms_) {
    const double phase = t.k.dot(b);
    const double cp = std::cos(phase);
    const double sp = std::sin(phase);
    acc.add(a.transpose() * t.k, t.c * cp + t.s * sp, -t.c * sp + t.s * cp);
  }
  out.constant_ += acc.constant;
  acc.emit(out.terms_);
  return out;
}

double minor_det(std::span<const Vec> vectors, const IndexSet& rows) {
  const int k = static_cast<int>(rows.size());
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return vectors[0][rows[0]];
    case 2:
      return vectors[0][rows[0]] * vectors[1][rows[1]] - vectors[1][rows[0]] * vectors[0][rows[1]];
    default: {
      Mat m(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) m(r, c) = vectors[c][rows[r]];
      return m.determinant();
    }
  }
}

TrigForm::TrigForm(int dim, int degree) : dim_(dim), degree_(degree) {
  if (degree < 0 || degree > dim) fail(ErrorKind::kInvalidArgument, "form degree out of range");
}

TrigForm TrigForm::scalar(const TrigFunction& f) {
  TrigForm out(f.dim(), 0);
  out.add_component({}, f);
  return out;
}

TrigForm TrigForm::two_form(const Mat& omega) {
  const int n = static_cast<int>(omega.rows());
  TrigForm out(n, 2);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (omega(a, b) != 0.0) out.add_component({a, b}, TrigFunction::constant(n, omega(a, b)));
  return out;
}

TrigForm TrigForm::basis(int dim, IndexSet indices, const TrigFunction& coefficient) {
  TrigForm out(dim, static_cast<int>(indices.size()));
  out.add_component(std::move(indices), coefficient);
  return out;
}

bool TrigForm::periodic() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const auto& kv) { return kv.second.periodic(); });
}

bool TrigForm::is_zero() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const auto& kv) { return kv.second.is_zero(); });
}

void TrigForm::add_component(IndexSet indices, const TrigFunction& coefficient) {
  if (static_cast<int>(indices.size()) != degree_)
    fail(ErrorKind::kInvalidArgument, "index set size does not match form degree");
  for (int i : indices)
    if (i < 0 || i >= dim_) fail(ErrorKind::kSchema, "coordinate index out of range");
  const int sign = parity_sort(indices);
  if (has_duplicates(indices)) return;
  auto it = components_.find(indices);
  const TrigFunction term = coefficient * static_cast<double>(sign);
  if (it == components_.end()) {
    components_.emplace(std::move(indices), term);
  } else {
    it->second = it->second + term;
    if (it->second.is_zero()) components_.erase(it);
  }
}

double TrigForm::eval(const Vec& x, std::span<const Vec> vectors) const {
  double v = 0.0;
  for (const auto& [idx, coef] : components_) v += coef.value(x) * minor_det(vectors, idx);
  return v;
}

TrigForm TrigForm::d() const {
  if (degree_ >= dim_) fail(ErrorKind::kInvalidArgument, "top degree has no exterior derivative");
  TrigForm out(dim_, degree_ + 1);
  for (const auto& [idx, coef] : components_) {
    for (int j = 0; j < dim_; ++j) {
      if (std::find(idx.begin(), idx.end(), j) != idx.end()) continue;
      TrigFunction dj = coef.derivative(j);
      if (dj.is_zero()) continue;
      IndexSet next{j};
      next.insert(next.end(), idx.begin(), idx.end());
      out.add_component(std::move(next), dj);
    }
  }
  return out;
}

TrigForm TrigForm::interior(const TrigVectorField& field) const {
  if (degree_ == 0) fail(ErrorKind::kInvalidArgument, "interior product of a 0-form");
  TrigForm out(dim_, degree_ - 1);
  for (const auto& [idx, coef] : components_) {
    for (int p = 0; p < degree_; ++p) {
      const TrigFunction& xp = field[idx[p]];
      if (xp.is_zero()) continue;
      IndexSet rest = idx;
      rest.erase(rest.begin() + p);
      out.add_component(std::move(rest), (coef * xp) * ((p % 2 == 0) ? 1.0 : -1.0));
    }
  }
  return out;
}

TrigForm TrigForm::wedge(const TrigForm& other) const {
  const int deg = degree_ + other.degree_;
  if (deg > dim_) fail(ErrorKind::kInvalidArgument, "wedge product exceeds ambient dimension");
  TrigForm out(dim_, deg);
  for (const auto& [ia, ca] : components_) {
    for (const auto& [ib, cb] : other.components_) {
      IndexSet joined = ia;
      joined.insert(joined.end(), ib.begin(), ib.end());
      out.add_component(std::move(joined), ca * cb);
    }
  }
  return out;
}

TrigForm TrigForm::times(const TrigFunction& f) const {
  TrigForm out(dim_, degree_);
  for (const auto& [idx, coef] : components_) out.add_component(idx, coef * f);
  return out;
}

TrigForm TrigForm::operator+(const TrigForm& other) const {
  if (other.degree_ != degree_ || other.dim_ != dim_)
    fail(ErrorKind::kInvalidArgument, "sum of forms of different degree");
  TrigForm out = *this;
  for (const auto& [idx, coef] : other.components_) out.add_component(idx, coef);
  return out;
}

TrigForm TrigForm::operator*(double factor) const {
  TrigForm out(dim_, degree_);
  if (factor == 0.0) return out;
  for (const auto& [idx, coef] : components_) out.add_component(idx, coef * factor);
  return out;
}

TrigForm TrigForm::pullback_affine(const Mat& a, const Vec& b) const {
  TrigForm out(dim_, degree_);
  std::vector<int> cols(degree_);
  for (const auto& [idx, coef] : components_) {
    const TrigFunction pulled = coef.pullback_affine(a, b);
    // phi^* dx_I = sum_J det(A[I, J]) dx_J over increasing J.
    std::vector<int> pick(dim_, 0);
    std::fill(pick.end() - degree_, pick.end(), 1);
    do {
      IndexSet jset;
      for (int j = 0; j < dim_; ++j)
        if (pick[j]) jset.push_back(j);
      Mat minor(degree_, degree_);
      for (int r = 0; r < degree_; ++r)
        for (int c = 0; c < degree_; ++c) minor(r, c) = a(idx[r], jset[c]);
      const double det = degree_ == 0 ? 1.0 : minor.determinant();
      if (std::abs(det) > 0.0) out.add_component(std::move(jset), pulled * det);
    } while (std::next_permutation(pick.begin(), pick.end()));
  }
  return out;
}

TrigForm symplectic_power(const Mat& omega, int k) {
  const int n = static_cast<int>(omega.rows());
  TrigForm out = TrigForm::scalar(TrigFunction::constant(n, 1.0));
  const TrigForm w = TrigForm::two_form(omega);
  double factorial = 1.0;
  for (int i = 1; i <= k; ++i) {
    out = out.wedge(w);
    factorial *= i;
  }
  return out * (1.0 / factorial);
}

}  // namespace symflag
