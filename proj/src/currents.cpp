#include "symflag/currents.hpp"

#include <cmath>
#include <set>

namespace symflag {

const FormField* MixedForm::of_degree(int degree) const {
  for (const FormField& f : components)
    if (f.degree() == degree) return &f;
  return nullptr;
}

void check_mixed(const MixedForm& form, int ambient_dim) {
  std::set<int> degrees;
  for (const FormField& f : form.components) {
    if (f.degree() > ambient_dim || f.dim() != ambient_dim)
      fail(ErrorKind::kInvalidArgument, "mixed form component exceeds the ambient dimension");
    if (!degrees.insert(f.degree()).second)
      fail(ErrorKind::kInvalidArgument, "mixed form components must have distinct degrees");
  }
}

double pair(const FlagEmbedding& flag, const MixedForm& alpha, int order) {
  check_mixed(alpha, flag.ambient().dim());
  double total = 0.0;
  for (int i = 0; i < flag.depth(); ++i)
    if (const FormField* f = alpha.of_degree(flag.level(i).dim)) total += integrate_over_level(flag, i, *f, order);
  return total;
}

double stokes_residual(const FlagEmbedding& flag, const MixedForm& beta, int order, double step) {
  check_mixed(beta, flag.ambient().dim());
  MixedForm d;
  for (const FormField& f : beta.components)
    if (f.degree() < f.dim()) d.components.push_back(exterior_derivative(f, step));
  return std::abs(pair(flag, d, order));
}

SeparationVerdict separation_test(const FlagEmbedding& a, const FlagEmbedding& b, const std::vector<MixedForm>& probes,
                                  int order, double tolerance) {
  if (probes.empty()) fail(ErrorKind::kInvalidArgument, "separation test needs at least one probe");
  SeparationVerdict v;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const double diff = std::abs(pair(a, probes[p], order) - pair(b, probes[p], order));
    if (diff > v.difference) {
      v.difference = diff;
      v.witness = static_cast<int>(p);
    }
  }
  v.separated = v.difference > tolerance;
  if (!v.separated) v.witness = -1;
  return v;
}

}  // namespace symflag
