#pragma once

#include "symflag/ambient.hpp"
#include "symflag/flagmesh.hpp"

#include <string>
#include <vector>

namespace symflag {

// Nonhomogeneous form: components of pairwise distinct degree.
struct MixedForm {
  std::vector<FormField> components;

  const FormField* of_degree(int degree) const;
};

void check_mixed(const MixedForm& form, int ambient_dim);

// sum_i int_{N_i} (component of degree dim N_i), with the stored orientations.
double pair(const FlagEmbedding& flag, const MixedForm& alpha, int order);

// |pair(flag, d beta)| with d taken componentwise.
double stokes_residual(const FlagEmbedding& flag, const MixedForm& beta, int order, double step = kDefaultFdStep);

struct SeparationVerdict {
  bool separated = false;
  int witness = -1;  // probe with the largest difference
  double difference = 0.0;
};

SeparationVerdict separation_test(const FlagEmbedding& a, const FlagEmbedding& b, const std::vector<MixedForm>& probes,
                                  int order, double tolerance = 1e-9);

}  // namespace symflag
