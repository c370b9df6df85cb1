#pragma once

#include "symflag/ambient.hpp"
#include "symflag/flagmesh.hpp"

#include <span>
#include <vector>

namespace symflag {

// alpha = (alpha_1, ..., alpha_r) with deg alpha_i = dim N_i + excess.
struct TransgressionSpec {
  std::vector<FormField> forms;
  int excess = 0;
};

void check_spec(const TransgressionSpec& spec, const FlagEmbedding& flag);

// Replaces every alpha_i by op(alpha_i); the excess is recomputed from level 0.
template <class Op>
TransgressionSpec map_spec(const TransgressionSpec& spec, const FlagEmbedding& flag, Op&& op) {
  TransgressionSpec out;
  for (const FormField& f : spec.forms) out.forms.push_back(op(f));
  out.excess = out.forms.empty() ? 0 : out.forms.front().degree() - flag.level(0).dim;
  return out;
}

// sum_i int_{N_i} i_{xi_l} ... i_{xi_1} alpha_i, i.e. alpha_i(xi_1, ..., xi_l, cell edges).
double transgress_value(const TransgressionSpec& spec, const FlagEmbedding& flag,
                        std::span<const FlagTangent> tangents, int order);

enum class Transport {
  kPushforward,  // tangents follow the map's differential
  kResample,     // tangents are their generating fields evaluated on the image
};

// transgress_value on the image of the flag under `map`, evaluated as the
// integral of the pulled-back integrand over the reference cells.
double transgress_on_image(const TransgressionSpec& spec, const FlagEmbedding& flag,
                           std::span<const FlagTangent> tangents, const AmbientMap& map, Transport transport,
                           int order);

enum class Difference { kCentral, kForward };

struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

// d alpha~ = (d alpha)~ along the family generated by X (and Y when the excess
// is 1): the flag-space side uses differences of step `step` along the flows.
IdentityResidual check_d_identity(const TransgressionSpec& spec, const FlagEmbedding& flag, const VectorField& x,
                                  const VectorField& y, double step, int order,
                                  Difference scheme = Difference::kCentral);

// i_{zeta_X} alpha~ = (i_X alpha)~ with the remaining excess-1 tangents.
IdentityResidual check_contraction_identity(const TransgressionSpec& spec, const FlagEmbedding& flag,
                                            const VectorField& x, std::span<const FlagTangent> tangents,
                                            int order);

// L_{zeta_X} alpha~ = (L_X alpha)~ with tangents transported by the flow.
IdentityResidual check_lie_identity(const TransgressionSpec& spec, const FlagEmbedding& flag, const VectorField& x,
                                    std::span<const FlagTangent> tangents, double dt, int order,
                                    Difference scheme = Difference::kCentral);

// transgress(spec, Phi.flag, Phi_* tangents) against transgress(Phi^* spec, flag,
// tangents). Phi must be affine; the forms must carry trig tables.
IdentityResidual diff_equivariance_check(const TransgressionSpec& spec, const FlagEmbedding& flag,
                                         const AffineMap& phi, std::span<const FlagTangent> tangents, int order);

// Least-squares slope of log(residual) against log(step).
double fit_log_slope(std::span<const double> steps, std::span<const double> residuals);

}  // namespace symflag
