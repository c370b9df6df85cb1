#pragma once

#include "symflag/ambient.hpp"
#include "symflag/flagmesh.hpp"
#include "symflag/transgression.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace symflag {

struct NamedFunction {
  std::string name;
  TrigFunction f;
};

// Trig monomials cos(k.x), sin(k.x) over frequency_set(dim, cap), optionally
// preceded by the constant 1 and the coordinate functions.
struct HamiltonianDictionary {
  std::vector<NamedFunction> basis;

  static HamiltonianDictionary trig_monomials(const AmbientSpace& space, int freq_cap, bool include_linear = false,
                                              bool include_constant = false);
  int size() const { return static_cast<int>(basis.size()); }
  TrigFunction combine(const Eigen::VectorXd& coefficients) const;
};

// Name of cos/sin of sum_a m_a * coord_a, e.g. "cos(x1-2*y2)".
std::string monomial_name(const std::vector<int>& m, bool sine);
std::string coordinate_name(int axis);

struct SymplecticLevelReport {
  int level = 0;
  std::vector<int> degenerate_cells;
  double min_ratio = 0.0;  // min |omega(e1, e2)| / |e1 ^ e2| over cells
};

struct SymplecticReport {
  bool symplectic = true;
  std::vector<SymplecticLevelReport> levels;
};

// Throws kInvalidArgument on odd-dimensional levels.
SymplecticReport is_symplectic_flag(const FlagEmbedding& flag, double threshold = 1e-8);

// Per-component signs making int omega^k / k! positive (all +1 for points).
std::vector<int> liouville_orientation(const FlagEmbedding& flag, int i);
// The flag itself when its orientations already are the Liouville ones.
FlagEmbedding liouville_oriented(const FlagEmbedding& flag);

// alpha_i = omega^{k_i + 1} / (k_i + 1) with dim N_i = 2 k_i.
TransgressionSpec omega_spec(const FlagEmbedding& flag);
// f omega^{k_i} per level.
TransgressionSpec moment_spec(const FlagEmbedding& flag, const FormField& f);

double flag_omega(const FlagEmbedding& flag, const FlagTangent& xi, const FlagTangent& eta, int order);
// Gram matrix G_ab = flag_omega(frame_a, frame_b), assembled node by node.
Eigen::MatrixXd flag_omega_gram(const FlagEmbedding& flag, std::span<const FlagTangent> frame, int order);

double moment_pairing(const FlagEmbedding& flag, const FormField& f, int order);
std::vector<double> moment_vector(const FlagEmbedding& flag, const HamiltonianDictionary& dict, int order);
// <J(Phi(N)), f> evaluated on the image chain of the reference cells.
double moment_pairing_on_image(const FlagEmbedding& flag, const FormField& f, const AmbientMap& map, int order);

// flag_omega(zeta_{X_f}, zeta_X) against the difference quotient of <J, f> along Fl^X.
IdentityResidual hamiltonian_pairing_identity(const FlagEmbedding& flag, const FormField& f, const VectorField& x,
                                              double dt, int order, Difference scheme = Difference::kForward);

// (<J(Fl^{X_g}_dt N), f> - <J(N), f>) / dt against <J(N), {f, g}>.
IdentityResidual equivariance_check(const FlagEmbedding& flag, const FormField& f, const FormField& g, double dt,
                                    int order, Difference scheme = Difference::kCentral);

// flag_omega(zeta_{X_f}, zeta_{X_g}) against <J, {f, g}>; flip negates the J side.
IdentityResidual kks_check(const FlagEmbedding& flag, const FormField& f, const FormField& g, int order,
                           bool flip = false);

struct NondegeneracyResult {
  int rank = 0;
  double min_singular_value = 0.0;
  Eigen::MatrixXd gram;
};

// Throws kNumerical when the frame members are numerically dependent.
NondegeneracyResult nondegeneracy_probe(const FlagEmbedding& flag, std::span<const FlagTangent> frame, int order);

}  // namespace symflag
