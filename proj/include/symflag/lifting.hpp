#pragma once

#include "symflag/ambient.hpp"
#include "symflag/flagmesh.hpp"
#include "symflag/symplectic.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace symflag {

enum class LiftMode { kInductive, kDirect };

struct LiftOptions {
  double tikhonov = 1e-10;
  int level_freq_cap = 2;        // intrinsic dictionary for the inductive corrections
  std::optional<double> radius;  // tubular radius; default 1/4 of the level separation
  double flow_dt = 1e-3;
};

// Damped least squares min |A c - b|^2 + lambda |c|^2, refined once (iterated
// Tikhonov) so well-conditioned directions are solved to rounding while
// directions with sigma^2 << lambda stay suppressed.
struct DampedSolution {
  Eigen::VectorXd x;
  int rank = 0;  // singular values above sqrt(lambda)
  int columns = 0;
};
DampedSolution damped_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda);

struct LevelCorrection {
  int level = 0;          // level whose residual was corrected
  int support = 0;        // level carrying the level function
  double radius = 0.0;
  std::vector<NamedFunction> basis;
  Eigen::VectorXd coefficients;
};

struct LiftReport {
  LiftMode mode = LiftMode::kDirect;
  Eigen::VectorXd coefficients;  // over the ambient dictionary
  std::vector<double> level_residuals;  // max normal residual per level
  double residual = 0.0;
  int rank = 0;
  int columns = 0;
  std::vector<std::string> warnings;
  std::vector<LevelCorrection> corrections;
  FormField hamiltonian;  // dictionary part plus extensions
  double flow_dt = 0.0;
  double flow_deviation = 0.0;  // lift-then-flow normal deviation
};

// Level-wise max over vertices of |P_i^perp (X_h(v) - xi_i(v))|.
std::vector<double> normal_residuals(const FlagEmbedding& flag, const FlagTangent& xi, const VectorField& xh);

// max over vertices of |P_i^perp ((Fl^{X_h}_dt(v) - v) / dt - xi_i(v))|.
double lift_then_flow(const FlagEmbedding& flag, const FlagTangent& xi, const VectorField& xh, double dt);

// Throws kCompatibility for incompatible tangents.
LiftReport lift_tangent(const FlagEmbedding& flag, const FlagTangent& xi, const HamiltonianDictionary& dict,
                        LiftMode mode, const LiftOptions& options = {});

// Ambient separation of level i: twice the sampled reach
// min |y - x|^2 / (2 |P_x^perp (y - x)|) over vertex pairs and torus
// self-translates. Tubes of radius below half of it do not overlap.
double level_separation(const FlagEmbedding& flag, int i);

// Trig dictionary in the intrinsic chart parameters of the top level.
std::vector<NamedFunction> level_dictionary(const FlagEmbedding& flag, int freq_cap);

// Extends a function of the chart parameters of level i to the ambient space:
// constant along the symplectic-orthogonal fibres within radius rho, cut off
// to zero at 2 rho by a quintic profile. radius <= 0 selects the default.
FormField extend_normal_flat(const TrigFunction& f_level, const FlagEmbedding& flag, int i, double radius = 0.0);

// Hamiltonian vector field of f on the charted level, pushed to the ambient space.
Vec level_hamiltonian_field(const FlagEmbedding& flag, const TrigFunction& f_level, const Vec& u);

}  // namespace symflag
