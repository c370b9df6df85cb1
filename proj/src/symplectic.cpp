#include "symflag/symplectic.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace symflag {

std::string coordinate_name(int axis) {
  return std::string(axis % 2 == 0 ? "x" : "y") + std::to_string(axis / 2 + 1);
}

std::string monomial_name(const std::vector<int>& m, bool sine) {
  std::string arg;
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] == 0) continue;
    if (m[a] < 0) arg += "-";
    else if (!arg.empty()) arg += "+";
    if (std::abs(m[a]) != 1) arg += std::to_string(std::abs(m[a])) + "*";
    arg += coordinate_name(static_cast<int>(a));
  }
  return std::string(sine ? "sin(" : "cos(") + arg + ")";
}

HamiltonianDictionary HamiltonianDictionary::trig_monomials(const AmbientSpace& space, int freq_cap,
                                                            bool include_linear, bool include_constant) {
  const int n = space.dim();
  HamiltonianDictionary dict;
  if (include_constant) dict.basis.push_back({"1", TrigFunction::constant(n, 1.0)});
  if (include_linear)
    for (int a = 0; a < n; ++a) dict.basis.push_back({coordinate_name(a), TrigFunction::coordinate(n, a)});
  const Vec wave = space.wavenumbers();
  for (const auto& m : frequency_set(n, freq_cap)) {
    Vec k(n);
    for (int a = 0; a < n; ++a) k[a] = m[a] * wave[a];
    dict.basis.push_back({monomial_name(m, false), TrigFunction::cosine(k)});
    dict.basis.push_back({monomial_name(m, true), TrigFunction::sine(k)});
  }
  return dict;
}

TrigFunction HamiltonianDictionary::combine(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != size()) fail(ErrorKind::kInvalidArgument, "coefficient count does not match dictionary");
  const int n = basis.empty() ? 0 : basis.front().f.dim();
  TrigFunction h(n);
  for (int j = 0; j < size(); ++j)
    if (coefficients[j] != 0.0) h = h + basis[j].f * coefficients[j];
  return h;
}

SymplecticReport is_symplectic_flag(const FlagEmbedding& flag, double threshold) {
  for (int i = 0; i < flag.depth(); ++i)
    if (flag.mesh(i).dim % 2 != 0)
      fail(ErrorKind::kInvalidArgument, "symplectic mode requires even-dimensional levels");
  const AmbientSpace& space = flag.ambient();
  SymplecticReport report;
  for (int i = 0; i < flag.depth(); ++i) {
    const RealizedLevel& lv = flag.level(i);
    SymplecticLevelReport lr;
    lr.level = i;
    lr.min_ratio = lv.dim == 0 ? 1.0 : INFINITY;
    if (lv.dim == 2) {
      for (int c = 0; c < lv.cell_count(); ++c) {
        const auto& cell = lv.cells[c];
        const Vec e1 = space.displacement(lv.positions[cell[0]], lv.positions[cell[1]]);
        const Vec e2 = space.displacement(lv.positions[cell[0]], lv.positions[cell[2]]);
        const double wedge = std::sqrt(std::max(0.0, e1.squaredNorm() * e2.squaredNorm() - std::pow(e1.dot(e2), 2)));
        const double ratio = wedge > 0.0 ? std::abs(space.omega(e1, e2)) / wedge : 0.0;
        lr.min_ratio = std::min(lr.min_ratio, ratio);
        if (ratio <= threshold) lr.degenerate_cells.push_back(c);
      }
    }
    if (!lr.degenerate_cells.empty()) report.symplectic = false;
    report.levels.push_back(std::move(lr));
  }
  return report;
}

std::vector<int> liouville_orientation(const FlagEmbedding& flag, int i) {
  const RealizedLevel& lv = flag.level(i);
  if (lv.dim % 2 != 0) fail(ErrorKind::kInvalidArgument, "symplectic mode requires even-dimensional levels");
  std::vector<int> signs(lv.component_count, 1);
  if (lv.dim == 0) return signs;
  const AmbientSpace& space = flag.ambient();
  std::vector<double> volume(lv.component_count, 0.0);
  for (int c = 0; c < lv.cell_count(); ++c) {
    const auto& cell = lv.cells[c];
    const Vec e1 = space.displacement(lv.positions[cell[0]], lv.positions[cell[1]]);
    const Vec e2 = space.displacement(lv.positions[cell[0]], lv.positions[cell[2]]);
    volume[lv.cell_component[c]] += 0.5 * space.omega(e1, e2);
  }
  for (int k = 0; k < lv.component_count; ++k) {
    if (volume[k] == 0.0) fail(ErrorKind::kNumerical, "component has zero symplectic volume");
    signs[k] = volume[k] > 0.0 ? 1 : -1;
  }
  return signs;
}

FlagEmbedding liouville_oriented(const FlagEmbedding& flag) {
  std::vector<std::vector<int>> signs;
  bool same = true;
  for (int i = 0; i < flag.depth(); ++i) {
    signs.push_back(liouville_orientation(flag, i));
    same = same && signs.back() == flag.level(i).component_sign;
  }
  return same ? flag : flag.with_orientations(std::move(signs));
}

namespace {

int half_dim(const FlagEmbedding& flag, int i) {
  const int d = flag.level(i).dim;
  if (d % 2 != 0) fail(ErrorKind::kInvalidArgument, "symplectic mode requires even-dimensional levels");
  return d / 2;
}

double factorial(int k) { return k <= 1 ? 1.0 : k * factorial(k - 1); }

}  // namespace

TransgressionSpec omega_spec(const FlagEmbedding& flag) {
  TransgressionSpec spec;
  spec.excess = 2;
  const Mat& w = flag.ambient().omega();
  for (int i = 0; i < flag.depth(); ++i) {
    const int k = half_dim(flag, i);
    spec.forms.push_back(FormField::from_trig(symplectic_power(w, k + 1) * factorial(k)));
  }
  return spec;
}

TransgressionSpec moment_spec(const FlagEmbedding& flag, const FormField& f) {
  if (f.degree() != 0) fail(ErrorKind::kInvalidArgument, "moment pairing needs a 0-form");
  TransgressionSpec spec;
  const Mat& w = flag.ambient().omega();
  for (int i = 0; i < flag.depth(); ++i) {
    const int k = half_dim(flag, i);
    const TrigForm power = symplectic_power(w, k) * factorial(k);
    if (f.trig()) {
      const auto& comps = f.trig()->components();
      auto it = comps.find(IndexSet{});
      const TrigFunction h = it == comps.end() ? TrigFunction(w.rows()) : it->second;
      spec.forms.push_back(FormField::from_trig(power.times(h)));
    } else {
      spec.forms.push_back(wedge(f, FormField::from_trig(power)));
    }
  }
  return spec;
}

double flag_omega(const FlagEmbedding& flag, const FlagTangent& xi, const FlagTangent& eta, int order) {
  const FlagEmbedding oriented = liouville_oriented(flag);
  const std::array<FlagTangent, 2> args{xi, eta};
  return transgress_value(omega_spec(oriented), oriented, args, order);
}

Eigen::MatrixXd flag_omega_gram(const FlagEmbedding& flag, std::span<const FlagTangent> frame, int order) {
  const FlagEmbedding oriented = liouville_oriented(flag);
  const TransgressionSpec spec = omega_spec(oriented);
  const int n = flag.ambient().dim();
  const int m = static_cast<int>(frame.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < oriented.depth(); ++i) {
    const FormField& alpha = spec.forms[i];
    const int dim = oriented.level(i).dim;
    for_each_node(oriented, i, order, [&](const CellNode& node) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
      std::array<Vec, kMaxDim> args;
      for (int e = 0; e < dim; ++e) args[2 + e] = node.edges[e];
      for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
          args[0] = unit_vec(n, p);
          args[1] = unit_vec(n, q);
          b(p, q) = alpha(node.point, std::span<const Vec>(args.data(), 2 + dim));
          b(q, p) = -b(p, q);
        }
      Eigen::MatrixXd xi(n, m);
      for (int a = 0; a < m; ++a) xi.col(a) = frame[a].at(oriented, i, node);
      gram.noalias() += node.weight * (xi.transpose() * b * xi);
    });
  }
  return gram;
}

double moment_pairing(const FlagEmbedding& flag, const FormField& f, int order) {
  const FlagEmbedding oriented = liouville_oriented(flag);
  return transgress_value(moment_spec(oriented, f), oriented, {}, order);
}

std::vector<double> moment_vector(const FlagEmbedding& flag, const HamiltonianDictionary& dict, int order) {
  std::vector<double> out;
  for (const auto& entry : dict.basis) out.push_back(moment_pairing(flag, FormField::from_trig(entry.f), order));
  return out;
}

double moment_pairing_on_image(const FlagEmbedding& flag, const FormField& f, const AmbientMap& map, int order) {
  const FlagEmbedding oriented = liouville_oriented(flag);
  return transgress_on_image(moment_spec(oriented, f), oriented, {}, map, Transport::kPushforward, order);
}

IdentityResidual hamiltonian_pairing_identity(const FlagEmbedding& flag, const FormField& f, const VectorField& x,
                                              double dt, int order, Difference scheme) {
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidArgument, "dt must be positive");
  const FlagEmbedding oriented = liouville_oriented(flag);
  const VectorField xf = hamiltonian_vector_field(flag.ambient(), f);
  const double lhs = flag_omega(oriented, infinitesimal_action(oriented, xf), infinitesimal_action(oriented, x), order);
  const FlowMap plus(x, dt, dt);
  double rhs = 0.0;
  if (scheme == Difference::kForward) {
    rhs = (moment_pairing_on_image(oriented, f, plus, order) - moment_pairing(oriented, f, order)) / dt;
  } else {
    const FlowMap minus(x, -dt, dt);
    rhs = (moment_pairing_on_image(oriented, f, plus, order) - moment_pairing_on_image(oriented, f, minus, order)) /
          (2.0 * dt);
  }
  return {lhs, rhs, std::abs(lhs - rhs)};
}

IdentityResidual equivariance_check(const FlagEmbedding& flag, const FormField& f, const FormField& g, double dt,
                                    int order, Difference scheme) {
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidArgument, "dt must be positive");
  const FlagEmbedding oriented = liouville_oriented(flag);
  const VectorField xg = hamiltonian_vector_field(flag.ambient(), g);
  const FlowMap plus(xg, dt, dt);
  double lhs = 0.0;
  if (scheme == Difference::kForward) {
    lhs = (moment_pairing_on_image(oriented, f, plus, order) - moment_pairing(oriented, f, order)) / dt;
  } else {
    const FlowMap minus(xg, -dt, dt);
    lhs = (moment_pairing_on_image(oriented, f, plus, order) - moment_pairing_on_image(oriented, f, minus, order)) /
          (2.0 * dt);
  }
  const double rhs = moment_pairing(oriented, poisson_bracket(flag.ambient(), f, g), order);
  return {lhs, rhs, std::abs(lhs - rhs)};
}

IdentityResidual kks_check(const FlagEmbedding& flag, const FormField& f, const FormField& g, int order, bool flip) {
  const FlagEmbedding oriented = liouville_oriented(flag);
  const AmbientSpace& space = flag.ambient();
  const double lhs = flag_omega(oriented, infinitesimal_action(oriented, hamiltonian_vector_field(space, f)),
                                infinitesimal_action(oriented, hamiltonian_vector_field(space, g)), order);
  double rhs = moment_pairing(oriented, poisson_bracket(space, f, g), order);
  if (flip) rhs = -rhs;
  return {lhs, rhs, std::abs(lhs - rhs)};
}

NondegeneracyResult nondegeneracy_probe(const FlagEmbedding& flag, std::span<const FlagTangent> frame, int order) {
  const int m = static_cast<int>(frame.size());
  if (m == 0) fail(ErrorKind::kInvalidArgument, "frame is empty");
  int rows = 0;
  for (int i = 0; i < flag.depth(); ++i) rows += flag.level(i).vertex_count() * flag.ambient().dim();
  Eigen::MatrixXd stacked(rows, m);
  for (int a = 0; a < m; ++a) {
    if (frame[a].mode != FlagTangent::Mode::kFull) fail(ErrorKind::kInvalidArgument, "frame members must be full tangents");
    int r = 0;
    for (const auto& level : frame[a].values)
      for (const Vec& v : level) {
        stacked.block(r, a, v.size(), 1) = v;
        r += static_cast<int>(v.size());
      }
    if (r != rows) fail(ErrorKind::kInvalidArgument, "frame member does not match the flag");
  }
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(stacked).singularValues();
  if (sv.size() < m || sv[m - 1] <= 1e-10 * sv[0])
    fail(ErrorKind::kNumerical, "degenerate frame: members are numerically dependent");

  NondegeneracyResult result;
  result.gram = flag_omega_gram(flag, frame, order);
  const Eigen::VectorXd gs = Eigen::JacobiSVD<Eigen::MatrixXd>(result.gram).singularValues();
  const double tol = 1e-12 * std::max(1.0, gs[0]) * m;
  result.rank = static_cast<int>((gs.array() > tol).count());
  result.min_singular_value = gs[gs.size() - 1];
  return result;
}

}  // namespace symflag
