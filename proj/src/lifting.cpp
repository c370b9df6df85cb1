#include "symflag/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

namespace symflag {

DampedSolution damped_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda) {
  DampedSolution out;
  out.columns = static_cast<int>(a.cols());
  out.x = Eigen::VectorXd::Zero(a.cols());
  if (a.rows() == 0 || a.cols() == 0) return out;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  auto solve = [&](const Eigen::VectorXd& rhs) {
    const Eigen::VectorXd ub = svd.matrixU().transpose() * rhs;
    Eigen::VectorXd z(s.size());
    for (int i = 0; i < s.size(); ++i) z[i] = s[i] > 0.0 ? s[i] * ub[i] / (s[i] * s[i] + lambda) : 0.0;
    return Eigen::VectorXd(svd.matrixV() * z);
  };
  out.x = solve(b);
  out.x += solve(b - a * out.x);
  const double floor = std::sqrt(lambda);
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > floor) ++out.rank;
  return out;
}

std::vector<double> normal_residuals(const FlagEmbedding& flag, const FlagTangent& xi, const VectorField& xh) {
  std::vector<double> out;
  for (int i = 0; i < flag.depth(); ++i) {
    const RealizedLevel& lv = flag.level(i);
    double worst = 0.0;
    for (int v = 0; v < lv.vertex_count(); ++v)
      worst = std::max(worst, lv.normal_part(v, xh(lv.positions[v]) - xi.values[i][v]).norm());
    out.push_back(worst);
  }
  return out;
}

double lift_then_flow(const FlagEmbedding& flag, const FlagTangent& xi, const VectorField& xh, double dt) {
  const FlowMap map(xh, dt, dt);
  double worst = 0.0;
  for (int i = 0; i < flag.depth(); ++i) {
    const RealizedLevel& lv = flag.level(i);
    for (int v = 0; v < lv.vertex_count(); ++v) {
      const Vec& x = lv.positions[v];
      const Vec velocity = (map.apply(x) - x) / dt;
      worst = std::max(worst, lv.normal_part(v, velocity - xi.values[i][v]).norm());
    }
  }
  return worst;
}

double level_separation(const FlagEmbedding& flag, int i) {
  const RealizedLevel& lv = flag.level(i);
  const AmbientSpace& space = flag.ambient();
  double reach = std::numeric_limits<double>::infinity();
  auto consider = [&](int v, const Vec& d) {
    const double off = lv.normal_part(v, d).norm();
    if (off > 1e-14 * d.norm()) reach = std::min(reach, d.squaredNorm() / (2.0 * off));
  };
  for (int v = 0; v < lv.vertex_count(); ++v) {
    for (int w = 0; w < lv.vertex_count(); ++w)
      if (w != v) consider(v, space.displacement(lv.positions[v], lv.positions[w]));
    if (space.is_torus())
      for (int a = 0; a < space.dim(); ++a) consider(v, unit_vec(space.dim(), a) * space.periods()[a]);
  }
  return 2.0 * reach;
}

namespace {

const Chart& chart_of(const FlagEmbedding& flag, int i) {
  if (i != flag.top() || !flag.data().chart)
    fail(ErrorKind::kInvalidArgument, "level " + std::to_string(i + 1) + " has no analytic chart");
  return *flag.data().chart;
}

std::string param_name(const std::vector<int>& m, bool sine) {
  static const char* names[] = {"u", "v", "w"};
  std::string arg;
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] == 0) continue;
    if (m[a] < 0) arg += "-";
    else if (!arg.empty()) arg += "+";
    if (std::abs(m[a]) != 1) arg += std::to_string(std::abs(m[a])) + "*";
    arg += names[a];
  }
  return std::string(sine ? "sin(" : "cos(") + arg + ")";
}

double quintic_cutoff(double d, double rho) {
  if (d <= rho) return 1.0;
  if (d >= 2.0 * rho) return 0.0;
  const double s = (d - rho) / rho;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

// Shared state of one normal-flat extension.
struct Extension {
  AmbientSpace space;
  Chart chart;
  TrigFunction f;
  double rho = 0.0;
  std::vector<Vec> positions;
  std::vector<Vec> params;
  double bucket = 1.0;
  std::map<std::vector<long long>, std::vector<int>> buckets;

  std::vector<long long> key(const Vec& x) const {
    std::vector<long long> k(x.size());
    for (int a = 0; a < x.size(); ++a) {
      k[a] = static_cast<long long>(std::floor(x[a] / bucket));
      if (space.is_torus()) {
        const long long count = std::max<long long>(1, static_cast<long long>(std::floor(space.periods()[a] / bucket)));
        k[a] = ((k[a] % count) + count) % count;
      }
    }
    return k;
  }

  int nearest(const Vec& x) const {
    const Vec y = space.wrap(x);
    const auto base = key(y);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(y.size());
    int offsets = 1;
    for (int a = 0; a < n; ++a) offsets *= 3;
    for (int o = 0; o < offsets; ++o) {
      Vec shifted = y;
      int code = o;
      for (int a = 0; a < n; ++a) {
        shifted[a] += (code % 3 - 1) * bucket;
        code /= 3;
      }
      auto it = buckets.find(key(shifted));
      if (it == buckets.end()) continue;
      for (int v : it->second) {
        const double d = space.distance(positions[v], y);
        if (d < best_d) {
          best_d = d;
          best = v;
        }
      }
    }
    if (best >= 0) return best;
    for (int v = 0; v < static_cast<int>(positions.size()); ++v) {
      const double d = space.distance(positions[v], y);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    return best_d <= 2.0 * rho + bucket ? best : -1;
  }

  double value(const Vec& x) const {
    const int v = nearest(x);
    if (v < 0) return 0.0;
    const Mat& w = space.omega();
    Vec u = params[v];
    const int p = chart.param_dim();
    Vec off;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const Vec c = chart.eval(u);
      const Mat dc = chart.jacobian(u);
      off = space.displacement(c, x);
      Vec g(p);
      Mat j(p, p);
      for (int r = 0; r < p; ++r) {
        g[r] = off.dot(w * dc.col(r));
        for (int a = 0; a < p; ++a)
          j(r, a) = -dc.col(a).dot(w * dc.col(r)) + off.dot(w * chart.second_derivative(u, a, r));
      }
      const Vec step = j.fullPivLu().solve(g);
      u -= step;
      if (step.norm() <= 1e-15 * std::max(1.0, u.norm())) {
        off = space.displacement(chart.eval(u), x);
        converged = true;
        break;
      }
    }
    const double d = off.norm();
    if (!converged && d < 2.0 * rho)
      fail(ErrorKind::kNumerical, "normal projection onto the level did not converge");
    return f.value(u) * quintic_cutoff(d, rho);
  }
};

FormField sum_fields(const FormField& a, const FormField& b) {
  return FormField(a.dim(), 0, [a, b](const Vec& x, std::span<const Vec>) { return a(x) + b(x); });
}

VectorField sum_fields(const VectorField& a, const VectorField& b) {
  return VectorField(a.dim(), [a, b](double t, const Vec& x) -> Vec { return a(x, t) + b(x, t); });
}

}  // namespace

std::vector<NamedFunction> level_dictionary(const FlagEmbedding& flag, int freq_cap) {
  const Chart& chart = chart_of(flag, flag.top());
  const int p = chart.param_dim();
  std::vector<NamedFunction> out;
  for (const auto& m : frequency_set(p, freq_cap)) {
    Vec k(p);
    for (int a = 0; a < p; ++a)
      k[a] = m[a] * (chart.periodic() ? 2.0 * 3.14159265358979323846 / chart.param_periods[a] : 1.0);
    out.push_back({param_name(m, false), TrigFunction::cosine(k)});
    out.push_back({param_name(m, true), TrigFunction::sine(k)});
  }
  return out;
}

Vec level_hamiltonian_field(const FlagEmbedding& flag, const TrigFunction& f_level, const Vec& u) {
  const Chart& chart = chart_of(flag, flag.top());
  const Mat dc = chart.jacobian(u);
  const Mat omega_n = dc.transpose() * flag.ambient().omega() * dc;
  return dc * (-omega_n.inverse() * f_level.gradient(u));
}

FormField extend_normal_flat(const TrigFunction& f_level, const FlagEmbedding& flag, int i, double radius) {
  const RealizedLevel& lv = flag.level(i);
  const AmbientSpace& space = flag.ambient();
  if (lv.dim >= space.dim()) fail(ErrorKind::kInvalidArgument, "extension needs a level of positive codimension");
  const Chart& chart = chart_of(flag, i);
  if (f_level.dim() != chart.param_dim())
    fail(ErrorKind::kInvalidArgument, "level function must be given in the chart parameters");
  if (f_level.is_zero()) return FormField::zero(space.dim(), 0);
  const double separation = level_separation(flag, i);
  const double rho = radius > 0.0 ? radius : 0.25 * separation;
  if (rho > 0.5 * separation) {
    std::ostringstream msg;
    msg << "tubular radius " << rho << " exceeds half the level separation " << separation;
    fail(ErrorKind::kInvalidArgument, msg.str());
  }
  auto ext = std::make_shared<Extension>();
  ext->space = space;
  ext->chart = chart;
  ext->f = f_level;
  ext->rho = rho;
  ext->positions = lv.positions;
  ext->params = flag.data().params;
  double longest = 0.0;
  for (int v = 0; v < lv.vertex_count(); ++v) longest = std::max(longest, lv.edge_scale[v]);
  ext->bucket = std::max(2.0 * longest, 1e-9);
  for (int v = 0; v < lv.vertex_count(); ++v) ext->buckets[ext->key(lv.positions[v])].push_back(v);
  return FormField(space.dim(), 0, [ext](const Vec& x, std::span<const Vec>) { return ext->value(x); });
}

LiftReport lift_tangent(const FlagEmbedding& flag, const FlagTangent& xi, const HamiltonianDictionary& dict,
                        LiftMode mode, const LiftOptions& options) {
  const auto compat = tangent_compatibility(flag, xi);
  if (!compat.ok) {
    std::ostringstream msg;
    msg << "tangent violates compatibility at level " << compat.worst_level + 1 << " vertex " << compat.worst_vertex
        << " (normal offset ratio " << compat.worst_ratio << ")";
    fail(ErrorKind::kCompatibility, msg.str());
  }
  if (!is_symplectic_flag(flag).symplectic) fail(ErrorKind::kInvalidArgument, "lifting needs a symplectic flag");
  const AmbientSpace& space = flag.ambient();
  const int n = space.dim();
  const int m = dict.size();

  std::vector<VectorField> columns;
  for (const auto& entry : dict.basis)
    columns.push_back(hamiltonian_vector_field(space, FormField::from_trig(entry.f)));

  // Rows (I - P_i) X_{h_j}(v) against (I - P_i) xi_i(v) for the selected levels.
  auto assemble = [&](const std::vector<int>& levels, Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    int rows = 0;
    for (int i : levels) rows += flag.level(i).vertex_count() * n;
    a.resize(rows, m);
    b.resize(rows);
    int r = 0;
    for (int i : levels) {
      const RealizedLevel& lv = flag.level(i);
      for (int v = 0; v < lv.vertex_count(); ++v) {
        for (int j = 0; j < m; ++j) a.block(r, j, n, 1) = lv.normal_part(v, columns[j](lv.positions[v]));
        b.segment(r, n) = lv.normal_part(v, xi.values[i][v]);
        r += n;
      }
    }
  };

  LiftReport report;
  report.mode = mode;
  report.columns = m;
  std::vector<int> levels;
  if (mode == LiftMode::kDirect) {
    for (int i = 0; i < flag.depth(); ++i) levels.push_back(i);
  } else {
    levels.push_back(flag.top());
  }
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  assemble(levels, a, b);
  const DampedSolution sol = damped_least_squares(a, b, options.tikhonov);
  report.coefficients = sol.x;
  report.rank = sol.rank;
  if (sol.rank < m) {
    std::ostringstream msg;
    msg << "rank-deficient normal-residual system: rank " << sol.rank << " of " << m
        << "; minimum-norm solution returned";
    report.warnings.push_back(msg.str());
  }
  const TrigFunction h_dict = dict.combine(sol.x);
  FormField h = FormField::from_trig(h_dict);
  VectorField xh = hamiltonian_vector_field(space, h);

  if (mode == LiftMode::kInductive) {
    for (int i = flag.top() - 1; i >= 0; --i) {
      const int support = i + 1;
      const auto basis = level_dictionary(flag, options.level_freq_cap);
      const RealizedLevel& lv = flag.level(i);
      const RealizedLevel& up = flag.level(support);
      const auto& map = flag.data().inclusions[i].vertex_map;
      const int k = static_cast<int>(basis.size());
      Eigen::MatrixXd la(lv.vertex_count() * n, k);
      Eigen::VectorXd lb(lv.vertex_count() * n);
      for (int v = 0; v < lv.vertex_count(); ++v) {
        const Vec& u = flag.data().params[up.top_index[map[v]]];
        for (int j = 0; j < k; ++j)
          la.block(v * n, j, n, 1) = lv.normal_part(v, level_hamiltonian_field(flag, basis[j].f, u));
        lb.segment(v * n, n) = lv.normal_part(v, xi.values[i][v] - xh(lv.positions[v]));
      }
      const DampedSolution fs = damped_least_squares(la, lb, options.tikhonov);
      LevelCorrection corr;
      corr.level = i;
      corr.support = support;
      corr.basis = basis;
      corr.coefficients = fs.x;
      TrigFunction f(up.dim);
      for (int j = 0; j < k; ++j)
        if (fs.x[j] != 0.0) f = f + basis[j].f * fs.x[j];
      const double separation = level_separation(flag, support);
      corr.radius = options.radius.value_or(0.25 * separation);
      report.corrections.push_back(corr);
      if (f.is_zero()) continue;
      const FormField ext = extend_normal_flat(f, flag, support, corr.radius);
      h = sum_fields(h, ext);
      xh = sum_fields(xh, hamiltonian_vector_field(space, ext));
    }
  }

  report.hamiltonian = h;
  report.level_residuals = normal_residuals(flag, xi, xh);
  report.residual = *std::max_element(report.level_residuals.begin(), report.level_residuals.end());
  report.flow_dt = options.flow_dt;
  report.flow_deviation = lift_then_flow(flag, xi, xh, options.flow_dt);
  return report;
}

}  // namespace symflag
