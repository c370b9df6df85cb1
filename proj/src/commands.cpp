#include "symflag/commands.hpp"

#include "symflag/currents.hpp"
#include "symflag/lifting.hpp"
#include "symflag/quadrature.hpp"
#include "symflag/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace symflag {

namespace {

enum class Relation { kAtMost, kAtLeast, kAbove, kInfo };

struct Row {
  Row(std::string n, double v, double tol, Relation rel = Relation::kAtMost, std::string why = {})
      : name(std::move(n)), value(v), tolerance(tol), relation(rel), note(std::move(why)) {}

  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::kAtMost;
  std::string note;
  std::optional<bool> forced;  // overrides the comparison

  bool pass() const {
    if (forced) return *forced;
    if (!std::isfinite(value)) return false;
    switch (relation) {
      case Relation::kAtMost: return value <= tolerance;
      case Relation::kAtLeast: return value >= tolerance;
      case Relation::kAbove: return value > tolerance;
      case Relation::kInfo: return true;
    }
    return false;
  }
};

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json row_json(const Row& r) {
  static const char* rel[] = {"<=", ">=", ">", "info"};
  Json j = {{"name", r.name}, {"value", number_or_null(r.value)}};
  if (r.relation != Relation::kInfo) j["tolerance"] = r.tolerance;
  j["relation"] = rel[static_cast<int>(r.relation)];
  j["pass"] = r.pass();
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

class ReportBuilder {
 public:
  ReportBuilder(std::string command, const Fixture& fx, const CommandOptions& options)
      : options_(options), start_(std::chrono::steady_clock::now()) {
    report_["command"] = std::move(command);
    report_["fixture"] = {{"name", fx.name}, {"hash", fx.hash}};
    report_["rng"] = Rng::kName;
    report_["seed"] = seed(fx);
  }

  std::uint64_t seed(const Fixture& fx) const { return options_.seed.value_or(fx.config.seed); }
  Json& body() { return report_; }
  void add(Row row) { rows_.push_back(std::move(row)); }
  void skip(const std::string& what, const std::string& why) { skipped_.push_back({{"check", what}, {"reason", why}}); }

  CommandResult finish(Status failing = Status::kCheckFailed) {
    CommandResult out;
    Json rows = Json::array();
    bool all = true;
    for (const Row& r : rows_) {
      rows.push_back(row_json(r));
      all = all && r.pass();
    }
    report_["rows"] = rows;
    if (!skipped_.empty()) report_["skipped"] = skipped_;
    report_["pass"] = all;
    report_["status"] = all ? 0 : static_cast<int>(failing);
    if (options_.timing)
      report_["timing"] = {
          {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    out.status = all ? Status::kPass : failing;
    out.report = report_;
    return out;
  }

 private:
  CommandOptions options_;
  std::chrono::steady_clock::time_point start_;
  Json report_;
  std::vector<Row> rows_;
  Json skipped_ = Json::array();
};

// Suite-local generator so single suites reproduce their rows from `check all`.
Rng suite_rng(std::uint64_t seed, const std::string& suite) {
  return Rng(seed ^ std::stoull(fnv1a_hex(suite), nullptr, 16));
}

void require_valid(const Fixture& fx) {
  const ValidationReport v = validate_flag(fx.flag, fx.config.thresholds);
  if (!v.ok()) fail(ErrorKind::kSchema, "fixture is not a valid flag: " + v.violations.front().message);
}

void require_symplectic(const Fixture& fx) {
  if (!fx.flag.symplectic()) fail(ErrorKind::kSchema, "command needs a fixture declared symplectic");
  const SymplecticReport s = is_symplectic_flag(fx.flag, fx.config.symplectic_threshold);
  if (!s.symplectic) fail(ErrorKind::kSchema, "fixture has omega-degenerate cells");
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

TransgressionSpec random_spec(const FlagEmbedding& flag, Rng& rng, int excess, int cap) {
  TransgressionSpec spec;
  spec.excess = excess;
  for (int i = 0; i < flag.depth(); ++i)
    spec.forms.push_back(FormField::from_trig(random_trig_form(flag.ambient(), rng, flag.level(i).dim + excess, cap, 2, 0.5)));
  return spec;
}

VectorField random_field(const AmbientSpace& space, Rng& rng, int cap) {
  return VectorField::from_trig(random_trig_field(space, rng, cap, 2, 0.5));
}

bool degree_fits(const FlagEmbedding& flag, int excess) {
  for (int i = 0; i < flag.depth(); ++i)
    if (flag.level(i).dim + excess > flag.ambient().dim()) return false;
  return true;
}

// Residuals at step, step/2, step/4. The slope is fitted on the
// self-convergence differences |lhs(h) - lhs(h/2)|, which isolates the step
// error from a step-independent mesh floor.
void convergence_rows(ReportBuilder& rb, const std::string& name, const Tolerances& tol, const std::string& tol_name,
                      double step, const std::function<IdentityResidual(double)>& check) {
  std::vector<double> steps{step, step / 2, step / 4}, res, lhs;
  for (double h : steps) {
    const IdentityResidual r = check(h);
    res.push_back(r.residual);
    lhs.push_back(r.lhs);
  }
  rb.add({name, res[0], tol[tol_name]});
  for (std::size_t k = 1; k < steps.size(); ++k)
    rb.add({name + "@" + fmt(steps[k]), res[k], 0.0, Relation::kInfo});
  std::vector<double> gaps, gap_steps;
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    gaps.push_back(std::abs(lhs[k] - lhs[k + 1]));
    gap_steps.push_back(steps[k]);
  }
  Row slope{name + ".slope", fit_log_slope(gap_steps, gaps), tol["min_slope"], Relation::kAtLeast,
            "order of |lhs(h) - lhs(h/2)| under step halving"};
  if (max_of(res) < 1e-12 || max_of(gaps) < 1e-12) {
    slope.value = std::numeric_limits<double>::quiet_NaN();
    slope.forced = true;
    slope.note = "step error at rounding level at every step; no slope to fit";
  }
  rb.add(slope);
}

void suite_calc(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed) {
  const FlagEmbedding& flag = fx.flag;
  const AmbientSpace& space = flag.ambient();
  const FixtureConfig& c = fx.config;
  const int order = c.quadrature_order;
  Rng rng = suite_rng(seed, "calc");

  if (degree_fits(flag, 2)) {
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const TransgressionSpec spec = random_spec(flag, rng, 2, c.freq_cap);
      const VectorField x = random_field(space, rng, c.freq_cap);
      const std::array<FlagTangent, 1> rest{infinitesimal_action(flag, random_field(space, rng, c.freq_cap))};
      worst = std::max(worst, check_contraction_identity(spec, flag, x, rest, order).residual);
    }
    rb.add({"calc.contraction", worst, c.tolerances["contraction"]});
  } else {
    rb.skip("calc.contraction", "excess 2 exceeds the ambient dimension");
  }

  std::vector<TransgressionSpec> specs{random_spec(flag, rng, 0, c.freq_cap)};
  if (degree_fits(flag, 1)) specs.push_back(random_spec(flag, rng, 1, c.freq_cap));
  for (const auto& s : fx.specs)
    if (s.excess <= 1) specs.push_back(s);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const TransgressionSpec& spec = specs[k];
    const std::string tag = k < 2 && k < specs.size() - fx.specs.size() ? "random.l" + std::to_string(spec.excess)
                                                                         : "spec" + std::to_string(k) + ".l" + std::to_string(spec.excess);
    const VectorField x = random_field(space, rng, c.freq_cap);
    const VectorField y = random_field(space, rng, c.freq_cap);
    convergence_rows(rb, "calc.d_identity." + tag, c.tolerances, "d_identity", c.step,
                     [&](double h) { return check_d_identity(spec, flag, x, y, h, order); });
  }

  if (degree_fits(flag, 1)) {
    const TransgressionSpec spec = random_spec(flag, rng, 1, c.freq_cap);
    const VectorField x = random_field(space, rng, c.freq_cap);
    const std::array<FlagTangent, 1> tangents{infinitesimal_action(flag, random_field(space, rng, c.freq_cap))};
    convergence_rows(rb, "calc.lie_identity", c.tolerances, "lie_identity", c.step,
                     [&](double h) { return check_lie_identity(spec, flag, x, tangents, h, order); });

    const int n = space.dim();
    Mat a = Mat::Identity(n, n);
    if (!space.is_torus() || space.periods()[0] == space.periods()[1]) a(0, 1) = 1.0;
    Vec b(n);
    for (int q = 0; q < n; ++q) b[q] = rng.uniform(-0.5, 0.5);
    const AffineMap phi(a, b);
    rb.add({"calc.diff_equivariance", diff_equivariance_check(spec, flag, phi, tangents, order).residual,
            c.tolerances["diff_equivariance"]});
  }
}

MixedForm random_mixed_primitive(const FlagEmbedding& flag, Rng& rng, int cap) {
  MixedForm beta;
  for (int i = 0; i < flag.depth(); ++i) {
    const int dim = flag.level(i).dim;
    if (dim >= 1) beta.components.push_back(FormField::from_trig(random_trig_form(flag.ambient(), rng, dim - 1, cap, 3, 0.5)));
  }
  return beta;
}

void suite_stokes(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed) {
  const FixtureConfig& c = fx.config;
  Rng rng = suite_rng(seed, "stokes");
  bool any = false;
  for (int i = 0; i < fx.flag.depth(); ++i) any = any || fx.flag.level(i).dim >= 1;
  if (!any) {
    rb.skip("stokes", "flag has no positive-dimensional level");
    return;
  }
  std::vector<MixedForm> betas;
  for (int k = 0; k < 3; ++k) betas.push_back(random_mixed_primitive(fx.flag, rng, c.freq_cap));
  double worst = 0.0;
  for (const auto& beta : betas) worst = std::max(worst, stokes_residual(fx.flag, beta, c.quadrature_order));
  rb.add({"stokes.residual", worst, c.tolerances["stokes"]});

  std::vector<double> sizes, res;
  std::vector<std::string> labels;
  if (fx.grid && !c.stokes_resolutions.empty()) {
    for (int r : c.stokes_resolutions) {
      const Fixture level = r == (*fx.grid)[0] ? fx : with_grid_resolution(fx, r);
      sizes.push_back(1.0 / r);
      res.push_back(stokes_residual(level.flag, betas.front(), c.stokes_order));
      labels.push_back(std::to_string(r));
    }
  } else {
    for (int factor : {1, 2, 4}) {
      const FlagEmbedding refined = refine(fx.flag, factor);
      sizes.push_back(1.0 / factor);
      res.push_back(stokes_residual(refined, betas.front(), c.stokes_order));
      labels.push_back("x" + std::to_string(factor));
    }
  }
  for (std::size_t k = 0; k < res.size(); ++k)
    rb.add({"stokes.sweep@" + labels[k], res[k], 0.0, Relation::kInfo});
  Row slope{"stokes.slope", fit_log_slope(sizes, res), c.tolerances["stokes_slope"], Relation::kAtLeast};
  if (max_of(res) < 1e-12) {
    slope.value = std::numeric_limits<double>::quiet_NaN();
    slope.forced = true;
    slope.note = "quadrature exact at every resolution (residuals at rounding level); no slope to fit";
  }
  rb.add(slope);
}

FormField random_hamiltonian(const AmbientSpace& space, Rng& rng, int cap) {
  return FormField::from_trig(random_trig_function(space, rng, cap, 3, 1.0));
}

void suite_equivariance(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed) {
  const FixtureConfig& c = fx.config;
  const AmbientSpace& space = fx.flag.ambient();
  const int n = space.dim();
  Rng rng = suite_rng(seed, "equivariance");
  double worst = 0.0;
  for (int p = 0; p < c.equivariance_pairs; ++p) {
    const FormField f = random_hamiltonian(space, rng, c.freq_cap);
    const FormField g = random_hamiltonian(space, rng, c.freq_cap);
    worst = std::max(worst, equivariance_check(fx.flag, f, g, c.step, c.quadrature_order).residual);
  }
  rb.add({"equivariance.random_pairs", worst, c.tolerances["equivariance"],
          Relation::kAtMost, std::to_string(c.equivariance_pairs) + " seeded pairs, dt = " + fmt(c.step)});

  FlagData point;
  point.ambient = space;
  point.symplectic = true;
  point.levels = {Mesh{0, 1, {{0, 0, 0}}}};
  point.positions = {Vec::Zero(n)};
  const FlagEmbedding origin(point);
  const auto r = equivariance_check(origin, FormField::from_trig(TrigFunction::sine(unit_vec(n, 0) * space.wavenumbers()[0])),
                                    FormField::from_trig(TrigFunction::coordinate(n, 1)), 1e-4, c.quadrature_order);
  rb.add({"equivariance.single_point", r.residual, c.tolerances["equivariance_point"], Relation::kAtMost,
          "f = sin x1, g = y1 at the origin, dt = 1e-4"});

  const int axis = n >= 4 ? 2 : 0;
  const auto h = hamiltonian_pairing_identity(fx.flag, FormField::from_trig(TrigFunction::coordinate(n, 1)),
                                              VectorField::constant(unit_vec(n, axis)), c.step, c.quadrature_order);
  rb.add({"equivariance.hamiltonian_pairing", h.residual, c.tolerances["hamiltonian_pairing"], Relation::kAtMost,
          "f = y1, X = d/d" + coordinate_name(axis)});
}

void suite_kks(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed, bool flip) {
  const FixtureConfig& c = fx.config;
  const AmbientSpace& space = fx.flag.ambient();
  Rng rng = suite_rng(seed, "kks");
  double worst = 0.0;
  double self = 0.0;
  for (int p = 0; p < c.kks_pairs; ++p) {
    const FormField f = random_hamiltonian(space, rng, c.freq_cap);
    const FormField g = random_hamiltonian(space, rng, c.freq_cap);
    worst = std::max(worst, kks_check(fx.flag, f, g, c.quadrature_order, flip).residual);
    if (p == 0) {
      const auto s = kks_check(fx.flag, f, f, c.quadrature_order, flip);
      self = std::max(std::abs(s.lhs), std::abs(s.rhs));
    }
  }
  rb.add({"kks.random_pairs", worst, c.tolerances["kks"], Relation::kAtMost,
          std::to_string(c.kks_pairs) + " seeded pairs" + (flip ? "; J side negated (debug)" : "")});
  rb.add({"kks.self_pair", self, c.tolerances["antisymmetry"], Relation::kAtMost, "f = g: both sides vanish"});
}

void suite_nondegeneracy(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed) {
  const FixtureConfig& c = fx.config;
  Rng rng = suite_rng(seed, "nondegeneracy");
  std::vector<FlagTangent> frame;
  for (int a = 0; a < c.frame_size; ++a) frame.push_back(random_compatible_tangent(fx.flag, rng, c.freq_cap));
  const NondegeneracyResult r = nondegeneracy_probe(fx.flag, frame, c.quadrature_order);
  rb.add({"nondegeneracy.rank", static_cast<double>(r.rank), static_cast<double>(c.frame_size), Relation::kAtLeast,
          std::to_string(c.frame_size) + "-member seeded frame"});
  rb.add({"nondegeneracy.min_singular_value", r.min_singular_value, c.tolerances["min_singular"], Relation::kAbove});
  const double scale = std::max(1.0, r.gram.cwiseAbs().maxCoeff());
  rb.add({"nondegeneracy.antisymmetry", (r.gram + r.gram.transpose()).cwiseAbs().maxCoeff() / scale,
          c.tolerances["antisymmetry"], Relation::kAtMost, "max |G + G^T| relative to max |G|"});
  if (fx.analytic_frame) {
    const auto& af = *fx.analytic_frame;
    const std::vector<FlagTangent> pair{infinitesimal_action(fx.flag, VectorField::constant(af.a)),
                                        infinitesimal_action(fx.flag, VectorField::constant(af.b))};
    const NondegeneracyResult p = nondegeneracy_probe(fx.flag, pair, c.quadrature_order);
    rb.add({"nondegeneracy.analytic_frame", std::abs(p.gram(0, 1) - af.expected), c.tolerances["analytic_frame"],
            Relation::kAtMost, "G_12 = " + fmt(p.gram(0, 1)) + ", expected " + fmt(af.expected)});
    rb.add({"nondegeneracy.analytic_frame.rank", static_cast<double>(p.rank), 2.0, Relation::kAtLeast});
  } else {
    rb.skip("nondegeneracy.analytic_frame", "fixture declares no analytic frame");
  }
}

const char* mode_name(LiftMode m) { return m == LiftMode::kDirect ? "direct" : "inductive"; }

bool within_dictionary(const TrigFunction& f, const AmbientSpace& space, int cap, bool linear = false) {
  if (!f.periodic() && !linear) return false;
  const Vec wave = space.wavenumbers();
  for (const auto& t : f.terms()) {
    double l1 = 0.0;
    for (int a = 0; a < f.dim(); ++a) l1 += std::abs(std::lround(t.k[a] / wave[a]));
    if (l1 > cap) return false;
  }
  return true;
}

// Symplectic complement of the chart tangent space at u: kernel of Dc^T W.
Eigen::MatrixXd symplectic_complement(const Chart& chart, const Mat& omega, const Vec& u) {
  const Mat dc = chart.jacobian(u);
  const Eigen::MatrixXd m = dc.transpose() * omega;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  return lu.kernel();
}

void extension_rows(ReportBuilder& rb, const Fixture& fx, Rng& rng) {
  const FlagEmbedding& flag = fx.flag;
  const FixtureConfig& c = fx.config;
  const AmbientSpace& space = flag.ambient();
  const int top = flag.top();
  if (!flag.data().chart || flag.level(top).dim == 0) {
    rb.skip("lifting.extension", "top level has no chart");
    return;
  }
  const auto basis = level_dictionary(flag, c.lift.level_freq_cap);
  TrigFunction f(flag.level(top).dim);
  for (int k = 0; k < 3; ++k) f = f + basis[rng.integer(0, static_cast<int>(basis.size()) - 1)].f * rng.uniform(-1.0, 1.0);
  const FormField ext = extend_normal_flat(f, flag, top, c.lift.radius.value_or(0.0));
  const VectorField xf = hamiltonian_vector_field(space, ext);
  const Chart& chart = *flag.data().chart;
  const RealizedLevel& lv = flag.level(top);
  double normal_derivative = 0.0, tangency = 0.0, agreement = 0.0;
  const double h = 1e-4;
  for (int v = 0; v < lv.vertex_count(); ++v) {
    const Vec& u = flag.data().params[v];
    const Vec& x = lv.positions[v];
    agreement = std::max(agreement, std::abs(ext(x) - f.value(u)));
    const Eigen::MatrixXd fibre = symplectic_complement(chart, space.omega(), u);
    for (int q = 0; q < fibre.cols(); ++q) {
      const Vec w = fibre.col(q).normalized();
      normal_derivative = std::max(normal_derivative, std::abs(ext(Vec(x + h * w)) - ext(Vec(x - h * w))) / (2 * h));
    }
    const Mat dc = chart.jacobian(u);
    const Vec xv = xf(x);
    const Vec off = xv - dc * dc.colPivHouseholderQr().solve(xv);
    tangency = std::max(tangency, off.norm());
  }
  rb.add({"lifting.extension.agreement", agreement, c.tolerances["extension_normal"], Relation::kAtMost,
          "extension equals the level function on the level"});
  rb.add({"lifting.extension.normal_derivative", normal_derivative, c.tolerances["extension_normal"]});
  rb.add({"lifting.extension.tangency", tangency, c.tolerances["extension_tangency"], Relation::kAtMost,
          "normal part of X_extension at top vertices"});
}

void lift_rows(ReportBuilder& rb, const Fixture& fx, const std::string& name, const FlagTangent& xi,
               double tolerance) {
  const FixtureConfig& c = fx.config;
  const auto dict = HamiltonianDictionary::trig_monomials(fx.flag.ambient(), c.freq_cap);
  std::vector<double> achieved;
  for (LiftMode mode : {LiftMode::kDirect, LiftMode::kInductive}) {
    const LiftReport r = lift_tangent(fx.flag, xi, dict, mode, c.lift);
    const std::string base = "lifting." + name + "." + mode_name(mode);
    rb.add({base + ".residual", r.residual, tolerance});
    rb.add({base + ".lift_then_flow", r.flow_deviation, r.residual + c.tolerances["lift_flow_factor"] * r.flow_dt,
            Relation::kAtMost, "bound = residual + " + fmt(c.tolerances["lift_flow_factor"]) + " * dt"});
    achieved.push_back(r.residual);
  }
  const double floor = c.tolerances["lift_representable"];
  const double ratio = (std::max(achieved[0], achieved[1]) + floor) / (std::min(achieved[0], achieved[1]) + floor);
  rb.add({"lifting." + name + ".mode_agreement", ratio, c.tolerances["lift_mode_ratio"], Relation::kAtMost,
          "residual ratio between modes (floored at the representable tolerance)"});
}

void suite_lifting(ReportBuilder& rb, const Fixture& fx, std::uint64_t seed) {
  const FixtureConfig& c = fx.config;
  const AmbientSpace& space = fx.flag.ambient();
  Rng rng = suite_rng(seed, "lifting");
  const auto dict = HamiltonianDictionary::trig_monomials(space, c.freq_cap);
  TrigFunction g(space.dim());
  for (int k = 0; k < 3; ++k) g = g + dict.basis[rng.integer(0, dict.size() - 1)].f * rng.uniform(-1.0, 1.0);
  const FlagTangent representable =
      infinitesimal_action(fx.flag, hamiltonian_vector_field(space, FormField::from_trig(g)));
  lift_rows(rb, fx, "random_representable", representable, c.tolerances["lift_representable"]);
  for (const auto& [name, spec] : fx.tangents) {
    const bool exact = spec.hamiltonian && within_dictionary(*spec.hamiltonian, space, c.freq_cap);
    lift_rows(rb, fx, name, make_tangent(fx, spec), c.tolerances[exact ? "lift_representable" : "lift_mixed"]);
  }
  extension_rows(rb, fx, rng);
}

std::vector<NamedFunction> probes_for(const Fixture& fx, const CommandOptions& o) {
  if (o.probes) return parse_probe_list(*o.probes, fx.flag.ambient(), fx.config.freq_cap);
  return fx.probes;
}

TrigFunction hamiltonian_for(const Fixture& fx, const std::string& text) {
  auto it = fx.functions.find(text);
  if (it != fx.functions.end()) return it->second;
  return parse_function(Json(text), fx.flag.ambient());
}

}  // namespace

Status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kCompatibility: return Status::kInputError;
    case ErrorKind::kNumerical: return Status::kNumericalError;
  }
  return Status::kInputError;
}

Json error_report(const std::string& command, const std::string& message, Status status) {
  return {{"command", command}, {"error", message}, {"pass", false}, {"status", static_cast<int>(status)}};
}

Fixture with_grid_resolution(const Fixture& fx, int resolution) {
  if (!fx.grid) fail(ErrorKind::kInvalidArgument, "fixture has no grid block");
  const int nu = (*fx.grid)[0], nv = (*fx.grid)[1];
  Json src = fx.source;
  src["mesh"]["grid"] = {resolution, resolution};
  if (src.contains("submeshes") && !src["submeshes"].empty()) {
    Json& last = src["submeshes"][src["submeshes"].size() - 1];
    Json mapped = Json::array();
    for (const auto& w : last["vertex_map"]) {
      const int idx = w.get<int>();
      const int i = idx / nv, j = idx % nv;
      if ((i * resolution) % nu != 0 || (j * resolution) % nv != 0)
        fail(ErrorKind::kInvalidArgument, "submesh vertex " + std::to_string(idx) + " is not on the " +
                                              std::to_string(resolution) + " grid");
      mapped.push_back((i * resolution / nu) * resolution + j * resolution / nv);
    }
    last["vertex_map"] = mapped;
  }
  return parse_fixture(src.dump());
}

CommandResult cmd_validate(const Fixture& fx, const CommandOptions& options) {
  ReportBuilder rb("validate", fx, options);
  const ValidationReport v = validate_flag(fx.flag, fx.config.thresholds);
  Json violations = Json::array();
  for (const auto& x : v.violations)
    violations.push_back({{"kind", x.kind}, {"level", x.level < 0 ? Json(nullptr) : Json(x.level + 1)}, {"message", x.message}});
  bool symplectic_ok = true;
  if (v.ok() && fx.flag.symplectic()) {
    const SymplecticReport s = is_symplectic_flag(fx.flag, fx.config.symplectic_threshold);
    for (const auto& lr : s.levels)
      if (!lr.degenerate_cells.empty()) {
        symplectic_ok = false;
        violations.push_back({{"kind", "symplectic"},
                              {"level", lr.level + 1},
                              {"message", std::to_string(lr.degenerate_cells.size()) +
                                              " cells with |omega(e1,e2)| / |e1^e2| <= " +
                                              fmt(fx.config.symplectic_threshold) + " (first: cell " +
                                              std::to_string(lr.degenerate_cells.front()) + ")"}});
      }
  }
  rb.body()["violations"] = violations;
  rb.body()["levels"] = fx.flag.depth();
  rb.add({"validate.violations", static_cast<double>(violations.size()), 0.0});
  (void)symplectic_ok;
  return rb.finish();
}

CommandResult cmd_moment(const Fixture& fx, const CommandOptions& options) {
  require_valid(fx);
  ReportBuilder rb("moment", fx, options);
  const auto probes = probes_for(fx, options);
  if (!probes.empty()) require_symplectic(fx);
  Json values = Json::array();
  for (const auto& p : probes)
    values.push_back({{"probe", p.name}, {"value", moment_pairing(fx.flag, FormField::from_trig(p.f), fx.config.quadrature_order)}});
  rb.body()["quadrature_order"] = fx.config.quadrature_order;
  rb.body()["moment"] = values;
  return rb.finish();
}

CommandResult cmd_check(const Fixture& fx, const CommandOptions& options) {
  std::vector<std::string> suites;
  if (options.suite == "all") {
    suites = kSuites;
  } else if (std::find(kSuites.begin(), kSuites.end(), options.suite) != kSuites.end()) {
    suites = {options.suite};
  } else {
    std::string known = "all";
    for (const auto& s : kSuites) known += ", " + s;
    fail(ErrorKind::kSchema, "unknown suite \"" + options.suite + "\" (known: " + known + ")");
  }
  require_valid(fx);
  ReportBuilder rb("check", fx, options);
  rb.body()["suite"] = options.suite;
  const std::uint64_t seed = rb.seed(fx);
  const bool symplectic = fx.flag.symplectic() && is_symplectic_flag(fx.flag, fx.config.symplectic_threshold).symplectic;
  for (const auto& s : suites) {
    if (s == "calc") {
      suite_calc(rb, fx, seed);
    } else if (s == "stokes") {
      suite_stokes(rb, fx, seed);
    } else if (!symplectic) {
      rb.skip(s, "flag is not declared symplectic");
    } else if (s == "equivariance") {
      suite_equivariance(rb, fx, seed);
    } else if (s == "kks") {
      suite_kks(rb, fx, seed, options.flip_kks_sign);
    } else if (s == "nondegeneracy") {
      suite_nondegeneracy(rb, fx, seed);
    } else if (s == "lifting") {
      suite_lifting(rb, fx, seed);
    }
  }
  return rb.finish();
}

CommandResult cmd_flow(const Fixture& fx, const CommandOptions& options) {
  require_valid(fx);
  require_symplectic(fx);
  if (!(options.dt > 0.0) || !(options.t >= 0.0)) fail(ErrorKind::kSchema, "flow needs t >= 0 and dt > 0");
  std::string h_text;
  if (options.hamiltonian) {
    h_text = *options.hamiltonian;
  } else if (fx.source.contains("flow") && fx.source["flow"].contains("hamiltonian")) {
    h_text = fx.source["flow"]["hamiltonian"].get<std::string>();
  } else {
    fail(ErrorKind::kSchema, "flow needs a Hamiltonian (--hamiltonian or flow.hamiltonian in the fixture)");
  }
  const TrigFunction h = hamiltonian_for(fx, h_text);
  ReportBuilder rb("flow", fx, options);
  rb.body()["hamiltonian"] = h_text;
  rb.body()["t"] = options.t;
  rb.body()["dt"] = options.dt;
  const AmbientSpace& space = fx.flag.ambient();
  const int order = fx.config.quadrature_order;
  const FlagEmbedding oriented = liouville_oriented(fx.flag);
  const VectorField xh = hamiltonian_vector_field(space, FormField::from_trig(h));
  const int steps = options.t == 0.0 || h.is_zero()
                        ? 0
                        : static_cast<int>(std::ceil(options.t / options.dt * (1.0 - 1e-12)));
  rb.body()["steps"] = steps;

  CommandResult out;
  FlagEmbedding moved = fx.flag;
  if (steps > 0) moved = act_map(fx.flag, FlowMap(xh, options.t, options.dt));
  out.fixture_out = dump_json(fixture_with_flag(fx, moved));

  // Quadrature nodes carry f omega^k; the flow moves node positions only,
  // which is exact for a symplectic flow (Fl^* omega = omega).
  auto probes = probes_for(fx, options);
  probes.push_back({"hamiltonian", h});
  std::vector<Vec> nodes;
  std::vector<double> weights;
  const Mat& w = space.omega();
  for (int i = 0; i < oriented.depth(); ++i) {
    const int k = oriented.level(i).dim / 2;
    double factorial = 1.0;
    for (int q = 2; q <= k; ++q) factorial *= q;
    const FormField power = FormField::from_trig(symplectic_power(w, k) * factorial);
    for_each_node(oriented, i, order, [&](const CellNode& node) {
      std::array<Vec, 2> edges{node.edges[0], node.edges[1]};
      nodes.push_back(node.point);
      weights.push_back(node.weight * power(node.point, std::span<const Vec>(edges.data(), 2 * k)));
    });
  }
  std::ostringstream csv;
  csv << "t,probe,value\n";
  std::vector<double> first(probes.size()), last(probes.size());
  double drift = 0.0;
  const double h_step = steps > 0 ? options.t / steps : 0.0;
  std::optional<FlowMap> step_map;
  if (steps > 0) step_map.emplace(xh, h_step, h_step);
  for (int s = 0; s <= steps; ++s) {
    if (s > 0)
      for (Vec& x : nodes) x = step_map->apply(x);
    const double time = s * h_step;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      double value = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) value += weights[q] * probes[p].f.value(nodes[q]);
      if (s == 0) first[p] = value;
      last[p] = value;
      csv << fmt(time) << "," << probes[p].name << "," << fmt(value) << "\n";
    }
    drift = std::max(drift, std::abs(last.back() - first.back()));
  }
  out.csv = csv.str();
  Json finals = Json::array();
  for (std::size_t p = 0; p < probes.size(); ++p)
    finals.push_back({{"probe", probes[p].name}, {"initial", first[p]}, {"final", last[p]}});
  rb.body()["trajectory"] = finals;
  rb.add({"flow.hamiltonian_conservation", drift, fx.config.tolerances["flow_conservation"], Relation::kAtMost,
          "max_t |<J(Fl_t N), h> - <J(N), h>|"});
  CommandResult r = rb.finish();
  r.fixture_out = std::move(out.fixture_out);
  r.csv = std::move(out.csv);
  return r;
}

CommandResult cmd_lift(const Fixture& fx, const CommandOptions& options) {
  require_valid(fx);
  require_symplectic(fx);
  LiftMode mode;
  if (options.mode == "inductive") mode = LiftMode::kInductive;
  else if (options.mode == "direct") mode = LiftMode::kDirect;
  else fail(ErrorKind::kSchema, "unknown lift mode \"" + options.mode + "\" (inductive, direct)");

  const AmbientSpace& space = fx.flag.ambient();
  const FixtureConfig& c = fx.config;
  std::string name;
  TangentSpec spec;
  if (options.tangent && options.tangent->rfind("hamiltonian:", 0) == 0) {
    name = *options.tangent;
    spec.hamiltonian = hamiltonian_for(fx, options.tangent->substr(12));
  } else if (options.tangent) {
    auto it = fx.tangents.find(*options.tangent);
    if (it == fx.tangents.end()) fail(ErrorKind::kSchema, "fixture has no tangent \"" + *options.tangent + "\"");
    name = it->first;
    spec = it->second;
  } else if (!fx.tangents.empty()) {
    name = fx.tangents.begin()->first;
    spec = fx.tangents.begin()->second;
  } else {
    fail(ErrorKind::kSchema, "lift needs a tangent (--tangent or a tangents block in the fixture)");
  }
  const FlagTangent xi = make_tangent(fx, spec);
  const auto dict = HamiltonianDictionary::trig_monomials(space, c.freq_cap, c.lift_linear);
  const LiftReport r = lift_tangent(fx.flag, xi, dict, mode, c.lift);

  ReportBuilder rb("lift", fx, options);
  rb.body()["tangent"] = name;
  rb.body()["mode"] = mode_name(mode);
  rb.body()["dictionary_size"] = dict.size();
  rb.body()["rank"] = r.rank;
  rb.body()["level_residuals"] = r.level_residuals;
  Json coeffs = Json::array();
  for (int j = 0; j < dict.size(); ++j)
    if (std::abs(r.coefficients[j]) > 1e-14) coeffs.push_back({{"function", dict.basis[j].name}, {"coefficient", r.coefficients[j]}});
  rb.body()["coefficients"] = coeffs;
  Json corrections = Json::array();
  for (const auto& corr : r.corrections) {
    Json cj = {{"level", corr.level + 1}, {"support", corr.support + 1}, {"radius", corr.radius}};
    Json terms = Json::array();
    for (std::size_t j = 0; j < corr.basis.size(); ++j)
      if (std::abs(corr.coefficients[j]) > 1e-14) terms.push_back({{"function", corr.basis[j].name}, {"coefficient", corr.coefficients[j]}});
    cj["coefficients"] = terms;
    corrections.push_back(cj);
  }
  rb.body()["corrections"] = corrections;
  rb.body()["warnings"] = r.warnings;
  const bool exact = spec.hamiltonian && within_dictionary(*spec.hamiltonian, space, c.freq_cap, c.lift_linear);
  rb.add({"lift.residual", r.residual, c.tolerances[exact ? "lift_representable" : "lift_mixed"]});
  rb.add({"lift.lift_then_flow", r.flow_deviation, r.residual + c.tolerances["lift_flow_factor"] * r.flow_dt,
          Relation::kAtMost, "dt = " + fmt(r.flow_dt)});
  return rb.finish();
}

}  // namespace symflag
