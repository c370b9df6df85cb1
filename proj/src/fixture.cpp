#include "symflag/fixture.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace symflag {

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  fail(ErrorKind::kSchema, path.empty() ? what : path + ": " + what);
}

const Json& member(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) schema(path, "missing \"" + key + "\"");
  return j.at(key);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) schema(path, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) schema(path, "expected an integer");
  return j.get<int>();
}

Vec vector_of(const Json& j, int dim, const std::string& path) {
  if (!j.is_array() || (dim >= 0 && static_cast<int>(j.size()) != dim))
    schema(path, "expected an array of " + std::to_string(dim) + " numbers");
  Vec v(j.size());
  for (std::size_t a = 0; a < j.size(); ++a) v[a] = number(j[a], path + "[" + std::to_string(a) + "]");
  return v;
}

std::vector<std::string> coordinate_names(int dim) {
  std::vector<std::string> out;
  for (int a = 0; a < dim; ++a) out.push_back(coordinate_name(a));
  return out;
}

std::vector<std::string> param_names(int dim) {
  static const char* names[] = {"u", "v", "w"};
  std::vector<std::string> out;
  for (int a = 0; a < dim && a < 3; ++a) out.push_back(names[a]);
  return out;
}

class ExpressionParser {
 public:
  ExpressionParser(const std::string& text, const std::vector<std::string>& vars, const Vec& wave)
      : text_(text), vars_(vars), wave_(wave) {}

  TrigFunction parse() {
    TrigFunction f(static_cast<int>(vars_.size()));
    skip();
    if (pos_ == text_.size()) error("empty expression");
    bool first = true;
    while (pos_ < text_.size()) {
      double sign = 1.0;
      if (peek('+')) {
        ++pos_;
      } else if (peek('-')) {
        ++pos_;
        sign = -1.0;
      } else if (!first) {
        error("expected + or -");
      }
      f = f + term() * sign;
      first = false;
      skip();
    }
    return f;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) error(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::kSchema, "expression \"" + text_ + "\" at offset " + std::to_string(pos_) + ": " + what);
  }

  std::optional<double> maybe_number() {
    skip();
    if (pos_ >= text_.size()) return std::nullopt;
    const char c = text_[pos_];
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return std::nullopt;
    std::size_t used = 0;
    const double v = std::stod(text_.substr(pos_), &used);
    pos_ += used;
    return v;
  }

  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) error("expected a name");
    return text_.substr(start, pos_ - start);
  }

  int variable(const std::string& name) const {
    for (std::size_t a = 0; a < vars_.size(); ++a)
      if (vars_[a] == name) return static_cast<int>(a);
    std::string known;
    for (const auto& v : vars_) known += (known.empty() ? "" : ", ") + v;
    fail(ErrorKind::kSchema, "expression \"" + text_ + "\": undefined coordinate \"" + name + "\" (known: " + known + ")");
  }

  TrigFunction term() {
    const int n = static_cast<int>(vars_.size());
    double coef = 1.0;
    if (auto c = maybe_number()) {
      if (!peek('*')) return TrigFunction::constant(n, *c);
      ++pos_;
      coef = *c;
    }
    const std::string name = identifier();
    if (name == "cos" || name == "sin") {
      expect('(');
      const Vec k = linear_combination();
      expect(')');
      return (name == "cos" ? TrigFunction::cosine(k) : TrigFunction::sine(k)) * coef;
    }
    return TrigFunction::coordinate(n, variable(name)) * coef;
  }

  Vec linear_combination() {
    Vec k = Vec::Zero(static_cast<int>(vars_.size()));
    bool first = true;
    while (!peek(')')) {
      int sign = 1;
      if (peek('+')) {
        ++pos_;
      } else if (peek('-')) {
        ++pos_;
        sign = -1;
      } else if (!first) {
        error("expected + or -");
      }
      int m = 1;
      if (auto c = maybe_number()) {
        if (*c != std::floor(*c)) error("frequencies must be integers");
        m = static_cast<int>(*c);
        expect('*');
      }
      const int a = variable(identifier());
      k[a] += sign * m * wave_[a];
      first = false;
      if (pos_ >= text_.size()) error("unterminated argument");
    }
    if (first) error("empty argument");
    return k;
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::vector<std::string> vars_;
  Vec wave_;
};

TrigFunction function_from(const Json& j, const std::vector<std::string>& vars, const Vec& wave,
                           const std::string& path) {
  const int n = static_cast<int>(vars.size());
  if (j.is_string()) return parse_expression(j.get<std::string>(), vars, wave);
  if (j.is_number()) return TrigFunction::constant(n, j.get<double>());
  if (!j.is_object()) schema(path, "expected an expression string or coefficient table");
  TrigFunction f(n);
  if (j.contains("constant")) f.add_constant(number(j["constant"], path + ".constant"));
  if (j.contains("linear")) {
    const Vec lin = vector_of(j["linear"], n, path + ".linear");
    for (int a = 0; a < n; ++a) f.add_linear(a, lin[a]);
  }
  if (j.contains("terms")) {
    const Json& terms = j["terms"];
    if (!terms.is_array()) schema(path + ".terms", "expected an array");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string tp = path + ".terms[" + std::to_string(t) + "]";
      const Json& k = member(terms[t], "k", tp);
      if (!k.is_array() || static_cast<int>(k.size()) != n) schema(tp + ".k", "expected " + std::to_string(n) + " integers");
      Vec kv(n);
      for (int a = 0; a < n; ++a) kv[a] = integer(k[a], tp + ".k") * wave[a];
      const double c = terms[t].contains("cos") ? number(terms[t]["cos"], tp + ".cos") : 0.0;
      const double s = terms[t].contains("sin") ? number(terms[t]["sin"], tp + ".sin") : 0.0;
      f.add_term(kv, c, s);
    }
  }
  return f;
}

Mat matrix_of(const Json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) schema(path, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  Mat m(n, n);
  for (int r = 0; r < n; ++r) m.row(r) = vector_of(j[r], n, path + "[" + std::to_string(r) + "]").transpose();
  return m;
}

AmbientSpace parse_ambient(const Json& j) {
  const std::string path = "ambient";
  const Json& type = member(j, "type", path);
  const int n = integer(member(j, "dim", path), path + ".dim");
  if (n < 2 || n % 2 != 0 || n > kMaxDim) schema(path + ".dim", "must be even, between 2 and " + std::to_string(kMaxDim));
  const Mat omega = j.contains("omega") ? matrix_of(j["omega"], n, path + ".omega") : AmbientSpace::darboux(n);
  if (!(omega + omega.transpose()).isZero(0.0)) schema(path + ".omega", "must be antisymmetric");
  if (std::abs(omega.determinant()) < 1e-12) schema(path + ".omega", "must be nondegenerate");
  if (type == "euclidean") return AmbientSpace::euclidean(omega);
  if (type == "torus") {
    const Vec periods = vector_of(member(j, "periods", path), n, path + ".periods");
    for (int a = 0; a < n; ++a)
      if (!(periods[a] > 0.0)) schema(path + ".periods", "periods must be positive");
    return AmbientSpace::torus(periods, omega);
  }
  schema(path + ".type", "expected \"euclidean\" or \"torus\"");
}

std::vector<std::array<int, 3>> cells_of(const Json& j, int dim, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array of cells");
  std::vector<std::array<int, 3>> cells;
  for (std::size_t c = 0; c < j.size(); ++c) {
    const std::string cp = path + "[" + std::to_string(c) + "]";
    if (!j[c].is_array() || static_cast<int>(j[c].size()) != dim + 1)
      schema(cp, "expected " + std::to_string(dim + 1) + " vertex indices");
    std::array<int, 3> cell{0, 0, 0};
    for (int k = 0; k <= dim; ++k) cell[k] = integer(j[c][k], cp);
    cells.push_back(cell);
  }
  return cells;
}

std::vector<int> signs_of(const Json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array of signs");
  std::vector<int> out;
  for (const auto& s : j) out.push_back(integer(s, path));
  return out;
}

void parse_config(const Json& j, const AmbientSpace& space, FixtureConfig& c) {
  const std::string p = "config";
  if (!j.is_object()) schema(p, "expected an object");
  if (j.contains("quadrature_order")) {
    c.quadrature_order = integer(j["quadrature_order"], p + ".quadrature_order");
    if (c.quadrature_order < 1 || c.quadrature_order > kMaxTriangleOrder)
      schema(p + ".quadrature_order", "must be between 1 and " + std::to_string(kMaxTriangleOrder));
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) schema(p + ".seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("rng") && j["rng"] != Rng::kName) schema(p + ".rng", std::string("only ") + Rng::kName + " is supported");
  if (j.contains("freq_cap")) c.freq_cap = integer(j["freq_cap"], p + ".freq_cap");
  if (j.contains("step")) c.step = number(j["step"], p + ".step");
  if (j.contains("thresholds")) {
    const Json& t = j["thresholds"];
    if (t.contains("min_separation")) c.thresholds.min_separation = number(t["min_separation"], p + ".thresholds.min_separation");
    if (t.contains("min_area")) c.thresholds.min_area = number(t["min_area"], p + ".thresholds.min_area");
    if (t.contains("symplectic")) c.symplectic_threshold = number(t["symplectic"], p + ".thresholds.symplectic");
  }
  if (j.contains("lift")) {
    const Json& l = j["lift"];
    if (l.contains("tikhonov")) c.lift.tikhonov = number(l["tikhonov"], p + ".lift.tikhonov");
    if (l.contains("level_freq_cap")) c.lift.level_freq_cap = integer(l["level_freq_cap"], p + ".lift.level_freq_cap");
    if (l.contains("radius") && !l["radius"].is_null()) c.lift.radius = number(l["radius"], p + ".lift.radius");
    if (l.contains("include_linear")) {
      if (!l["include_linear"].is_boolean()) schema(p + ".lift.include_linear", "expected a boolean");
      c.lift_linear = l["include_linear"].get<bool>();
    }
    if (l.contains("flow_dt")) c.lift.flow_dt = number(l["flow_dt"], p + ".lift.flow_dt");
  }
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) schema(p + ".tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      c.tolerances[it.key()];  // rejects unknown names
      c.tolerances.set(it.key(), number(it.value(), p + ".tolerances." + it.key()));
    }
  }
  if (j.contains("sweeps")) {
    const Json& s = j["sweeps"];
    if (s.contains("kks_pairs")) c.kks_pairs = integer(s["kks_pairs"], p + ".sweeps.kks_pairs");
    if (s.contains("equivariance_pairs")) c.equivariance_pairs = integer(s["equivariance_pairs"], p + ".sweeps.equivariance_pairs");
    if (s.contains("frame_size")) c.frame_size = integer(s["frame_size"], p + ".sweeps.frame_size");
  }
  if (j.contains("stokes")) {
    const Json& s = j["stokes"];
    if (s.contains("order")) c.stokes_order = integer(s["order"], p + ".stokes.order");
    if (s.contains("resolutions"))
      for (const auto& r : s["resolutions"]) c.stokes_resolutions.push_back(integer(r, p + ".stokes.resolutions"));
  }
  (void)space;
}

TrigForm parse_form(const Json& j, const AmbientSpace& space, const std::string& path) {
  const int n = space.dim();
  const int degree = integer(member(j, "degree", path), path + ".degree");
  if (degree < 0 || degree > n) schema(path + ".degree", "out of range");
  TrigForm form(n, degree);
  const Json& comps = member(j, "components", path);
  if (!comps.is_array()) schema(path + ".components", "expected an array");
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::string cp = path + ".components[" + std::to_string(c) + "]";
    const Json& idx = member(comps[c], "indices", cp);
    IndexSet set;
    for (const auto& a : idx) {
      const int axis = integer(a, cp + ".indices");
      if (axis < 0 || axis >= n) schema(cp + ".indices", "coordinate index out of range");
      set.push_back(axis);
    }
    if (static_cast<int>(set.size()) != degree) schema(cp + ".indices", "expected " + std::to_string(degree) + " indices");
    form.add_component(set, function_from(member(comps[c], "f", cp), coordinate_names(n), space.wavenumbers(), cp + ".f"));
  }
  return form;
}

TangentSpec parse_tangent(const Json& j, const AmbientSpace& space, int depth, const std::string& path) {
  const int n = space.dim();
  TangentSpec spec;
  if (j.is_string()) {
    spec.hamiltonian = parse_function(j, space);
    return spec;
  }
  if (j.contains("hamiltonian")) {
    spec.hamiltonian = function_from(j["hamiltonian"], coordinate_names(n), space.wavenumbers(), path + ".hamiltonian");
    return spec;
  }
  const Json& levels = member(j, "levels", path);
  if (!levels.is_array() || static_cast<int>(levels.size()) != depth)
    schema(path + ".levels", "expected one entry per level (" + std::to_string(depth) + ")");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string lp = path + ".levels[" + std::to_string(i) + "]";
    TangentSpec::Level level;
    if (levels[i].contains("field")) {
      const Json& field = levels[i]["field"];
      if (!field.is_array() || static_cast<int>(field.size()) != n) schema(lp + ".field", "expected " + std::to_string(n) + " components");
      TrigVectorField components;
      for (int a = 0; a < n; ++a)
        components.push_back(function_from(field[a], coordinate_names(n), space.wavenumbers(), lp + ".field"));
      level.field = components;
    }
    if (levels[i].contains("offsets")) {
      const Json& offsets = levels[i]["offsets"];
      if (!offsets.is_array()) schema(lp + ".offsets", "expected an array of vectors");
      for (std::size_t v = 0; v < offsets.size(); ++v)
        level.offsets.push_back(vector_of(offsets[v], n, lp + ".offsets[" + std::to_string(v) + "]"));
    }
    spec.levels.push_back(level);
  }
  return spec;
}

FlagData parse_flag(const Json& root, Fixture* meta, std::optional<std::array<int, 2>>& grid) {
  FlagData d;
  d.ambient = parse_ambient(member(root, "ambient", ""));
  const int n = d.ambient.dim();
  if (root.contains("symplectic")) {
    if (!root["symplectic"].is_boolean()) schema("symplectic", "expected a boolean");
    d.symplectic = root["symplectic"].get<bool>();
  }
  const Json& mj = member(root, "mesh", "");
  const int top_dim = integer(member(mj, "dim", "mesh"), "mesh.dim");
  if (top_dim < 0 || top_dim > 2) schema("mesh.dim", "must be 0, 1 or 2");
  Mesh top;
  top.dim = top_dim;
  if (mj.contains("chart")) {
    const Json& cj = mj["chart"];
    Chart chart;
    if (cj.contains("param_periods")) chart.param_periods = vector_of(cj["param_periods"], top_dim, "mesh.chart.param_periods");
    Vec wave = Vec::Ones(top_dim);
    for (int a = 0; a < chart.param_periods.size(); ++a) wave[a] = 2.0 * M_PI / chart.param_periods[a];
    const Json& comps = member(cj, "components", "mesh.chart");
    if (!comps.is_array() || static_cast<int>(comps.size()) != n) schema("mesh.chart.components", "expected " + std::to_string(n) + " components");
    for (int a = 0; a < n; ++a)
      chart.components.push_back(function_from(comps[a], param_names(top_dim), wave, "mesh.chart.components"));
    d.chart = chart;
  }
  if (mj.contains("grid")) {
    if (top_dim != 2 || !d.chart || !d.chart->periodic()) schema("mesh.grid", "needs a 2-dimensional periodic chart");
    const Json& g = mj["grid"];
    if (!g.is_array() || g.size() != 2) schema("mesh.grid", "expected [nu, nv]");
    const int nu = integer(g[0], "mesh.grid"), nv = integer(g[1], "mesh.grid");
    if (nu < 3 || nv < 3) schema("mesh.grid", "resolution must be at least 3");
    grid = std::array<int, 2>{nu, nv};
    top = periodic_grid(nu, nv);
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nv; ++j) {
        Vec u(2);
        u << i * d.chart->param_periods[0] / nu, j * d.chart->param_periods[1] / nv;
        d.params.push_back(u);
        d.positions.push_back(d.ambient.wrap(d.chart->eval(u)));
      }
  } else {
    const Json& verts = member(mj, "vertices", "mesh");
    if (!verts.is_array()) schema("mesh.vertices", "expected an array");
    for (std::size_t v = 0; v < verts.size(); ++v)
      d.positions.push_back(d.ambient.wrap(vector_of(verts[v], n, "mesh.vertices[" + std::to_string(v) + "]")));
    top.vertex_count = static_cast<int>(d.positions.size());
    if (top_dim == 0 && !mj.contains("cells")) {
      for (int v = 0; v < top.vertex_count; ++v) top.cells.push_back({v, 0, 0});
    } else {
      top.cells = cells_of(member(mj, "cells", "mesh"), top_dim, "mesh.cells");
    }
    if (mj.contains("params")) {
      const Json& params = mj["params"];
      if (!params.is_array()) schema("mesh.params", "expected an array");
      for (std::size_t v = 0; v < params.size(); ++v)
        d.params.push_back(vector_of(params[v], top_dim, "mesh.params[" + std::to_string(v) + "]"));
    }
  }
  std::vector<int> top_signs;
  if (mj.contains("orientation")) top_signs = signs_of(mj["orientation"], "mesh.orientation");

  std::vector<Mesh> lower;
  std::vector<std::vector<int>> signs;
  if (root.contains("submeshes")) {
    const Json& subs = root["submeshes"];
    if (!subs.is_array()) schema("submeshes", "expected an array");
    for (std::size_t i = 0; i < subs.size(); ++i) {
      const std::string sp = "submeshes[" + std::to_string(i) + "]";
      Mesh m;
      m.dim = integer(member(subs[i], "dim", sp), sp + ".dim");
      if (m.dim < 0 || m.dim > 2) schema(sp + ".dim", "must be 0, 1 or 2");
      SubmeshInclusion inc;
      inc.from = static_cast<int>(i);
      const Json& vm = member(subs[i], "vertex_map", sp);
      if (!vm.is_array()) schema(sp + ".vertex_map", "expected an array");
      for (const auto& w : vm) inc.vertex_map.push_back(integer(w, sp + ".vertex_map"));
      m.vertex_count = static_cast<int>(inc.vertex_map.size());
      if (subs[i].contains("cells")) {
        m.cells = cells_of(subs[i]["cells"], m.dim, sp + ".cells");
      } else if (m.dim == 0) {
        for (int v = 0; v < m.vertex_count; ++v) m.cells.push_back({v, 0, 0});
      } else {
        schema(sp, "missing \"cells\"");
      }
      if (subs[i].contains("cell_map"))
        for (const auto& c : subs[i]["cell_map"]) inc.cell_map.push_back(integer(c, sp + ".cell_map"));
      signs.push_back(subs[i].contains("orientation") ? signs_of(subs[i]["orientation"], sp + ".orientation")
                                                      : std::vector<int>{});
      lower.push_back(m);
      d.inclusions.push_back(inc);
    }
  }
  d.levels = lower;
  d.levels.push_back(top);
  signs.push_back(top_signs);
  bool any_sign = false;
  for (const auto& s : signs) any_sign = any_sign || !s.empty();
  if (any_sign) d.orientations = signs;
  (void)meta;
  return d;
}

}  // namespace

Tolerances::Tolerances() {
  values_ = {
      {"moment", 1e-8},
      {"moment_zero", 1e-10},
      {"contraction", 1e-10},
      {"d_identity", 1e-4},
      {"lie_identity", 1e-4},
      {"min_slope", 0.7},
      {"diff_equivariance", 1e-8},
      {"stokes", 1e-6},
      {"stokes_slope", 1.7},
      {"equivariance", 1e-4},
      {"equivariance_point", 1e-6},
      {"hamiltonian_pairing", 1e-4},
      {"kks", 1e-6},
      {"min_singular", 1e-8},
      {"analytic_frame", 1e-8},
      {"antisymmetry", 1e-12},
      {"lift_representable", 1e-10},
      {"lift_mixed", 1e-3},
      {"lift_mode_ratio", 2.0},
      {"lift_flow_factor", 10.0},
      {"extension_normal", 1e-8},
      {"extension_tangency", 1e-8},
      {"flow_conservation", 1e-6},
  };
}

double Tolerances::operator[](const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) fail(ErrorKind::kSchema, "unknown tolerance \"" + name + "\"");
  return it->second;
}

void Tolerances::set(const std::string& name, double value) { values_[name] = value; }

TrigFunction parse_expression(const std::string& text, const std::vector<std::string>& variables,
                              const Vec& wavenumbers) {
  return ExpressionParser(text, variables, wavenumbers).parse();
}

TrigFunction parse_function(const Json& j, const AmbientSpace& space) {
  return function_from(j, coordinate_names(space.dim()), space.wavenumbers(), "function");
}

std::vector<NamedFunction> parse_probe_list(const std::string& text, const AmbientSpace& space, int freq_cap) {
  std::vector<NamedFunction> out;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    std::string item = current;
    current.clear();
    const auto b = item.find_first_not_of(" \t\n");
    if (b == std::string::npos) return;
    item = item.substr(b, item.find_last_not_of(" \t\n") - b + 1);
    if (item == "dict") {
      for (auto& f : HamiltonianDictionary::trig_monomials(space, freq_cap, false, true).basis) out.push_back(f);
      return;
    }
    out.push_back({item, parse_function(Json(item), space)});
  };
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) flush();
    else current += c;
  }
  flush();
  return out;
}

Json function_to_json(const TrigFunction& f, const Vec& wavenumbers) {
  Json j = Json::object();
  const int n = f.dim();
  if (f.constant_term() != 0.0) j["constant"] = f.constant_term();
  if (!f.periodic()) {
    Json lin = Json::array();
    for (int a = 0; a < n; ++a) lin.push_back(f.linear()[a]);
    j["linear"] = lin;
  }
  Json terms = Json::array();
  for (const auto& t : f.terms()) {
    Json k = Json::array();
    for (int a = 0; a < n; ++a) k.push_back(static_cast<int>(std::lround(t.k[a] / wavenumbers[a])));
    Json term = {{"k", k}};
    if (t.c != 0.0) term["cos"] = t.c;
    if (t.s != 0.0) term["sin"] = t.s;
    terms.push_back(term);
  }
  if (!terms.empty()) j["terms"] = terms;
  return j;
}

Json mesh_to_json(const FlagEmbedding& flag) {
  const FlagData& d = flag.data();
  const Mesh& top = d.levels.back();
  Json m;
  m["dim"] = top.dim;
  Json verts = Json::array();
  for (const Vec& x : d.positions) {
    Json v = Json::array();
    for (int a = 0; a < x.size(); ++a) v.push_back(x[a]);
    verts.push_back(v);
  }
  m["vertices"] = verts;
  Json cells = Json::array();
  for (const auto& c : top.cells) {
    Json cj = Json::array();
    for (int k = 0; k < top.arity(); ++k) cj.push_back(c[k]);
    cells.push_back(cj);
  }
  m["cells"] = cells;
  if (d.chart) {
    Json chart;
    Vec wave = Vec::Ones(top.dim);
    if (d.chart->periodic()) {
      Json periods = Json::array();
      for (int a = 0; a < top.dim; ++a) {
        periods.push_back(d.chart->param_periods[a]);
        wave[a] = 2.0 * M_PI / d.chart->param_periods[a];
      }
      chart["param_periods"] = periods;
    }
    Json comps = Json::array();
    for (const auto& c : d.chart->components) comps.push_back(function_to_json(c, wave));
    chart["components"] = comps;
    m["chart"] = chart;
    Json params = Json::array();
    for (const Vec& u : d.params) {
      Json p = Json::array();
      for (int a = 0; a < u.size(); ++a) p.push_back(u[a]);
      params.push_back(p);
    }
    m["params"] = params;
  }
  if (!d.orientations.empty() && !d.orientations.back().empty()) m["orientation"] = d.orientations.back();
  return m;
}

Mesh periodic_grid(int nu, int nv) {
  Mesh m;
  m.dim = 2;
  m.vertex_count = nu * nv;
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + (j + nv) % nv; };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      m.cells.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
      m.cells.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

Json fixture_with_flag(const Fixture& fixture, const FlagEmbedding& flag) {
  Json out = fixture.source;
  const FlagData& a = fixture.flag.data();
  const FlagData& b = flag.data();
  bool same = a.positions.size() == b.positions.size() && a.chart.has_value() == b.chart.has_value();
  for (std::size_t v = 0; same && v < a.positions.size(); ++v) same = a.positions[v] == b.positions[v];
  if (same) return out;
  Json mesh = mesh_to_json(flag);
  if (out["mesh"].contains("orientation") && !mesh.contains("orientation")) mesh["orientation"] = out["mesh"]["orientation"];
  out["mesh"] = mesh;
  return out;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

Fixture parse_fixture(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kSchema, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) schema("", "fixture must be a JSON object");
  std::optional<std::array<int, 2>> grid;
  FlagData data;
  try {
    data = parse_flag(root, nullptr, grid);
  } catch (const Json::exception& e) {
    fail(ErrorKind::kSchema, std::string("malformed fixture: ") + e.what());
  }
  Fixture fx{FlagEmbedding(std::move(data))};
  fx.grid = grid;
  fx.source = root;
  fx.hash = fnv1a_hex(text);
  fx.name = root.contains("name") && root["name"].is_string() ? root["name"].get<std::string>() : "fixture";
  const AmbientSpace& space = fx.flag.ambient();
  const int n = space.dim();
  try {
    if (root.contains("config")) parse_config(root["config"], space, fx.config);
    if (root.contains("functions")) {
      const Json& fns = root["functions"];
      if (!fns.is_object()) schema("functions", "expected an object");
      for (auto it = fns.begin(); it != fns.end(); ++it)
        fx.functions.emplace(it.key(), function_from(it.value(), coordinate_names(n), space.wavenumbers(),
                                                     "functions." + it.key()));
    }
    if (root.contains("probes")) {
      const Json& probes = root["probes"];
      if (!probes.is_array()) schema("probes", "expected an array");
      for (std::size_t p = 0; p < probes.size(); ++p) {
        if (probes[p] == "dict") {
          for (auto& f : parse_probe_list("dict", space, fx.config.freq_cap)) fx.probes.push_back(f);
          continue;
        }
        const std::string name = probes[p].is_string() ? probes[p].get<std::string>() : "probe" + std::to_string(p);
        fx.probes.push_back({name, function_from(probes[p], coordinate_names(n), space.wavenumbers(),
                                                 "probes[" + std::to_string(p) + "]")});
      }
    }
    if (root.contains("tangents")) {
      const Json& ts = root["tangents"];
      if (!ts.is_object()) schema("tangents", "expected an object");
      for (auto it = ts.begin(); it != ts.end(); ++it)
        fx.tangents.emplace(it.key(), parse_tangent(it.value(), space, fx.flag.depth(), "tangents." + it.key()));
    }
    if (root.contains("specs")) {
      const Json& ss = root["specs"];
      if (!ss.is_array()) schema("specs", "expected an array");
      for (std::size_t s = 0; s < ss.size(); ++s) {
        const std::string sp = "specs[" + std::to_string(s) + "]";
        TransgressionSpec spec;
        spec.excess = integer(member(ss[s], "excess", sp), sp + ".excess");
        const Json& forms = member(ss[s], "forms", sp);
        if (!forms.is_array()) schema(sp + ".forms", "expected an array");
        for (std::size_t i = 0; i < forms.size(); ++i)
          spec.forms.push_back(FormField::from_trig(parse_form(forms[i], space, sp + ".forms[" + std::to_string(i) + "]")));
        fx.specs.push_back(spec);
      }
    }
    if (root.contains("analytic_frame")) {
      const Json& af = root["analytic_frame"];
      fx.analytic_frame = AnalyticFrame{vector_of(member(af, "a", "analytic_frame"), n, "analytic_frame.a"),
                                        vector_of(member(af, "b", "analytic_frame"), n, "analytic_frame.b"),
                                        number(member(af, "expected", "analytic_frame"), "analytic_frame.expected")};
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::kSchema, std::string("malformed fixture: ") + e.what());
  }
  for (const auto& spec : fx.specs) {
    try {
      check_spec(spec, fx.flag);
    } catch (const Error& e) {
      fail(ErrorKind::kSchema, std::string("specs: ") + e.what());
    }
  }
  return fx;
}

Fixture load_fixture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kSchema, "cannot read fixture \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_fixture(buf.str());
}

FlagTangent make_tangent(const Fixture& fixture, const TangentSpec& spec) {
  const FlagEmbedding& flag = fixture.flag;
  const AmbientSpace& space = flag.ambient();
  if (spec.hamiltonian)
    return infinitesimal_action(flag, hamiltonian_vector_field(space, FormField::from_trig(*spec.hamiltonian)));
  FlagTangent t = zero_tangent(flag);
  for (int i = 0; i < flag.depth(); ++i) {
    const RealizedLevel& lv = flag.level(i);
    const auto& level = spec.levels.at(i);
    if (!level.offsets.empty() && static_cast<int>(level.offsets.size()) != lv.vertex_count())
      fail(ErrorKind::kSchema, "tangent offsets for level " + std::to_string(i + 1) + " need one vector per vertex");
    std::shared_ptr<const VectorField> field;
    if (level.field) field = std::make_shared<VectorField>(VectorField::from_trig(*level.field));
    for (int v = 0; v < lv.vertex_count(); ++v) {
      Vec x = Vec::Zero(space.dim());
      if (field) x += (*field)(lv.positions[v]);
      if (!level.offsets.empty()) x += level.offsets[v];
      t.values[i][v] = x;
    }
    if (field && level.offsets.empty()) t.generators[i] = field;
  }
  return t;
}

}  // namespace symflag
