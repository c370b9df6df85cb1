#include "symflag/flagmesh.hpp"

#include "symflag/quadrature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace symflag {

Vec Chart::eval(const Vec& u) const {
  Vec x(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) x[i] = components[i].value(u);
  return x;
}

Mat Chart::jacobian(const Vec& u) const {
  Mat j(ambient_dim(), param_dim());
  for (int i = 0; i < ambient_dim(); ++i) j.row(i) = components[i].gradient(u).transpose();
  return j;
}

Vec Chart::second_derivative(const Vec& u, int a, int b) const {
  Vec x(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) x[i] = components[i].hessian(u)(a, b);
  return x;
}

Vec Chart::param_displacement(const Vec& from, const Vec& to) const {
  Vec d = to - from;
  if (!periodic()) return d;
  for (int i = 0; i < d.size(); ++i) d[i] -= param_periods[i] * std::round(d[i] / param_periods[i]);
  return d;
}

Vec Chart::wrap_param(const Vec& u) const {
  if (!periodic()) return u;
  Vec w = u;
  for (int i = 0; i < w.size(); ++i) {
    w[i] = std::fmod(w[i], param_periods[i]);
    if (w[i] < 0.0) w[i] += param_periods[i];
    if (w[i] >= param_periods[i]) w[i] = 0.0;
  }
  return w;
}

Vec RealizedLevel::normal_part(int v, const Vec& w) const {
  const Mat& q = tangent[v];
  if (q.cols() == 0) return w;
  return w - q * (q.transpose() * w);
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Components labelled in order of their smallest vertex.
std::vector<int> label_components(const Mesh& mesh, int& count) {
  UnionFind uf(mesh.vertex_count);
  for (const auto& c : mesh.cells)
    for (int k = 1; k < mesh.arity(); ++k) uf.unite(c[0], c[k]);
  std::vector<int> label(mesh.vertex_count, -1);
  std::vector<int> root_label(mesh.vertex_count, -1);
  count = 0;
  for (int v = 0; v < mesh.vertex_count; ++v) {
    const int r = uf.find(v);
    if (root_label[r] < 0) root_label[r] = count++;
    label[v] = root_label[r];
  }
  return label;
}

std::string at_level(int level, const std::string& what) {
  return "level " + std::to_string(level + 1) + ": " + what;
}

// Index of a higher-level cell containing every vertex of `verts`, or -1.
int find_supporting_cell(const Mesh& upper, const std::vector<std::vector<int>>& cells_of_vertex,
                         const std::vector<int>& verts) {
  if (verts.empty() || verts[0] < 0 || verts[0] >= upper.vertex_count) return -1;
  for (int c : cells_of_vertex[verts[0]]) {
    const auto& cell = upper.cells[c];
    bool all = true;
    for (int v : verts) all = all && std::find(cell.begin(), cell.begin() + upper.arity(), v) != cell.begin() + upper.arity();
    if (all) return c;
  }
  return -1;
}

std::vector<std::vector<int>> cells_of_vertices(const Mesh& mesh) {
  std::vector<std::vector<int>> out(mesh.vertex_count);
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c)
    for (int k = 0; k < mesh.arity(); ++k) {
      const int v = mesh.cells[c][k];
      if (v >= 0 && v < mesh.vertex_count) out[v].push_back(c);
    }
  return out;
}

std::vector<std::string> check_structure(const FlagData& d) {
  std::vector<std::string> errors;
  const int depth = static_cast<int>(d.levels.size());
  const int n = d.ambient.dim();
  if (depth == 0) {
    errors.push_back("flag has no levels");
    return errors;
  }
  for (int i = 0; i < depth; ++i) {
    const Mesh& m = d.levels[i];
    if (m.dim < 0 || m.dim > 2) errors.push_back(at_level(i, "intrinsic dimension must be 0, 1 or 2"));
    if (m.dim >= n) errors.push_back(at_level(i, "intrinsic dimension must be below the ambient dimension"));
    if (i > 0 && m.dim <= d.levels[i - 1].dim) errors.push_back(at_level(i, "level dimensions must increase strictly"));
    if (m.vertex_count <= 0) errors.push_back(at_level(i, "level has no vertices"));
    if (m.cells.empty()) errors.push_back(at_level(i, "level has no cells"));
    for (std::size_t c = 0; c < m.cells.size() && m.dim >= 0 && m.dim <= 2; ++c) {
      for (int k = 0; k < m.arity(); ++k) {
        const int v = m.cells[c][k];
        if (v < 0 || v >= m.vertex_count) {
          errors.push_back(at_level(i, "cell " + std::to_string(c) + " has a vertex index out of range"));
          break;
        }
        for (int l = 0; l < k; ++l)
          if (m.cells[c][l] == v) errors.push_back(at_level(i, "cell " + std::to_string(c) + " repeats a vertex"));
      }
    }
  }
  if (!errors.empty()) return errors;

  const Mesh& top = d.levels.back();
  if (static_cast<int>(d.positions.size()) != top.vertex_count) {
    errors.push_back("top level needs one position per vertex");
  } else {
    for (const Vec& x : d.positions)
      if (x.size() != n || !x.allFinite()) {
        errors.push_back("top positions must be finite ambient points");
        break;
      }
  }
  if (d.chart) {
    if (d.chart->ambient_dim() != n) errors.push_back("chart must have one component per ambient coordinate");
    if (d.chart->param_dim() != top.dim) errors.push_back("chart parameter dimension must match the top level");
    if (static_cast<int>(d.params.size()) != top.vertex_count) errors.push_back("chart needs parameters for every top vertex");
  }

  if (static_cast<int>(d.inclusions.size()) != depth - 1) {
    errors.push_back("expected " + std::to_string(depth - 1) + " inclusions");
    return errors;
  }
  for (int i = 0; i + 1 < depth; ++i) {
    const SubmeshInclusion& inc = d.inclusions[i];
    const Mesh& lower = d.levels[i];
    const Mesh& upper = d.levels[i + 1];
    if (inc.from != i) errors.push_back(at_level(i, "inclusion is attached to the wrong level"));
    if (static_cast<int>(inc.vertex_map.size()) != lower.vertex_count) {
      errors.push_back(at_level(i, "vertex_map must have one entry per vertex"));
      continue;
    }
    std::set<int> seen;
    bool in_range = true;
    for (int w : inc.vertex_map) {
      if (w < 0 || w >= upper.vertex_count) {
        in_range = false;
        errors.push_back(at_level(i, "vertex_map entry out of range"));
        break;
      }
      if (!seen.insert(w).second) {
        errors.push_back(at_level(i, "vertex_map is not injective"));
        break;
      }
    }
    if (!in_range) continue;
    const auto upper_cells = cells_of_vertices(upper);
    if (!inc.cell_map.empty() && inc.cell_map.size() != lower.cells.size()) {
      errors.push_back(at_level(i, "cell_map must have one entry per cell"));
      continue;
    }
    for (std::size_t c = 0; c < lower.cells.size(); ++c) {
      std::vector<int> verts;
      for (int k = 0; k < lower.arity(); ++k) verts.push_back(inc.vertex_map[lower.cells[c][k]]);
      if (!inc.cell_map.empty()) {
        const int s = inc.cell_map[c];
        bool ok = s >= 0 && s < static_cast<int>(upper.cells.size());
        for (int v : verts)
          ok = ok && std::find(upper.cells[s].begin(), upper.cells[s].begin() + upper.arity(), v) !=
                         upper.cells[s].begin() + upper.arity();
        if (!ok) {
          errors.push_back(at_level(i, "cell " + std::to_string(c) + " is not a face of its mapped cell"));
          break;
        }
      } else if (find_supporting_cell(upper, upper_cells, verts) < 0) {
        errors.push_back(at_level(i, "cell " + std::to_string(c) + " is not a face of any level " +
                                         std::to_string(i + 2) + " cell"));
        break;
      }
    }
  }
  if (!d.orientations.empty() && static_cast<int>(d.orientations.size()) != depth)
    errors.push_back("orientations must list every level");
  for (std::size_t i = 0; i < d.orientations.size() && i < d.levels.size(); ++i) {
    const auto& signs = d.orientations[i];
    if (signs.empty()) continue;
    int count = 0;
    label_components(d.levels[i], count);
    if (static_cast<int>(signs.size()) != count)
      errors.push_back(at_level(static_cast<int>(i), "expected " + std::to_string(count) + " orientation signs"));
    for (int s : signs)
      if (s != 1 && s != -1) errors.push_back(at_level(static_cast<int>(i), "orientation signs must be +1 or -1"));
  }
  return errors;
}

std::vector<RealizedLevel> realize_all(const FlagData& d) {
  const int depth = static_cast<int>(d.levels.size());
  const AmbientSpace& space = d.ambient;
  const int n = space.dim();
  std::vector<RealizedLevel> out(depth);
  for (int i = depth - 1; i >= 0; --i) {
    const Mesh& m = d.levels[i];
    RealizedLevel& lv = out[i];
    lv.index = i;
    lv.dim = m.dim;
    lv.cells = m.cells;
    lv.top_index.resize(m.vertex_count);
    for (int v = 0; v < m.vertex_count; ++v)
      lv.top_index[v] = (i == depth - 1) ? v : out[i + 1].top_index[d.inclusions[i].vertex_map[v]];
    lv.positions.resize(m.vertex_count);
    for (int v = 0; v < m.vertex_count; ++v) lv.positions[v] = space.wrap(d.positions[lv.top_index[v]]);
    lv.vertex_component = label_components(m, lv.component_count);
    lv.cell_component.resize(m.cells.size());
    for (std::size_t c = 0; c < m.cells.size(); ++c) lv.cell_component[c] = lv.vertex_component[m.cells[c][0]];
    lv.component_sign.assign(lv.component_count, 1);
    if (i < static_cast<int>(d.orientations.size()) && !d.orientations[i].empty())
      lv.component_sign = d.orientations[i];

    lv.tangent.assign(m.vertex_count, Mat(n, 0));
    lv.edge_scale.assign(m.vertex_count, 0.0);
    if (m.dim == 0) continue;
    std::vector<std::vector<Vec>> incident(m.vertex_count);
    for (const auto& c : m.cells)
      for (int a = 0; a < m.arity(); ++a)
        for (int b = 0; b < m.arity(); ++b)
          if (a != b) incident[c[a]].push_back(space.displacement(lv.positions[c[a]], lv.positions[c[b]]));
    for (int v = 0; v < m.vertex_count; ++v) {
      const auto& edges = incident[v];
      if (edges.empty()) continue;
      Eigen::MatrixXd e(n, edges.size());
      double total = 0.0;
      for (std::size_t k = 0; k < edges.size(); ++k) {
        e.col(k) = edges[k];
        total += edges[k].norm();
      }
      lv.edge_scale[v] = total / static_cast<double>(edges.size());
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeThinU);
      const int d_eff = std::min<int>(m.dim, static_cast<int>(svd.matrixU().cols()));
      lv.tangent[v] = svd.matrixU().leftCols(d_eff);
    }
  }
  return out;
}

}  // namespace

struct FlagEmbedding::Cache {
  std::once_flag structure_once;
  std::vector<std::string> errors;
  std::once_flag levels_once;
  std::vector<RealizedLevel> levels;
};

FlagEmbedding::FlagEmbedding(FlagData data)
    : data_(std::make_shared<const FlagData>(std::move(data))), cache_(std::make_shared<Cache>()) {}

const std::vector<std::string>& FlagEmbedding::structure_errors() const {
  std::call_once(cache_->structure_once, [this] { cache_->errors = check_structure(*data_); });
  return cache_->errors;
}

const RealizedLevel& FlagEmbedding::level(int i) const {
  if (i < 0 || i >= depth())
    fail(ErrorKind::kInvalidArgument, "level index " + std::to_string(i) + " out of range");
  const auto& errors = structure_errors();
  if (!errors.empty()) fail(ErrorKind::kInvalidArgument, "flag is structurally invalid: " + errors.front());
  std::call_once(cache_->levels_once, [this] { cache_->levels = realize_all(*data_); });
  return cache_->levels[i];
}

FlagEmbedding FlagEmbedding::with_positions(std::vector<Vec> positions) const {
  FlagData d = *data_;
  d.positions = std::move(positions);
  return FlagEmbedding(std::move(d));
}

FlagEmbedding FlagEmbedding::with_orientations(std::vector<std::vector<int>> orientations) const {
  FlagData d = *data_;
  d.orientations = std::move(orientations);
  return FlagEmbedding(std::move(d));
}

const RealizedLevel& realize_level(const FlagEmbedding& flag, int i) { return flag.level(i); }

namespace {

void check_closed(const FlagEmbedding& flag, int i, std::vector<Violation>& out) {
  const Mesh& m = flag.mesh(i);
  if (m.dim == 1) {
    std::vector<int> heads(m.vertex_count, 0), tails(m.vertex_count, 0);
    for (const auto& c : m.cells) {
      ++tails[c[0]];
      ++heads[c[1]];
    }
    for (int v = 0; v < m.vertex_count; ++v)
      if (heads[v] != 1 || tails[v] != 1) {
        out.push_back({"closedness", i, at_level(i, "vertex " + std::to_string(v) +
                                                         " is not interior to a consistently oriented closed curve")});
        return;
      }
  } else if (m.dim == 2) {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& c : m.cells)
      for (int k = 0; k < 3; ++k) ++directed[{c[k], c[(k + 1) % 3]}];
    for (const auto& [edge, count] : directed) {
      auto rev = directed.find({edge.second, edge.first});
      if (count != 1 || rev == directed.end() || rev->second != 1) {
        out.push_back({"closedness", i, at_level(i, "edge (" + std::to_string(edge.first) + ", " +
                                                         std::to_string(edge.second) +
                                                         ") is not shared by exactly two oppositely oriented cells")});
        return;
      }
    }
  }
}

double cell_measure(const AmbientSpace& space, const RealizedLevel& lv, int c) {
  const auto& cell = lv.cells[c];
  if (lv.dim == 0) return 1.0;
  const Vec e1 = space.displacement(lv.positions[cell[0]], lv.positions[cell[1]]);
  if (lv.dim == 1) return e1.norm();
  const Vec e2 = space.displacement(lv.positions[cell[0]], lv.positions[cell[2]]);
  const double g = e1.squaredNorm() * e2.squaredNorm() - std::pow(e1.dot(e2), 2);
  return 0.5 * std::sqrt(std::max(0.0, g));
}

void check_regularity(const FlagEmbedding& flag, const Thresholds& t, std::vector<Violation>& out) {
  const AmbientSpace& space = flag.ambient();
  const RealizedLevel& lv = flag.level(flag.top());
  int degenerate = 0;
  for (int c = 0; c < lv.cell_count(); ++c)
    if (lv.dim > 0 && cell_measure(space, lv, c) <= t.min_area) ++degenerate;
  if (degenerate > 0)
    out.push_back({"regularity", flag.top(),
                   at_level(flag.top(), std::to_string(degenerate) + " degenerate cells (measure <= " +
                                            std::to_string(t.min_area) + ")")});

  // Bucket grid with cell size min_separation; torus axes wrap.
  const int n = space.dim();
  const double h = std::max(t.min_separation, 1e-300);
  std::vector<long long> counts(n, 0);
  for (int a = 0; a < n; ++a)
    counts[a] = space.is_torus() ? std::max<long long>(1, static_cast<long long>(std::floor(space.periods()[a] / h))) : 0;
  auto key_of = [&](const Vec& x) {
    std::vector<long long> k(n);
    for (int a = 0; a < n; ++a) {
      k[a] = static_cast<long long>(std::floor(x[a] / h));
      if (counts[a] > 0) k[a] = ((k[a] % counts[a]) + counts[a]) % counts[a];
    }
    return k;
  };
  std::map<std::vector<long long>, std::vector<int>> buckets;
  for (int v = 0; v < lv.vertex_count(); ++v) buckets[key_of(lv.positions[v])].push_back(v);
  std::set<std::pair<int, int>> adjacent;
  for (const auto& c : lv.cells)
    for (int a = 0; a < lv.dim + 1; ++a)
      for (int b = 0; b < lv.dim + 1; ++b) adjacent.insert({c[a], c[b]});
  int close_pairs = 0;
  std::pair<int, int> example{-1, -1};
  for (int v = 0; v < lv.vertex_count(); ++v) {
    const auto base = key_of(lv.positions[v]);
    int offsets = 1;
    for (int a = 0; a < n; ++a) offsets *= 3;
    std::set<std::vector<long long>> visited;
    for (int o = 0; o < offsets; ++o) {
      auto k = base;
      int code = o;
      for (int a = 0; a < n; ++a) {
        k[a] += code % 3 - 1;
        code /= 3;
        if (counts[a] > 0) k[a] = ((k[a] % counts[a]) + counts[a]) % counts[a];
      }
      if (!visited.insert(k).second) continue;
      auto it = buckets.find(k);
      if (it == buckets.end()) continue;
      for (int w : it->second) {
        if (w <= v || adjacent.count({v, w})) continue;
        if (space.distance(lv.positions[v], lv.positions[w]) < t.min_separation) {
          if (close_pairs++ == 0) example = {v, w};
        }
      }
    }
  }
  if (close_pairs > 0)
    out.push_back({"regularity", flag.top(),
                   at_level(flag.top(), std::to_string(close_pairs) +
                                            " non-adjacent vertex pairs closer than " +
                                            std::to_string(t.min_separation) + ", e.g. vertices " +
                                            std::to_string(example.first) + " and " + std::to_string(example.second))});
}

}  // namespace

ValidationReport validate_flag(const FlagEmbedding& flag, const Thresholds& thresholds) {
  ValidationReport report;
  for (const auto& e : flag.structure_errors()) report.violations.push_back({"structure", -1, e});
  if (!report.ok()) return report;
  for (int i = 0; i < flag.depth(); ++i) {
    check_closed(flag, i, report.violations);
    if (flag.symplectic() && flag.mesh(i).dim % 2 != 0)
      report.violations.push_back({"symplectic", i, at_level(i, "symplectic mode requires even-dimensional levels")});
  }
  check_regularity(flag, thresholds, report.violations);
  return report;
}

void for_each_node(const FlagEmbedding& flag, int i, int order, const std::function<void(const CellNode&)>& visit) {
  const RealizedLevel& lv = flag.level(i);
  const AmbientSpace& space = flag.ambient();
  CellNode node;
  if (lv.dim == 0) {
    for (int c = 0; c < lv.cell_count(); ++c) {
      node.cell = c;
      node.point = lv.positions[lv.cells[c][0]];
      node.weight = lv.cell_sign(c);
      visit(node);
    }
    return;
  }
  const QuadratureRule& rule = lv.dim == 1 ? segment_rule(order) : triangle_rule(order);
  for (int c = 0; c < lv.cell_count(); ++c) {
    const auto& cell = lv.cells[c];
    const Vec& x0 = lv.positions[cell[0]];
    node.cell = c;
    node.edges[0] = space.displacement(x0, lv.positions[cell[1]]);
    if (lv.dim == 2) node.edges[1] = space.displacement(x0, lv.positions[cell[2]]);
    const int sign = lv.cell_sign(c);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double s = rule.nodes[q][0];
      const double t = lv.dim == 2 ? rule.nodes[q][1] : 0.0;
      node.point = x0 + s * node.edges[0];
      if (lv.dim == 2) node.point += t * node.edges[1];
      node.bary = {1.0 - s - t, s, t};
      node.weight = sign * rule.weights[q];
      visit(node);
    }
  }
}

double integrate_nodes(const FlagEmbedding& flag, int i, int order,
                       const std::function<double(const CellNode&)>& kernel) {
  double total = 0.0;
  for_each_node(flag, i, order, [&](const CellNode& node) { total += node.weight * kernel(node); });
  return total;
}

double integrate_over_level(const FlagEmbedding& flag, int i, const FormField& form, int order) {
  const RealizedLevel& lv = flag.level(i);
  if (form.degree() != lv.dim)
    fail(ErrorKind::kInvalidArgument, "form degree " + std::to_string(form.degree()) +
                                          " does not match level dimension " + std::to_string(lv.dim));
  const int k = lv.dim;
  return integrate_nodes(flag, i, order, [&](const CellNode& node) {
    return form(node.point, std::span<const Vec>(node.edges.data(), k));
  });
}

Vec FlagTangent::at(const FlagEmbedding& flag, int i, const CellNode& node) const {
  if (mode != Mode::kFull) fail(ErrorKind::kInvalidArgument, "split tangents must be joined before evaluation");
  if (i < static_cast<int>(generators.size()) && generators[i]) return (*generators[i])(node.point);
  const RealizedLevel& lv = flag.level(i);
  const auto& cell = lv.cells[node.cell];
  const auto& vals = values.at(i);
  Vec out = node.bary[0] * vals[cell[0]];
  for (int k = 1; k <= lv.dim; ++k) out += node.bary[k] * vals[cell[k]];
  return out;
}

Vec FlagTangent::at_image(const FlagEmbedding& flag, int i, const CellNode& node, const Vec& image) const {
  if (i < static_cast<int>(generators.size()) && generators[i]) return (*generators[i])(image);
  return at(flag, i, node);
}

FlagTangent zero_tangent(const FlagEmbedding& flag) {
  FlagTangent t;
  const int n = flag.ambient().dim();
  for (int i = 0; i < flag.depth(); ++i) t.values.emplace_back(flag.level(i).vertex_count(), Vec::Zero(n));
  t.generators.resize(flag.depth());
  return t;
}

namespace {

void check_shape(const FlagEmbedding& flag, const FlagTangent& t) {
  if (static_cast<int>(t.values.size()) != flag.depth())
    fail(ErrorKind::kInvalidArgument, "tangent must have one sample set per level");
  for (int i = 0; i < flag.depth(); ++i) {
    if (static_cast<int>(t.values[i].size()) != flag.level(i).vertex_count())
      fail(ErrorKind::kInvalidArgument, at_level(i, "tangent needs one vector per vertex"));
    for (const Vec& v : t.values[i])
      if (v.size() != flag.ambient().dim() || !v.allFinite())
        fail(ErrorKind::kInvalidArgument, at_level(i, "tangent vectors must be finite ambient vectors"));
  }
}

}  // namespace

CompatibilityReport tangent_compatibility(const FlagEmbedding& flag, const FlagTangent& tangent, double factor) {
  check_shape(flag, tangent);
  if (tangent.mode != FlagTangent::Mode::kFull)
    fail(ErrorKind::kInvalidArgument, "compatibility is checked on full tangents");
  CompatibilityReport report;
  for (int i = 0; i + 1 < flag.depth(); ++i) {
    const RealizedLevel& upper = flag.level(i + 1);
    const auto& map = flag.data().inclusions[i].vertex_map;
    for (int v = 0; v < flag.level(i).vertex_count(); ++v) {
      const int w = map[v];
      const Vec diff = tangent.values[i + 1][w] - tangent.values[i][v];
      const double off = upper.normal_part(w, diff).norm();
      const double scale = upper.edge_scale[w] > 0.0 ? upper.edge_scale[w] : 1.0;
      if (off > factor * scale) report.ok = false;
      if (off / scale > report.worst_ratio || report.worst_level < 0) {
        report.worst_ratio = off / scale;
        report.worst_level = i;
        report.worst_vertex = v;
      }
    }
  }
  return report;
}

FlagTangent split_riemannian(const FlagEmbedding& flag, const FlagTangent& full, double factor) {
  const auto compat = tangent_compatibility(flag, full, factor);
  if (!compat.ok) {
    std::ostringstream msg;
    msg << "tangent violates compatibility at level " << compat.worst_level + 1 << " vertex " << compat.worst_vertex;
    fail(ErrorKind::kCompatibility, msg.str());
  }
  FlagTangent split;
  split.mode = FlagTangent::Mode::kSplit;
  split.values = full.values;
  split.generators.resize(flag.depth());
  for (int i = 0; i + 1 < flag.depth(); ++i) {
    const RealizedLevel& lower = flag.level(i);
    const RealizedLevel& upper = flag.level(i + 1);
    const auto& map = flag.data().inclusions[i].vertex_map;
    for (int v = 0; v < lower.vertex_count(); ++v) {
      const Mat& q = upper.tangent[map[v]];
      const Vec along = q * (q.transpose() * full.values[i][v]);
      split.values[i][v] = lower.normal_part(v, along);
    }
  }
  return split;
}

FlagTangent join_riemannian(const FlagEmbedding& flag, const FlagTangent& split) {
  check_shape(flag, split);
  if (split.mode != FlagTangent::Mode::kSplit) fail(ErrorKind::kInvalidArgument, "join expects a split tangent");
  FlagTangent full;
  full.values = split.values;
  full.generators.resize(flag.depth());
  for (int i = flag.depth() - 2; i >= 0; --i) {
    const RealizedLevel& upper = flag.level(i + 1);
    const auto& map = flag.data().inclusions[i].vertex_map;
    for (int v = 0; v < flag.level(i).vertex_count(); ++v) {
      const int w = map[v];
      full.values[i][v] = upper.normal_part(w, full.values[i + 1][w]) + split.values[i][v];
    }
  }
  return full;
}

FlagEmbedding act_map(const FlagEmbedding& flag, const AmbientMap& map) {
  const AmbientSpace& space = flag.ambient();
  FlagData d = flag.data();
  for (std::size_t v = 0; v < d.positions.size(); ++v) {
    const Vec y = map.apply(d.positions[v]);
    if (!y.allFinite()) fail(ErrorKind::kNumerical, "non-finite image of top vertex " + std::to_string(v));
    d.positions[v] = space.wrap(y);
  }
  if (d.chart) {
    if (auto ab = map.affine()) {
      const auto& [a, b] = *ab;
      Chart moved = *d.chart;
      const int n = space.dim();
      for (int r = 0; r < n; ++r) {
        TrigFunction comp = TrigFunction::constant(moved.param_dim(), b[r]);
        for (int c = 0; c < n; ++c)
          if (a(r, c) != 0.0) comp = comp + d.chart->components[c] * a(r, c);
        moved.components[r] = comp;
      }
      d.chart = moved;
    } else {
      d.chart.reset();
      d.params.clear();
    }
  }
  return FlagEmbedding(std::move(d));
}

FlagTangent infinitesimal_action(const FlagEmbedding& flag, const VectorField& field) {
  FlagTangent t;
  auto shared = std::make_shared<const VectorField>(field);
  for (int i = 0; i < flag.depth(); ++i) {
    const RealizedLevel& lv = flag.level(i);
    std::vector<Vec> vals(lv.vertex_count());
    for (int v = 0; v < lv.vertex_count(); ++v) vals[v] = field(lv.positions[v]);
    t.values.push_back(std::move(vals));
    t.generators.push_back(shared);
  }
  return t;
}

FlagEmbedding refine(const FlagEmbedding& flag, int factor) {
  if (factor < 1) fail(ErrorKind::kInvalidArgument, "refinement factor must be positive");
  if (factor == 1) return flag;
  flag.level(flag.top());  // structural check
  const AmbientSpace& space = flag.ambient();
  const FlagData& old = flag.data();
  const Mesh& top = old.levels.back();
  const bool charted = old.chart.has_value();
  const int k = factor;

  FlagData d = old;
  d.positions = old.positions;
  d.params = old.params;
  auto place = [&](int a, const std::vector<std::pair<int, double>>& weights) {
    // weights: (vertex, barycentric weight) relative to vertex a
    if (charted) {
      Vec u = old.params[a];
      for (const auto& [v, w] : weights) u += w * old.chart->param_displacement(old.params[a], old.params[v]);
      u = old.chart->wrap_param(u);
      d.params.push_back(u);
      d.positions.push_back(space.wrap(old.chart->eval(u)));
    } else {
      Vec x = old.positions[a];
      for (const auto& [v, w] : weights) x += w * space.displacement(old.positions[a], old.positions[v]);
      d.positions.push_back(space.wrap(x));
    }
    return static_cast<int>(d.positions.size()) - 1;
  };

  // Edge (min, max) -> interior vertices ordered from min to max.
  std::map<std::pair<int, int>, std::vector<int>> edge_vertices;
  auto edge_points = [&](int a, int b) -> std::vector<int> {
    const int lo = std::min(a, b), hi = std::max(a, b);
    auto it = edge_vertices.find({lo, hi});
    if (it == edge_vertices.end()) {
      std::vector<int> pts;
      for (int j = 1; j < k; ++j) pts.push_back(place(lo, {{hi, static_cast<double>(j) / k}}));
      it = edge_vertices.emplace(std::make_pair(lo, hi), pts).first;
    }
    std::vector<int> pts = it->second;
    if (a > b) std::reverse(pts.begin(), pts.end());
    return pts;
  };

  Mesh new_top;
  new_top.dim = top.dim;
  if (top.dim == 0) return flag;
  if (top.dim == 1) {
    for (const auto& c : top.cells) {
      std::vector<int> chain{c[0]};
      for (int v : edge_points(c[0], c[1])) chain.push_back(v);
      chain.push_back(c[1]);
      for (std::size_t j = 0; j + 1 < chain.size(); ++j) new_top.cells.push_back({chain[j], chain[j + 1], 0});
    }
  } else {
    for (const auto& c : top.cells) {
      // Lattice (i, j) -> vertex, barycentric ((k-i-j)/k, i/k, j/k).
      std::vector<std::vector<int>> lat(k + 1, std::vector<int>(k + 1, -1));
      lat[0][0] = c[0];
      lat[k][0] = c[1];
      lat[0][k] = c[2];
      const auto e01 = edge_points(c[0], c[1]);
      const auto e02 = edge_points(c[0], c[2]);
      const auto e12 = edge_points(c[1], c[2]);
      for (int j = 1; j < k; ++j) {
        lat[j][0] = e01[j - 1];
        lat[0][j] = e02[j - 1];
        lat[k - j][j] = e12[j - 1];
      }
      for (int i = 1; i < k; ++i)
        for (int j = 1; i + j < k; ++j)
          lat[i][j] = place(c[0], {{c[1], static_cast<double>(i) / k}, {c[2], static_cast<double>(j) / k}});
      for (int i = 0; i < k; ++i)
        for (int j = 0; i + j < k; ++j) {
          new_top.cells.push_back({lat[i][j], lat[i + 1][j], lat[i][j + 1]});
          if (i + j + 2 <= k) new_top.cells.push_back({lat[i + 1][j], lat[i + 1][j + 1], lat[i][j + 1]});
        }
    }
  }
  new_top.vertex_count = static_cast<int>(d.positions.size());
  d.levels.back() = new_top;

  // Lower levels keep their vertices (by top index) and subdivide curve edges.
  const int depth = flag.depth();
  std::vector<std::vector<int>> top_of(depth);
  top_of[depth - 1].resize(new_top.vertex_count);
  std::iota(top_of[depth - 1].begin(), top_of[depth - 1].end(), 0);
  for (int i = 0; i + 1 < depth; ++i) {
    const RealizedLevel& lv = flag.level(i);
    Mesh m;
    m.dim = lv.dim;
    std::vector<int> tops = lv.top_index;
    if (lv.dim == 0) {
      m.cells = lv.cells;
    } else {
      for (const auto& c : lv.cells) {
        std::vector<int> chain{c[0]};
        for (int v : edge_points(lv.top_index[c[0]], lv.top_index[c[1]])) {
          tops.push_back(v);
          chain.push_back(static_cast<int>(tops.size()) - 1);
        }
        chain.push_back(c[1]);
        for (std::size_t j = 0; j + 1 < chain.size(); ++j) m.cells.push_back({chain[j], chain[j + 1], 0});
      }
    }
    m.vertex_count = static_cast<int>(tops.size());
    d.levels[i] = m;
    top_of[i] = tops;
  }
  for (int i = 0; i + 1 < depth; ++i) {
    std::unordered_map<int, int> upper_index;
    for (std::size_t v = 0; v < top_of[i + 1].size(); ++v) upper_index[top_of[i + 1][v]] = static_cast<int>(v);
    SubmeshInclusion inc;
    inc.from = i;
    for (int t : top_of[i]) inc.vertex_map.push_back(upper_index.at(t));
    d.inclusions[i] = inc;
  }
  return FlagEmbedding(std::move(d));
}

std::vector<std::vector<int>> frequency_set(int dim, int cap) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(dim, -cap);
  while (true) {
    int l1 = 0, lead = 0;
    for (int a = 0; a < dim; ++a) {
      l1 += std::abs(k[a]);
      if (lead == 0 && k[a] != 0) lead = k[a];
    }
    if (l1 >= 1 && l1 <= cap && lead > 0) out.push_back(k);
    int a = dim - 1;
    while (a >= 0 && k[a] == cap) k[a--] = -cap;
    if (a < 0) break;
    ++k[a];
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    int lx = 0, ly = 0;
    for (int v : x) lx += std::abs(v);
    for (int v : y) ly += std::abs(v);
    if (lx != ly) return lx < ly;
    return x > y;
  });
  return out;
}

TrigFunction random_trig_function(const AmbientSpace& space, Rng& rng, int freq_cap, int terms, double amplitude) {
  const int n = space.dim();
  const auto freqs = frequency_set(n, freq_cap);
  const Vec wave = space.wavenumbers();
  TrigFunction f(n);
  for (int t = 0; t < terms; ++t) {
    const auto& m = freqs[rng.integer(0, static_cast<int>(freqs.size()) - 1)];
    Vec k(n);
    for (int a = 0; a < n; ++a) k[a] = m[a] * wave[a];
    const double c = rng.uniform(-amplitude, amplitude);
    const double s = rng.uniform(-amplitude, amplitude);
    f.add_term(k, c, s);
  }
  return f;
}

TrigVectorField random_trig_field(const AmbientSpace& space, Rng& rng, int freq_cap, int terms, double amplitude) {
  TrigVectorField x;
  for (int a = 0; a < space.dim(); ++a) {
    TrigFunction f = random_trig_function(space, rng, freq_cap, terms, amplitude);
    f.add_constant(rng.uniform(-amplitude, amplitude));
    x.push_back(f);
  }
  return x;
}

TrigForm random_trig_form(const AmbientSpace& space, Rng& rng, int degree, int freq_cap, int terms,
                          double amplitude) {
  const int n = space.dim();
  TrigForm form(n, degree);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != degree) continue;
    IndexSet idx;
    for (int a = 0; a < n; ++a)
      if (mask & (1u << a)) idx.push_back(a);
    form.add_component(idx, random_trig_function(space, rng, freq_cap, terms, amplitude));
  }
  return form;
}

FlagTangent random_compatible_tangent(const FlagEmbedding& flag, Rng& rng, int freq_cap, double amplitude) {
  const auto field = VectorField::from_trig(random_trig_field(flag.ambient(), rng, freq_cap, 3, amplitude));
  FlagTangent t = infinitesimal_action(flag, field);
  for (int i = flag.depth() - 2; i >= 0; --i) {
    const RealizedLevel& upper = flag.level(i + 1);
    const auto& map = flag.data().inclusions[i].vertex_map;
    for (int v = 0; v < flag.level(i).vertex_count(); ++v) {
      const int w = map[v];
      const Mat& q = upper.tangent[w];
      Vec r(q.cols());
      for (int c = 0; c < q.cols(); ++c) r[c] = rng.uniform(-amplitude, amplitude);
      t.values[i][v] = t.values[i + 1][w] + q * r;
    }
    t.generators[i].reset();
  }
  return t;
}

}  // namespace symflag
