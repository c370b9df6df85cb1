#pragma once

#include "symflag/ambient.hpp"
#include "symflag/common.hpp"
#include "symflag/rng.hpp"
#include "symflag/trig.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symflag {

// Analytic parametrization of the top level: every ambient coordinate is a
// trig polynomial (with affine part) in the intrinsic parameters.
struct Chart {
  Vec param_periods;  // empty when the parameters are not periodic
  std::vector<TrigFunction> components;

  int param_dim() const { return components.empty() ? 0 : components.front().dim(); }
  int ambient_dim() const { return static_cast<int>(components.size()); }
  bool periodic() const { return param_periods.size() > 0; }
  Vec eval(const Vec& u) const;
  Mat jacobian(const Vec& u) const;  // ambient_dim x param_dim
  Vec second_derivative(const Vec& u, int a, int b) const;
  // Parameter displacement with minimal image when periodic.
  Vec param_displacement(const Vec& from, const Vec& to) const;
  Vec wrap_param(const Vec& u) const;
};

// Simplicial mesh of intrinsic dimension 0, 1 or 2. Cells use the first dim+1
// entries; for dim 0 each cell is a single vertex.
struct Mesh {
  int dim = 0;
  int vertex_count = 0;
  std::vector<std::array<int, 3>> cells;

  int arity() const { return dim + 1; }
};

// iota_i: level `from` -> level `from + 1`.
struct SubmeshInclusion {
  int from = 0;
  std::vector<int> vertex_map;
  // Supporting higher-level cell per cell; derived when empty.
  std::vector<int> cell_map;
};

// A level composed down from the top mesh, with orientation and discrete
// tangent spaces. Positions are ambient points (wrapped on the torus).
struct RealizedLevel {
  int index = 0;
  int dim = 0;
  std::vector<Vec> positions;
  std::vector<std::array<int, 3>> cells;
  std::vector<int> top_index;
  std::vector<int> vertex_component;
  std::vector<int> cell_component;
  int component_count = 0;
  std::vector<int> component_sign;
  // Orthonormal basis (ambient_dim x dim) of the discrete tangent space and the
  // mean incident edge length, per vertex.
  std::vector<Mat> tangent;
  std::vector<double> edge_scale;

  int vertex_count() const { return static_cast<int>(positions.size()); }
  int cell_count() const { return static_cast<int>(cells.size()); }
  int cell_sign(int c) const { return component_sign[cell_component[c]]; }
  // Projection onto the orthogonal complement of the tangent space at v.
  Vec normal_part(int v, const Vec& w) const;
};

struct FlagData {
  AmbientSpace ambient;
  std::vector<Mesh> levels;  // levels[0] = N_1, ..., levels.back() = top
  std::vector<Vec> positions;  // top vertices
  std::vector<Vec> params;     // top vertex parameters; empty without a chart
  std::optional<Chart> chart;
  std::vector<SubmeshInclusion> inclusions;  // inclusions[i] maps level i into level i + 1
  // Per level, one sign per connected component (ordered by smallest vertex);
  // an empty entry means all +1.
  std::vector<std::vector<int>> orientations;
  bool symplectic = false;
};

// Reduced (S, iota) representation: one embedded top mesh with marked nested
// submeshes. Immutable; derived level data is computed once and shared by copies.
class FlagEmbedding {
 public:
  explicit FlagEmbedding(FlagData data);

  const FlagData& data() const { return *data_; }
  const AmbientSpace& ambient() const { return data_->ambient; }
  int depth() const { return static_cast<int>(data_->levels.size()); }
  int top() const { return depth() - 1; }
  const Mesh& mesh(int level) const { return data_->levels.at(level); }
  bool symplectic() const { return data_->symplectic; }

  // Empty iff the combinatorial structure is usable (ranges, arities, inclusions).
  const std::vector<std::string>& structure_errors() const;
  // Throws kInvalidArgument for a bad index or a structurally invalid flag.
  const RealizedLevel& level(int i) const;

  FlagEmbedding with_positions(std::vector<Vec> positions) const;
  FlagEmbedding with_orientations(std::vector<std::vector<int>> orientations) const;

 private:
  struct Cache;
  std::shared_ptr<const FlagData> data_;
  std::shared_ptr<Cache> cache_;
};

struct Thresholds {
  double min_separation = 1e-6;
  double min_area = 1e-12;
};

struct Violation {
  std::string kind;  // structure, closedness, orientation, regularity, symplectic
  int level = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_flag(const FlagEmbedding& flag, const Thresholds& thresholds = {});

// Level i (0-based) as an embedded mesh. Equivalent to flag.level(i).
const RealizedLevel& realize_level(const FlagEmbedding& flag, int i);

// Quadrature node on a cell: x = x0 + s e1 + t e2 with x0 the first cell vertex.
struct CellNode {
  int cell = 0;
  Vec point;
  std::array<double, 3> bary{1.0, 0.0, 0.0};
  double weight = 1.0;  // rule weight times the orientation sign
  std::array<Vec, 2> edges;
};

// Calls visit for every quadrature node of level i; dim-0 levels yield their
// vertices with weight equal to the orientation sign.
void for_each_node(const FlagEmbedding& flag, int i, int order, const std::function<void(const CellNode&)>& visit);

// Sum over nodes of weight * kernel(node). Deterministic (fixed cell order).
double integrate_nodes(const FlagEmbedding& flag, int i, int order,
                       const std::function<double(const CellNode&)>& kernel);

// Integral of a form of degree dim(level) over level i with its orientation.
double integrate_over_level(const FlagEmbedding& flag, int i, const FormField& form, int order);

// Normal fields along the levels, sampled at level vertices.
struct FlagTangent {
  enum class Mode { kFull, kSplit };
  Mode mode = Mode::kFull;
  // kFull: xi_i per level. kSplit: eta_1..eta_{r-1} in the first r-1 slots and xi_r last.
  std::vector<std::vector<Vec>> values;
  // Per level, an ambient field whose restriction the samples are (full mode
  // only); quadrature nodes then evaluate it instead of interpolating.
  std::vector<std::shared_ptr<const VectorField>> generators;

  // Value at a quadrature node of level i (generator, else P1 interpolation).
  Vec at(const FlagEmbedding& flag, int i, const CellNode& node) const;
  // Value at a point that is the image of the node under an ambient map: the
  // generator evaluated at `image` when present, else the node value.
  Vec at_image(const FlagEmbedding& flag, int i, const CellNode& node, const Vec& image) const;
};

FlagTangent zero_tangent(const FlagEmbedding& flag);

struct CompatibilityReport {
  bool ok = true;
  double worst_ratio = 0.0;  // worst |normal part of xi_{i+1} - xi_i| / (edge scale)
  int worst_level = -1;
  int worst_vertex = -1;
};

// Checks xi_{i+1}|_{N_i} = xi_i mod TN_{i+1} at every level-i vertex, with
// tolerance factor * local edge length (factor 0 demands exact equality).
CompatibilityReport tangent_compatibility(const FlagEmbedding& flag, const FlagTangent& tangent,
                                          double factor = 1e-8);

FlagTangent split_riemannian(const FlagEmbedding& flag, const FlagTangent& full, double factor = 1e-8);
FlagTangent join_riemannian(const FlagEmbedding& flag, const FlagTangent& split);

// Vertex-wise image under an ambient map; combinatorics untouched.
FlagEmbedding act_map(const FlagEmbedding& flag, const AmbientMap& map);

// xi_i := X at the level-i vertices, with X recorded as generator.
FlagTangent infinitesimal_action(const FlagEmbedding& flag, const VectorField& field);

// Uniform subdivision; new vertices placed by the chart when present.
FlagEmbedding refine(const FlagEmbedding& flag, int factor);

// Random compatible tangent: a random trig field on the top level, perturbed by
// random discrete tangent vectors on each lower level.
FlagTangent random_compatible_tangent(const FlagEmbedding& flag, Rng& rng, int freq_cap = 2,
                                      double amplitude = 0.5);

// Random trig function / vector field with integer frequencies of l1 norm at
// most freq_cap (in ambient wavenumbers), coefficients uniform in [-amplitude, amplitude].
TrigFunction random_trig_function(const AmbientSpace& space, Rng& rng, int freq_cap, int terms,
                                  double amplitude);
TrigVectorField random_trig_field(const AmbientSpace& space, Rng& rng, int freq_cap, int terms,
                                  double amplitude);
// Every coordinate component of the given degree gets a random trig coefficient.
TrigForm random_trig_form(const AmbientSpace& space, Rng& rng, int degree, int freq_cap, int terms,
                          double amplitude);

// Integer multi-indices of l1 norm 1..cap, one per +-pair (first nonzero entry positive).
std::vector<std::vector<int>> frequency_set(int dim, int cap);

}  // namespace symflag
