#pragma once

#include "symflag/ambient.hpp"
#include "symflag/flagmesh.hpp"
#include "symflag/lifting.hpp"
#include "symflag/quadrature.hpp"
#include "symflag/rng.hpp"
#include "symflag/symplectic.hpp"
#include "symflag/transgression.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symflag {

using Json = nlohmann::json;

// Named check tolerances; fixture entries override the defaults.
class Tolerances {
 public:
  Tolerances();
  double operator[](const std::string& name) const;
  void set(const std::string& name, double value);
  const std::map<std::string, double>& all() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct FixtureConfig {
  int quadrature_order = 2;
  std::uint64_t seed = 1;
  int freq_cap = 2;
  double step = 1e-3;
  double symplectic_threshold = 1e-8;
  Thresholds thresholds;
  LiftOptions lift;
  bool lift_linear = false;  // coordinate functions join the lifting dictionary
  Tolerances tolerances;
  int kks_pairs = 10;
  int equivariance_pairs = 10;
  int frame_size = 20;
  int stokes_order = 1;
  std::vector<int> stokes_resolutions;  // grid fixtures; refinement factors 1, 2, 4 otherwise
};

// Normal field per level: field(x) at the level vertices plus optional
// per-vertex offsets; or the infinitesimal action of a Hamiltonian.
struct TangentSpec {
  std::optional<TrigFunction> hamiltonian;
  struct Level {
    std::optional<TrigVectorField> field;
    std::vector<Vec> offsets;
  };
  std::vector<Level> levels;
};

// Constant-field frame {zeta_a, zeta_b} with its hand-computed Gram entry.
struct AnalyticFrame {
  Vec a;
  Vec b;
  double expected = 0.0;
};

struct Fixture {
  explicit Fixture(FlagEmbedding f) : flag(std::move(f)) {}

  std::string name;
  FlagEmbedding flag;
  FixtureConfig config;
  std::optional<std::array<int, 2>> grid;
  std::map<std::string, TrigFunction> functions;
  std::vector<NamedFunction> probes;
  std::map<std::string, TangentSpec> tangents;
  std::vector<TransgressionSpec> specs;
  std::optional<AnalyticFrame> analytic_frame;
  Json source;
  std::string hash;  // FNV-1a 64 of the file bytes, hex
};

// Throws Error(kSchema) with a path-qualified message on malformed input.
Fixture parse_fixture(const std::string& text);
Fixture load_fixture(const std::string& path);

// Expression grammar: sums of [c*]atom with atom one of a number, a variable,
// cos(lin) or sin(lin), lin an integer combination of variables such as
// x1-2*y2. Integer frequencies are scaled by the given wavenumbers.
TrigFunction parse_expression(const std::string& text, const std::vector<std::string>& variables,
                              const Vec& wavenumbers);
// String expression in the ambient coordinates or a coefficient table.
TrigFunction parse_function(const Json& j, const AmbientSpace& space);
// Comma-separated expressions; "dict" expands to the constant plus the trig
// monomials up to freq_cap.
std::vector<NamedFunction> parse_probe_list(const std::string& text, const AmbientSpace& space, int freq_cap);

Json function_to_json(const TrigFunction& f, const Vec& wavenumbers);
Json mesh_to_json(const FlagEmbedding& flag);

// Diagonal-split periodic grid: vertex (i, j) has index i * nv + j.
Mesh periodic_grid(int nu, int nv);

// The fixture's source with the mesh block replaced by `flag`, which must
// share its combinatorics; unchanged positions keep the original block.
Json fixture_with_flag(const Fixture& fixture, const FlagEmbedding& flag);

// Pretty form used for every emitted JSON file (shortest round-trip floats).
std::string dump_json(const Json& j);
std::string fnv1a_hex(const std::string& bytes);

FlagTangent make_tangent(const Fixture& fixture, const TangentSpec& spec);

}  // namespace symflag
