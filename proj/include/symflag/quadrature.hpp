#pragma once

#include <array>
#include <vector>

namespace symflag {

// Rule on the reference simplex. Triangle nodes are (s, t) in
// {s, t >= 0, s + t <= 1} with weights summing to 1/2; segment nodes are s in
// [0, 1] with weights summing to 1.
struct QuadratureRule {
  int order = 0;  // polynomial degree integrated exactly
  std::vector<std::array<double, 2>> nodes;
  std::vector<double> weights;
};

// Cheapest tabulated rule of at least the requested order (orders up to 6).
const QuadratureRule& triangle_rule(int order);
// Gauss-Legendre with ceil((order + 1) / 2) nodes, order up to 19.
const QuadratureRule& segment_rule(int order);

inline constexpr int kMaxTriangleOrder = 6;

}  // namespace symflag
