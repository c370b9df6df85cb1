#include "symflag/quadrature.hpp"

#include "symflag/common.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace symflag {
namespace {

// Dunavant-type symmetric rules, barycentric orbits with weights summing to 1.
struct Orbit {
  double w;
  double a, b, c;
  int kind;  // 1: centroid, 3: (a, b, b), 6: all permutations of (a, b, c)
};

QuadratureRule from_orbits(int order, std::initializer_list<Orbit> orbits) {
  QuadratureRule r;
  r.order = order;
  auto push = [&r](double w, double l1, double l2) {
    r.nodes.push_back({l1, l2});
    r.weights.push_back(w);
  };
  for (const Orbit& o : orbits) {
    if (o.kind == 1) {
      push(o.w, 1.0 / 3.0, 1.0 / 3.0);
    } else if (o.kind == 3) {
      push(o.w, o.b, o.b);
      push(o.w, o.a, o.b);
      push(o.w, o.b, o.a);
    } else {
      push(o.w, o.a, o.b);
      push(o.w, o.b, o.a);
      push(o.w, o.b, o.c);
      push(o.w, o.c, o.b);
      push(o.w, o.a, o.c);
      push(o.w, o.c, o.a);
    }
  }
  double total = 0.0;
  for (double w : r.weights) total += w;
  for (double& w : r.weights) w *= 0.5 / total;
  return r;
}

std::vector<QuadratureRule> build_triangle_rules() {
  std::vector<QuadratureRule> rules;
  rules.push_back(from_orbits(1, {{1.0, 0, 0, 0, 1}}));
  rules.push_back(from_orbits(2, {{1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0, 0, 3}}));
  rules.push_back(from_orbits(4, {{0.223381589678011, 0.108103018168070, 0.445948490915965, 0, 3},
                                  {0.109951743655322, 0.816847572980459, 0.091576213509771, 0, 3}}));
  rules.push_back(from_orbits(5, {{0.225, 0, 0, 0, 1},
                                  {0.132394152788506, 0.059715871789770, 0.470142064105115, 0, 3},
                                  {0.125939180544827, 0.797426985353087, 0.101286507323456, 0, 3}}));
  rules.push_back(from_orbits(6, {{0.116786275726379, 0.501426509658179, 0.249286745170910, 0, 3},
                                  {0.050844906370207, 0.873821971016996, 0.063089014491502, 0, 3},
                                  {0.082851075618374, 0.053145049844817, 0.310352451033784,
                                   0.636502499121399, 6}}));
  return rules;
}

QuadratureRule gauss_legendre(int n) {
  QuadratureRule r;
  r.order = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes.push_back({0.5 * (1.0 - x), 0.0});
    r.weights.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

}  // namespace

const QuadratureRule& triangle_rule(int order) {
  static const std::vector<QuadratureRule> rules = build_triangle_rules();
  if (order < 0 || order > kMaxTriangleOrder)
    fail(ErrorKind::kInvalidArgument, "triangle quadrature order must be between 0 and 6");
  for (const auto& r : rules)
    if (r.order >= order) return r;
  return rules.back();
}

const QuadratureRule& segment_rule(int order) {
  static std::mutex lock;
  static std::map<int, QuadratureRule> cache;
  if (order < 0 || order > 19) fail(ErrorKind::kInvalidArgument, "segment quadrature order must be between 0 and 19");
  const int n = std::max(1, (order + 2) / 2);
  std::lock_guard guard(lock);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

}  // namespace symflag
