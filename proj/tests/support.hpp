#pragma once

#include "symflag/fixture.hpp"
#include "symflag/flagmesh.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace symflag::testing {

inline constexpr double kTwoPi = 2.0 * M_PI;

inline Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline std::string fixture_path(const std::string& name) { return std::string(SYMFLAG_FIXTURES) + "/" + name; }

inline AmbientSpace torus4() { return AmbientSpace::torus(Vec::Constant(4, kTwoPi)); }

// Surface u, v -> chart(u, v) in T^4 on an n x n periodic grid; `marked` grid
// vertices (i, j) become a 0-dimensional lower level.
inline FlagData torus_surface_data(int n, const std::vector<TrigFunction>& chart_components,
                                   const std::vector<std::array<int, 2>>& marked = {}) {
  FlagData d;
  d.ambient = torus4();
  Chart chart;
  chart.param_periods = Vec::Constant(2, kTwoPi);
  chart.components = chart_components;
  Mesh top = periodic_grid(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec u = vec2(i * kTwoPi / n, j * kTwoPi / n);
      d.params.push_back(u);
      d.positions.push_back(d.ambient.wrap(chart.eval(u)));
    }
  d.chart = chart;
  if (!marked.empty()) {
    Mesh points;
    points.dim = 0;
    SubmeshInclusion inc;
    for (const auto& [i, j] : marked) {
      inc.vertex_map.push_back(i * n + j);
      points.cells.push_back({points.vertex_count++, 0, 0});
    }
    d.levels.push_back(points);
    d.inclusions.push_back(inc);
  }
  d.levels.push_back(top);
  d.symplectic = true;
  return d;
}

inline std::vector<TrigFunction> flat_chart() {
  return {TrigFunction::coordinate(2, 0), TrigFunction::coordinate(2, 1), TrigFunction(2), TrigFunction(2)};
}

// {(0,0,0,0), (pi,pi,0,0)} inside {x2 = y2 = 0} meshed n x n (n even).
inline FlagEmbedding canonical_flag(int n = 64) {
  return FlagEmbedding(torus_surface_data(n, flat_chart(), {{0, 0}, {n / 2, n / 2}}));
}

inline FlagEmbedding canonical_surface(int n = 64) { return FlagEmbedding(torus_surface_data(n, flat_chart())); }

inline FlagEmbedding single_point_flag(const Vec& p, const AmbientSpace& space) {
  FlagData d;
  d.ambient = space;
  Mesh m;
  m.dim = 0;
  m.vertex_count = 1;
  m.cells.push_back({0, 0, 0});
  d.levels.push_back(m);
  d.positions.push_back(p);
  d.symplectic = true;
  return FlagEmbedding(std::move(d));
}

// Periodic trapezoid sum of f over the flat surface {x2 = y2 = 0}: exact for
// trig polynomials of frequency below n.
inline double surface_trapezoid(const std::function<double(const Vec&)>& f, int n = 64) {
  const double h = kTwoPi / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sum += f(vec4(i * h, j * h, 0.0, 0.0));
  return sum * h * h;
}

inline TrigFunction expr(const std::string& text, const AmbientSpace& space = torus4()) {
  return parse_expression(text, {"x1", "y1", "x2", "y2"}, space.wavenumbers());
}

// Least-squares slope of log(values) against log(steps).
inline double log_slope(const std::vector<double>& steps, const std::vector<double>& values) {
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    mx += std::log(steps[k]) / n;
    my += std::log(values[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double dx = std::log(steps[k]) - mx;
    sxy += dx * (std::log(values[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace symflag::testing
