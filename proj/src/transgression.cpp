#include "symflag/transgression.hpp"

#include <array>
#include <cmath>
#include <string>

namespace symflag {

void check_spec(const TransgressionSpec& spec, const FlagEmbedding& flag) {
  if (static_cast<int>(spec.forms.size()) != flag.depth())
    fail(ErrorKind::kInvalidArgument, "transgression spec needs one form per level");
  if (spec.excess < 0) fail(ErrorKind::kInvalidArgument, "excess degree must be non-negative");
  for (int i = 0; i < flag.depth(); ++i) {
    const int want = flag.level(i).dim + spec.excess;
    if (spec.forms[i].degree() != want)
      fail(ErrorKind::kInvalidArgument, "level " + std::to_string(i + 1) + " form has degree " +
                                            std::to_string(spec.forms[i].degree()) + ", expected " +
                                            std::to_string(want));
    if (spec.forms[i].dim() != flag.ambient().dim())
      fail(ErrorKind::kInvalidArgument, "form dimension does not match the ambient space");
  }
}

namespace {

void check_tangents(const TransgressionSpec& spec, std::span<const FlagTangent> tangents) {
  if (static_cast<int>(tangents.size()) != spec.excess)
    fail(ErrorKind::kInvalidArgument, "expected " + std::to_string(spec.excess) + " tangent arguments, got " +
                                          std::to_string(tangents.size()));
}

}  // namespace

double transgress_value(const TransgressionSpec& spec, const FlagEmbedding& flag,
                        std::span<const FlagTangent> tangents, int order) {
  check_spec(spec, flag);
  check_tangents(spec, tangents);
  const int l = spec.excess;
  double total = 0.0;
  for (int i = 0; i < flag.depth(); ++i) {
    const FormField& alpha = spec.forms[i];
    const int dim = flag.level(i).dim;
    total += integrate_nodes(flag, i, order, [&](const CellNode& node) {
      std::array<Vec, kMaxDim> args;
      for (int j = 0; j < l; ++j) args[j] = tangents[j].at(flag, i, node);
      for (int e = 0; e < dim; ++e) args[l + e] = node.edges[e];
      return alpha(node.point, std::span<const Vec>(args.data(), l + dim));
    });
  }
  return total;
}

double transgress_on_image(const TransgressionSpec& spec, const FlagEmbedding& flag,
                           std::span<const FlagTangent> tangents, const AmbientMap& map, Transport transport,
                           int order) {
  check_spec(spec, flag);
  check_tangents(spec, tangents);
  const int l = spec.excess;
  if (transport == Transport::kResample)
    for (const FlagTangent& t : tangents)
      for (int i = 0; i < flag.depth(); ++i)
        if (i >= static_cast<int>(t.generators.size()) || !t.generators[i])
          fail(ErrorKind::kInvalidArgument, "resampled tangents need generating fields");
  double total = 0.0;
  for (int i = 0; i < flag.depth(); ++i) {
    const FormField& alpha = spec.forms[i];
    const int dim = flag.level(i).dim;
    total += integrate_nodes(flag, i, order, [&](const CellNode& node) {
      std::array<Vec, kMaxDim> args;
      int pushed = 0;
      if (transport == Transport::kPushforward) {
        for (int j = 0; j < l; ++j) args[pushed++] = tangents[j].at(flag, i, node);
      }
      const int first_edge = pushed;
      for (int e = 0; e < dim; ++e) args[pushed++] = node.edges[e];
      const Vec image = map.apply(node.point, std::span<Vec>(args.data(), pushed));
      if (transport == Transport::kResample) {
        // Move the pushed edges behind the resampled tangents.
        for (int e = dim - 1; e >= 0; --e) args[l + e] = args[first_edge + e];
        for (int j = 0; j < l; ++j) args[j] = tangents[j].at_image(flag, i, node, image);
      }
      return alpha(image, std::span<const Vec>(args.data(), l + dim));
    });
  }
  return total;
}

namespace {

// Derivative at t = 0 of t -> value(Fl^X_t), by central or forward differences.
template <class F>
double flow_derivative(const VectorField& x, double step, Difference scheme, F&& value) {
  const FlowMap plus(x, step, step);
  if (scheme == Difference::kForward) {
    const AffineMap identity = AffineMap::translation(Vec::Zero(x.dim()));
    return (value(plus) - value(identity)) / step;
  }
  const FlowMap minus(x, -step, step);
  return (value(plus) - value(minus)) / (2.0 * step);
}

IdentityResidual make_residual(double lhs, double rhs) { return {lhs, rhs, std::abs(lhs - rhs)}; }

}  // namespace

IdentityResidual check_d_identity(const TransgressionSpec& spec, const FlagEmbedding& flag, const VectorField& x,
                                  const VectorField& y, double step, int order, Difference scheme) {
  check_spec(spec, flag);
  if (!(step > 0.0)) fail(ErrorKind::kInvalidArgument, "step must be positive");
  const TransgressionSpec d_spec = map_spec(spec, flag, [](const FormField& f) { return exterior_derivative(f); });
  const FlagTangent zx = infinitesimal_action(flag, x);
  if (spec.excess == 0) {
    const double lhs = flow_derivative(x, step, scheme, [&](const AmbientMap& m) {
      return transgress_on_image(spec, flag, {}, m, Transport::kPushforward, order);
    });
    const std::array<FlagTangent, 1> args{zx};
    return make_residual(lhs, transgress_value(d_spec, flag, args, order));
  }
  if (spec.excess != 1) fail(ErrorKind::kInvalidArgument, "d-identity is implemented for excess 0 and 1");
  const FlagTangent zy = infinitesimal_action(flag, y);
  const std::array<FlagTangent, 1> only_y{zy}, only_x{zx};
  const double dx_of_y = flow_derivative(x, step, scheme, [&](const AmbientMap& m) {
    return transgress_on_image(spec, flag, only_y, m, Transport::kResample, order);
  });
  const double dy_of_x = flow_derivative(y, step, scheme, [&](const AmbientMap& m) {
    return transgress_on_image(spec, flag, only_x, m, Transport::kResample, order);
  });
  const std::array<FlagTangent, 1> bracket{infinitesimal_action(flag, lie_bracket(x, y))};
  const double lhs = dx_of_y - dy_of_x - transgress_value(spec, flag, bracket, order);
  const std::array<FlagTangent, 2> both{zx, zy};
  return make_residual(lhs, transgress_value(d_spec, flag, both, order));
}

IdentityResidual check_contraction_identity(const TransgressionSpec& spec, const FlagEmbedding& flag,
                                            const VectorField& x, std::span<const FlagTangent> tangents,
                                            int order) {
  check_spec(spec, flag);
  if (spec.excess < 1) fail(ErrorKind::kInvalidArgument, "contraction identity needs excess >= 1");
  std::vector<FlagTangent> args{infinitesimal_action(flag, x)};
  args.insert(args.end(), tangents.begin(), tangents.end());
  const double lhs = transgress_value(spec, flag, args, order);
  const TransgressionSpec inner = map_spec(spec, flag, [&](const FormField& f) { return interior_product(f, x); });
  return make_residual(lhs, transgress_value(inner, flag, tangents, order));
}

IdentityResidual check_lie_identity(const TransgressionSpec& spec, const FlagEmbedding& flag, const VectorField& x,
                                    std::span<const FlagTangent> tangents, double dt, int order,
                                    Difference scheme) {
  check_spec(spec, flag);
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidArgument, "dt must be positive");
  const double lhs = flow_derivative(x, dt, scheme, [&](const AmbientMap& m) {
    return transgress_on_image(spec, flag, tangents, m, Transport::kPushforward, order);
  });
  const TransgressionSpec lie = map_spec(spec, flag, [&](const FormField& f) { return lie_derivative(f, x); });
  return make_residual(lhs, transgress_value(lie, flag, tangents, order));
}

IdentityResidual diff_equivariance_check(const TransgressionSpec& spec, const FlagEmbedding& flag,
                                         const AffineMap& phi, std::span<const FlagTangent> tangents, int order) {
  check_spec(spec, flag);
  const auto [a, b] = *phi.affine();
  for (const FormField& f : spec.forms)
    if (!f.trig()) fail(ErrorKind::kInvalidArgument, "equivariance check needs forms with trig tables");
  if (std::abs(a.determinant()) < 1e-12) fail(ErrorKind::kInvalidArgument, "map is not invertible");
  const FlagEmbedding moved = act_map(flag, phi);
  const Mat a_inv = a.inverse();
  std::vector<FlagTangent> pushed;
  for (const FlagTangent& t : tangents) {
    FlagTangent p = t;
    for (auto& level : p.values)
      for (Vec& v : level) v = a * v;
    for (auto& g : p.generators) {
      if (!g) continue;
      auto field = g;
      const Mat am = a;
      const Vec bm = b;
      g = std::make_shared<const VectorField>(
          field->dim(), [field, am, a_inv, bm](double time, const Vec& y) -> Vec {
            return am * (*field)(a_inv * (y - bm), time);
          });
    }
    pushed.push_back(std::move(p));
  }
  const double lhs = transgress_value(spec, moved, pushed, order);
  const TransgressionSpec pulled = map_spec(spec, flag, [&](const FormField& f) {
    return FormField::from_trig(f.trig()->pullback_affine(a, b));
  });
  return make_residual(lhs, transgress_value(pulled, flag, tangents, order));
}

double fit_log_slope(std::span<const double> steps, std::span<const double> residuals) {
  if (steps.size() != residuals.size() || steps.size() < 2)
    fail(ErrorKind::kInvalidArgument, "slope fit needs at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double lx = std::log(steps[i]);
    const double ly = std::log(std::max(residuals[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace symflag
