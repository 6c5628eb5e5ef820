#pragma once

// Poincare-ball and Lorentz-model primitives.
//
// The unit ball carries the geodesic distance
//   d(u, v) = arcosh(1 + 2*|u - v|^2 / ((1 - |u|^2) * (1 - |v|^2))),
// and arbitrary Euclidean points are mapped into the ball with
//   proj(x) = x / (1 + sqrt(1 + |x|^2)),
// which factors as the Lorentz lift [sqrt(1 + |x|^2), x] followed by the
// stereographic-style map (x0, xs) -> xs / (x0 + 1).

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hidden/linalg.hpp"

namespace hidden {

// Floor on (arcosh argument - 1); also bounds the distance derivative.
inline constexpr double kArcoshFloor = 1e-12;
// Ball norms are capped at this value inside distance denominators.
inline constexpr double kBallNormCap = 1.0 - 1e-7;

inline std::vector<double> project_to_ball(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("project_to_ball: empty input");
  if (!all_finite(x)) throw std::invalid_argument("project_to_ball: non-finite input");
  const double denom = 1.0 + std::hypot(1.0, norm(x));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / denom;
  return out;
}

inline std::vector<double> lorentz_lift(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("lorentz_lift: empty input");
  if (!all_finite(x)) throw std::invalid_argument("lorentz_lift: non-finite input");
  std::vector<double> out(x.size() + 1);
  out[0] = std::hypot(1.0, norm(x));
  for (std::size_t i = 0; i < x.size(); ++i) out[i + 1] = x[i];
  return out;
}

// Minkowski form <x, y> = -x0*y0 + sum_i xi*yi on (n+1)-dim points.
inline double minkowski_inner(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("minkowski_inner: dimension mismatch");
  if (x.size() < 2) throw std::invalid_argument("minkowski_inner: need at least 2 coordinates");
  double s = -x[0] * y[0];
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline std::vector<double> lorentz_to_poincare(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("lorentz_to_poincare: need at least 2 coordinates");
  if (!all_finite(x)) throw std::invalid_argument("lorentz_to_poincare: non-finite input");
  if (x[0] <= -1.0) throw std::invalid_argument("lorentz_to_poincare: time coordinate <= -1");
  std::vector<double> out(x.size() - 1);
  const double denom = x[0] + 1.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) out[i] = x[i + 1] / denom;
  return out;
}

inline bool is_ball_point(std::span<const double> u) {
  return !u.empty() && all_finite(u) && norm(u) < 1.0;
}

inline bool is_lorentz_point(std::span<const double> x, double tol = 1e-9) {
  return x.size() >= 2 && all_finite(x) && x[0] > 0.0 &&
         std::fabs(minkowski_inner(x, x) + 1.0) <= tol;
}

namespace detail {

// Shared pieces of the distance and its gradient.  alpha/beta use capped
// norms; q is the raw squared chord between the points.
struct DistanceParts {
  double q, alpha, beta, t;  // t = (arcosh argument - 1), before the floor
};

inline DistanceParts distance_parts(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("poincare_distance: dimension mismatch");
  if (u.empty()) throw std::invalid_argument("poincare_distance: empty input");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu < 1.0) || !(nv < 1.0))
    throw std::domain_error("poincare_distance: point not strictly inside the unit ball");
  double q = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double dchord = u[i] - v[i];
    q += dchord * dchord;
  }
  const double cu = std::min(nu, kBallNormCap);
  const double cv = std::min(nv, kBallNormCap);
  const double alpha = 1.0 - cu * cu;
  const double beta = 1.0 - cv * cv;
  return {q, alpha, beta, 2.0 * q / (alpha * beta)};
}

}  // namespace detail

inline double poincare_distance(std::span<const double> u, std::span<const double> v) {
  const auto p = detail::distance_parts(u, v);
  const double t = std::max(p.t, kArcoshFloor);
  return std::acosh(1.0 + t);
}

struct DistanceGradient {
  std::vector<double> du, dv;
  bool degenerate = false;  // true when u == v up to the clamp floor
};

inline DistanceGradient poincare_distance_grad(std::span<const double> u,
                                               std::span<const double> v) {
  const auto p = detail::distance_parts(u, v);
  DistanceGradient g;
  g.du.assign(u.size(), 0.0);
  g.dv.assign(v.size(), 0.0);
  if (p.t <= kArcoshFloor) {
    g.degenerate = true;
    return g;
  }
  // d = arcosh(1 + t); d/dt = 1 / sqrt(t * (t + 2)).
  const double f = 1.0 / std::sqrt(p.t * (p.t + 2.0));
  const double ab = p.alpha * p.beta;
  const double cu = 4.0 * p.q / (p.alpha * ab);
  const double cv = 4.0 * p.q / (p.beta * ab);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double dchord = u[i] - v[i];
    g.du[i] = f * (4.0 * dchord / ab + cu * u[i]);
    g.dv[i] = f * (-4.0 * dchord / ab + cv * v[i]);
  }
  return g;
}

// Pullback of a gradient through proj: returns J(x)^T g where J is the
// Jacobian of proj at x.  J = I/D - x x^T / (s D^2) with s = sqrt(1 + |x|^2)
// and D = 1 + s, and J is symmetric.
inline std::vector<double> projection_pullback(std::span<const double> x,
                                               std::span<const double> g) {
  if (x.size() != g.size()) throw std::invalid_argument("projection_pullback: dimension mismatch");
  if (x.empty()) throw std::invalid_argument("projection_pullback: empty input");
  if (!all_finite(x) || !all_finite(g))
    throw std::invalid_argument("projection_pullback: non-finite input");
  const double s = std::hypot(1.0, norm(x));
  const double d = 1.0 + s;
  const double xg = dot(x, g);
  const double c = xg / (s * d * d);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = g[i] / d - c * x[i];
  return out;
}

}  // namespace hidden
