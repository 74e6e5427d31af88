#pragma once

// Analytic model geometries used by the flow/shadow modules: Euclidean space,
// flat tori, hyperbolic upper half-space (dim 2 or 3) and the round sphere.
//
// Point representation: chart coordinates in R^dim for everything except the
// sphere, which works with ambient unit vectors in R^{dim+1} so that orbits
// can cross the poles without chart trouble. The polar chart metric is still
// exposed for the metric-compatibility checks.

#include <cmath>

#include "maglab/util.hpp"

namespace maglab {

enum class SpaceKind { euclidean, flat_torus, half_space, sphere };

struct ModelSpace {
  SpaceKind kind = SpaceKind::euclidean;
  int dim = 2;
  vec_t periods;       // flat_torus
  double radius = 1.0; // sphere

  /// dimension of the stored point representation
  int point_dim() const { return kind == SpaceKind::sphere ? dim + 1 : dim; }

  bool in_domain(const vec_t& x) const {
    if (kind == SpaceKind::half_space) return x[dim - 1] > 0.0;
    return true;
  }

  /// metric tensor in chart coordinates (sphere: polar chart (theta, phi))
  mat_t metric(const vec_t& x) const {
    mat_t g = mat_t::Identity(dim, dim);
    switch (kind) {
      case SpaceKind::euclidean:
      case SpaceKind::flat_torus:
        break;
      case SpaceKind::half_space: {
        if (!(x[dim - 1] > 0)) fail("geometry.domain", "half-space point has y <= 0");
        g /= x[dim - 1] * x[dim - 1];
        break;
      }
      case SpaceKind::sphere: {
        const double s = std::sin(x[0]);
        g(0, 0) = radius * radius;
        g(1, 1) = radius * radius * s * s;
        break;
      }
    }
    return g;
  }

  /// Christoffel symbols in the same chart; gamma[k](i,j) = Gamma^k_{ij}
  std::vector<mat_t> christoffel(const vec_t& x) const {
    std::vector<mat_t> gam(dim, mat_t::Zero(dim, dim));
    switch (kind) {
      case SpaceKind::euclidean:
      case SpaceKind::flat_torus:
        break;
      case SpaceKind::half_space: {
        const int d = dim - 1;  // vertical axis
        const double iy = 1.0 / x[d];
        for (int i = 0; i < d; ++i) {
          gam[i](i, d) = gam[i](d, i) = -iy;
          gam[d](i, i) = iy;
        }
        gam[d](d, d) = -iy;
        break;
      }
      case SpaceKind::sphere: {  // (theta, phi) chart
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        gam[0](1, 1) = -st * ct;
        if (std::abs(st) > 1e-14) {
          gam[1](0, 1) = gam[1](1, 0) = ct / st;
        }
        break;
      }
    }
    return gam;
  }

  /// closed-form distance between two points (sphere: ambient representation)
  double distance(const vec_t& a, const vec_t& b) const {
    switch (kind) {
      case SpaceKind::euclidean:
        return (a - b).norm();
      case SpaceKind::flat_torus:
        return wrap_delta(vec_t(a - b), periods).norm();
      case SpaceKind::half_space: {
        const int d = dim - 1;
        if (!(a[d] > 0) || !(b[d] > 0))
          fail("geometry.domain", "half-space distance needs y > 0");
        const double q = 1.0 + (a - b).squaredNorm() / (2.0 * a[d] * b[d]);
        return std::acosh(q);
      }
      case SpaceKind::sphere: {
        const vec_t u = a / radius, v = b / radius;
        // atan2 form is stable for both near and antipodal pairs
        vec_t cr(3);
        cr << u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0];
        return radius * std::atan2(cr.norm(), u.dot(v));
      }
    }
    return 0.0;
  }

  /// total volume; only compact spaces have one
  double volume() const {
    switch (kind) {
      case SpaceKind::flat_torus: {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= periods[i];
        return v;
      }
      case SpaceKind::sphere:
        return 4.0 * kPi * radius * radius;
      default:
        fail("geometry.noncompact", "volume requested for a non-compact model space");
    }
  }

  /// geodesic (force-free) acceleration in the point representation
  vec_t geodesic_accel(const vec_t& x, const vec_t& v) const {
    switch (kind) {
      case SpaceKind::euclidean:
      case SpaceKind::flat_torus:
        return vec_t::Zero(dim);
      case SpaceKind::half_space: {
        const int d = dim - 1;
        vec_t a(dim);
        const double iy = 1.0 / x[d];
        double horiz = 0.0;
        for (int i = 0; i < d; ++i) {
          a[i] = 2.0 * v[i] * v[d] * iy;
          horiz += v[i] * v[i];
        }
        a[d] = (v[d] * v[d] - horiz) * iy;
        return a;
      }
      case SpaceKind::sphere:
        return -(v.squaredNorm() / (radius * radius)) * x;
    }
    return vec_t::Zero(point_dim());
  }

  /// norm of a tangent vector at x (point representation)
  double tangent_norm(const vec_t& x, const vec_t& v) const {
    switch (kind) {
      case SpaceKind::half_space:
        return v.norm() / x[dim - 1];
      default:
        return v.norm();  // euclidean, torus, and ambient sphere vectors
    }
  }
};

inline ModelSpace euclidean_plane() { return ModelSpace{SpaceKind::euclidean, 2, {}, 1.0}; }

inline ModelSpace flat_torus(vec_t periods) {
  ModelSpace s{SpaceKind::flat_torus, static_cast<int>(periods.size()), {}, 1.0};
  s.periods = std::move(periods);
  return s;
}

inline ModelSpace half_plane() { return ModelSpace{SpaceKind::half_space, 2, {}, 1.0}; }
inline ModelSpace half_space3() { return ModelSpace{SpaceKind::half_space, 3, {}, 1.0}; }

inline ModelSpace round_sphere(double r = 1.0) {
  return ModelSpace{SpaceKind::sphere, 2, {}, r};
}

}  // namespace maglab
