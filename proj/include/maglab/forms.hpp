#pragma once

// Analytic 1-forms with certified pointwise bounds.  Chart-based spaces store
// covector components in chart coordinates; the sphere stores an ambient
// covector field tangent to the sphere.  cert_sup / cert_dsup are rigorous
// upper bounds for |omega|_g and |d omega|_g over the whole space (infinity
// when unbounded); the consistency of the stored exterior derivative with the
// covector field is asserted by sampling in system.hpp.

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "maglab/model_space.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct AnalyticForm {
  std::string id;
  std::function<vec_t(const vec_t&)> eval;     // covector at x
  std::function<double(const vec_t&)> dcoeff;  // chart spaces: coefficient of dx^dy
                                               // sphere: scalar b with domega = b dA
  double cert_sup = std::numeric_limits<double>::infinity();
  double cert_dsup = std::numeric_limits<double>::infinity();
};

// |covector|_g at x, per model space
inline double covector_norm(const ModelSpace& sp, const vec_t& x, const vec_t& w) {
  switch (sp.kind) {
    case SpaceKind::half_space:
      return x[sp.dim - 1] * w.norm();
    case SpaceKind::sphere: {
      vec_t n = x / x.norm();
      return (w - w.dot(n) * n).norm();
    }
    default:
      return w.norm();
  }
}

// |domega|_g at x: the 2-form norm of the stored derivative coefficient
inline double dform_norm(const ModelSpace& sp, const vec_t& x, double coeff) {
  switch (sp.kind) {
    case SpaceKind::half_space:
      return x[sp.dim - 1] * x[sp.dim - 1] * std::abs(coeff);
    default:
      return std::abs(coeff);  // flat charts; sphere stores b = |domega|_g signed
  }
}

inline AnalyticForm form_zero(int point_dim) {
  AnalyticForm f;
  f.id = "zero";
  f.eval = [point_dim](const vec_t&) { return vec_t(vec_t::Zero(point_dim)); };
  f.dcoeff = [](const vec_t&) { return 0.0; };
  f.cert_sup = 0.0;
  f.cert_dsup = 0.0;
  return f;
}

// a dx on a flat torus or plane (harmonic: d(a dx) = 0)
inline AnalyticForm form_a_dx(double a, int dim = 2) {
  AnalyticForm f;
  f.id = "a_dx";
  f.eval = [a, dim](const vec_t&) {
    vec_t w = vec_t::Zero(dim);
    w[0] = a;
    return w;
  };
  f.dcoeff = [](const vec_t&) { return 0.0; };
  f.cert_sup = std::abs(a);
  f.cert_dsup = 0.0;
  return f;
}

// eps sin(x) dy on the flat torus (coexact for 2pi-periodic x)
inline AnalyticForm form_sine_dy(double eps, int dim = 2) {
  AnalyticForm f;
  f.id = "sine_dy";
  f.eval = [eps, dim](const vec_t& x) {
    vec_t w = vec_t::Zero(dim);
    w[1] = eps * std::sin(x[0]);
    return w;
  };
  f.dcoeff = [eps](const vec_t& x) { return eps * std::cos(x[0]); };
  f.cert_sup = std::abs(eps);
  f.cert_dsup = std::abs(eps);
  return f;
}

// primitive of the constant field B dx^dy in the Euclidean plane
inline AnalyticForm form_const_field_plane(double B) {
  AnalyticForm f;
  f.id = "const_plane";
  f.eval = [B](const vec_t& x) {
    vec_t w(2);
    w[0] = 0.0;
    w[1] = B * x[0];
    return w;
  };
  f.dcoeff = [B](const vec_t&) { return B; };
  f.cert_dsup = std::abs(B);  // |omega| is unbounded on the plane
  return f;
}

// B dx / y on the upper half-plane: domega = B dA_hyp, |omega|_g = B
inline AnalyticForm form_const_field_halfplane(double B) {
  AnalyticForm f;
  f.id = "const_halfplane";
  f.eval = [B](const vec_t& x) {
    vec_t w(2);
    w[0] = B / x[1];
    w[1] = 0.0;
    return w;
  };
  f.dcoeff = [B](const vec_t& x) { return B / (x[1] * x[1]); };
  f.cert_sup = std::abs(B);
  f.cert_dsup = std::abs(B);
  return f;
}

// scale * (y dx - x dy) restricted to the round sphere of radius r:
// in polar terms -scale r^2 sin^2(theta) dphi, with b = -2 scale z / r.
inline AnalyticForm form_sphere_rotation(double scale, double r = 1.0) {
  AnalyticForm f;
  f.id = "sphere_rot";
  f.eval = [scale](const vec_t& p) {
    vec_t w(3);
    w[0] = scale * p[1];
    w[1] = -scale * p[0];
    w[2] = 0.0;
    return w;
  };
  f.dcoeff = [scale, r](const vec_t& p) { return -2.0 * scale * p[2] / r; };
  f.cert_sup = std::abs(scale) * r;
  f.cert_dsup = 2.0 * std::abs(scale);
  return f;
}

// the scale that gives form_sphere_rotation unit L2 norm on the unit sphere
inline double sphere_rotation_unit_scale() { return std::sqrt(3.0 / (8.0 * kPi)); }

namespace detail {
// C^2 bump profile q(u) = (1-u^2)^3 on |u|<1; sup|q| = 1, sup|q'| = 96/(25 sqrt 5)
inline double bump(double u) {
  double s = 1.0 - u * u;
  return s > 0 ? s * s * s : 0.0;
}
inline double bump_d(double u) {
  double s = 1.0 - u * u;
  return s > 0 ? -6.0 * u * s * s : 0.0;
}
inline constexpr double kBumpDerivSup = 96.0 / (25.0 * 2.2360679774997896);
}  // namespace detail

// Compactly supported bump 1-form f dx + g dy in the upper half-plane, with
// independently placed radial bumps for the two components.
inline AnalyticForm form_h2_bump(double amp_f, const vec_t& center_f, double width_f,
                                 double amp_g, const vec_t& center_g, double width_g) {
  AnalyticForm f;
  f.id = "h2_bump";
  auto cf = center_f, cg = center_g;
  f.eval = [=](const vec_t& x) {
    vec_t w(2);
    w[0] = amp_f * detail::bump((x - cf).norm() / width_f);
    w[1] = amp_g * detail::bump((x - cg).norm() / width_g);
    return w;
  };
  f.dcoeff = [=](const vec_t& x) {
    // d(f dx + g dy) = (g_x - f_y) dx^dy, radial chain rule
    double rf = (x - cf).norm(), rg = (x - cg).norm();
    double gx = rg > 0 ? amp_g * detail::bump_d(rg / width_g) / width_g * (x[0] - cg[0]) / rg : 0.0;
    double fy = rf > 0 ? amp_f * detail::bump_d(rf / width_f) / width_f * (x[1] - cf[1]) / rf : 0.0;
    return gx - fy;
  };
  double y_top = std::max(cf[1] + width_f, cg[1] + width_g);
  f.cert_sup = y_top * std::hypot(amp_f, amp_g);
  f.cert_dsup = y_top * y_top *
                (std::abs(amp_g) * detail::kBumpDerivSup / width_g +
                 std::abs(amp_f) * detail::kBumpDerivSup / width_f);
  return f;
}

// omega plus a constant covector (harmonic shifts on flat tori)
inline AnalyticForm form_shifted(const AnalyticForm& base, const vec_t& h) {
  AnalyticForm f = base;
  f.id = base.id + "+const";
  auto ev = base.eval;
  f.eval = [ev, h](const vec_t& x) { return vec_t(ev(x) + h); };
  f.cert_sup = base.cert_sup + h.norm();
  return f;
}

// omega scaled by t
inline AnalyticForm form_scaled(const AnalyticForm& base, double t) {
  AnalyticForm f = base;
  f.id = base.id + "*t";
  auto ev = base.eval;
  auto dc = base.dcoeff;
  f.eval = [ev, t](const vec_t& x) { return vec_t(t * ev(x)); };
  f.dcoeff = [dc, t](const vec_t& x) { return t * dc(x); };
  f.cert_sup = std::abs(t) * base.cert_sup;
  f.cert_dsup = std::abs(t) * base.cert_dsup;
  return f;
}

}  // namespace maglab
