#pragma once

// A magnetic system bundles a model space, a magnetic potential 1-form (as an
// analytic form, a mesh cochain, or both), and the orientation convention for
// the Lorentz force.  The sign convention matters: flipping it mirrors every
// orbit, so it is fixed here once (config-overridable) and all downstream
// code reads the effective form through this struct.

#include <cmath>
#include <memory>
#include <optional>

#include "maglab/dec.hpp"
#include "maglab/forms.hpp"
#include "maglab/mesh.hpp"
#include "maglab/model_space.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct MagneticSystem {
  ModelSpace space;
  std::shared_ptr<const Mesh> mesh;  // may be null for purely analytic work
  std::shared_ptr<const Dec> dec;
  std::optional<AnalyticForm> form;
  vec_t omega;  // 1-cochain on the mesh (empty when no mesh)

  // Orientation convention for the Lorentz force Y, g(Y(u),v) = sign*domega(u,v).
  // The default -1 makes the documented constant-field example in the plane
  // turn clockwise: v=(s,0) -> Y=(0,-Bs).
  double lorentz_sign = -1.0;

  // certified (analytic) or estimated (cochain) sup bounds
  double bound_sup = std::numeric_limits<double>::infinity();
  double bound_dsup = std::numeric_limits<double>::infinity();
  bool bounds_certified = false;

  bool analytic() const { return form.has_value(); }
  bool discrete() const { return mesh != nullptr; }

  vec_t eval_form(const vec_t& x) const {
    if (!form) fail("system.analytic", "system has no analytic form");
    return form->eval(x);
  }
  double eval_dcoeff(const vec_t& x) const {
    if (!form) fail("system.analytic", "system has no analytic form");
    return form->dcoeff(x);
  }
};

namespace detail {

// Deterministic low-discrepancy sample point in a chart-appropriate region.
inline vec_t halton_point(const ModelSpace& sp, int k) {
  vec_t x(sp.point_dim());
  if (sp.kind == SpaceKind::sphere) {
    double z = 2.0 * halton(k + 1, 2) - 1.0;
    double phi = 2.0 * kPi * halton(k + 1, 3);
    double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
    x << sp.radius * rr * std::cos(phi), sp.radius * rr * std::sin(phi), sp.radius * z;
  } else if (sp.kind == SpaceKind::half_space) {
    for (int i = 0; i + 1 < sp.dim; ++i)
      x[i] = 4.0 * halton(k + 1, i == 0 ? 2 : 5) - 2.0;
    x[sp.dim - 1] = 0.1 + 3.0 * halton(k + 1, 3);  // height coordinate
  } else {
    for (int i = 0; i < sp.dim; ++i)
      x[i] = (static_cast<int>(sp.periods.size()) > i && sp.periods[i] > 0
                  ? sp.periods[i] : 2.0 * kPi) *
             halton(k + 1, i == 0 ? 2 : (i == 1 ? 3 : 5));
  }
  return x;
}

// Sampled invariants: the stored exterior derivative must match a finite
// difference of the covector field, and the certified bounds must dominate
// the sampled pointwise norms.  Violations are bugs, hence hard errors.
inline void check_system(const MagneticSystem& sys, int samples) {
  if (!sys.form) return;
  const ModelSpace& sp = sys.space;
  const AnalyticForm& f = *sys.form;
  const double h = 1e-5;
  for (int k = 0; k < samples; ++k) {
    vec_t x = halton_point(sp, k);

    double w = covector_norm(sp, x, f.eval(x));
    if (w > f.cert_sup * (1.0 + 1e-9) + 1e-12)
      fail("system.bound", "certified sup bound violated at a sample point");
    double dn = dform_norm(sp, x, f.dcoeff(x));
    if (dn > f.cert_dsup * (1.0 + 1e-9) + 1e-12)
      fail("system.bound", "certified derivative bound violated at a sample point");

    if (sp.kind == SpaceKind::sphere) {
      // ambient FD exterior derivative, contracted with the normal
      vec_t n = x / x.norm();
      auto partial = [&](int i, int j) {  // d(omega_j)/dx_i
        vec_t xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        return (f.eval(xp)[j] - f.eval(xm)[j]) / (2.0 * h);
      };
      double oxy = partial(0, 1) - partial(1, 0);
      double oyz = partial(1, 2) - partial(2, 1);
      double ozx = partial(2, 0) - partial(0, 2);
      double b_fd = oxy * n[2] + oyz * n[0] + ozx * n[1];
      if (std::abs(b_fd - f.dcoeff(x)) > 1e-4 * (1.0 + std::abs(f.dcoeff(x))))
        fail("system.dform", "stored derivative disagrees with the covector field");
    } else if (sp.dim == 2) {
      auto ev = [&](double dx, double dy, int c) {
        vec_t y = x;
        y[0] += dx;
        y[1] += dy;
        return f.eval(y)[c];
      };
      double gx = (ev(h, 0, 1) - ev(-h, 0, 1)) / (2.0 * h);
      double fy = (ev(0, h, 0) - ev(0, -h, 0)) / (2.0 * h);
      if (std::abs((gx - fy) - f.dcoeff(x)) > 1e-4 * (1.0 + std::abs(f.dcoeff(x))))
        fail("system.dform", "stored derivative disagrees with the covector field");
    }
  }
}

}  // namespace detail

inline MagneticSystem make_system(const ModelSpace& space,
                                  std::shared_ptr<const Mesh> mesh,
                                  std::optional<AnalyticForm> form,
                                  double lorentz_sign = -1.0,
                                  int verify_samples = 10000) {
  MagneticSystem sys;
  sys.space = space;
  sys.mesh = std::move(mesh);
  sys.form = std::move(form);
  sys.lorentz_sign = lorentz_sign;

  if (sys.mesh) {
    sys.dec = std::make_shared<Dec>(build_dec(*sys.mesh));
    if (sys.form) sys.omega = integrate_edges(*sys.mesh, sys.form->eval);
  }
  if (sys.form) {
    sys.bound_sup = sys.form->cert_sup;
    sys.bound_dsup = sys.form->cert_dsup;
    sys.bounds_certified = true;
    detail::check_system(sys, verify_samples);
  } else if (sys.mesh && sys.omega.size() == static_cast<long>(sys.mesh->n_edges())) {
    // discrete estimates: edgewise sup and the face-wise derivative density
    sys.bound_sup = sys.dec->sup_norm_edges(sys.omega);
    vec_t dm = sys.mesh->d1 * sys.omega;
    double d = 0.0;
    for (int fidx = 0; fidx < sys.mesh->n_simplices(2); ++fidx)
      d = std::max(d, std::abs(dm[fidx]) / sys.mesh->volume(2, fidx));
    sys.bound_dsup = d;
  }
  return sys;
}

// mesh-backed system carrying a raw cochain (loaded or eigenform-derived)
inline MagneticSystem make_cochain_system(const ModelSpace& space,
                                          std::shared_ptr<const Mesh> mesh,
                                          vec_t omega, double lorentz_sign = -1.0) {
  MagneticSystem sys = make_system(space, std::move(mesh), std::nullopt, lorentz_sign, 0);
  sys.omega = std::move(omega);
  sys.bound_sup = sys.dec->sup_norm_edges(sys.omega);
  vec_t dm = sys.mesh->d1 * sys.omega;
  double d = 0.0;
  for (int fidx = 0; fidx < sys.mesh->n_simplices(2); ++fidx)
    d = std::max(d, std::abs(dm[fidx]) / sys.mesh->volume(2, fidx));
  sys.bound_dsup = d;
  return sys;
}

}  // namespace maglab
