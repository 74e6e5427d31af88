#pragma once

// Quasigeodesic analysis in the hyperbolic half-plane chart: geodesic
// curvature of sampled curves, constant-curvature reference families
// (geodesics, hypercycles, horocycles), ideal-endpoint estimation with the
// shadow geodesic joining them, fellow-traveling measurements, and the
// averaged line-integral comparison between a curve and its shadow.
//
// Everything here works on analytic model spaces, not meshes; curves are
// dense samples of (t, x, v).  Distances use cancellation-free asinh forms:
//   point to vertical geodesic x = a:        sinh d = |x - a| / y
//   point to semicircle (center c, radius R): sinh d = | |z-c|^2 - R^2 | / (2 R y)
//   between points:  d = 2 asinh( |z - w| / (2 sqrt(y_z y_w)) )

#include <cmath>
#include <complex>
#include <vector>

#include "maglab/forms.hpp"
#include "maglab/model_space.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct SampledCurve {
  std::vector<double> ts;
  mat_t xs, vs;
  int n() const { return static_cast<int>(ts.size()); }
};

template <class Traj>
inline SampledCurve curve_from_trajectory(const Traj& traj) {
  SampledCurve c;
  c.ts = traj.ts;
  c.xs = traj.xs;
  c.vs = traj.vs;
  return c;
}

// ---------------------------------------------------------------------------
// reference families, unit-speed, sampled on t in [-T, T]

namespace detail {

inline SampledCurve sample_curve(double T, double h,
                                 const std::function<void(double, vec_t&, vec_t&)>& f) {
  const int n = 2 * static_cast<int>(std::ceil(T / h)) + 1;
  SampledCurve c;
  c.ts.resize(n);
  c.xs.resize(n, 2);
  c.vs.resize(n, 2);
  vec_t x(2), v(2);
  for (int i = 0; i < n; ++i) {
    const double t = -T + 2.0 * T * i / (n - 1);
    f(t, x, v);
    c.ts[i] = t;
    c.xs.row(i) = x.transpose();
    c.vs.row(i) = v.transpose();
  }
  return c;
}

}  // namespace detail

// vertical geodesic x = x0, through (x0, y0) at t = 0, ascending
inline SampledCurve h2_geodesic_vertical(double x0, double y0, double T, double h = 1e-3) {
  return detail::sample_curve(T, h, [&](double t, vec_t& x, vec_t& v) {
    x << x0, y0 * std::exp(t);
    v << 0.0, y0 * std::exp(t);
  });
}

// semicircle geodesic with feet c-R, c+R: z(t) = c + R(tanh t, sech t)
inline SampledCurve h2_geodesic_circle(double c, double R, double T, double h = 1e-3) {
  return detail::sample_curve(T, h, [&](double t, vec_t& x, vec_t& v) {
    const double th = std::tanh(t), se = 1.0 / std::cosh(t);
    x << c + R * th, R * se;
    v << R * se * se, -R * se * th;
  });
}

// hypercycle at distance d from the vertical axis x = 0: the ray at angle
// theta with sin(theta) = sech d; curvature tanh d; side = +-1.
inline SampledCurve h2_hypercycle(double d, double T, double h = 1e-3, int side = 1,
                                  double r0 = 1.0) {
  const double st = 1.0 / std::cosh(d);  // sin theta
  const double ct = side * std::tanh(d); // cos theta (signed side)
  return detail::sample_curve(T, h, [&](double t, vec_t& x, vec_t& v) {
    const double r = r0 * std::exp(st * t);
    x << r * ct, r * st;
    v << st * r * ct, st * r * st;
  });
}

// horocycle y = y0 (curvature 1), unit speed
inline SampledCurve h2_horocycle(double y0, double x0, double T, double h = 1e-3) {
  return detail::sample_curve(T, h, [&](double t, vec_t& x, vec_t& v) {
    x << x0 + y0 * t, y0;
    v << y0, 0.0;
  });
}

// ---------------------------------------------------------------------------
// curvature

// |covariant acceleration| / speed^2 per interior sample, acceleration by
// central differences of the sampled velocity.
inline vec_t geodesic_curvature(const ModelSpace& sp, const SampledCurve& c) {
  if (c.n() < 5) fail("shadow.samples", "curvature stencil needs at least 5 samples");
  vec_t out(c.n() - 2);
  const int d = static_cast<int>(c.xs.cols());
  vec_t a(d), cov(d), x(d), v(d);
  for (int i = 1; i + 1 < c.n(); ++i) {
    const double dt = c.ts[i + 1] - c.ts[i - 1];
    a = (c.vs.row(i + 1) - c.vs.row(i - 1)).transpose() / dt;
    x = c.xs.row(i).transpose();
    v = c.vs.row(i).transpose();
    cov = a;
    const std::vector<mat_t> gam = sp.christoffel(x);
    for (int k = 0; k < d; ++k) cov[k] += v.dot(gam[k] * v);
    const double s = sp.tangent_norm(x, v);
    out[i - 1] = sp.tangent_norm(x, cov) / (s * s);
  }
  return out;
}

inline double quasigeodesic_constant(double kappa) {
  if (kappa < 0.0 || kappa >= 1.0)
    fail("shadow.kappa", "no quasigeodesic guarantee for curvature " + std::to_string(kappa));
  return 1.0 / std::sqrt(1.0 - kappa * kappa);
}

// ---------------------------------------------------------------------------
// shadow geodesic

struct H2Geodesic {
  bool vertical = false;
  double x0 = 0.0;        // vertical: the axis abscissa
  double c = 0.0, R = 1.0;  // otherwise: semicircle center and radius

  double distance_to(double x, double y) const {
    if (y <= 0.0) fail("shadow.chart", "point left the half-plane");
    if (vertical) return std::asinh(std::abs(x - x0) / y);
    const double zz = (x - c) * (x - c) + y * y;
    return std::asinh(std::abs(zz - R * R) / (2.0 * R * y));
  }
};

struct ShadowResult {
  H2Geodesic geodesic;
  double end_minus = 0.0, end_plus = 0.0;
  bool minus_at_inf = false, plus_at_inf = false;
  double endpoint_drift = 0.0;   // stabilization diagnostic (chart units)
  double fellow_distance = 0.0;  // sup over samples of distance to the shadow
};

namespace detail {

// Limit of a Moebius iteration z_{j+1} = m(z_j) through four equally spaced
// complex samples.  Every constant-curvature curve is the image of a
// canonical ray z0(t) = C e^{rho t} under a real Moebius isometry g, so its
// complex chart samples on an equally spaced arc-length grid satisfy
// z_{j+1} = m(z_j) for the conjugated scaling m = g . (q x) . g^{-1}, and the
// attracting fixed point of the fitted map is the ideal endpoint -- exactly,
// in any asymptotic regime, with no decay requirement on the window.  For
// exact model data the fixed points are real (the feet of g's axis); the
// imaginary residual therefore doubles as an error indicator.  Rotation-like
// fits (closed orbits: |m'| = 1) and fixed points far outside the data are
// rejected.
struct MobiusLimit {
  double xi = 0.0;  // real part of the attracting fixed point
  double im = 0.0;  // imaginary residual, zero for exact model data
  bool ok = false;
};

inline MobiusLimit mobius_limit(const std::complex<double>& z0, const std::complex<double>& z1,
                                const std::complex<double>& z2,
                                const std::complex<double>& z3) {
  using cplx = std::complex<double>;
  MobiusLimit out;
  const double scale = std::max({std::abs(z0 - z3), std::abs(z1 - z3), std::abs(z2 - z3)});
  if (scale <= 1e-13 * (1.0 + std::abs(z3))) {  // already converged
    out.xi = z3.real();
    out.im = z3.imag();
    out.ok = true;
    return out;
  }
  // shift/scale so the entries are O(1) and the last sample sits at 0
  const cplx u0 = (z0 - z3) / scale, u1 = (z1 - z3) / scale, u2 = (z2 - z3) / scale;
  // rows encode z_{j+1} (ga z_j + de) = al z_j + be
  Eigen::Matrix<cplx, 3, 4> A;
  A << u0, cplx(1.0), -u1 * u0, -u1,  //
      u1, cplx(1.0), -u2 * u1, -u2,   //
      u2, cplx(1.0), cplx(0.0), cplx(0.0);  // u3 = 0
  Eigen::JacobiSVD<Eigen::Matrix<cplx, 3, 4>> svd(A, Eigen::ComputeFullV);
  const Eigen::Matrix<cplx, 4, 1> p = svd.matrixV().col(3);
  const cplx al = p[0], be = p[1], ga = p[2], de = p[3];
  // fixed points: ga u^2 + (de - al) u - be = 0
  const cplx b = de - al;
  cplx r1, r2;
  if (std::abs(ga) <= 1e-14 * (std::abs(b) + std::abs(al) + std::abs(de))) {
    if (std::abs(b) <= 1e-14 * (std::abs(al) + std::abs(de))) return out;  // parabolic drift
    r1 = r2 = be / b;  // affine map: the Aitken fixed point
  } else {
    const cplx sq = std::sqrt(b * b + 4.0 * ga * be);
    const cplx q1 = -0.5 * (b + sq), q2 = -0.5 * (b - sq);
    const cplx qq = std::abs(q1) >= std::abs(q2) ? q1 : q2;  // stable branch
    r1 = qq / ga;
    r2 = std::abs(qq) > 0.0 ? -be / qq : r1;
  }
  auto deriv_mag = [&](const cplx& u) {  // |m'| at the fixed point
    const double den = std::norm(ga * u + de);
    return std::abs(al * de - be * ga) / std::max(den, 1e-300);
  };
  const double d1 = deriv_mag(r1), d2 = deriv_mag(r2);
  if (std::min(d1, d2) > 1.0 + 1e-6) return out;  // no attracting fixed point
  const cplx ustar = d1 <= d2 ? r1 : r2;
  if (std::abs(ustar) > 1e3) return out;  // extrapolating far beyond the data
  const cplx zstar = z3 + scale * ustar;
  out.xi = zstar.real();
  out.im = zstar.imag();
  out.ok = true;
  return out;
}

// One-sided ideal endpoint from six equally spaced samples: three staggered
// Moebius-limit fits, the finest exported, with a Richardson-style error
// estimate from the contraction of the two discrepancies.  When no
// contraction is visible the raw discrepancy is reported unchanged
// (conservative), and an unusable fit reports unit drift.
struct EndpointEstimate {
  double xi = 0.0;
  bool at_inf = false;
  double drift = 0.0;
};

inline EndpointEstimate ideal_endpoint(const SampledCurve& c, bool forward) {
  const int n = c.n();
  const int mid = n / 2;
  const int k = (forward ? (n - 1 - mid) : mid) / 5;
  if (k < 1) fail("shadow.samples", "ideal endpoint needs a longer sample window");
  const int step = forward ? k : -k;
  auto idx = [&](int j) { return mid + j * step; };
  auto X = [&](int j) { return c.xs(idx(j), 0); };
  EndpointEstimate e;

  // escape to infinity: sustained norm growth toward the window end
  const double magT = c.xs.row(idx(5)).norm();
  const double magH = c.xs.row(idx(3)).norm();
  const double magQ = c.xs.row(idx(1)).norm();
  const double mag0 = 1.0 + c.xs.row(idx(0)).norm();
  if (magT > 50.0 * mag0 && magT > 2.5 * magH) {
    e.at_inf = true;
    // drift diagnostic: the growth must be sustained, not a spike
    e.drift = magT > 2.0 * magH && magH > 1.5 * magQ ? 0.0 : 1.0;
    return e;
  }

  const double dt1 = c.ts[idx(2)] - c.ts[idx(1)];
  const double dt2 = c.ts[idx(3)] - c.ts[idx(2)];
  if (std::abs(dt2 - dt1) > 1e-9 * (std::abs(dt1) + std::abs(dt2)))
    fail("shadow.samples", "ideal endpoint extrapolation needs uniform sampling");

  auto Z = [&](int j) {
    return std::complex<double>(c.xs(idx(j), 0), c.xs(idx(j), 1));
  };
  const MobiusLimit fa = mobius_limit(Z(2), Z(3), Z(4), Z(5));
  const MobiusLimit fb = mobius_limit(Z(1), Z(2), Z(3), Z(4));
  const MobiusLimit fc = mobius_limit(Z(0), Z(1), Z(2), Z(3));
  if (!fa.ok || !fb.ok || !fc.ok) {
    e.xi = X(5);
    e.drift = 1.0;
    return e;
  }
  const double drift1 = std::abs(fa.xi - fb.xi), drift2 = std::abs(fb.xi - fc.xi);
  e.xi = fa.xi;
  e.drift = (drift2 > drift1 && drift1 > 0.0)
                ? std::min(drift1, drift1 * drift1 / (drift2 - drift1))
                : drift1;
  e.drift = std::max(e.drift, std::abs(fa.im));  // endpoint must be real
  return e;
}

}  // namespace detail

// Ideal endpoints from the two ends of the sampled curve; geodesic joining
// them.  The curve should span a symmetric window around its midpoint.
inline ShadowResult shadow_geodesic(const ModelSpace& sp, const SampledCurve& c,
                                    double stabilize_tol = 1e-4) {
  if (sp.kind != SpaceKind::half_space || sp.dim != 2)
    fail("shadow.space", "shadow construction is wired for the half-plane chart");
  detail::EndpointEstimate fwd = detail::ideal_endpoint(c, true);
  detail::EndpointEstimate bwd = detail::ideal_endpoint(c, false);
  ShadowResult res;
  res.endpoint_drift = std::max(fwd.drift, bwd.drift);
  if (res.endpoint_drift > stabilize_tol)
    fail("shadow.endpoints", "ideal endpoints not stabilized; drift " +
                                 std::to_string(res.endpoint_drift));
  res.end_plus = fwd.xi;
  res.plus_at_inf = fwd.at_inf;
  res.end_minus = bwd.xi;
  res.minus_at_inf = bwd.at_inf;
  if (fwd.at_inf && bwd.at_inf)
    fail("shadow.endpoints", "both endpoints at infinity");
  if (fwd.at_inf || bwd.at_inf) {
    res.geodesic.vertical = true;
    res.geodesic.x0 = fwd.at_inf ? bwd.xi : fwd.xi;
  } else {
    if (std::abs(fwd.xi - bwd.xi) < 1e-9)
      fail("shadow.endpoints", "coincident ideal endpoints");
    res.geodesic.vertical = false;
    res.geodesic.c = 0.5 * (fwd.xi + bwd.xi);
    res.geodesic.R = 0.5 * std::abs(fwd.xi - bwd.xi);
  }
  double sup = 0.0;
  for (int i = 0; i < c.n(); ++i)
    sup = std::max(sup, res.geodesic.distance_to(c.xs(i, 0), c.xs(i, 1)));
  res.fellow_distance = sup;
  return res;
}

// ---------------------------------------------------------------------------
// parametrizations along a geodesic

namespace detail {

// foot of the hyperbolic perpendicular from z onto the geodesic, as the
// unit-speed parameter value of the standard parametrization
inline double geodesic_foot_param(const H2Geodesic& g, double x, double y) {
  if (g.vertical) {
    // foot at (x0, |z - (x0,0)|); parameter log y against reference y = 1
    return std::log(std::hypot(x - g.x0, y));
  }
  // Use the endpoint map w = (z - (c+R)) / (z - (c-R)), which sends the
  // geodesic to a ray through the origin.  On the standard chart
  // z(t) = c + R(tanh t, sech t) one gets |z-(c+R)|^2 = 2R^2(1 - tanh t) and
  // |z-(c-R)|^2 = 2R^2(1 + tanh t), so |w|^2 = e^{-2t} and t = -log|w|; the
  // same value is the foot parameter for off-geodesic points because |w| is
  // constant on circles of perpendicular incidence.
  const std::complex<double> z(x, y);
  const std::complex<double> w = (z - std::complex<double>(g.c + g.R, 0.0)) /
                                 (z - std::complex<double>(g.c - g.R, 0.0));
  return -std::log(std::abs(w));
}

inline void geodesic_point(const H2Geodesic& g, double t, vec_t& x, vec_t& v) {
  if (g.vertical) {
    x.resize(2);
    v.resize(2);
    x << g.x0, std::exp(t);
    v << 0.0, std::exp(t);
    return;
  }
  const double th = std::tanh(t), se = 1.0 / std::cosh(t);
  x.resize(2);
  v.resize(2);
  x << g.c + g.R * th, g.R * se;
  v << g.R * se * se, -g.R * se * th;
}

}  // namespace detail

inline double h2_distance(double x1, double y1, double x2, double y2) {
  const double num = std::hypot(x2 - x1, y2 - y1);
  return 2.0 * std::asinh(num / (2.0 * std::sqrt(y1 * y2)));
}

// Fellow-traveling ratio: regression of hyperbolic distance from the curve's
// start against arc length over the final half of the window.  For a curve at
// constant distance d from a geodesic this estimates cosh d (the offset
// cancels in the slope).
inline double quasigeodesic_ratio(const ModelSpace& sp, const SampledCurve& c) {
  const int n = c.n();
  if (n < 16) fail("shadow.samples", "ratio regression needs more samples");
  const double x0 = c.xs(0, 0), y0 = c.xs(0, 1);
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  double arc = 0.0;
  for (int i = 1; i < n; ++i) {
    vec_t xm = 0.5 * (c.xs.row(i) + c.xs.row(i - 1)).transpose();
    vec_t vm = 0.5 * (c.vs.row(i) + c.vs.row(i - 1)).transpose();
    arc += sp.tangent_norm(xm, vm) * (c.ts[i] - c.ts[i - 1]);
    if (i < n / 2) continue;
    const double dist = h2_distance(x0, y0, c.xs(i, 0), c.xs(i, 1));
    sw += 1.0;
    sx += arc;
    sy += dist;
    sxx += arc * arc;
    sxy += arc * dist;
  }
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  if (slope <= 0.0 || slope > 1.0 + 1e-9)
    fail("shadow.ratio", "distance growth slope outside (0, 1]");
  return 1.0 / slope;
}

// Resample a curve to unit metric speed.  Cumulative arc length by midpoint
// quadrature; inversion bracket by binary search; positions by cubic Hermite
// with the exact sampled velocities as derivatives, velocities likewise with
// finite-difference accelerations, then normalized onto the unit sphere
// bundle.  The accuracy check compares the norm of the interpolated velocity
// against an independently interpolated scalar speed: both target the same
// pointwise quantity, so their relative mismatch measures the sampling
// resolution without penalizing genuine within-interval speed variation.
inline SampledCurve arclength_reparam(const ModelSpace& sp, const SampledCurve& c,
                                      double tol = 1e-6) {
  const int n = c.n();
  if (n < 5) fail("shadow.samples", "reparametrization needs more samples");
  std::vector<double> s(n, 0.0), gs(n, 0.0);
  {
    vec_t xk = c.xs.row(0).transpose(), vk = c.vs.row(0).transpose();
    gs[0] = sp.tangent_norm(xk, vk);
  }
  for (int i = 1; i < n; ++i) {
    vec_t xm = 0.5 * (c.xs.row(i) + c.xs.row(i - 1)).transpose();
    vec_t vm = 0.5 * (c.vs.row(i) + c.vs.row(i - 1)).transpose();
    s[i] = s[i - 1] + sp.tangent_norm(xm, vm) * (c.ts[i] - c.ts[i - 1]);
    vec_t xk = c.xs.row(i).transpose(), vk = c.vs.row(i).transpose();
    gs[i] = sp.tangent_norm(xk, vk);
  }
  const double total = s[n - 1];
  const int m = n;  // keep the sample budget
  SampledCurve out;
  out.ts.resize(m);
  out.xs.resize(m, c.xs.cols());
  out.vs.resize(m, c.xs.cols());
  double worst = 0.0;
  for (int j = 0; j < m; ++j) {
    const double st = total * j / (m - 1);
    int i = static_cast<int>(std::upper_bound(s.begin(), s.end(), st) - s.begin());
    i = std::min(std::max(i, 1), n - 1);
    const double ds = s[i] - s[i - 1];
    const double th = ds > 0 ? (st - s[i - 1]) / ds : 0.0;
    const double dt = c.ts[i] - c.ts[i - 1];
    // Hermite basis on [0,1]
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
    vec_t x = h00 * c.xs.row(i - 1).transpose() + h01 * c.xs.row(i).transpose() +
              dt * (h10 * c.vs.row(i - 1).transpose() + h11 * c.vs.row(i).transpose());
    // velocity by the same scheme with FD accelerations as knot derivatives
    auto accel = [&](int k) -> vec_t {
      const int a = std::max(0, k - 1), b = std::min(n - 1, k + 1);
      return (c.vs.row(b) - c.vs.row(a)).transpose() / (c.ts[b] - c.ts[a]);
    };
    vec_t v = h00 * c.vs.row(i - 1).transpose() + h01 * c.vs.row(i).transpose() +
              dt * (h10 * accel(i - 1) + h11 * accel(i));
    const double sp_here = sp.tangent_norm(x, v);
    auto dspeed = [&](int kk) -> double {  // FD slope of the sampled speed
      const int a = std::max(0, kk - 1), b = std::min(n - 1, kk + 1);
      return (gs[b] - gs[a]) / (c.ts[b] - c.ts[a]);
    };
    const double g_here = h00 * gs[i - 1] + h01 * gs[i] +
                          dt * (h10 * dspeed(i - 1) + h11 * dspeed(i));
    worst = std::max(worst, std::abs(sp_here / g_here - 1.0));
    out.ts[j] = st;
    out.xs.row(j) = x.transpose();
    out.vs.row(j) = (v / sp_here).transpose();
  }
  if (worst > std::max(tol * 1e2, 1e-4))
    fail("shadow.reparam", "sampling too coarse for arc-length accuracy " +
                               std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// averaged line-integral comparison

struct AverageDifference {
  double measured = 0.0;    // (1/T) |int omega(curve') - omega(shadow')|
  double bound = 0.0;       // (A + D) * kappa_max from certified bounds
  double quad_error = 0.0;  // Simpson-vs-trapezoid discrepancy estimate
  double kappa_max = 0.0;
  double tol() const { return 1e-6 + quad_error; }
};

// Both curves arc-length parametrized over a window of length T starting at
// the curve midpoint; the shadow geodesic is paired through the foot of the
// perpendicular at the window start and oriented to match.
inline AverageDifference average_difference(const ModelSpace& sp, const AnalyticForm& form,
                                            const SampledCurve& curve, double T,
                                            const ShadowResult* shadow_in = nullptr) {
  if (sp.kind != SpaceKind::half_space || sp.dim != 2)
    fail("shadow.space", "average comparison is wired for the half-plane chart");
  if (!(form.cert_sup < 1e300) || !(form.cert_dsup < 1e300))
    fail("shadow.bound", "averaged comparison needs certified form bounds");
  ShadowResult local;
  if (!shadow_in) {
    local = shadow_geodesic(sp, curve);
    shadow_in = &local;
  }
  const H2Geodesic& g = shadow_in->geodesic;

  const int n = curve.n();
  const int mid = n / 2;
  // locate the window [t_mid, t_mid + T] assuming unit speed (verified)
  const double t0 = curve.ts[mid];
  int end = mid;
  while (end + 1 < n && curve.ts[end] - t0 < T) ++end;
  if (curve.ts[end] - t0 < T * (1.0 - 1e-9))
    fail("shadow.window", "curve too short for the averaging window");
  {
    vec_t xm = curve.xs.row(mid).transpose(), vm = curve.vs.row(mid).transpose();
    const double s = sp.tangent_norm(xm, vm);
    if (std::abs(s - 1.0) > 1e-6)
      fail("shadow.reparam", "averaging needs a unit-speed curve");
  }

  // pair the geodesic by the foot parameter and matching direction
  double tg0 = detail::geodesic_foot_param(g, curve.xs(mid, 0), curve.xs(mid, 1));
  vec_t gx(2), gv(2);
  detail::geodesic_point(g, tg0, gx, gv);
  const double along = gv.dot(curve.vs.row(mid).transpose());
  const double dir = along >= 0.0 ? 1.0 : -1.0;

  // integrand samples for curve and shadow on the same grid
  const int m = end - mid;
  vec_t fc(m + 1), fg(m + 1);
  for (int i = 0; i <= m; ++i) {
    const vec_t x = curve.xs.row(mid + i).transpose();
    const vec_t v = curve.vs.row(mid + i).transpose();
    fc[i] = form.eval(x).dot(v);
    const double tg = tg0 + dir * (curve.ts[mid + i] - t0);
    detail::geodesic_point(g, tg, gx, gv);
    fg[i] = form.eval(gx).dot(dir * gv);
  }
  auto trap = [&](const vec_t& f) {
    double s = 0.0;
    for (int i = 1; i <= m; ++i)
      s += 0.5 * (f[i] + f[i - 1]) * (curve.ts[mid + i] - curve.ts[mid + i - 1]);
    return s;
  };
  auto simpson = [&](const vec_t& f) {
    double s = 0.0;
    int i = 2;
    for (; i <= m; i += 2) {
      const double h2 = curve.ts[mid + i] - curve.ts[mid + i - 2];
      s += h2 / 6.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
    }
    if (i - 1 <= m)  // odd tail
      s += 0.5 * (f[m] + f[m - 1]) * (curve.ts[mid + m] - curve.ts[mid + m - 1]);
    return s;
  };
  const double span = curve.ts[end] - t0;
  AverageDifference out;
  const double diff_s = simpson(fc) - simpson(fg);
  const double diff_t = trap(fc) - trap(fg);
  out.measured = std::abs(diff_s) / span;
  out.quad_error = std::abs(diff_s - diff_t) / span + 1e-12;

  vec_t kap = geodesic_curvature(sp, curve);
  const int kcount = std::min(m + 1, curve.n() - 1 - mid);
  out.kappa_max = kap.segment(mid - 1, kcount).cwiseAbs().maxCoeff();
  out.bound = (form.cert_sup + form.cert_dsup) * out.kappa_max;
  if (out.measured > out.bound + out.tol())
    fail("shadow.bound", "averaged difference exceeded (A+D)kappa");
  return out;
}

// ---------------------------------------------------------------------------
// aggregate report

struct ShadowReport {
  double kappa_max = 0.0;
  double quasi_constant = 1.0;   // (1 - kappa^2)^{-1/2}
  double measured_ratio = 1.0;   // regression estimate of the same constant
  ShadowResult shadow;
  double measured = 0.0, bound = 0.0;  // averaged-integral comparison
  double quad_error = 0.0;
};

inline ShadowReport make_shadow_report(const ModelSpace& sp, const AnalyticForm& form,
                                       const SampledCurve& curve, double T_avg) {
  ShadowReport rep;
  rep.kappa_max = geodesic_curvature(sp, curve).cwiseAbs().maxCoeff();
  rep.quasi_constant = quasigeodesic_constant(rep.kappa_max);
  rep.shadow = shadow_geodesic(sp, curve);
  AverageDifference ad = average_difference(sp, form, curve, T_avg, &rep.shadow);
  rep.measured = ad.measured;
  rep.bound = ad.bound;
  rep.quad_error = ad.quad_error;
  rep.measured_ratio = quasigeodesic_ratio(sp, curve);
  return rep;
}

}  // namespace maglab
