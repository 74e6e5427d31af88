#pragma once

// Magnetic geodesic flow: Lorentz force evaluation, fixed-step RK4 integration
// of the second-order system with automatic step halving until the metric
// speed drift meets the conservation budget, line-integral accumulation of the
// potential form along the orbit (integrated as an extra ODE state, so it
// inherits the integrator's order), time-averaged comass estimates, and a
// shooting search for periodic orbits.
//
// Charts: flat spaces and the hyperbolic half-space integrate in chart
// coordinates (tori in the universal cover, unwrapped); the sphere integrates
// in ambient R^3 where the constraint |x| = r is preserved by the dynamics.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "maglab/forms.hpp"
#include "maglab/model_space.hpp"
#include "maglab/system.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct Trajectory {
  std::vector<double> ts;
  mat_t xs, vs;          // row per retained sample
  vec_t omega_integral;  // running integral of omega(gamma_dot), same sampling
  double speed = 0.0;    // metric speed at t = 0
  double drift = 0.0;    // max relative metric-speed deviation over the run
  double step = 0.0;     // accepted step size
  bool exited = false;   // left the chart before reaching T

  int n() const { return static_cast<int>(ts.size()); }
  double horizon() const { return ts.empty() ? 0.0 : ts.back(); }
};

// Lorentz force Y with g(Y(u),v) = sign * domega(u,v).
inline vec_t lorentz_force(const MagneticSystem& sys, const vec_t& x, const vec_t& v) {
  const ModelSpace& sp = sys.space;
  if (!sys.form) return vec_t::Zero(x.size());
  double sg = sys.lorentz_sign;
  switch (sp.kind) {
    case SpaceKind::euclidean:
    case SpaceKind::flat_torus: {
      if (sp.dim != 2) {
        if (sys.form->cert_dsup == 0.0) return vec_t::Zero(x.size());
        fail("flow.unsupported", "magnetic flow in flat 3d charts is not wired up");
      }
      double b = sys.eval_dcoeff(x);
      vec_t y(2);
      y << -sg * b * v[1], sg * b * v[0];
      return y;
    }
    case SpaceKind::half_space: {
      if (sp.dim != 2) {
        if (sys.form->cert_dsup == 0.0) return vec_t::Zero(x.size());
        fail("flow.unsupported", "magnetic flow in half-space dims > 2 is not wired up");
      }
      double b = sys.eval_dcoeff(x) * x[1] * x[1];  // chart coeff -> metric scalar
      vec_t y(2);
      y << -sg * b * v[1], sg * b * v[0];
      return y;
    }
    case SpaceKind::sphere: {
      vec_t n = x / x.norm();
      double b = sys.eval_dcoeff(x);
      vec_t y(3);
      y << n[1] * v[2] - n[2] * v[1], n[2] * v[0] - n[0] * v[2],
          n[0] * v[1] - n[1] * v[0];
      return sg * b * y;
    }
  }
  fail("flow.unsupported", "unknown space kind");
}

struct StepControl {
  double init_step = 5e-3;
  double drift_tol = 1e-8;  // allowed relative speed drift per 100 time units
  int max_halvings = 10;
  int samples = 4000;       // retained dense-output samples
  bool renormalize = false; // project |v|_g back to s each step (off: drift is
                            // the honesty metric)
};

namespace detail {

struct FlowState {
  vec_t x, v;
  double I = 0.0;  // integral of omega(gamma_dot)
};

inline void flow_rhs(const MagneticSystem& sys, const FlowState& s, FlowState& d) {
  d.x = s.v;
  d.v = sys.space.geodesic_accel(s.x, s.v) + lorentz_force(sys, s.x, s.v);
  d.I = sys.form ? sys.eval_form(s.x).dot(s.v) : 0.0;
}

}  // namespace detail

inline Trajectory integrate(const MagneticSystem& sys, const vec_t& x0, const vec_t& v0,
                            double T, StepControl ctl = {}) {
  const ModelSpace& sp = sys.space;
  const double s0 = sp.tangent_norm(x0, v0);
  if (s0 <= 0.0) fail("flow.speed", "initial velocity must be nonzero");
  const double budget = ctl.drift_tol * std::max(1.0, T / 100.0);

  double h = ctl.init_step;
  Trajectory best;
  for (int attempt = 0; attempt <= ctl.max_halvings; ++attempt, h *= 0.5) {
    long steps = std::max(1L, static_cast<long>(std::ceil(T / h)));
    double dt = T / static_cast<double>(steps);
    long stride = std::max(1L, steps / ctl.samples);
    long kept = steps / stride + 1;

    Trajectory traj;
    traj.speed = s0;
    traj.step = dt;
    traj.ts.reserve(kept + 1);
    traj.xs.resize(kept + 1, x0.size());
    traj.vs.resize(kept + 1, x0.size());
    traj.omega_integral = vec_t::Zero(kept + 1);

    detail::FlowState st{x0, v0, 0.0}, k1, k2, k3, k4, tmp;
    double drift = 0.0;
    long row = 0;
    auto record = [&](double t) {
      traj.ts.push_back(t);
      traj.xs.row(row) = st.x.transpose();
      traj.vs.row(row) = st.v.transpose();
      traj.omega_integral[row] = st.I;
      ++row;
    };
    record(0.0);

    bool exited = false;
    for (long k = 0; k < steps; ++k) {
      detail::flow_rhs(sys, st, k1);
      tmp.x = st.x + 0.5 * dt * k1.x;
      tmp.v = st.v + 0.5 * dt * k1.v;
      detail::flow_rhs(sys, tmp, k2);
      tmp.x = st.x + 0.5 * dt * k2.x;
      tmp.v = st.v + 0.5 * dt * k2.v;
      detail::flow_rhs(sys, tmp, k3);
      tmp.x = st.x + dt * k3.x;
      tmp.v = st.v + dt * k3.v;
      detail::flow_rhs(sys, tmp, k4);
      st.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      st.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
      st.I += dt / 6.0 * (k1.I + 2.0 * k2.I + 2.0 * k3.I + k4.I);

      if (sp.kind == SpaceKind::half_space && st.x[sp.dim - 1] <= 1e-12) {
        exited = true;
        record((k + 1) * dt);
        break;
      }
      double sp_now = sp.tangent_norm(st.x, st.v);
      drift = std::max(drift, std::abs(sp_now - s0) / s0);
      if (ctl.renormalize && sp_now > 0) st.v *= s0 / sp_now;
      if ((k + 1) % stride == 0 || k + 1 == steps) record((k + 1) * dt);
    }
    traj.xs.conservativeResize(row, Eigen::NoChange);
    traj.vs.conservativeResize(row, Eigen::NoChange);
    traj.omega_integral.conservativeResize(row);
    traj.drift = drift;
    traj.exited = exited;
    best = std::move(traj);
    if (exited || drift <= budget) return best;
  }
  fail("flow.drift", "speed drift " + std::to_string(best.drift) +
                         " above budget after max halvings");
}

struct TimeAverage {
  double value = 0.0;     // limsup surrogate: max running average, final decade
  double final_avg = 0.0; // |I(T)| / (s T)
  double tail_span = 0.0; // max - min of the running average over that window
};

// (1/(sT)) |int omega(gamma_dot) dt| with the limsup approximated by the max
// of running averages over t in [T/10, T].
inline TimeAverage time_average(const Trajectory& traj) {
  if (traj.n() < 8 || traj.horizon() <= 0.0)
    fail("flow.horizon", "trajectory too short for a time average");
  TimeAverage out;
  const double T = traj.horizon();
  double lo = 1e300, hi = 0.0;
  for (int i = 1; i < traj.n(); ++i) {
    double t = traj.ts[i];
    if (t < T / 10.0) continue;
    double r = std::abs(traj.omega_integral[i]) / (traj.speed * t);
    hi = std::max(hi, r);
    lo = std::min(lo, r);
  }
  out.value = hi;
  out.tail_span = hi - lo;
  out.final_avg = std::abs(traj.omega_integral[traj.n() - 1]) / (traj.speed * T);
  return out;
}

struct ComassReport {
  double estimate = 0.0;
  std::vector<double> per_orbit;
  double tail_span_max = 0.0;
};

// Max of time averages over deterministically seeded speed-s orbits.
inline ComassReport comass_estimate(const MagneticSystem& sys, double s, int n_orbits,
                                    double horizon, StepControl ctl = {}) {
  if (s <= 0.0) fail("flow.speed", "comass needs a positive speed");
  const ModelSpace& sp = sys.space;
  ComassReport rep;
  for (int k = 0; k < n_orbits; ++k) {
    vec_t x0(sp.point_dim()), v0(sp.point_dim());
    if (sp.kind == SpaceKind::sphere) {
      double z = 2.0 * halton(k + 1, 2) - 1.0;
      double phi = 2.0 * kPi * halton(k + 1, 3);
      double rr = std::sqrt(std::max(1e-12, 1.0 - z * z));
      x0 << sp.radius * rr * std::cos(phi), sp.radius * rr * std::sin(phi),
          sp.radius * z;
      vec_t n = x0 / x0.norm();
      vec_t e1(3), e2(3);
      e1 << -std::sin(phi), std::cos(phi), 0.0;
      e2 << n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2],
          n[0] * e1[1] - n[1] * e1[0];
      double psi = 2.0 * kPi * halton(k + 1, 5);
      v0 = s * (std::cos(psi) * e1 + std::sin(psi) * e2);
    } else if (sp.kind == SpaceKind::half_space) {
      x0[0] = 2.0 * halton(k + 1, 2) - 1.0;
      x0[1] = 0.5 + 1.5 * halton(k + 1, 3);
      double psi = 2.0 * kPi * halton(k + 1, 5);
      v0 << std::cos(psi), std::sin(psi);
      v0 *= s * x0[1];  // chart velocity with unit metric norm, scaled
    } else {
      for (int i = 0; i < sp.dim; ++i)
        x0[i] = (static_cast<int>(sp.periods.size()) > i && sp.periods[i] > 0
                     ? sp.periods[i] : 2.0 * kPi) *
                halton(k + 1, i == 0 ? 2 : 3);
      double psi = 2.0 * kPi * halton(k + 1, 5);
      v0 << std::cos(psi), std::sin(psi);
      v0 *= s;
    }
    Trajectory traj = integrate(sys, x0, v0, horizon, ctl);
    TimeAverage ta = time_average(traj);
    // pointwise bound: the running average can never beat sup |omega|_g
    if (sys.bounds_certified && ta.value > sys.bound_sup * (1.0 + 1e-6) + 1e-12)
      fail("flow.bound", "orbit average exceeded the certified sup bound");
    rep.per_orbit.push_back(ta.value);
    rep.estimate = std::max(rep.estimate, ta.value);
    rep.tail_span_max = std::max(rep.tail_span_max, ta.tail_span);
  }
  return rep;
}

struct PeriodicOrbit {
  vec_t x0, v0;
  double period = 0.0;
  double defect = 0.0;
  bool contractible = false;
  std::vector<long> winding;
};

namespace detail {

// phase-space closure defect for a candidate (x0, angle, T)
inline vec_t shoot(const MagneticSystem& sys, const vec_t& x0, double angle, double s,
                   double T, StepControl ctl) {
  vec_t v0(2);
  v0 << s * std::cos(angle), s * std::sin(angle);
  Trajectory tr = integrate(sys, x0, v0, T, ctl);
  vec_t res(4);
  int last = tr.n() - 1;
  res.head(2) = tr.xs.row(last).transpose() - x0;
  res.tail(2) = tr.vs.row(last).transpose() - v0;
  return res;
}

}  // namespace detail

// Shooting search for a closed speed-s orbit of a 2d system.  Seeds are
// scanned for near-returns; promising ones are polished by Levenberg-
// Marquardt on (x0, angle, period) with finite-difference Jacobians.
// Returning nullopt is NOT evidence of absence.
inline std::optional<PeriodicOrbit> find_periodic_orbit(
    const MagneticSystem& sys, double s, int n_seeds, double scan_horizon,
    StepControl ctl = {}) {
  const ModelSpace& sp = sys.space;
  if (sp.dim != 2 || sp.kind == SpaceKind::sphere)
    fail("flow.unsupported", "orbit search is wired for 2d chart spaces");

  for (int seed = 0; seed < n_seeds; ++seed) {
    vec_t x0(2);
    x0[0] = (sp.kind == SpaceKind::flat_torus ? sp.periods[0] : 2.0) * halton(seed + 1, 2);
    x0[1] = (sp.kind == SpaceKind::flat_torus ? sp.periods[1] : 2.0) * halton(seed + 1, 3);
    if (sp.kind == SpaceKind::half_space) x0[1] += 0.5;
    double angle = 2.0 * kPi * halton(seed + 1, 5);

    // scan pass: find the best near-return time
    vec_t v0(2);
    v0 << s * std::cos(angle), s * std::sin(angle);
    Trajectory tr = integrate(sys, x0, v0, scan_horizon, ctl);
    double best_d = 1e300;
    double best_T = 0.0;
    for (int i = 1; i < tr.n(); ++i) {
      if (tr.ts[i] < 0.5 / std::max(0.25, s)) continue;  // skip trivial returns
      vec_t dx = tr.xs.row(i).transpose() - x0;
      if (sp.kind == SpaceKind::flat_torus)
        for (int c = 0; c < 2; ++c) dx[c] = wrap_delta(dx[c], sp.periods[c]);
      double d = dx.norm() + (tr.vs.row(i).transpose() - v0).norm() / std::max(s, 1e-9);
      if (d < best_d) {
        best_d = d;
        best_T = tr.ts[i];
      }
    }
    if (best_T <= 0.0 || best_d > 0.8) continue;

    // Levenberg-Marquardt polish on (x0, angle, T)
    vec_t p(4);
    p << x0[0], x0[1], angle, best_T;
    double lambda = 1e-3;
    double defect = 1e300;
    for (int it = 0; it < 40; ++it) {
      vec_t r = detail::shoot(sys, p.head(2), p[2], s, p[3], ctl);
      if (sp.kind == SpaceKind::flat_torus)
        for (int c = 0; c < 2; ++c) r[c] = wrap_delta(r[c], sp.periods[c]);
      defect = r.norm();
      if (defect <= 1e-7 * s) break;
      mat_t J(4, 4);
      for (int c = 0; c < 4; ++c) {
        vec_t pc = p;
        double h = (c == 3 ? 1e-6 * std::max(1.0, p[3]) : 1e-6);
        pc[c] += h;
        vec_t rc = detail::shoot(sys, pc.head(2), pc[2], s, pc[3], ctl);
        if (sp.kind == SpaceKind::flat_torus)
          for (int cc = 0; cc < 2; ++cc) rc[cc] = wrap_delta(rc[cc], sp.periods[cc]);
        J.col(c) = (rc - r) / h;
      }
      mat_t A = J.transpose() * J + lambda * mat_t::Identity(4, 4);
      vec_t step = A.ldlt().solve(-J.transpose() * r);
      vec_t pn = p + step;
      if (pn[3] < 0.1) pn[3] = 0.1;
      vec_t rn = detail::shoot(sys, pn.head(2), pn[2], s, pn[3], ctl);
      if (sp.kind == SpaceKind::flat_torus)
        for (int cc = 0; cc < 2; ++cc) rn[cc] = wrap_delta(rn[cc], sp.periods[cc]);
      if (rn.norm() < defect) {
        p = pn;
        lambda = std::max(1e-9, lambda * 0.3);
      } else {
        lambda *= 8.0;
        if (lambda > 1e6) break;
      }
    }
    if (defect <= 1e-6 * s) {
      PeriodicOrbit orb;
      orb.x0 = p.head(2);
      orb.v0 = vec_t(2);
      orb.v0 << s * std::cos(p[2]), s * std::sin(p[2]);
      orb.period = p[3];
      orb.defect = defect;
      if (sp.kind == SpaceKind::flat_torus) {
        Trajectory fin = integrate(sys, orb.x0, orb.v0, orb.period, ctl);
        vec_t disp = fin.xs.row(fin.n() - 1).transpose() - orb.x0;
        orb.winding = {std::lround(disp[0] / sp.periods[0]),
                       std::lround(disp[1] / sp.periods[1])};
        orb.contractible = orb.winding[0] == 0 && orb.winding[1] == 0;
      } else {
        orb.winding = {0, 0};
        orb.contractible = true;
      }
      return orb;
    }
  }
  return std::nullopt;
}

}  // namespace maglab
