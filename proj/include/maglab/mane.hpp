#pragma once

// Critical values of magnetic systems by two deliberately independent routes.
//
// Potential route (mesh cochains): c = inf_u (1/2) sup_e (|(d0 u + w)_e| / len_e)^2,
// the edgewise sup norm standing in for the pointwise comass.  The nonsmooth
// minimax is solved by a log-sum-exp temperature homotopy (tau halves until the
// smoothed and exact maxima agree) driven by L-BFGS; the strict variant also
// minimizes over coefficients of a supplied harmonic basis.
//
// Loop route (analytic forms on flat charts): bisection on the action level k.
// A level is sub-critical when some closed polyline has negative magnetic
// action; the period is eliminated analytically, leaving a descent over node
// positions of  sqrt(2k)*sqrt(N * sum |dx|^2) - loop-integral(w).  Negative
// action at level k certifies circulation/length > sqrt(2k) for that loop,
// which is also the witness quantity reported for the null-homologous bound.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "maglab/dec.hpp"
#include "maglab/forms.hpp"
#include "maglab/mesh.hpp"
#include "maglab/model_space.hpp"
#include "maglab/opt.hpp"
#include "maglab/system.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct CriticalValueReport {
  double c = 0.0;
  vec_t u;              // optimizing 0-cochain potential
  vec_t h;              // harmonic coefficients (empty for the plain solve)
  double max_edge = 0.0;  // final exact sup of |du + w|/len
  double gnorm = 0.0;
  double tau_final = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// smoothed sup of |r| over both signs, shift-stabilized:
//   f = m + tau * log( sum_e exp((r_e - m)/tau) + exp((-r_e - m)/tau) )
// with dthe/dr_e returned in w.
inline double lse_abs_max(const vec_t& r, double tau, vec_t& w) {
  const double m = r.cwiseAbs().maxCoeff();
  double z = 0.0;
  w.resize(r.size());
  for (Eigen::Index e = 0; e < r.size(); ++e) {
    double p = std::exp((r[e] - m) / tau);
    double q = std::exp((-r[e] - m) / tau);
    z += p + q;
    w[e] = p - q;
  }
  w /= z;
  return m + tau * std::log(z);
}

}  // namespace detail

// Joint minimax solve over a potential and (optionally) harmonic coefficients.
// `basis` may have zero columns.
inline CriticalValueReport critical_value_minimax(const Dec& dec, const vec_t& omega,
                                                  const mat_t& basis, double tol = 1e-8) {
  const Mesh& m = *dec.mesh;
  const int V = m.n_vertices();
  const int B = static_cast<int>(basis.cols());
  if (basis.rows() != 0 && basis.rows() != m.n_edges())
    fail("mane.basis", "harmonic basis has the wrong edge count");
  const vec_t inv_len = m.vol1.cwiseInverse();

  vec_t vars = vec_t::Zero(V + B);
  double tau = 1.0;
  CriticalValueReport rep;
  double prev_max = 1e300;

  auto residual = [&](const vec_t& x) -> vec_t {
    vec_t w = omega + dec.d(0) * x.head(V);
    if (B > 0) w += basis * x.tail(B);
    return w.cwiseProduct(inv_len);
  };

  for (int level = 0; level < 40; ++level) {
    objective_t fg = [&](const vec_t& x, vec_t& g) {
      vec_t r = residual(x);
      vec_t wgt;
      double f = detail::lse_abs_max(r, tau, wgt);
      vec_t chain = wgt.cwiseProduct(inv_len);
      g.resize(x.size());
      g.head(V) = dec.d(0).transpose() * chain;
      if (B > 0) g.tail(B) = basis.transpose() * chain;
      return f;
    };
    LbfgsOptions opt;
    opt.gtol = std::max(tol, 0.02 * tau);
    opt.max_iter = 400;
    LbfgsResult res = lbfgs_minimize(fg, vars, opt);
    vars = res.x;
    rep.iterations += res.iterations;
    rep.gnorm = res.gnorm;
    rep.converged = res.converged;
    rep.tau_final = tau;

    const double exact = residual(vars).cwiseAbs().maxCoeff();
    const double gap = res.f - exact;  // >= 0, <= tau*log(2E)
    const bool settled = std::abs(exact - prev_max) <= std::max(tol, 1e-10) &&
                         gap <= std::max(tol, 1e-7) * (1.0 + exact);
    prev_max = exact;
    if (settled && level > 2) break;
    tau *= 0.5;
    if (tau < 1e-8) break;
  }

  rep.max_edge = residual(vars).cwiseAbs().maxCoeff();
  rep.c = 0.5 * rep.max_edge * rep.max_edge;
  rep.u = vars.head(V);
  rep.u.array() -= rep.u.mean();  // fix the constant gauge
  rep.h = vars.tail(B);
  return rep;
}

inline CriticalValueReport critical_value_hamiltonian(const Dec& dec, const vec_t& omega,
                                                      double tol = 1e-8) {
  return critical_value_minimax(dec, omega, mat_t(0, 0), tol);
}

inline CriticalValueReport critical_value_hamiltonian(const MagneticSystem& sys,
                                                      double tol = 1e-8) {
  return critical_value_hamiltonian(*sys.dec, sys.omega, tol);
}

inline CriticalValueReport strict_critical_value(const Dec& dec, const vec_t& omega,
                                                 const mat_t& harmonic_basis_mat,
                                                 double tol = 1e-8) {
  return critical_value_minimax(dec, omega, harmonic_basis_mat, tol);
}

inline CriticalValueReport strict_critical_value(const MagneticSystem& sys,
                                                 double tol = 1e-8) {
  mat_t basis = basis_matrix(harmonic_basis(*sys.dec), sys.dec->mesh->n_edges());
  return critical_value_minimax(*sys.dec, sys.omega, basis, tol);
}

// max over edges of (1/2) r_e^2 - c; <= 0 (up to tol) certifies a subsolution.
inline double subsolution_defect(const Dec& dec, const vec_t& u, const vec_t& omega,
                                 double c) {
  vec_t r = (omega + dec.d(0) * u).cwiseProduct(dec.mesh->vol1.cwiseInverse());
  return 0.5 * r.cwiseAbs().maxCoeff() * r.cwiseAbs().maxCoeff() - c;
}

// Pointwise variant for differentiable potentials on the model space; the
// gradient of u is taken by central differences at deterministic samples.
inline double subsolution_defect_analytic(const MagneticSystem& sys,
                                          const std::function<double(const vec_t&)>& u,
                                          double c, int n_samples = 2000) {
  const ModelSpace& sp = sys.space;
  double worst = -1e300;
  for (int k = 0; k < n_samples; ++k) {
    vec_t x = detail::halton_point(sp, k);
    const int d = sp.point_dim();
    vec_t grad(d);
    for (int i = 0; i < d; ++i) {
      vec_t xp = x, xm = x;
      const double h = 1e-5;
      xp[i] += h;
      xm[i] -= h;
      grad[i] = (u(xp) - u(xm)) / (2.0 * h);
    }
    vec_t w = grad + sys.eval_form(x);
    double s = covector_norm(sp, x, w);
    worst = std::max(worst, 0.5 * s * s - c);
  }
  return worst;
}

// u(x(t1)) - u(x(t0)) - integral of (c + L) with L = |v|^2/2 - w(v); evaluated
// from a stored trajectory, whose form-integral series supplies the w term.
// Nonpositive for subsolutions; zero on calibrated segments.
template <class Traj>
inline double calibration_defect(const std::function<double(const vec_t&)>& u, double c,
                                 const Traj& traj, double t0, double t1) {
  if (t1 <= t0 || t0 < traj.ts.front() || t1 > traj.ts.back() + 1e-12)
    fail("mane.window", "calibration window outside the trajectory");
  auto sample = [&](double t, vec_t& x, double& I) {
    auto it = std::lower_bound(traj.ts.begin(), traj.ts.end(), t);
    int j = static_cast<int>(std::min<std::ptrdiff_t>(
        std::max<std::ptrdiff_t>(it - traj.ts.begin(), 1), traj.n() - 1));
    double a = (t - traj.ts[j - 1]) / (traj.ts[j] - traj.ts[j - 1]);
    x = (1.0 - a) * traj.xs.row(j - 1).transpose() + a * traj.xs.row(j).transpose();
    I = (1.0 - a) * traj.omega_integral[j - 1] + a * traj.omega_integral[j];
  };
  vec_t x0, x1;
  double I0, I1;
  sample(t0, x0, I0);
  sample(t1, x1, I1);
  const double kinetic = 0.5 * traj.speed * traj.speed * (t1 - t0);
  return u(x1) - u(x0) - (c * (t1 - t0) + kinetic - (I1 - I0));
}

// Barycentric interpolation of a vertex cochain, wrapping into the mesh's
// fundamental domain first (structured 2d tori).
inline std::function<double(const vec_t&)> interpolate_potential(const Mesh& m,
                                                                 vec_t u) {
  return [&m, u = std::move(u)](const vec_t& x) {
    auto [tri, bc] = m.locate(x);
    double val = 0.0;
    for (int i = 0; i < 3; ++i) val += bc[i] * u[m.tris[tri][i]];
    return val;
  };
}

// ---------------------------------------------------------------------------
// loop route

struct LoopWitness {
  mat_t nodes;  // N x dim, universal-cover coordinates
  std::array<long, 2> winding{0, 0};
  double action = 1e300;    // S_k at the optimal period
  double length = 0.0;      // polyline length
  double circulation = 0.0; // loop integral of w
  double ratio = 0.0;       // circulation / length
  double k = 0.0;
};

struct LagrangianOptions {
  int nodes = 64;
  int seeds_per_class = 16;
  double tol = 1e-3;  // absolute bisection tolerance on k
  bool nullhomologous_only = false;
  std::vector<std::array<long, 2>> classes;  // empty -> defaults per space
  std::vector<int> dipole_wraps = {2, 8, 32, 64};
  int max_iter = 250;
  std::uint64_t seed = 0x10093;
};

struct LagrangianReport {
  double c = 0.0;
  double k_lo = 0.0, k_hi = 0.0;
  LoopWitness best;  // deepest negative-action loop at the last sub-critical k
  bool found_any = false;
};

namespace detail {

struct LoopProblem {
  const MagneticSystem* sys;
  int N;
  vec_t wind_shift;  // displacement after one circuit (winding . periods)

  // action at the optimal period plus length/circulation bookkeeping
  double eval(const vec_t& flat, double k, vec_t* grad, double* length,
              double* circulation) const {
    const int dim = sys->space.dim;
    auto node = [&](int i) { return flat.segment(i * dim, dim); };
    static const double xi[3] = {0.5 - std::sqrt(0.15), 0.5, 0.5 + std::sqrt(0.15)};
    static const double wq[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

    double Q = 0.0, W = 0.0, L = 0.0;
    if (grad) grad->setZero();
    vec_t delta(dim), p(dim), wv(dim);
    for (int i = 0; i < N; ++i) {
      const int j = (i + 1) % N;
      delta = node(j) - node(i);
      if (j == 0) delta += wind_shift;
      Q += delta.squaredNorm();
      L += delta.norm();
      for (int q = 0; q < 3; ++q) {
        p = node(i) + xi[q] * delta;
        wv = sys->eval_form(p);
        W += wq[q] * wv.dot(delta);
        if (grad) {
          // d(w(p).delta)/dnodes: field Jacobian by central differences
          vec_t jw = vec_t::Zero(dim);  // (Dw)^T delta
          for (int a = 0; a < dim; ++a) {
            vec_t pp = p, pm = p;
            const double h = 1e-6 * (1.0 + p.cwiseAbs().maxCoeff());
            pp[a] += h;
            pm[a] -= h;
            jw[a] = (sys->eval_form(pp) - sys->eval_form(pm)).dot(delta) / (2.0 * h);
          }
          grad->segment(i * dim, dim) -= wq[q] * ((1.0 - xi[q]) * jw - wv);
          grad->segment(j * dim, dim) -= wq[q] * (xi[q] * jw + wv);
        }
      }
    }
    const double root = std::sqrt(std::max(static_cast<double>(N) * Q, 1e-30));
    if (grad) {
      const double scale = std::sqrt(2.0 * k) * N / root;
      for (int i = 0; i < N; ++i) {
        const int j = (i + 1) % N;
        delta = node(j) - node(i);
        if (j == 0) delta += wind_shift;
        grad->segment(i * dim, dim) -= scale * delta;
        grad->segment(j * dim, dim) += scale * delta;
      }
    }
    if (length) *length = L;
    if (circulation) *circulation = W;
    return std::sqrt(2.0 * k) * root - W;
  }
};

inline vec_t loop_seed(const ModelSpace& sp, const std::array<long, 2>& wind, int N,
                       rng_t& rng) {
  std::uniform_real_distribution<double> un(0.0, 1.0);
  const int dim = sp.dim;
  const double Px = sp.kind == SpaceKind::flat_torus ? sp.periods[0] : 2.0;
  const double Py = sp.kind == SpaceKind::flat_torus ? sp.periods[1] : 2.0;
  vec_t flat(N * dim);
  const double cx = Px * un(rng), cy = Py * un(rng);
  double amp[2][3], phs[2][3];
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 3; ++j) {
      amp[c][j] = (0.15 + 0.5 * un(rng)) * (wind[0] == 0 && wind[1] == 0 ? 1.0 : 0.4);
      phs[c][j] = 2.0 * kPi * un(rng);
    }
  for (int i = 0; i < N; ++i) {
    const double th = 2.0 * kPi * i / N;
    double x = cx + wind[0] * Px * i / static_cast<double>(N);
    double y = cy + wind[1] * Py * i / static_cast<double>(N);
    for (int j = 0; j < 3; ++j) {
      x += amp[0][j] * std::sin((j + 1) * th + phs[0][j]);
      y += amp[1][j] * std::sin((j + 1) * th + phs[1][j]);
    }
    flat[i * dim] = x;
    flat[i * dim + 1] = y;
  }
  return flat;
}

// Null-homologous "dipole": m wraps upward along one vertical line, m wraps
// downward along another, joined by two horizontal jogs; also the
// x-axis-wrapped variant.  Node budget is spread by arc length.
inline vec_t dipole_seed(const ModelSpace& sp, int m, bool wrap_y, int N, rng_t& rng) {
  std::uniform_real_distribution<double> un(0.0, 1.0);
  const double Px = sp.periods[0], Py = sp.periods[1];
  const double a = (wrap_y ? Px : Py) * un(rng);
  const double b = a + (wrap_y ? Px : Py) * 0.5;
  const double leg = m * (wrap_y ? Py : Px);
  const double jog = (wrap_y ? Px : Py) * 0.5;
  const double total = 2.0 * leg + 2.0 * jog;
  // corner sequence in (along, across): up leg, jog, down leg, jog back
  auto place = [&](double s, double& along, double& across) {
    if (s < leg) {
      across = a;
      along = s;
    } else if (s < leg + jog) {
      across = a + (s - leg);
      along = leg;
    } else if (s < 2.0 * leg + jog) {
      across = b;
      along = leg - (s - leg - jog);
    } else {
      across = b - (s - 2.0 * leg - jog) + (wrap_y ? Px : Py) * 0.0;
      along = 0.0;
    }
  };
  vec_t flat(N * 2);
  for (int i = 0; i < N; ++i) {
    double along, across;
    place(total * i / static_cast<double>(N), along, across);
    const double jx = 0.02 * (un(rng) - 0.5), jy = 0.02 * (un(rng) - 0.5);
    flat[i * 2] = (wrap_y ? across : along) + jx;
    flat[i * 2 + 1] = (wrap_y ? along : across) + jy;
  }
  return flat;
}

}  // namespace detail

// Bisection on k for the loop route.  Requires an analytic form on a flat
// chart (plane or torus).  Returning report.c is an under-approximation by
// construction (polyline family, finite seeds); k_hi starts from the
// certified bound sup|w|^2/2 * 1.05 above which no loop can be negative.
inline LagrangianReport critical_value_lagrangian(const MagneticSystem& sys,
                                                  LagrangianOptions opt = {}) {
  const ModelSpace& sp = sys.space;
  if (!sys.form || sp.dim != 2 ||
      (sp.kind != SpaceKind::flat_torus && sp.kind != SpaceKind::euclidean))
    fail("mane.unsupported", "loop-route solver needs an analytic form on a flat 2d chart");
  if (!sys.bounds_certified)
    fail("mane.bound", "loop-route bisection needs a certified sup bound for the form");

  std::vector<std::array<long, 2>> classes = opt.classes;
  if (classes.empty()) {
    classes.push_back({0, 0});
    if (sp.kind == SpaceKind::flat_torus && !opt.nullhomologous_only)
      for (auto w : std::initializer_list<std::array<long, 2>>{
               {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}})
        classes.push_back(w);
  } else if (opt.nullhomologous_only) {
    classes.assign(1, {0, 0});
  }

  detail::LoopProblem prob{&sys, opt.nodes, vec_t::Zero(2)};

  LagrangianReport rep;
  auto probe = [&](double k, LoopWitness* keep) {
    bool neg = false;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
      const auto wind = classes[ci];
      prob.wind_shift = vec_t::Zero(2);
      if (sp.kind == SpaceKind::flat_torus) {
        prob.wind_shift[0] = wind[0] * sp.periods[0];
        prob.wind_shift[1] = wind[1] * sp.periods[1];
      } else if (wind[0] != 0 || wind[1] != 0) {
        continue;  // plane: only null class exists
      }
      std::vector<vec_t> seeds;
      rng_t rng(derive_seed(opt.seed, 17 + static_cast<std::uint64_t>(ci)));
      for (int s = 0; s < opt.seeds_per_class; ++s)
        seeds.push_back(detail::loop_seed(sp, wind, opt.nodes, rng));
      if (wind[0] == 0 && wind[1] == 0 && sp.kind == SpaceKind::flat_torus)
        for (int m : opt.dipole_wraps) {
          seeds.push_back(detail::dipole_seed(sp, m, true, opt.nodes, rng));
          seeds.push_back(detail::dipole_seed(sp, m, false, opt.nodes, rng));
        }
      for (auto& s0 : seeds) {
        objective_t fg = [&](const vec_t& x, vec_t& g) {
          g.resize(x.size());
          return prob.eval(x, k, &g, nullptr, nullptr);
        };
        LbfgsOptions lo;
        lo.gtol = 1e-7;
        lo.max_iter = opt.max_iter;
        lo.stop_below = -10.0 * opt.tol;
        LbfgsResult r = lbfgs_minimize(fg, s0, lo);
        double len = 0.0, circ = 0.0;
        const double act = prob.eval(r.x, k, nullptr, &len, &circ);
        if (act < -opt.tol) {
          neg = true;
          if (keep && act < keep->action) {
            keep->nodes.resize(opt.nodes, 2);
            for (int i = 0; i < opt.nodes; ++i)
              keep->nodes.row(i) = r.x.segment(i * 2, 2).transpose();
            keep->winding = wind;
            keep->action = act;
            keep->length = len;
            keep->circulation = circ;
            keep->ratio = len > 0 ? circ / len : 0.0;
            keep->k = k;
          }
          if (!keep) return true;  // existence is all the bisection needs
        }
      }
    }
    return neg;
  };

  double hi = 0.5 * sys.bound_sup * sys.bound_sup * 1.05 + opt.tol;
  if (probe(hi, nullptr))
    fail("mane.bracket", "negative action above the certified bound; scanned up to k=" +
                             std::to_string(hi));
  LoopWitness best;
  if (!probe(0.0 + 0.25 * opt.tol, &best)) {
    rep.c = 0.0;
    rep.k_hi = hi;
    return rep;  // no negative loops even near k = 0
  }
  rep.found_any = true;
  rep.best = best;
  double lo = 0.25 * opt.tol;
  while (hi - lo > opt.tol) {
    const double mid = 0.5 * (lo + hi);
    LoopWitness w;
    if (probe(mid, &w)) {
      lo = mid;
      rep.best = w;
    } else {
      hi = mid;
    }
  }
  rep.k_lo = lo;
  rep.k_hi = hi;
  rep.c = 0.5 * (lo + hi);
  return rep;
}

// ---------------------------------------------------------------------------
// finite covers of the torus

struct CoverEstimate {
  int order = 1;
  double c = 0.0;
};

// Potential-route critical value on the n x n covers: same physical form and
// mesh spacing, periods scaled by the order.  The raw sequence is reported
// (monotone upper bounds for the universal-cover value; no extrapolation).
inline std::vector<CoverEstimate> universal_critical_value_estimate(
    const ModelSpace& base_space, std::array<int, 2> base_dims, const AnalyticForm& form,
    const std::vector<int>& orders, double tol = 1e-8) {
  if (base_space.kind != SpaceKind::flat_torus || base_space.dim != 2)
    fail("mane.unsupported", "cover tower needs a flat 2d torus");
  std::vector<CoverEstimate> out;
  for (int n : orders) {
    const long nx = static_cast<long>(base_dims[0]) * n;
    const long ny = static_cast<long>(base_dims[1]) * n;
    if (nx * ny > 600000L)
      fail("mane.resource", "cover order " + std::to_string(n) + " exceeds the mesh budget");
    vec_t periods = base_space.periods * static_cast<double>(n);
    ModelSpace cover = flat_torus(periods);
    // diagonal layout: keeps horizontal/vertical edges exact so the covers
    // measure the same edgewise sup-norm family as the base scenario meshes
    auto mesh = std::make_shared<Mesh>(
        torus2_diagonal(periods[0], periods[1], static_cast<int>(nx), static_cast<int>(ny)));
    MagneticSystem sys = make_system(cover, std::move(mesh), form, -1.0, 0);
    CriticalValueReport rep = critical_value_hamiltonian(sys, tol);
    out.push_back({n, rep.c});
  }
  return out;
}

}  // namespace maglab
