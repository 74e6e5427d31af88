#pragma once

// Small dense quasi-Newton kit: limited-memory BFGS with an Armijo
// backtracking line search.  Used by the smoothed-minimax potential solver
// and by the loop-family action descent.  Objectives are supplied as a
// single callback computing value and gradient.

#include <cmath>
#include <deque>
#include <functional>

#include "maglab/util.hpp"

namespace maglab {

using objective_t = std::function<double(const vec_t&, vec_t&)>;

struct LbfgsOptions {
  double gtol = 1e-8;        // stop when ||g||_inf <= gtol * (1 + |f|)
  double ftol = 1e-14;       // stop on relative objective stagnation
  int max_iter = 500;
  int memory = 10;
  double stop_below = -1e300;  // early exit once f drops under this
};

struct LbfgsResult {
  vec_t x;
  double f = 0.0;
  double gnorm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline LbfgsResult lbfgs_minimize(const objective_t& fg, vec_t x0,
                                  LbfgsOptions opt = {}) {
  const int n = static_cast<int>(x0.size());
  vec_t g(n), gn(n);
  double f = fg(x0, g);
  std::deque<vec_t> S, Y;
  std::deque<double> rho;

  LbfgsResult res;
  res.x = x0;
  res.f = f;
  res.gnorm = g.lpNorm<Eigen::Infinity>();

  for (int it = 0; it < opt.max_iter; ++it) {
    if (res.gnorm <= opt.gtol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }
    if (f < opt.stop_below) break;

    // two-loop recursion
    vec_t q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) {
      double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    vec_t d = -q;
    double slope = g.dot(d);
    if (slope >= 0.0) {  // stale curvature; fall back to steepest descent
      d = -g;
      slope = -g.squaredNorm();
      S.clear();
      Y.clear();
      rho.clear();
    }

    double step = 1.0;
    double fn = f;
    vec_t xn = res.x;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = res.x + step * d;
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) {
      res.converged = res.gnorm <= 1e3 * opt.gtol * (1.0 + std::abs(f));
      break;  // line search exhausted: at numerical floor
    }

    vec_t s = xn - res.x;
    vec_t y = gn - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    double df = f - fn;
    res.x = xn;
    f = fn;
    g = gn;
    res.gnorm = g.lpNorm<Eigen::Infinity>();
    res.iterations = it + 1;
    res.f = f;
    if (df >= 0.0 && df <= opt.ftol * (1.0 + std::abs(f))) {
      res.converged = res.gnorm <= 1e3 * opt.gtol * (1.0 + std::abs(f));
      break;
    }
  }
  res.f = f;
  return res;
}

}  // namespace maglab
