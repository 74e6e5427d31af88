#pragma once

// Matrix-free Krylov kernels shared by the decomposition and spectral code:
// conjugate gradients and a shift-invert Lanczos eigensolver for symmetric
// pencils (A, M) with M positive definite.  Deterministic by construction:
// fixed iteration order, explicit seeds, no data-dependent pivoting.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "maglab/util.hpp"

namespace maglab {

using op_t = std::function<vec_t(const vec_t&)>;

struct CgResult {
  vec_t x;
  int iterations = 0;
  double rel_residual = 0.0;
};

// Plain (optionally Jacobi-preconditioned) CG.  `A` must be symmetric positive
// semidefinite; singular-but-consistent systems are fine because the iterates
// never leave the Krylov space of b, which lies in range(A) whenever b does.
inline CgResult cg(const op_t& A, const vec_t& b, double tol, int max_iter,
                   const vec_t* diag_precond = nullptr) {
  CgResult out;
  const double bnorm = b.norm();
  out.x = vec_t::Zero(b.size());
  if (bnorm == 0.0) return out;

  vec_t r = b;
  vec_t inv_diag;
  if (diag_precond) {
    inv_diag = diag_precond->cwiseMax(1e-300).cwiseInverse();
  }
  vec_t z = diag_precond ? vec_t(inv_diag.cwiseProduct(r)) : r;
  vec_t p = z;
  double rz = r.dot(z);

  for (int k = 0; k < max_iter; ++k) {
    vec_t Ap = A(p);
    double pAp = p.dot(Ap);
    if (pAp <= 0.0) break;  // left the positive subspace (rounding); bail out
    double alpha = rz / pAp;
    out.x += alpha * p;
    r -= alpha * Ap;
    out.iterations = k + 1;
    out.rel_residual = r.norm() / bnorm;
    if (out.rel_residual <= tol) return out;
    z = diag_precond ? vec_t(inv_diag.cwiseProduct(r)) : r;
    double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return out;
}

struct PencilEig {
  // Ritz approximations for A x = nu M x, recovered from the eigenvalues
  // theta of the spectral-transform operator the Lanczos iteration sees
  // (theta = 1/(nu - sigma) for classic shift-invert).
  std::vector<double> values;       // nu_i
  std::vector<vec_t> vectors;       // M-normalized
  std::vector<double> resid_bound;  // |beta_k y_last| in the transform space
  int steps = 0;
  bool converged = false;
};

// Lanczos with full reorthogonalization in the M-inner product, applied to a
// spectral-transform operator that must be self-adjoint in that product.
//   op     : v -> Op v, e.g. (A - sigma M)^{-1} (M v) for classic shift-invert
//   mapply : v -> M v
//   purify : optional projector applied to every new basis vector (used to pin
//            the iteration to an invariant subspace, e.g. coexact cochains).
// Ritz values theta of Op are mapped back to pencil eigenvalues nu through
// `value_map` (default: the classic inverse nu = sigma + 1/theta).
// Extends the basis until the `want` Ritz pairs ranked by |theta - rank_center|
// (descending) have residual bounds below tol.  rank_center = 0 targets the
// eigenvalues closest to sigma; a nonzero center supports spectral transforms
// whose uninteresting eigenvalues accumulate away from zero.  rank_signed
// switches the ranking to signed theta - rank_center (descending), for
// transforms where the wanted branch lies strictly above every parasitic
// eigenvalue: it keeps kernel images (theta near zero) at the bottom of the
// ranking no matter how far they sit from the accumulation point.
inline PencilEig shift_invert_lanczos(const op_t& op, const op_t& mapply,
                                      double sigma, int n, int want, double tol,
                                      int max_steps, std::uint64_t seed,
                                      const op_t* purify = nullptr,
                                      double rank_center = 0.0,
                                      const std::function<double(double)>* value_map = nullptr,
                                      bool rank_signed = false) {
  PencilEig out;
  auto to_value = [&](double theta) {
    return value_map ? (*value_map)(theta) : sigma + 1.0 / theta;
  };
  want = std::min(want, n);
  max_steps = std::min(max_steps, n);
  if (want <= 0) return out;

  std::vector<vec_t> V, MV;  // basis and cached M*basis
  V.reserve(max_steps + 1);
  MV.reserve(max_steps + 1);

  rng_t rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  vec_t v0(n);
  for (int i = 0; i < n; ++i) v0[i] = gauss(rng);
  if (purify) v0 = (*purify)(v0);
  vec_t mv0 = mapply(v0);
  double nrm = std::sqrt(std::max(0.0, v0.dot(mv0)));
  if (nrm == 0.0) fail("spectral.breakdown", "start vector vanished under projection");
  V.push_back(v0 / nrm);
  MV.push_back(mv0 / nrm);

  std::vector<double> alpha, beta;  // tridiagonal entries
  auto ritz = [&](int k, Eigen::VectorXd& theta, Eigen::MatrixXd& Y) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues();
    Y = es.eigenvectors();
  };

  bool breakdown = false;
  for (int k = 0; k < max_steps; ++k) {
    vec_t w = op(V[k]);
    if (purify) w = (*purify)(w);
    double a = w.dot(MV[k]);
    alpha.push_back(a);
    w -= a * V[k];
    if (k > 0) w -= beta[k - 1] * V[k - 1];
    // Full reorthogonalization, two passes for numerical safety.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < V.size(); ++j) w -= w.dot(MV[j]) * V[j];
    vec_t mw = mapply(w);
    double b = std::sqrt(std::max(0.0, w.dot(mw)));

    bool check_now = (k + 1 >= want + 2) && ((k % 4 == 3) || k + 1 == max_steps);
    if (b <= 1e-13 * std::abs(alpha[0] + 1.0)) {
      breakdown = true;  // invariant subspace found: everything has converged
      check_now = true;
    }
    if (check_now) {
      Eigen::VectorXd theta;
      Eigen::MatrixXd Y;
      int kk = k + 1;
      ritz(kk, theta, Y);
      std::vector<int> order(kk);
      for (int i = 0; i < kk; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (rank_signed) return theta[i] - rank_center > theta[j] - rank_center;
        return std::abs(theta[i] - rank_center) > std::abs(theta[j] - rank_center);
      });
      double theta_max = std::abs(theta[order[0]] - rank_center);
      int have = std::min(want, kk);
      bool ok = true;
      for (int i = 0; i < have && !breakdown; ++i) {
        double rb = std::abs(b * Y(kk - 1, order[i]));
        if (rb > tol * theta_max) { ok = false; break; }
      }
      if (ok || breakdown || kk == max_steps) {
        out.steps = kk;
        out.converged = ok || breakdown;
        for (int i = 0; i < have; ++i) {
          int idx = order[i];
          if (std::abs(theta[idx]) < 1e-300 && !value_map) continue;
          vec_t x = vec_t::Zero(n);
          for (int j = 0; j < kk; ++j) x += Y(j, idx) * V[j];
          if (purify) x = (*purify)(x);
          vec_t mx = mapply(x);
          double xn = std::sqrt(std::max(0.0, x.dot(mx)));
          if (xn > 0) x /= xn;
          out.values.push_back(to_value(theta[idx]));
          out.vectors.push_back(std::move(x));
          out.resid_bound.push_back(std::abs(b * Y(kk - 1, idx)));
        }
        return out;
      }
    }
    if (breakdown) break;
    beta.push_back(b);
    V.push_back(w / b);
    MV.push_back(mw / b);
  }
  out.steps = static_cast<int>(alpha.size());
  return out;
}

}  // namespace maglab
