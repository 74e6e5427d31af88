#pragma once

// Spectral analyses on 1-cochains:
//   * coexact Hodge-Laplace spectrum (smallest eigenvalues, with certificates)
//   * curl spectrum on 3-manifolds via the Whitney helicity pencil
//   * the sup/L2 ("mean value") ratio of a cochain
//
// The two eigenvalue routes are deliberately disjoint discretizations: the
// Laplace route is diagonal-Hodge DEC with a coexactness projection, the curl
// route is Whitney edge elements.  Their agreement (curl eigenvalue squared
// versus Laplace eigenvalue) is a cross-check, not a shared computation.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "maglab/dec.hpp"
#include "maglab/krylov.hpp"
#include "maglab/mesh.hpp"
#include "maglab/whitney.hpp"

namespace maglab {

struct EigPair {
  double lambda = 0.0;
  vec_t form;             // M-normalized eigencochain
  double residual = 0.0;  // ||A x - lambda M x|| / (||A x|| + |lambda| ||M x||)
  double coexact_defect = 0.0;
};

// Smallest `count` eigenvalues of the Hodge Laplacian restricted to coexact
// 1-cochains.  Shift-invert with a small positive shift; every Krylov vector
// is re-projected onto the coexact subspace, which both removes the huge
// d1-kernel from the pencil and stops rounding drift back into it.
//
// Symmetric meshes carry exactly degenerate eigenvalue clusters, and a
// single-vector Krylov space contains only one direction per distinct value.
// To enumerate clusters with their multiplicity the solve restarts with the
// converged eigenvectors locked (deflated through the projector), pooling
// rounds until the count-th smallest pooled value is no larger than the
// newest round's minimum -- at that point nothing smaller can remain in the
// unexplored complement.
inline std::vector<EigPair> coexact_spectrum(const Dec& dec, int count,
                                             std::uint64_t seed = 0x5eedc0deULL) {
  std::vector<EigPair> out;
  if (count <= 0) return out;
  const Mesh& m = *dec.mesh;

  spmat_t K = dec.stiffness_curl();
  double scale = 0.0;
  for (int i = 0; i < K.rows(); ++i) scale = std::max(scale, K.coeff(i, i) / dec.star[1][i]);
  double c = 1e-6 * scale;

  spmat_t shifted = K + c * dec.star_matrix(1);
  Eigen::SimplicialLDLT<spmat_t> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) fail("spectral.factor", "Laplace factorization failed");

  op_t mapply = [&](const vec_t& x) { return vec_t(dec.star[1].cwiseProduct(x)); };
  op_t op = [&](const vec_t& x) { return vec_t(ldlt.solve(mapply(x))); };

  std::vector<vec_t> locked;  // M-orthonormal converged eigenvectors
  op_t purify = [&](const vec_t& x) {
    vec_t y = project_coexact(dec, x, 1e-13);
    for (int pass = 0; pass < 2; ++pass)
      for (const vec_t& u : locked) y -= dec.inner(1, u, y) * u;
    return y;
  };

  auto rayleigh = [&](const vec_t& x) {
    return x.dot(vec_t(K * x)) / x.dot(vec_t(dec.star[1].cwiseProduct(x)));
  };

  constexpr int kMaxRounds = 12;
  for (int round = 0; round < kMaxRounds; ++round) {
    // full ask while the pool is short; afterwards single-value probes of the
    // deflated complement, which only have to certify the settle condition
    const int ask = std::max(count - static_cast<int>(locked.size()), 1);
    PencilEig eig = shift_invert_lanczos(op, mapply, -c, m.n_edges(), ask,
                                         1e-10, 40 + 40 * ask,
                                         derive_seed(seed, round), &purify);
    if (!eig.converged)
      fail("spectral.eig", "coexact eigensolve stalled after " +
                               std::to_string(eig.steps) + " steps");
    double round_min = std::numeric_limits<double>::infinity();
    int added = 0;
    for (const vec_t& v : eig.vectors) {
      vec_t x = purify(v);  // deflate against everything locked so far
      double nx = std::sqrt(std::max(0.0, x.dot(vec_t(dec.star[1].cwiseProduct(x)))));
      if (nx < 1e-8) continue;  // duplicate of a locked direction
      x /= nx;
      locked.push_back(x);
      round_min = std::min(round_min, rayleigh(x));
      ++added;
    }
    if (added == 0)
      fail("spectral.eig", "coexact deflation made no progress at round " +
                               std::to_string(round));
    if (static_cast<int>(locked.size()) >= count) {
      std::vector<double> vals(locked.size());
      for (std::size_t i = 0; i < locked.size(); ++i) vals[i] = rayleigh(locked[i]);
      std::vector<double> sorted = vals;
      std::nth_element(sorted.begin(), sorted.begin() + (count - 1), sorted.end());
      if (sorted[count - 1] <= round_min * (1.0 + 1e-9) + 1e-12) break;
    }
    if (round + 1 == kMaxRounds)
      fail("spectral.eig", "coexact cluster enumeration did not settle");
  }

  for (const vec_t& x : locked) {
    EigPair p;
    p.form = x;
    vec_t Kx = K * p.form;
    vec_t Mx = dec.star[1].cwiseProduct(p.form);
    p.lambda = p.form.dot(Kx) / p.form.dot(Mx);
    p.residual = (Kx - p.lambda * Mx).norm() /
                 (Kx.norm() + std::abs(p.lambda) * Mx.norm() + 1e-300);
    vec_t co = project_coexact(dec, p.form, 1e-13);
    p.coexact_defect = dec.norm_l2(1, p.form - co) / dec.norm_l2(1, p.form);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const EigPair& a, const EigPair& b) { return a.lambda < b.lambda; });
  if (static_cast<int>(out.size()) > count) out.resize(count);
  return out;
}

// Curl eigenvalues of smallest magnitude on a 3-manifold: signed values nu
// with curl(omega) = nu * omega in the Whitney-Galerkin sense
// H x = nu M x on the complement of the closed cochains.
//
// Spectral transform: Op = (H - sigma M)^{-1} H has eigenvalues
// theta = nu/(nu - sigma); the (large) nu = 0 kernel maps to theta = 0 and is
// annihilated rather than amplified, so no explicit deflation is needed.
// The branch on the shift's side (nu beyond sigma) maps to theta > 1, closest
// |nu| first; the kernel, the opposite branch and the accumulation point all
// land in [0, 1].  Ranking Ritz values by signed theta (descending) therefore
// isolates exactly the wanted branch.  Two runs with shifts +-sigma pick up
// the positive and negative branches; sigma must sit strictly below the
// smallest nonzero |nu|.
inline std::vector<EigPair> curl_spectrum(const Mesh& m, int count,
                                          double sigma = 0.4,
                                          std::uint64_t seed = 0xcede11ULL) {
  std::vector<EigPair> out;
  if (count <= 0) return out;
  spmat_t M, H;
  whitney_matrices(m, M, H);

  auto harvest = [&](double s, int want, std::uint64_t run_seed) {
    spmat_t shifted = H - s * M;
    Eigen::SparseLU<spmat_t> lu;
    lu.analyzePattern(shifted);
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success) fail("spectral.factor", "curl factorization failed");
    // Op v = (H - sM)^{-1} H v = v + s (H - sM)^{-1} M v, self-adjoint in the
    // M-inner product; the second form needs no extra H-multiply.
    op_t mapply = [&](const vec_t& x) { return vec_t(M * x); };
    op_t op = [&](const vec_t& x) { return vec_t(x + s * lu.solve(mapply(x))); };
    std::function<double(double)> back = [s](double theta) {
      return s * theta / (theta - 1.0);
    };
    PencilEig eig = shift_invert_lanczos(op, mapply, s, m.n_edges(), want,
                                         1e-9, 60 + 40 * want, run_seed, nullptr,
                                         /*rank_center=*/1.0, &back,
                                         /*rank_signed=*/true);
    if (!eig.converged)
      fail("spectral.eig", "curl eigensolve stalled after " +
                               std::to_string(eig.steps) + " steps");
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
      double nu = eig.values[i];
      // keep this run's branch; drop kernel remnants near nu = 0
      if (s > 0 ? nu < 0.25 * s : nu > 0.25 * s) continue;
      EigPair p;
      p.form = eig.vectors[i];
      vec_t Hx = H * p.form;
      vec_t Mx = M * p.form;
      p.lambda = p.form.dot(Hx) / p.form.dot(Mx);
      p.residual = (Hx - p.lambda * Mx).norm() /
                   (Hx.norm() + std::abs(p.lambda) * Mx.norm() + 1e-300);
      // certificate gate: a Ritz value may sit anywhere in the numerical hull
      // after the Krylov space is exhausted, but only a genuine eigenpair has
      // a small pencil residual.  Never return uncertified pairs.
      if (p.residual > 1e-7) continue;
      out.push_back(std::move(p));
    }
  };
  harvest(sigma, count + 2, seed);
  harvest(-sigma, count + 2, derive_seed(seed, 1));

  std::sort(out.begin(), out.end(), [](const EigPair& a, const EigPair& b) {
    return std::abs(a.lambda) < std::abs(b.lambda);
  });
  if (static_cast<int>(out.size()) > count) out.resize(count);
  return out;
}

// sup-norm over L2-norm of a 1-cochain (both in the discrete metrics).
// Scale-invariant; for a Laplace eigenform this is the mean-value-inequality
// ratio the eigenform comparisons quote.
inline double mean_value_ratio(const Dec& dec, const vec_t& w) {
  double l2 = dec.norm_l2(1, w);
  if (l2 == 0.0) fail("spectral.zero", "mean value ratio of the zero cochain");
  return dec.sup_norm_edges(w) / l2;
}

}  // namespace maglab
