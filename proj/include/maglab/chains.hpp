#pragma once

// Minimal spanning 2-chains and per-loop inequality checks.
//
// The weighted L^1 problem  min sum_f area_f |S_f|  s.t.  boundary(S) = cycle
// is solved as a linear program through the positive/negative split, with a
// primal-dual first-order iteration (Chambolle-Pock) producing a certified
// duality gap: any dual iterate, rescaled into the feasible box
// |B^T y|_f <= area_f, gives a true lower bound.  A final polish solves the
// boundary equation exactly (minimum-norm) on the support identified by the
// LP, bringing feasibility to rounding level; near-integer chains are snapped
// so small examples are exact.
//
// Real coefficients are a modeling choice: the stabilized area-per-multiple
// of integer multiples is bounded above by the LP relaxation; tiny meshes can
// be cross-checked against an exhaustive {-1,0,1} integer search.

#include <cmath>
#include <string>
#include <vector>

#include "maglab/dec.hpp"
#include "maglab/mesh.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct SpanningChain {
  vec_t coeffs;            // one real coefficient per oriented 2-simplex
  vec_t cycle;             // the input 1-chain
  double mass = 0.0;       // sum area_f |coeff_f|
  double gap = 0.0;        // certified duality gap (mass minus dual bound)
  double feasibility = 0.0;  // ||boundary(coeffs) - cycle||_inf
  int iterations = 0;
};

namespace detail {

inline double sparse_norm2(const spmat_t& B, int iters = 60) {
  vec_t v = vec_t::Ones(B.cols());
  v.normalize();
  double lam = 0.0;
  for (int i = 0; i < iters; ++i) {
    vec_t w = B.transpose() * (B * v);
    lam = w.norm();
    if (lam <= 0) return 0.0;
    v = w / lam;
  }
  return std::sqrt(lam);
}

}  // namespace detail

// Precondition: cycle is null-homologous over the reals.  This is checked
// combinatorially (it must be a cycle) and against the supplied harmonic
// 1-form basis (pairings must vanish).
inline SpanningChain minimal_spanning_chain(const Dec& dec, const vec_t& cycle,
                                            const mat_t& harmonics,
                                            double gap_tol = 1e-6,
                                            double feas_tol = 1e-9) {
  const Mesh& m = *dec.mesh;
  if (m.dim != 2) fail("iso.dim", "spanning chains are wired for 2d meshes");
  const int E = m.n_edges(), F = m.n_tris();
  if (cycle.size() != E) fail("iso.cycle", "cycle has the wrong edge count");

  vec_t closedness = m.d0.transpose() * cycle;
  if (closedness.lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + cycle.lpNorm<Eigen::Infinity>()))
    fail("iso.cycle", "input 1-chain is not closed");
  for (int i = 0; i < harmonics.cols(); ++i) {
    const double pairing = harmonics.col(i).dot(cycle);
    if (std::abs(pairing) > 1e-9 * (1.0 + cycle.cwiseAbs().sum()))
      fail("iso.homology", "cycle pairs nontrivially with harmonic basis vector " +
                               std::to_string(i) + " (pairing " + std::to_string(pairing) +
                               ")");
  }

  SpanningChain out;
  out.cycle = cycle;
  if (cycle.lpNorm<Eigen::Infinity>() == 0.0) {
    out.coeffs = vec_t::Zero(F);
    return out;
  }

  const spmat_t B = dec.d(1).transpose();  // boundary: 2-chains -> 1-chains
  const vec_t& area = m.vol2;
  const double nB = detail::sparse_norm2(B);
  const double step = 0.95 / (std::sqrt(2.0) * nB);

  vec_t p = vec_t::Zero(F), q = vec_t::Zero(F);  // positive/negative parts
  vec_t y = vec_t::Zero(E);
  vec_t S(F), Bty(F);
  double mass = 0.0, lower = 0.0;
  const double cyc_norm = cycle.norm();

  const int max_iter = 150000;
  int it = 0;
  for (; it < max_iter; ++it) {
    Bty = B.transpose() * y;
    vec_t pn = (p - step * (area + Bty)).cwiseMax(0.0);
    vec_t qn = (q - step * (area - Bty)).cwiseMax(0.0);
    vec_t extr = (2.0 * pn - p) - (2.0 * qn - q);
    y += step * (B * extr - cycle);
    p.swap(pn);
    q.swap(qn);

    if (it % 250 == 249 || it == max_iter - 1) {
      S = p - q;
      mass = area.dot(p) + area.dot(q);
      // rescale the dual into its feasible box to certify a lower bound
      Bty = B.transpose() * y;
      double viol = 1.0;
      for (int f = 0; f < F; ++f)
        viol = std::max(viol, std::abs(Bty[f]) / area[f]);
      lower = cycle.dot(y) / viol;
      const double gap = mass - lower;
      const double feas = (B * S - cycle).norm();
      if (gap <= gap_tol * std::max(mass, 1e-12) && feas <= 1e-4 * (1.0 + cyc_norm))
        break;
    }
  }
  out.iterations = it + 1;

  // polish: exact minimum-norm boundary solve on the LP support
  S = p - q;
  const double smax = S.cwiseAbs().maxCoeff();
  vec_t best = S;
  double thresh = 1e-4;
  bool polished = false;
  for (int attempt = 0; attempt < 4 && !polished; ++attempt, thresh *= 1e-2) {
    std::vector<int> supp;
    for (int f = 0; f < F; ++f)
      if (std::abs(S[f]) > thresh * smax) supp.push_back(f);
    if (supp.empty() || static_cast<int>(supp.size()) > 3000) continue;
    mat_t Bs(E, supp.size());
    for (std::size_t j = 0; j < supp.size(); ++j)
      Bs.col(j) = vec_t(B.col(supp[j]));
    Eigen::CompleteOrthogonalDecomposition<mat_t> cod(Bs);
    vec_t sj = cod.solve(cycle);
    if ((Bs * sj - cycle).lpNorm<Eigen::Infinity>() <=
        feas_tol * 0.5 * (1.0 + cycle.lpNorm<Eigen::Infinity>())) {
      vec_t cand = vec_t::Zero(F);
      for (std::size_t j = 0; j < supp.size(); ++j) cand[supp[j]] = sj[j];
      // snap near-integer chains exact
      vec_t rounded = cand.array().round();
      if ((cand - rounded).lpNorm<Eigen::Infinity>() <= 1e-9 &&
          (B * rounded - cycle).lpNorm<Eigen::Infinity>() == 0.0)
        cand = rounded;
      const double cand_mass = area.dot(cand.cwiseAbs());
      if (cand_mass <= mass * (1.0 + 1e-4) + 1e-12) {
        best = cand;
        polished = true;
      }
    }
  }

  out.coeffs = best;
  out.mass = area.dot(best.cwiseAbs());
  out.feasibility = (B * best - cycle).lpNorm<Eigen::Infinity>();
  out.gap = out.mass - lower;
  if (out.feasibility > feas_tol * (1.0 + cycle.lpNorm<Eigen::Infinity>()))
    fail("iso.lp", "boundary equation not met: residual " + std::to_string(out.feasibility));
  if (out.gap > gap_tol * std::max(out.mass, 1e-12) * (1.0 + 1e-9) + 1e-12)
    fail("iso.lp", "duality gap " + std::to_string(out.gap) + " uncertified after " +
                       std::to_string(out.iterations) + " iterations");
  return out;
}

inline SpanningChain minimal_spanning_chain(const Dec& dec, const vec_t& cycle) {
  mat_t basis = basis_matrix(harmonic_basis(dec), dec.mesh->n_edges());
  return minimal_spanning_chain(dec, cycle, basis);
}

// |<w, cycle> - <dw, chain>|: a transpose identity once boundary(chain)=cycle,
// so anything above rounding indicates a broken operator.
inline double stokes_check(const Dec& dec, const vec_t& omega, const SpanningChain& sc) {
  const double lhs = omega.dot(sc.cycle);
  const double rhs = vec_t(dec.d(1) * omega).dot(sc.coeffs);
  return std::abs(lhs - rhs);
}

struct CheegerCheck {
  double lhs = 0.0;     // |loop integral| / length
  double rhs = 0.0;     // sup-face |dw|/area * mass / length
  double mass = 0.0;
  double length = 0.0;
  double dsup = 0.0;    // max_f |(dw)_f| / area_f
  double stokes = 0.0;
  double slack = 0.0;   // rhs - lhs
  bool ok = false;
};

// Per-loop inequality (1/l)|int_loop w| <= sup|dw| * mass/l through the LP
// chain; it follows from the transpose identity plus Hoelder, so a violation
// beyond rounding is a bug, not a finding.
inline CheegerCheck cheeger_chain_check(const Dec& dec, const vec_t& omega,
                                        const SpanningChain& sc) {
  const Mesh& m = *dec.mesh;
  CheegerCheck rep;
  rep.mass = sc.mass;
  rep.length = m.vol1.dot(sc.cycle.cwiseAbs());
  if (rep.length <= 0.0) fail("iso.cycle", "cheeger check needs a nonempty loop");
  rep.lhs = std::abs(omega.dot(sc.cycle)) / rep.length;
  vec_t dw = dec.d(1) * omega;
  rep.dsup = (dw.cwiseAbs().cwiseQuotient(m.vol2)).maxCoeff();
  rep.rhs = rep.dsup * rep.mass / rep.length;
  rep.stokes = stokes_check(dec, omega, sc);
  rep.slack = rep.rhs - rep.lhs;
  rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-9) + 1e-11;
  if (!rep.ok)
    fail("iso.cheeger", "per-loop inequality violated beyond rounding: lhs " +
                            std::to_string(rep.lhs) + " rhs " + std::to_string(rep.rhs));
  return rep;
}

struct H1Estimate {
  double ratio = 0.0;  // min over the family of length/mass
  int witness = -1;
  std::vector<double> lengths, masses;
};

// Heuristic upper-bound estimate for the degree-one isoperimetric ratio:
// masses are LP upper bounds for the stabilized area, so the ratio is only
// reported, never asserted against theory.
inline H1Estimate h1_upper_estimate(const Dec& dec, const std::vector<vec_t>& loops,
                                    const mat_t& harmonics) {
  if (loops.empty()) fail("iso.family", "empty loop family");
  H1Estimate est;
  est.ratio = 1e300;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    SpanningChain sc = minimal_spanning_chain(dec, loops[i], harmonics);
    const double len = dec.mesh->vol1.dot(loops[i].cwiseAbs());
    est.lengths.push_back(len);
    est.masses.push_back(sc.mass);
    if (sc.mass > 0 && len / sc.mass < est.ratio) {
      est.ratio = len / sc.mass;
      est.witness = static_cast<int>(i);
    }
  }
  return est;
}

// Exhaustive search over {-1,0,1} coefficients for tiny meshes: the true
// integer optimum to compare the LP relaxation against.
inline SpanningChain exhaustive_integer_chain(const Dec& dec, const vec_t& cycle) {
  const Mesh& m = *dec.mesh;
  const int F = m.n_tris();
  if (F > 14) fail("iso.resource", "exhaustive search capped at 14 faces");
  const spmat_t B = dec.d(1).transpose();
  SpanningChain best;
  best.cycle = cycle;
  best.mass = 1e300;
  vec_t s(F);
  long total = 1;
  for (int f = 0; f < F; ++f) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int f = 0; f < F; ++f) {
      s[f] = static_cast<double>(c % 3 - 1);
      c /= 3;
    }
    if ((B * s - cycle).lpNorm<Eigen::Infinity>() > 1e-9) continue;
    const double mass = m.vol2.dot(s.cwiseAbs());
    if (mass < best.mass) {
      best.mass = mass;
      best.coeffs = s;
      best.feasibility = 0.0;
    }
  }
  if (best.mass >= 1e300)
    fail("iso.homology", "no integer chain in {-1,0,1} spans the cycle");
  return best;
}

}  // namespace maglab
