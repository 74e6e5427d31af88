#pragma once

// Discrete exterior calculus on the simplicial meshes from mesh.hpp.
//
// Cochains are plain dense vectors indexed by the mesh's p-simplex ordering.
// The Hodge stars are diagonal (dual volume over primal volume), built from
// circumcentric duals with a per-entry barycentric fallback wherever the
// signed circumcentric dual degenerates (right-angled simplices produce zero
// entries; obtuse ones produce negative entries).  The codifferential is the
// exact matrix adjoint of d in the resulting inner products, so adjointness
// holds to rounding by construction.
//
// The sup norm of a 1-cochain is approximated edgewise as max |w_e| / len(e).
// This only samples directions realized by mesh edges, which is why the mesh
// generators in mesh.hpp keep axis-aligned edges where sup-norm fidelity
// matters.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "maglab/krylov.hpp"
#include "maglab/mesh.hpp"
#include "maglab/util.hpp"

namespace maglab {

struct Dec {
  const Mesh* mesh = nullptr;
  std::array<vec_t, 4> star;      // diagonal stars, levels 0..dim
  std::array<vec_t, 4> star_inv;
  int fallback_entries = 0;       // circumcentric entries patched barycentrically

  const spmat_t& d(int p) const {
    if (p == 0) return mesh->d0;
    if (p == 1) return mesh->d1;
    if (p == 2) return mesh->d2;
    fail("dec.level", "no coboundary at level " + std::to_string(p));
  }

  vec_t apply_d(int p, const vec_t& w) const { return d(p) * w; }

  // delta_p : p-cochains -> (p-1)-cochains, the inner-product adjoint of d.
  vec_t codifferential(int p, const vec_t& w) const {
    if (p < 1 || p > mesh->dim) fail("dec.level", "codifferential level out of range");
    return star_inv[p - 1].cwiseProduct(d(p - 1).transpose() * star[p].cwiseProduct(w));
  }

  // Hodge Laplacian on 1-cochains: d0 delta_1 + delta_2 d1.
  vec_t laplace1(const vec_t& w) const {
    vec_t out = mesh->d0 * codifferential(1, w);
    out += codifferential(2, mesh->d1 * w);
    return out;
  }

  double inner(int p, const vec_t& a, const vec_t& b) const {
    return a.dot(star[p].cwiseProduct(b));
  }
  double norm_l2(int p, const vec_t& a) const { return std::sqrt(std::max(0.0, inner(p, a, a))); }

  // Edgewise sup-norm surrogate (see header comment).
  double sup_norm_edges(const vec_t& w) const {
    double m = 0.0;
    for (int e = 0; e < mesh->n_edges(); ++e)
      m = std::max(m, std::abs(w[e]) / mesh->vol1[e]);
    return m;
  }

  spmat_t star_matrix(int p) const {
    spmat_t s(star[p].size(), star[p].size());
    std::vector<triplet_t> tr;
    tr.reserve(star[p].size());
    for (int i = 0; i < star[p].size(); ++i) tr.emplace_back(i, i, star[p][i]);
    s.setFromTriplets(tr.begin(), tr.end());
    return s;
  }

  // Stiffness pieces of the symmetric 1-form Laplacian pencil
  //   (S1 d0 S0^{-1} d0^T S1 + d1^T S2 d1) x = lambda S1 x.
  spmat_t stiffness_curl() const {  // d1^T star2 d1
    return spmat_t(mesh->d1.transpose() * star_matrix(2) * mesh->d1);
  }
  spmat_t stiffness_grad() const {  // star1 d0 star0^{-1} d0^T star1
    spmat_t s1 = star_matrix(1);
    spmat_t s0i(mesh->n_vertices(), mesh->n_vertices());
    std::vector<triplet_t> tr;
    for (int i = 0; i < mesh->n_vertices(); ++i) tr.emplace_back(i, i, star_inv[0][i]);
    s0i.setFromTriplets(tr.begin(), tr.end());
    return spmat_t(s1 * mesh->d0 * s0i * mesh->d0.transpose() * s1);
  }
};

namespace detail {

// Signed circumcentric dual volumes, accumulated over all descending flags of
// each top simplex.  `centers` holds circumcenters of the enclosing chain
// (top simplex first); the sign flips whenever a circumcenter falls on the far
// side of a facet from the opposite vertex.  With `barycentric` set the
// recursion uses barycenters and all signs are +1.
struct DualAccumulator {
  const Mesh& m;
  bool barycentric;
  std::array<vec_t, 4>& duals;

  vec_t center(const mat_t& pts) const {
    if (barycentric) return pts.colwise().mean().transpose();
    int k = static_cast<int>(pts.rows()) - 1;
    if (k == 0) return pts.row(0).transpose();
    mat_t E(pts.cols(), k);
    for (int i = 0; i < k; ++i) E.col(i) = (pts.row(i + 1) - pts.row(0)).transpose();
    return circumcenter(vec_t(pts.row(0).transpose()), E);
  }

  int simplex_index(const std::vector<int>& verts) const {
    int p = static_cast<int>(verts.size()) - 1;
    if (p == 0) return verts[0];
    if (p == 1) return m.edge_id(verts[0], verts[1]);
    if (p == 2 && m.dim == 3) return m.tri_id({verts[0], verts[1], verts[2]});
    return -1;  // top level handled directly by the caller
  }

  // volume of the simplex spanned by c and the previously collected centers
  double chain_volume(const vec_t& c, const std::vector<vec_t>& centers) const {
    int k = static_cast<int>(centers.size());
    if (k == 0) return 1.0;
    mat_t E(c.size(), k);
    for (int i = 0; i < k; ++i) E.col(i) = centers[i] - c;
    return simplex_volume(E);
  }

  void descend(const std::vector<int>& verts, const mat_t& pts,
               std::vector<vec_t>& centers, double sign) {
    vec_t c = center(pts);
    int p = static_cast<int>(verts.size()) - 1;
    if (p < m.dim) {
      int idx = simplex_index(verts);
      duals[p][idx] += sign * chain_volume(c, centers);
    }
    if (p == 0) return;
    centers.push_back(c);
    for (int drop = 0; drop <= p; ++drop) {
      std::vector<int> sub;
      mat_t sub_pts(p, pts.cols());
      int r = 0;
      for (int i = 0; i <= p; ++i) {
        if (i == drop) continue;
        sub.push_back(verts[i]);
        sub_pts.row(r++) = pts.row(i);
      }
      double s = 1.0;
      if (!barycentric && p >= 1) {
        // Side test: does the circumcenter sit on the same side of the facet
        // as the dropped vertex (within the simplex's affine hull)?
        vec_t q0 = sub_pts.row(0).transpose();
        vec_t u = pts.row(drop).transpose() - q0;
        if (p >= 2) {
          mat_t F(pts.cols(), p - 1);
          for (int i = 1; i < p; ++i) F.col(i - 1) = sub_pts.row(i).transpose() - q0;
          Eigen::HouseholderQR<mat_t> qr(F);
          mat_t Q = qr.householderQ() * mat_t::Identity(pts.cols(), p - 1);
          u -= Q * (Q.transpose() * u);
        }
        double un = u.norm();
        if (un > 0) {
          double side = (c - q0).dot(u / un);
          s = side >= 0 ? 1.0 : -1.0;
          if (side == 0.0) s = 0.0;  // degenerate piece contributes nothing
        }
      }
      descend(sub, sub_pts, centers, sign * s);
    }
    centers.pop_back();
  }

  void run() {
    for (int t = 0; t < m.n_top(); ++t) {
      std::vector<int> verts;
      const int p = m.dim;
      for (int i = 0; i <= p; ++i)
        verts.push_back(p == 2 ? m.tris[t][i] : m.tets[t][i]);
      mat_t pts = m.realize(p, t);
      std::vector<vec_t> centers;
      descend(verts, pts, centers, 1.0);
    }
  }
};

}  // namespace detail

inline Dec build_dec(const Mesh& m) {
  Dec dec;
  dec.mesh = &m;

  std::array<vec_t, 4> circ, bary;
  for (int p = 0; p < m.dim; ++p) {
    circ[p] = vec_t::Zero(m.n_simplices(p));
    bary[p] = vec_t::Zero(m.n_simplices(p));
  }
  detail::DualAccumulator{m, false, circ}.run();
  detail::DualAccumulator{m, true, bary}.run();

  for (int p = 0; p <= m.dim; ++p) {
    int n = m.n_simplices(p);
    dec.star[p] = vec_t::Zero(n);
    for (int i = 0; i < n; ++i) {
      double primal = p == 0 ? 1.0 : m.volume(p, i);
      if (p == m.dim) {
        dec.star[p][i] = 1.0 / primal;
        continue;
      }
      double dual = circ[p][i];
      if (dual <= 1e-12 * bary[p][i]) {  // degenerate circumcentric entry
        dual = bary[p][i];
        ++dec.fallback_entries;
      }
      dec.star[p][i] = dual / primal;
    }
    if ((dec.star[p].array() <= 0).any())
      fail("dec.star", "nonpositive Hodge star entry at level " + std::to_string(p));
    dec.star_inv[p] = dec.star[p].cwiseInverse();
  }
  return dec;
}

// ---------------------------------------------------------------------------
// cochains from functions and analytic forms

inline vec_t sample_vertices(const Mesh& m, const std::function<double(const vec_t&)>& f) {
  vec_t u(m.n_vertices());
  for (int v = 0; v < m.n_vertices(); ++v) u[v] = f(m.vertices.row(v).transpose());
  return u;
}

// Edge integrals of a covector field by 5-point Gauss-Legendre along the
// straight (minimal-image) chart segment of each edge.
inline vec_t integrate_edges(const Mesh& m,
                             const std::function<vec_t(const vec_t&)>& omega) {
  static const double gl_x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
  static const double gl_w[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
  vec_t w(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e) {
    vec_t a = m.vertices.row(m.edges[e][0]).transpose();
    vec_t dv = m.delta(m.edges[e][0], m.edges[e][1]);
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) {
      vec_t x = a + (0.5 + 0.5 * gl_x[q]) * dv;
      acc += gl_w[q] * 0.5 * omega(x).dot(dv);
    }
    w[e] = acc;
  }
  return w;
}

// Face integrals of a 2-form coefficient (w.r.t. the chart's dx^dy) on 2d
// meshes, 7-point degree-5 rule on each triangle.
inline vec_t integrate_tris(const Mesh& m,
                            const std::function<double(const vec_t&)>& coeff) {
  if (m.dim != 2 || m.ambient != 2) fail("dec.level", "integrate_tris needs a planar 2d mesh");
  static const double w0 = 0.225,
                      wa = 0.1323941527885062, wb = 0.1259391805448271;
  static const double a1 = 0.0597158717897698, a2 = 0.4701420641051151;
  static const double b1 = 0.7974269853530873, b2 = 0.1012865073234563;
  struct QP { double l0, l1, l2, w; };
  const QP qp[7] = {{1.0 / 3, 1.0 / 3, 1.0 / 3, w0}, {a1, a2, a2, wa},
                    {a2, a1, a2, wa},                {a2, a2, a1, wa},
                    {b1, b2, b2, wb},                {b2, b1, b2, wb},
                    {b2, b2, b1, wb}};
  vec_t w(m.n_tris());
  for (int f = 0; f < m.n_tris(); ++f) {
    mat_t P = m.realize(2, f);
    double area = m.volume(2, f);
    double acc = 0.0;
    for (const auto& q : qp) {
      vec_t x = q.l0 * P.row(0).transpose() + q.l1 * P.row(1).transpose() +
                q.l2 * P.row(2).transpose();
      acc += q.w * coeff(x);
    }
    // sign: the cochain convention integrates over the sorted-tuple
    // orientation, whose chart orientation is the span determinant's sign
    mat_t E = m.span(2, f);
    double s = E.determinant() >= 0 ? 1.0 : -1.0;
    w[f] = acc * area * s;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Hodge decomposition and harmonic forms

// Coexact projector: solve (d1 star1^{-1} d1^T) z = d1 w by CG and return
// star1^{-1} d1^T z.  Exact and harmonic components are annihilated exactly
// because d1 d0 = 0 holds in integer arithmetic.
inline vec_t project_coexact(const Dec& dec, const vec_t& w, double tol = 1e-12) {
  const Mesh& m = *dec.mesh;
  vec_t rhs = m.d1 * w;
  if (rhs.size() == 0) return vec_t::Zero(w.size());
  op_t A = [&](const vec_t& z) {
    return vec_t(m.d1 * dec.star_inv[1].cwiseProduct(m.d1.transpose() * z));
  };
  vec_t diag = vec_t::Zero(rhs.size());
  for (int e = 0; e < m.n_edges(); ++e) {
    for (spmat_t::InnerIterator it(m.d1, e); it; ++it)
      diag[it.row()] += it.value() * it.value() * dec.star_inv[1][e];
  }
  CgResult r = cg(A, rhs, tol, 10 * static_cast<int>(rhs.size()) + 100, &diag);
  return dec.star_inv[1].cwiseProduct(m.d1.transpose() * r.x);
}

struct HodgeParts {
  vec_t exact, coexact, harmonic;
  vec_t potential0;  // exact = d0 potential0
};

inline HodgeParts decompose(const Dec& dec, const vec_t& w, double tol = 1e-12) {
  const Mesh& m = *dec.mesh;
  HodgeParts parts;
  // exact part: least-squares potential via the 0-form Laplacian
  vec_t rhs = m.d0.transpose() * dec.star[1].cwiseProduct(w);
  op_t L = [&](const vec_t& u) {
    return vec_t(m.d0.transpose() * dec.star[1].cwiseProduct(m.d0 * u));
  };
  vec_t diag = vec_t::Zero(m.n_vertices());
  for (int e = 0; e < m.n_edges(); ++e) {
    diag[m.edges[e][0]] += dec.star[1][e];
    diag[m.edges[e][1]] += dec.star[1][e];
  }
  CgResult r = cg(L, rhs, tol, 10 * m.n_vertices() + 100, &diag);
  parts.potential0 = r.x;
  parts.exact = m.d0 * r.x;
  parts.coexact = m.dim >= 2 ? project_coexact(dec, w, tol) : vec_t::Zero(w.size());
  parts.harmonic = w - parts.exact - parts.coexact;
  return parts;
}

// star1-orthonormal basis of discrete harmonic 1-cochains (kernel of the
// 1-form Hodge Laplacian).  The kernel dimension equals the first Betti
// number, so the basis is empty on spheres and has dim-many elements on tori.
// Kernel detection: eigenvalues below 1e-8 times the smallest clearly nonzero
// computed eigenvalue.
inline std::vector<vec_t> harmonic_basis(const Dec& dec) {
  const Mesh& m = *dec.mesh;
  spmat_t A = dec.stiffness_grad() + dec.stiffness_curl();
  double scale = 0.0;
  for (int i = 0; i < A.rows(); ++i) scale = std::max(scale, A.coeff(i, i) / dec.star[1][i]);
  double tau = 1e-6 * scale;  // small shift: kernel modes dominate the inverse

  spmat_t S1 = dec.star_matrix(1);
  spmat_t shifted = A + tau * S1;
  Eigen::SimplicialLDLT<spmat_t> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) fail("dec.factor", "harmonic pencil factorization failed");

  op_t mapply = [&](const vec_t& x) { return vec_t(dec.star[1].cwiseProduct(x)); };
  op_t op = [&](const vec_t& x) { return vec_t(ldlt.solve(mapply(x))); };
  int want = std::min(m.n_edges(), m.dim + 2);
  PencilEig eig = shift_invert_lanczos(op, mapply, -tau, m.n_edges(), want,
                                       1e-10, 260, 0x9a7de11uLL);
  if (!eig.converged) fail("dec.eig", "harmonic eigensolve did not converge");

  // sort ascending by eigenvalue and split kernel from the rest
  std::vector<int> order(eig.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return eig.values[i] < eig.values[j]; });
  double lambda_ref = eig.values[order.back()];
  if (lambda_ref <= 0) return {};
  std::vector<vec_t> basis;
  for (int idx : order) {
    if (eig.values[idx] > 1e-8 * lambda_ref) break;
    vec_t h = eig.vectors[idx];
    for (const vec_t& prev : basis) h -= dec.inner(1, prev, h) * prev;
    double n = dec.norm_l2(1, h);
    if (n > 1e-8) basis.push_back(h / n);
  }
  return basis;
}

// Pack a list of cochains into the columns of a dense matrix.  `rows` takes
// over when the list is empty (the matrix must still know its row count).
inline mat_t basis_matrix(const std::vector<vec_t>& basis, int rows) {
  if (!basis.empty()) rows = static_cast<int>(basis.front().size());
  mat_t out(rows, static_cast<int>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) out.col(static_cast<int>(j)) = basis[j];
  return out;
}

// ---------------------------------------------------------------------------
// plain-text persistence

inline void save_cochain(const vec_t& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("io.write", "cannot open " + path);
  out.precision(17);
  out << "cochain " << w.size() << "\n";
  for (int i = 0; i < w.size(); ++i) out << w[i] << "\n";
}

inline vec_t load_cochain(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io.read", "cannot open " + path);
  std::string tok;
  int n = 0;
  in >> tok >> n;
  if (tok != "cochain" || n < 0) fail("io.format", path + ": not a cochain file");
  vec_t w(n);
  for (int i = 0; i < n; ++i)
    if (!(in >> w[i])) fail("io.format", path + ": truncated cochain");
  return w;
}

inline void save_operator(const spmat_t& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("io.write", "cannot open " + path);
  out.precision(17);
  out << "sparse " << op.rows() << " " << op.cols() << " " << op.nonZeros() << "\n";
  for (int k = 0; k < op.outerSize(); ++k)
    for (spmat_t::InnerIterator it(op, k); it; ++it)
      out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

inline spmat_t load_operator(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io.read", "cannot open " + path);
  std::string tok;
  long rows = 0, cols = 0, nnz = 0;
  in >> tok >> rows >> cols >> nnz;
  if (tok != "sparse") fail("io.format", path + ": not an operator file");
  std::vector<triplet_t> tr;
  tr.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    long r, c;
    double v;
    if (!(in >> r >> c >> v)) fail("io.format", path + ": truncated operator");
    tr.emplace_back(r, c, v);
  }
  spmat_t op(rows, cols);
  op.setFromTriplets(tr.begin(), tr.end());
  return op;
}

}  // namespace maglab
