#pragma once

// Lowest-order edge-element (Whitney) matrices on tetrahedral meshes: the
// edge mass matrix M_ab = integral of W_a . W_b and the helicity form
// H_ab = integral of W_a ^ dW_b.  These back the curl spectrum and share no
// discretization choices with the diagonal-Hodge operators in dec.hpp, which
// keeps the two spectral routes independent of each other.

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "maglab/mesh.hpp"
#include "maglab/util.hpp"

namespace maglab {

inline void whitney_matrices(const Mesh& m, spmat_t& mass, spmat_t& helicity) {
  if (m.dim != 3) fail("whitney.dim", "edge-element matrices need a 3d mesh");
  static const int le[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

  std::vector<triplet_t> tm, th;
  tm.reserve(m.n_tets() * 36);
  th.reserve(m.n_tets() * 36);

  for (int t = 0; t < m.n_tets(); ++t) {
    mat_t P = m.realize(3, t);
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) J.col(i) = (P.row(i + 1) - P.row(0)).transpose();
    double det = J.determinant();
    double vol = std::abs(det) / 6.0;
    // barycentric gradients: rows of J^{-1}, and grad(l0) = -sum of the rest
    Eigen::Matrix3d Jinv = J.inverse();
    std::array<Eigen::Vector3d, 4> g;
    g[1] = Jinv.row(0);
    g[2] = Jinv.row(1);
    g[3] = Jinv.row(2);
    g[0] = -(g[1] + g[2] + g[3]);

    // orientation of the manifold relative to the chart at this tet
    double orient = m.top_orient[t] * (det >= 0 ? 1.0 : -1.0);

    int ge[6];
    for (int a = 0; a < 6; ++a)
      ge[a] = m.edge_id(m.tets[t][le[a][0]], m.tets[t][le[a][1]]);

    for (int a = 0; a < 6; ++a) {
      int i = le[a][0], j = le[a][1];
      for (int b = 0; b < 6; ++b) {
        int k = le[b][0], l = le[b][1];
        double gik = g[i].dot(g[k]), gil = g[i].dot(g[l]);
        double gjk = g[j].dot(g[k]), gjl = g[j].dot(g[l]);
        double mm = vol / 20.0 *
                    ((1.0 + (i == k)) * gjl - (1.0 + (i == l)) * gjk -
                     (1.0 + (j == k)) * gil + (1.0 + (j == l)) * gik);
        tm.emplace_back(ge[a], ge[b], mm);
        // int W_ij ^ dW_kl = (vol/2) (g_j - g_i) . (g_k x g_l), oriented
        double hh = orient * 0.5 * vol * (g[j] - g[i]).dot(g[k].cross(g[l]));
        th.emplace_back(ge[a], ge[b], hh);
      }
    }
  }

  mass.resize(m.n_edges(), m.n_edges());
  mass.setFromTriplets(tm.begin(), tm.end());
  helicity.resize(m.n_edges(), m.n_edges());
  helicity.setFromTriplets(th.begin(), th.end());
  // the helicity form is symmetric on closed meshes; symmetrize away rounding
  helicity = spmat_t(0.5 * (helicity + spmat_t(helicity.transpose())));
}

}  // namespace maglab
