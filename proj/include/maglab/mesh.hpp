#pragma once

// Simplicial meshes for closed oriented 2- and 3-manifolds.
//
// A mesh is combinatorics (simplex tables + integer coboundaries) plus a
// geometric realization. Periodic directions (tori) are handled with a
// minimal-image convention: every simplex is realized by anchoring its first
// vertex and unwrapping the others, which is well defined as long as simplex
// diameters stay below half the period (validated on construction).

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <fstream>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "maglab/util.hpp"

namespace maglab {

using spmat_t = Eigen::SparseMatrix<double>;
using triplet_t = Eigen::Triplet<double>;

namespace detail {
inline std::uint64_t pack2(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}
}  // namespace detail

/// metadata kept by the structured generators; enables O(1) point location
/// and lets scenario code address vertices/edges by lattice index.
struct StructuredInfo {
  enum class Kind { torus2_shifted, torus2_diagonal, torus3_bcc, icosphere };
  Kind kind;
  int nx = 0, ny = 0, nz = 0;
  double hx = 0, hy = 0, hz = 0;
};

struct MeshQuality {
  double min_edge = 0, max_edge = 0;
  double min_angle_deg = 0;       // 2d only
  double well_centered_frac = 0;  // top simplices whose circumcenter is interior
};

struct Mesh {
  int dim = 0;      // manifold dimension n (2 or 3)
  int ambient = 0;  // chart/embedding dimension
  vec_t periods;    // per ambient axis; 0 = aperiodic

  mat_t vertices;  // V x ambient, stored in the fundamental domain
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<int, 4>> tets;
  std::vector<int> top_orient;  // +-1: orientation of each top simplex relative
                                // to its sorted vertex order

  // integer coboundaries: d0 (E x V), d1 (F x E), d2 (T x F, 3d only)
  spmat_t d0, d1, d2;

  // unsigned volumes per degree (vol1 = edge lengths, ...)
  vec_t vol1, vol2, vol3;

  std::optional<StructuredInfo> structured;

  int n_vertices() const { return static_cast<int>(vertices.rows()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_tris() const { return static_cast<int>(tris.size()); }
  int n_tets() const { return static_cast<int>(tets.size()); }
  int n_top() const { return dim == 2 ? n_tris() : n_tets(); }
  int n_simplices(int p) const {
    switch (p) {
      case 0: return n_vertices();
      case 1: return n_edges();
      case 2: return n_tris();
      case 3: return n_tets();
      default: return 0;
    }
  }

  const int* simplex(int p, int id) const {
    switch (p) {
      case 1: return edges[id].data();
      case 2: return tris[id].data();
      default: return tets[id].data();
    }
  }

  /// minimal-image displacement from vertex a to vertex b
  vec_t delta(int a, int b) const {
    vec_t d = vertices.row(b).transpose() - vertices.row(a).transpose();
    return wrap_delta(std::move(d), periods);
  }

  /// realize a p-simplex: rows are vertex coordinates, unwrapped against the
  /// first vertex so the simplex is geometrically contiguous.
  mat_t realize(int p, int id) const {
    const int* v = simplex(p, id);
    mat_t P(p + 1, ambient);
    P.row(0) = vertices.row(v[0]);
    for (int i = 1; i <= p; ++i)
      P.row(i) = P.row(0) + delta(v[0], v[i]).transpose();
    return P;
  }

  /// edge vectors spanned from the first vertex (ambient x p)
  mat_t span(int p, int id) const {
    const mat_t P = realize(p, id);
    mat_t E(ambient, p);
    for (int i = 0; i < p; ++i) E.col(i) = (P.row(i + 1) - P.row(0)).transpose();
    return E;
  }

  double volume(int p, int id) const {
    switch (p) {
      case 0: return 1.0;
      case 1: return vol1[id];
      case 2: return vol2[id];
      default: return vol3[id];
    }
  }

  double total_volume() const {
    return dim == 2 ? vol2.sum() : vol3.sum();
  }

  int euler_characteristic() const {
    return n_vertices() - n_edges() + n_tris() - n_tets();
  }

  int edge_id(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = edge_lookup_.find(detail::pack2(a, b));
    if (it == edge_lookup_.end()) fail("geometry.no_such_edge",
        "no edge between vertices " + std::to_string(a) + "," + std::to_string(b));
    return it->second;
  }

  int tri_id(std::array<int, 3> t) const {
    std::sort(t.begin(), t.end());
    auto it = tri_lookup_.find(t);
    if (it == tri_lookup_.end()) fail("geometry.no_such_face", "face not in mesh");
    return it->second;
  }

  /// signed 1-chain traversing the given closed vertex path along mesh edges
  vec_t path_chain(const std::vector<int>& verts) const {
    vec_t c = vec_t::Zero(n_edges());
    const int m = static_cast<int>(verts.size());
    for (int i = 0; i < m; ++i) {
      int a = verts[i], b = verts[(i + 1) % m];
      if (a == b) fail("geometry.bad_path", "repeated vertex in loop path");
      const int e = edge_id(a, b);
      c[e] += (a < b) ? 1.0 : -1.0;
    }
    return c;
  }

  /// cofaces[p][i]: ids of (p+1)-simplices containing p-simplex i
  const std::vector<std::vector<int>>& cofaces(int p) const { return cofaces_[p]; }

  MeshQuality quality() const;

  void build();     // derive edges/faces, coboundaries, volumes; validate
  void validate() const;

  /// locate the top simplex containing chart point x (structured tori only);
  /// returns (id, barycentric coords).
  std::pair<int, vec_t> locate(const vec_t& x) const;

 private:
  std::unordered_map<std::uint64_t, int> edge_lookup_;
  std::map<std::array<int, 3>, int> tri_lookup_;
  std::array<std::vector<std::vector<int>>, 4> cofaces_;

  friend Mesh load_mesh(const std::string&);
};

// ---------------------------------------------------------------------------
// construction

inline void Mesh::build() {
  if (dim != 2 && dim != 3) fail("geometry.bad_dim", "mesh dimension must be 2 or 3");
  if (periods.size() == 0) periods = vec_t::Zero(ambient);

  // canonicalize top simplices: sorted vertex tuples + orientation parity
  const int T = n_top();
  if (static_cast<int>(top_orient.size()) != T) top_orient.assign(T, 1);
  auto canon = [&](auto& tuple, int id) {
    auto& t = tuple[id];
    int sign = 1;
    for (size_t i = 0; i < t.size(); ++i)
      for (size_t j = i + 1; j < t.size(); ++j)
        if (t[i] > t[j]) { std::swap(t[i], t[j]); sign = -sign; }
    top_orient[id] *= sign;
  };
  for (int i = 0; i < n_tris(); ++i) canon(tris, i);
  for (int i = 0; i < n_tets(); ++i) canon(tets, i);

  // derive faces (3d) and edges
  if (dim == 3) {
    tri_lookup_.clear();
    tris.clear();
    for (const auto& t : tets) {
      for (int drop = 0; drop < 4; ++drop) {
        std::array<int, 3> f;
        for (int i = 0, k = 0; i < 4; ++i)
          if (i != drop) f[k++] = t[i];
        if (tri_lookup_.emplace(f, static_cast<int>(tris.size())).second)
          tris.push_back(f);
      }
    }
  } else {
    tri_lookup_.clear();
    for (int i = 0; i < n_tris(); ++i) tri_lookup_.emplace(tris[i], i);
  }

  edge_lookup_.clear();
  edges.clear();
  for (const auto& f : tris) {
    const std::array<std::array<int, 2>, 3> es{{{f[0], f[1]}, {f[0], f[2]}, {f[1], f[2]}}};
    for (auto e : es)
      if (edge_lookup_.emplace(detail::pack2(e[0], e[1]), static_cast<int>(edges.size())).second)
        edges.push_back(e);
  }

  // coboundary matrices: d_p[s, face] = (-1)^drop
  auto assemble = [&](int rows, int cols, auto&& entries) {
    spmat_t m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    return m;
  };
  {
    std::vector<triplet_t> tr;
    for (int e = 0; e < n_edges(); ++e) {
      tr.emplace_back(e, edges[e][0], -1.0);
      tr.emplace_back(e, edges[e][1], 1.0);
    }
    d0 = assemble(n_edges(), n_vertices(), tr);
  }
  {
    std::vector<triplet_t> tr;
    for (int f = 0; f < n_tris(); ++f) {
      const auto& t = tris[f];
      tr.emplace_back(f, edge_id(t[1], t[2]), 1.0);
      tr.emplace_back(f, edge_id(t[0], t[2]), -1.0);
      tr.emplace_back(f, edge_id(t[0], t[1]), 1.0);
    }
    d1 = assemble(n_tris(), n_edges(), tr);
  }
  if (dim == 3) {
    std::vector<triplet_t> tr;
    for (int s = 0; s < n_tets(); ++s) {
      const auto& t = tets[s];
      for (int drop = 0; drop < 4; ++drop) {
        std::array<int, 3> f;
        for (int i = 0, k = 0; i < 4; ++i)
          if (i != drop) f[k++] = t[i];
        tr.emplace_back(s, tri_lookup_.at(f), drop % 2 == 0 ? 1.0 : -1.0);
      }
    }
    d2 = assemble(n_tets(), n_tris(), tr);
  }

  // cofaces
  for (auto& c : cofaces_) c.clear();
  cofaces_[0].resize(n_vertices());
  for (int e = 0; e < n_edges(); ++e)
    for (int v : edges[e]) cofaces_[0][v].push_back(e);
  cofaces_[1].resize(n_edges());
  for (int f = 0; f < n_tris(); ++f) {
    const auto& t = tris[f];
    cofaces_[1][edge_id(t[0], t[1])].push_back(f);
    cofaces_[1][edge_id(t[0], t[2])].push_back(f);
    cofaces_[1][edge_id(t[1], t[2])].push_back(f);
  }
  if (dim == 3) {
    cofaces_[2].resize(n_tris());
    for (int s = 0; s < n_tets(); ++s) {
      const auto& t = tets[s];
      for (int drop = 0; drop < 4; ++drop) {
        std::array<int, 3> f;
        for (int i = 0, k = 0; i < 4; ++i)
          if (i != drop) f[k++] = t[i];
        cofaces_[2][tri_lookup_.at(f)].push_back(s);
      }
    }
  }

  // volumes
  vol1.resize(n_edges());
  for (int e = 0; e < n_edges(); ++e) vol1[e] = delta(edges[e][0], edges[e][1]).norm();
  vol2.resize(n_tris());
  for (int f = 0; f < n_tris(); ++f) vol2[f] = simplex_volume(span(2, f));
  if (dim == 3) {
    vol3.resize(n_tets());
    for (int s = 0; s < n_tets(); ++s) vol3[s] = simplex_volume(span(3, s));
  } else {
    vol3.resize(0);
  }

  validate();
}

inline void Mesh::validate() const {
  // degenerate simplices
  const double scale = vol1.size() ? vol1.maxCoeff() : 1.0;
  for (int e = 0; e < n_edges(); ++e)
    if (!(vol1[e] > 1e-12 * scale))
      fail("geometry.degenerate_simplex", "edge " + std::to_string(e) + " has zero length");
  for (int f = 0; f < n_tris(); ++f)
    if (!(vol2[f] > 1e-14 * scale * scale))
      fail("geometry.degenerate_simplex", "face " + std::to_string(f) + " has zero area");
  for (int s = 0; s < n_tets(); ++s)
    if (!(vol3[s] > 1e-16 * scale * scale * scale))
      fail("geometry.degenerate_simplex", "tet " + std::to_string(s) + " has zero volume");

  // periodic sanity: minimal-image realization needs small simplices
  for (int a = 0; a < ambient; ++a)
    if (periods[a] > 0 && vol1.size() && vol1.maxCoeff() > 0.45 * periods[a])
      fail("geometry.simplex_too_large", "edge length exceeds half the period");

  // closed manifold: every (n-1)-simplex has exactly two cofaces with
  // cancelling induced orientations
  const int np = dim - 1;
  const auto& cf = cofaces_[np];
  for (int i = 0; i < n_simplices(np); ++i) {
    if (cf[i].size() != 2)
      fail("geometry.not_closed", "facet " + std::to_string(i) + " lies in " +
                                      std::to_string(cf[i].size()) + " top simplices");
  }
  // orientation consistency via d_{n-1}^T applied to oriented top chain:
  // sum over tops of orient * incidence must vanish on every facet
  const spmat_t& dtop = dim == 2 ? d1 : d2;
  vec_t o(n_top());
  for (int s = 0; s < n_top(); ++s) o[s] = top_orient[s];
  vec_t r = dtop.transpose() * o;
  if (r.size() && r.cwiseAbs().maxCoeff() > 0)
    fail("geometry.inconsistent_orientation", "induced facet orientations do not cancel");
}

inline MeshQuality Mesh::quality() const {
  MeshQuality q;
  q.min_edge = vol1.minCoeff();
  q.max_edge = vol1.maxCoeff();
  q.min_angle_deg = 180.0;
  if (dim == 2) {
    for (int f = 0; f < n_tris(); ++f) {
      const mat_t P = realize(2, f);
      for (int i = 0; i < 3; ++i) {
        const vec_t a = (P.row((i + 1) % 3) - P.row(i)).transpose();
        const vec_t b = (P.row((i + 2) % 3) - P.row(i)).transpose();
        const double ang = std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
        q.min_angle_deg = std::min(q.min_angle_deg, ang * 180.0 / kPi);
      }
    }
  }
  int wc = 0;
  for (int s = 0; s < n_top(); ++s) {
    const mat_t P = realize(dim, s);
    const mat_t E = span(dim, s);
    const vec_t c = circumcenter(P.row(0).transpose(), E);
    // barycentric coordinates of the circumcenter
    const vec_t y = (E.transpose() * E).ldlt().solve(E.transpose() * (c - P.row(0).transpose()));
    double mn = 1.0 - y.sum();
    for (int i = 0; i < y.size(); ++i) mn = std::min(mn, y[i]);
    if (mn > 1e-9) ++wc;
  }
  q.well_centered_frac = static_cast<double>(wc) / std::max(1, n_top());
  return q;
}

// ---------------------------------------------------------------------------
// point location (structured flat tori)

inline std::pair<int, vec_t> Mesh::locate(const vec_t& x) const {
  if (!structured || dim != 2)
    fail("geometry.locate_unsupported", "point location needs a structured 2d torus mesh");
  const auto& si = *structured;
  const vec_t xw = wrap_coords(x, periods);
  const int ci = static_cast<int>(std::floor(xw[0] / si.hx));
  const int cj = static_cast<int>(std::floor(xw[1] / si.hy));
  // candidate triangles from the cell and its neighbours; membership by
  // barycentric test on the minimal-image realization around the query point
  for (int dj = 0; dj >= -1; --dj)
    for (int di = -1; di <= 1; ++di) {
      const int i = ((ci + di) % si.nx + si.nx) % si.nx;
      const int j = ((cj + dj) % si.ny + si.ny) % si.ny;
      for (int k = 0; k < 2; ++k) {
        const int id = (j * si.nx + i) * 2 + k;
        const mat_t P = realize(2, id);
        // shift realization to the copy nearest the query
        const vec_t shift = wrap_delta(vec_t(xw - P.row(0).transpose()), periods) -
                            (xw - P.row(0).transpose());
        mat_t E(2, 2);
        E.col(0) = (P.row(1) - P.row(0)).transpose();
        E.col(1) = (P.row(2) - P.row(0)).transpose();
        const vec_t rel = xw + shift - P.row(0).transpose();
        const vec_t y = E.colPivHouseholderQr().solve(rel);
        const double b0 = 1.0 - y.sum();
        if (y[0] > -1e-10 && y[1] > -1e-10 && b0 > -1e-10) {
          vec_t bc(3);
          bc << b0, y[0], y[1];
          return {id, bc};
        }
      }
    }
  fail("geometry.locate_failed", "no containing triangle found");
}

// ---------------------------------------------------------------------------
// generators

/// flat torus, brick-pattern rows (isoceles/acute triangles, well centered
/// when hy >= hx/2). ny must be even so the half-shift closes up periodically.
inline Mesh torus2_shifted(double Lx, double Ly, int nx, int ny) {
  if (ny % 2) fail("geometry.bad_resolution", "shifted torus needs even row count");
  if (Lx <= 0.0 || Ly <= 0.0 || nx < 2 || ny < 2)
    fail("geometry.bad_resolution", "torus needs positive periods and at least 2x2 cells");
  Mesh m;
  m.dim = 2;
  m.ambient = 2;
  m.periods = vec_t(2);
  m.periods << Lx, Ly;
  const double hx = Lx / nx, hy = Ly / ny;
  m.vertices.resize(nx * ny, 2);
  auto vid = [&](int i, int j) { return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.vertices(vid(i, j), 0) = wrap_coord((i + 0.5 * (j % 2)) * hx, Lx);
      m.vertices(vid(i, j), 1) = j * hy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (j % 2 == 0) {  // next row shifted right
        m.tris.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1)});
        m.tris.push_back({vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      } else {  // next row shifted left
        m.tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
        m.tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      }
    }
  m.structured = StructuredInfo{StructuredInfo::Kind::torus2_shifted, nx, ny, 0, hx, hy, 0};
  m.build();
  return m;
}

/// flat torus, right-triangle (diagonal split) layout: keeps exact horizontal
/// and vertical edges, which the edge-based sup-norm surrogate needs for
/// axis-aligned fields. Not well centered; Hodge stars fall back per simplex.
inline Mesh torus2_diagonal(double Lx, double Ly, int nx, int ny) {
  if (Lx <= 0.0 || Ly <= 0.0 || nx < 2 || ny < 2)
    fail("geometry.bad_resolution", "torus needs positive periods and at least 2x2 cells");
  Mesh m;
  m.dim = 2;
  m.ambient = 2;
  m.periods = vec_t(2);
  m.periods << Lx, Ly;
  const double hx = Lx / nx, hy = Ly / ny;
  m.vertices.resize(nx * ny, 2);
  auto vid = [&](int i, int j) { return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.vertices(vid(i, j), 0) = i * hx;
      m.vertices(vid(i, j), 1) = j * hy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  m.structured = StructuredInfo{StructuredInfo::Kind::torus2_diagonal, nx, ny, 0, hx, hy, 0};
  m.build();
  return m;
}

/// flat 3-torus on the BCC lattice (Sommerville tetrahedra): well centered,
/// so circumcentric Hodge stars stay strictly positive.
inline Mesh torus3_bcc(double L, int n) {
  if (L <= 0.0 || n < 2)
    fail("geometry.bad_resolution", "BCC torus needs a positive period and n >= 2");
  Mesh m;
  m.dim = 3;
  m.ambient = 3;
  m.periods = vec_t(3);
  m.periods << L, L, L;
  const double h = L / n;
  const int nc = n * n * n;
  m.vertices.resize(2 * nc, 3);
  auto cw = [&](int i) { return (i % n + n) % n; };
  auto corner = [&](int i, int j, int k) { return (cw(k) * n + cw(j)) * n + cw(i); };
  auto center = [&](int i, int j, int k) { return nc + (cw(k) * n + cw(j)) * n + cw(i); };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        m.vertices.row(corner(i, j, k)) << i * h, j * h, k * h;
        m.vertices.row(center(i, j, k)) << (i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h;
      }
  // four tets around every +axis face of every cell: the two cell centers
  // plus each edge of the shared face
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (int axis = 0; axis < 3; ++axis) {
          const int di = axis == 0, dj = axis == 1, dk = axis == 2;
          const int c1 = center(i, j, k);
          const int c2 = center(i + di, j + dj, k + dk);
          // corners of the shared face, cyclic order
          const int b0 = axis == 0 ? 1 : 0, b1 = axis == 2 ? 1 : 2;  // face axes
          int steps[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
          steps[1][b0] = 1;
          steps[2][b0] = 1;
          steps[2][b1] = 1;
          steps[3][b1] = 1;
          std::array<int, 4> fc;
          for (int q = 0; q < 4; ++q)
            fc[q] = corner(i + di + steps[q][0], j + dj + steps[q][1], k + dk + steps[q][2]);
          for (int q = 0; q < 4; ++q) {
            const int a = fc[q], b = fc[(q + 1) % 4];
            m.tets.push_back({c1, c2, a, b});
            // orientation: +1 if (c2-c1, a-c1, b-c1) is right handed; the
            // generator computes it from the unwrapped local geometry
            Eigen::Vector3d pc1, pc2, pa, pb;
            pc1 << (i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h;
            pc2 = pc1;
            pc2[axis] += h;
            auto cpos = [&](int q2) {
              Eigen::Vector3d p;
              p << (i + di + steps[q2][0]) * h, (j + dj + steps[q2][1]) * h,
                  (k + dk + steps[q2][2]) * h;
              return p;
            };
            pa = cpos(q);
            pb = cpos((q + 1) % 4);
            Eigen::Matrix3d D;
            D.col(0) = pc2 - pc1;
            D.col(1) = pa - pc1;
            D.col(2) = pb - pc1;
            m.top_orient.push_back(D.determinant() > 0 ? 1 : -1);
          }
        }
  m.structured = StructuredInfo{StructuredInfo::Kind::torus3_bcc, n, n, n, h, h, h};
  m.build();
  return m;
}

/// geodesic sphere: subdivided icosahedron projected to radius r, faces
/// oriented outward.
inline Mesh icosphere(double r, int subdiv) {
  if (r <= 0.0) fail("geometry.bad_resolution", "sphere radius must be positive");
  if (subdiv < 0 || subdiv > 7)
    fail("geometry.bad_resolution", "subdivision depth outside [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> vs = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : vs) v.normalize();
  std::vector<std::array<int, 3>> fs = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Eigen::Vector3d p = (vs[a] + vs[b]).normalized();
    vs.push_back(p);
    const int id = static_cast<int>(vs.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  for (int s = 0; s < subdiv; ++s) {
    std::vector<std::array<int, 3>> next;
    next.reserve(fs.size() * 4);
    for (const auto& f : fs) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    fs = std::move(next);
  }
  Mesh m;
  m.dim = 2;
  m.ambient = 3;
  m.periods = vec_t::Zero(3);
  m.vertices.resize(vs.size(), 3);
  for (size_t i = 0; i < vs.size(); ++i) m.vertices.row(i) = r * vs[i].transpose();
  m.tris = fs;
  // outward orientation: normal of the listed order must point away from the origin
  m.top_orient.reserve(fs.size());
  for (const auto& f : fs) {
    const Eigen::Vector3d a = m.vertices.row(f[0]), b = m.vertices.row(f[1]),
                          c = m.vertices.row(f[2]);
    m.top_orient.push_back(((b - a).cross(c - a)).dot(a + b + c) > 0 ? 1 : -1);
  }
  m.build();
  return m;
}

// ---------------------------------------------------------------------------
// plain-text mesh format
//
//   mesh <dim> <ambient>
//   periodic <p_1> ... <p_ambient>      (optional; 0 = aperiodic axis)
//   vertices <V>
//   <V coordinate lines>
//   simplices <T>
//   <T lines of dim+1 vertex ids; listed order fixes the orientation>

inline void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("geometry.io", "cannot open " + path + " for writing");
  out.precision(17);
  out << "mesh " << m.dim << " " << m.ambient << "\n";
  if ((m.periods.array() != 0).any()) {
    out << "periodic";
    for (int i = 0; i < m.ambient; ++i) out << " " << m.periods[i];
    out << "\n";
  }
  out << "vertices " << m.n_vertices() << "\n";
  for (int v = 0; v < m.n_vertices(); ++v) {
    for (int i = 0; i < m.ambient; ++i) out << (i ? " " : "") << m.vertices(v, i);
    out << "\n";
  }
  out << "simplices " << m.n_top() << "\n";
  for (int s = 0; s < m.n_top(); ++s) {
    const int* v = m.simplex(m.dim, s);
    std::vector<int> tup(v, v + m.dim + 1);
    if (m.top_orient[s] < 0) std::swap(tup[0], tup[1]);  // encode orientation in the order
    for (int i = 0; i <= m.dim; ++i) out << (i ? " " : "") << tup[i];
    out << "\n";
  }
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("geometry.io", "cannot open " + path);
  Mesh m;
  std::string tok;
  if (!(in >> tok) || tok != "mesh") fail("geometry.parse", path + ": expected 'mesh' header");
  if (!(in >> m.dim >> m.ambient)) fail("geometry.parse", path + ": bad mesh header");
  in >> tok;
  if (tok == "periodic") {
    m.periods.resize(m.ambient);
    for (int i = 0; i < m.ambient; ++i)
      if (!(in >> m.periods[i])) fail("geometry.parse", path + ": bad periods");
    in >> tok;
  }
  if (tok != "vertices") fail("geometry.parse", path + ": expected 'vertices'");
  int V = 0;
  in >> V;
  m.vertices.resize(V, m.ambient);
  for (int v = 0; v < V; ++v)
    for (int i = 0; i < m.ambient; ++i)
      if (!(in >> m.vertices(v, i))) fail("geometry.parse", path + ": bad vertex line");
  if (!(in >> tok) || tok != "simplices") fail("geometry.parse", path + ": expected 'simplices'");
  int T = 0;
  in >> T;
  for (int s = 0; s < T; ++s) {
    std::array<int, 4> t{0, 0, 0, 0};
    for (int i = 0; i <= m.dim; ++i)
      if (!(in >> t[i]) || t[i] < 0 || t[i] >= V)
        fail("geometry.parse", path + ": bad simplex line " + std::to_string(s));
    if (m.dim == 2)
      m.tris.push_back({t[0], t[1], t[2]});
    else
      m.tets.push_back(t);
    m.top_orient.push_back(1);  // orientation from listed order; canonicalized in build()
  }
  m.build();
  return m;
}

}  // namespace maglab
