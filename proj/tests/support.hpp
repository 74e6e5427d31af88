#pragma once
// Shared plumbing for the test suites: scratch directories, file helpers, and
// an independent sandwich oracle for the minimax critical value.  The oracle
// deliberately avoids the production solver: the upper route evaluates the
// edgewise objective at explicit potentials (refined by naive subgradient
// steps) and the lower route enumerates circulation-to-length ratios of
// structured grid loops, which bound the value from below for every potential.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "maglab/dec.hpp"
#include "maglab/mesh.hpp"

namespace testlab {

inline std::filesystem::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("maglab-tests-" + std::to_string(::getpid())) /
             (tag + "-" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  return p.string();
}

// Upper route: f(u) = max_e |(d0 u + omega)_e| / len_e, evaluated at u = 0 and
// refined with diminishing subgradient steps on the active edge.  Every
// iterate is a feasible potential, so the running minimum is a certified
// upper bound on the infimum.
inline double oracle_upper(const maglab::Mesh& m, const maglab::vec_t& omega,
                           int iters = 20000) {
  using maglab::vec_t;
  const int E = m.n_edges();
  vec_t u = vec_t::Zero(m.n_vertices());
  vec_t r(E);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < iters; ++k) {
    r = m.d0 * u + omega;
    int arg = 0;
    double f = 0.0;
    for (int e = 0; e < E; ++e) {
      const double val = std::abs(r[e]) / m.vol1[e];
      if (val > f) {
        f = val;
        arg = e;
      }
    }
    best = std::min(best, f);
    const double sign = (r[arg] >= 0.0 ? 1.0 : -1.0) / m.vol1[arg];
    const double step = 0.5 * f / std::sqrt(static_cast<double>(k + 1));
    const int a = m.edges[arg][0], b = m.edges[arg][1];
    u[a] -= step * sign * m.d0.coeff(arg, a);
    u[b] -= step * sign * m.d0.coeff(arg, b);
  }
  return best;
}

// Lower route: closed loops kill d0 u, so |loop integral| / loop length bounds
// the edgewise sup from below.  Enumerates every grid column and row of a
// structured 2d torus (columns zigzag on the shifted layout; the bound is
// still valid, just weaker there).
inline double oracle_lower(const maglab::Mesh& m, const maglab::vec_t& omega) {
  if (!m.structured) return 0.0;
  const int nx = m.structured->nx, ny = m.structured->ny;
  auto vid = [&](int i, int j) {
    return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx);
  };
  double best = 0.0;
  auto rate = [&](const std::vector<int>& verts) {
    maglab::vec_t chain = m.path_chain(verts);
    const double circ = std::abs(chain.dot(omega));
    const double len = chain.cwiseAbs().dot(m.vol1);
    if (len > 0.0) best = std::max(best, circ / len);
  };
  std::vector<int> verts;
  for (int i = 0; i < nx; ++i) {  // columns
    verts.clear();
    for (int j = 0; j < ny; ++j) verts.push_back(vid(i, j));
    rate(verts);
  }
  for (int j = 0; j < ny; ++j) {  // rows
    verts.clear();
    for (int i = 0; i < nx; ++i) verts.push_back(vid(i, j));
    rate(verts);
  }
  return best;
}

struct Sandwich {
  double lower = 0.0;  // certified lower bound on sqrt(2c)
  double upper = 0.0;  // certified upper bound on sqrt(2c)
};

inline Sandwich critical_value_sandwich(const maglab::Mesh& m, const maglab::vec_t& omega,
                                        int iters = 20000) {
  return {oracle_lower(m, omega), oracle_upper(m, omega, iters)};
}

}  // namespace testlab
