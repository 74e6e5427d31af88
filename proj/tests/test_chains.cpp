// Minimal spanning chains: LP route against the exhaustive {-1,0,1} integer
// oracle on a mesh small enough to enumerate, frozen region areas for grid
// rectangles, the Stokes transpose identity, per-loop inequality checks, and
// the homology/closedness prechecks.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "maglab/chains.hpp"
#include "maglab/dec.hpp"
#include "maglab/forms.hpp"
#include "maglab/mesh.hpp"
#include "maglab/util.hpp"

using namespace maglab;

namespace {

vec_t rect_loop(const Mesh& m, int i0, int j0, int i1, int j1) {
  const int nx = m.structured->nx, ny = m.structured->ny;
  auto vid = [&](int i, int j) {
    return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx);
  };
  std::vector<int> verts;
  for (int i = i0; i < i1; ++i) verts.push_back(vid(i, j0));
  for (int j = j0; j < j1; ++j) verts.push_back(vid(i1, j));
  for (int i = i1; i > i0; --i) verts.push_back(vid(i, j1));
  for (int j = j1; j > j0; --j) verts.push_back(vid(i0, j));
  return m.path_chain(verts);
}

}  // namespace

TEST_CASE("LP chain matches the exhaustive integer oracle", "[chains]") {
  const Mesh m = torus2_diagonal(1.0, 1.0, 2, 2);  // 8 faces: enumerable
  const Dec dec = build_dec(m);
  // boundary of the first triangle
  const auto& tri = m.tris[0];
  const vec_t cycle = m.path_chain({tri[0], tri[1], tri[2]});

  const SpanningChain brute = exhaustive_integer_chain(dec, cycle);
  CHECK(brute.mass == Catch::Approx(m.vol2[0]).epsilon(1e-12));

  const SpanningChain lp = minimal_spanning_chain(dec, cycle);
  CHECK(lp.mass == Catch::Approx(brute.mass).epsilon(1e-9));
  CHECK(lp.feasibility == 0.0);  // snapped to the exact integer chain
  CHECK((lp.coeffs - lp.coeffs.array().round().matrix()).cwiseAbs().maxCoeff() < 1e-12);

  const Mesh big = torus2_diagonal(1.0, 1.0, 4, 4);
  CHECK_THROWS_AS(exhaustive_integer_chain(build_dec(big), vec_t::Zero(big.n_edges())),
                  Error);
}

TEST_CASE("grid rectangles span their enclosed area", "[chains]") {
  const Mesh m = torus2_diagonal(2.0 * kPi, 2.0 * kPi, 12, 12);
  const Dec dec = build_dec(m);
  const double h = kPi / 6.0;

  const SpanningChain sc = minimal_spanning_chain(dec, rect_loop(m, 2, 2, 6, 6));
  CHECK(sc.mass == Catch::Approx(16.0 * h * h).epsilon(1e-6));
  CHECK(sc.feasibility <= 1e-9 * 2.0);
  CHECK(sc.gap <= 1e-6 * sc.mass * (1.0 + 1e-9) + 1e-12);
  CHECK(sc.iterations > 0);

  // a near-full rectangle is spanned by the complement region
  const SpanningChain inv = minimal_spanning_chain(dec, rect_loop(m, 0, 0, 10, 10));
  CHECK(inv.mass == Catch::Approx((144.0 - 100.0) * h * h).epsilon(1e-6));
}

TEST_CASE("Stokes identity and the per-loop inequality", "[chains]") {
  const Mesh m = torus2_diagonal(2.0 * kPi, 2.0 * kPi, 12, 12);
  const Dec dec = build_dec(m);
  const vec_t omega = integrate_edges(m, form_sine_dy(0.5).eval);

  for (auto [i0, j0, i1, j1] : {std::array<int, 4>{1, 1, 4, 5},
                                std::array<int, 4>{2, 0, 9, 3},
                                std::array<int, 4>{0, 0, 6, 6}}) {
    const SpanningChain sc = minimal_spanning_chain(dec, rect_loop(m, i0, j0, i1, j1));
    CHECK(stokes_check(dec, omega, sc) <= 1e-12);
    const CheegerCheck chk = cheeger_chain_check(dec, omega, sc);
    CHECK(chk.ok);
    CHECK(chk.lhs <= chk.rhs * (1.0 + 1e-9) + 1e-11);
    CHECK(chk.stokes <= 1e-12);
    CHECK(chk.dsup == Catch::Approx(0.5).epsilon(0.05));  // sup |cos| weighted means
    CHECK(chk.length == Catch::Approx(m.vol1.dot(sc.cycle.cwiseAbs())).epsilon(1e-12));
  }
}

TEST_CASE("homology and closedness prechecks", "[chains]") {
  const Mesh m = torus2_diagonal(2.0 * kPi, 2.0 * kPi, 8, 8);
  const Dec dec = build_dec(m);

  // winding row loop pairs with the harmonic basis
  std::vector<int> row;
  for (int i = 0; i < 8; ++i) row.push_back(i);
  CHECK_THROWS_AS(minimal_spanning_chain(dec, m.path_chain(row)), Error);

  // a bare edge is not closed
  vec_t stub = vec_t::Zero(m.n_edges());
  stub[0] = 1.0;
  CHECK_THROWS_AS(minimal_spanning_chain(dec, stub), Error);
  CHECK_THROWS_AS(minimal_spanning_chain(dec, vec_t::Zero(4)), Error);

  // the zero cycle is spanned by the zero chain
  const SpanningChain z = minimal_spanning_chain(dec, vec_t::Zero(m.n_edges()));
  CHECK(z.mass == 0.0);
  CHECK(z.coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(cheeger_chain_check(dec, vec_t::Zero(m.n_edges()), z), Error);
}

TEST_CASE("loop family estimate picks the best length-to-mass ratio", "[chains]") {
  const Mesh m = torus2_diagonal(2.0 * kPi, 2.0 * kPi, 12, 12);
  const Dec dec = build_dec(m);
  const mat_t basis = basis_matrix(harmonic_basis(dec), m.n_edges());
  const double h = kPi / 6.0;

  const std::vector<vec_t> loops = {rect_loop(m, 0, 0, 1, 1), rect_loop(m, 2, 2, 6, 6)};
  const H1Estimate est = h1_upper_estimate(dec, loops, basis);
  REQUIRE(est.lengths.size() == 2);
  CHECK(est.lengths[0] == Catch::Approx(4.0 * h).epsilon(1e-12));
  CHECK(est.masses[1] == Catch::Approx(16.0 * h * h).epsilon(1e-6));
  CHECK(est.witness == 1);  // 16h/16h^2 beats 4h/h^2
  CHECK(est.ratio == Catch::Approx(1.0 / h).epsilon(1e-6));

  CHECK_THROWS_AS(h1_upper_estimate(dec, {}, basis), Error);
}
