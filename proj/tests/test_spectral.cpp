// Coexact Laplace spectra against the analytic flat-torus eigenvalues, the
// curl eigenproblem on the 3-torus, cross-route consistency between the two
// discretizations, and determinism of the seeded solvers.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "maglab/dec.hpp"
#include "maglab/mesh.hpp"
#include "maglab/spectral.hpp"
#include "maglab/util.hpp"

using namespace maglab;

TEST_CASE("coexact spectrum of the square torus", "[spectral]") {
  // continuum eigenvalues of the 1-form Laplacian on coexact forms over the
  // (2pi)^2 torus are |k|^2 for integer k != 0: 1 (multiplicity 4), then 2.
  const Mesh m = torus2_shifted(2.0 * kPi, 2.0 * kPi, 32, 32);
  const Dec dec = build_dec(m);
  const auto eigs = coexact_spectrum(dec, 6);
  REQUIRE(eigs.size() == 6);
  for (int i = 0; i < 4; ++i)
    CHECK(eigs[i].lambda == Catch::Approx(1.0).epsilon(0.03));
  for (int i = 4; i < 6; ++i)
    CHECK(eigs[i].lambda == Catch::Approx(2.0).epsilon(0.05));
  for (const auto& e : eigs) {
    CHECK(e.residual < 1e-7);
    CHECK(e.coexact_defect < 1e-7);
    CHECK(dec.norm_l2(1, e.form) == Catch::Approx(1.0).epsilon(1e-6));
  }
  // eigenvalues sorted ascending
  for (std::size_t i = 1; i < eigs.size(); ++i) CHECK(eigs[i].lambda >= eigs[i - 1].lambda);
}

TEST_CASE("coexact spectrum scales with the metric", "[spectral]") {
  // doubling the torus period divides every eigenvalue by four
  const Mesh big = torus2_shifted(4.0 * kPi, 4.0 * kPi, 24, 24);
  const Dec dec = build_dec(big);
  const auto eigs = coexact_spectrum(dec, 2);
  REQUIRE(eigs.size() == 2);
  CHECK(eigs[0].lambda == Catch::Approx(0.25).epsilon(0.05));
}

TEST_CASE("curl spectrum of the cubic 3-torus", "[spectral]") {
  // continuum curl eigenvalues on the (2pi)^3 torus are +-|k| with circular
  // polarizations; the smallest magnitude is 1 and values come in +- pairs.
  const Mesh m = torus3_bcc(2.0 * kPi, 5);
  const auto eigs = curl_spectrum(m, 6, 0.4, 0xcede11ULL);
  REQUIRE(eigs.size() == 6);
  int pos = 0, neg = 0;
  for (const auto& e : eigs) {
    CHECK(std::abs(e.lambda) == Catch::Approx(1.0).epsilon(0.10));
    CHECK(e.residual < 1e-6);
    (e.lambda > 0 ? pos : neg)++;
  }
  CHECK(pos >= 2);
  CHECK(neg >= 2);

  // cross-route check: squared curl eigenvalues against the coexact Laplace
  // spectrum from the independent diagonal-star discretization
  const Dec dec = build_dec(m);
  const auto lap = coexact_spectrum(dec, 6);
  REQUIRE(lap.size() == 6);
  for (int i = 0; i < 6; ++i) {
    const double mu2 = eigs[i].lambda * eigs[i].lambda;
    CHECK(mu2 == Catch::Approx(lap[i].lambda).epsilon(0.10));
  }
}

TEST_CASE("seeded eigensolves are deterministic", "[spectral]") {
  const Mesh m = torus2_shifted(2.0 * kPi, 2.0 * kPi, 12, 12);
  const Dec dec = build_dec(m);
  const auto a = coexact_spectrum(dec, 4, 0x5eedc0deULL);
  const auto b = coexact_spectrum(dec, 4, 0x5eedc0deULL);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lambda == b[i].lambda);  // bitwise
    CHECK((a[i].form - b[i].form).cwiseAbs().maxCoeff() == 0.0);
  }

  const Mesh m3 = torus3_bcc(kPi, 3);
  const auto c1 = curl_spectrum(m3, 3);
  const auto c2 = curl_spectrum(m3, 3);
  REQUIRE(c1.size() == c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].lambda == c2[i].lambda);
}

TEST_CASE("mean value ratio is scale invariant", "[spectral]") {
  const Mesh m = torus2_shifted(2.0 * kPi, 2.0 * kPi, 12, 12);
  const Dec dec = build_dec(m);
  const auto eigs = coexact_spectrum(dec, 1);
  REQUIRE(eigs.size() == 1);
  const double r1 = mean_value_ratio(dec, eigs[0].form);
  const double r2 = mean_value_ratio(dec, vec_t(5.0 * eigs[0].form));
  CHECK(r1 > 0.0);
  CHECK(r1 == Catch::Approx(r2).epsilon(1e-12));
  CHECK_THROWS_AS(mean_value_ratio(dec, vec_t::Zero(m.n_edges())), Error);
}

TEST_CASE("edge-element matrices reject 2d meshes", "[spectral]") {
  const Mesh m = torus2_shifted(1.0, 1.0, 4, 4);
  CHECK_THROWS_AS(curl_spectrum(m, 2), Error);
}
