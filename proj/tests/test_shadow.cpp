// Half-plane shadowing toolkit against closed-form hyperbolic geometry:
// geodesic curvature of model curves, shadow geodesic recovery, ideal
// endpoints, fellow-traveling ratios, and the averaged-difference bound.
// Every numeric target is an analytic value of the curve family, not a
// stored program output.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "maglab/flow.hpp"
#include "maglab/forms.hpp"
#include "maglab/model_space.hpp"
#include "maglab/shadow.hpp"
#include "maglab/system.hpp"
#include "maglab/util.hpp"

using namespace maglab;

TEST_CASE("geodesic curvature of the model curve families", "[shadow]") {
  const ModelSpace sp = half_plane();

  // hypercycles at distance d have curvature tanh(d)
  for (double d : {0.25, 0.5, 1.0}) {
    const SampledCurve c = h2_hypercycle(d, 6.0);
    const vec_t kap = geodesic_curvature(sp, c);
    CHECK(kap.maxCoeff() == Catch::Approx(std::tanh(d)).margin(1e-5));
    CHECK(kap.minCoeff() == Catch::Approx(std::tanh(d)).margin(1e-5));
  }
  // horocycles have curvature 1, geodesics 0
  const vec_t kh = geodesic_curvature(sp, h2_horocycle(1.0, 0.0, 4.0));
  CHECK(kh.maxCoeff() == Catch::Approx(1.0).margin(1e-5));
  const vec_t kv = geodesic_curvature(sp, h2_geodesic_vertical(0.3, 1.0, 4.0));
  CHECK(kv.cwiseAbs().maxCoeff() < 1e-6);
  const vec_t kc = geodesic_curvature(sp, h2_geodesic_circle(2.0, 1.5, 4.0));
  CHECK(kc.cwiseAbs().maxCoeff() < 1e-6);

  // all families are unit speed
  const SampledCurve hc = h2_hypercycle(0.5, 4.0);
  for (int i : {0, hc.n() / 2, hc.n() - 1}) {
    vec_t x = hc.xs.row(i).transpose(), v = hc.vs.row(i).transpose();
    CHECK(sp.tangent_norm(x, v) == Catch::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("fellow-traveling constant formula", "[shadow]") {
  CHECK(quasigeodesic_constant(0.0) == 1.0);
  CHECK(quasigeodesic_constant(0.5) == Catch::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-12));
  CHECK_THROWS_AS(quasigeodesic_constant(1.0), Error);
  CHECK_THROWS_AS(quasigeodesic_constant(-0.1), Error);

  // regression estimate on an exact hypercycle approaches cosh(d)
  const ModelSpace sp = half_plane();
  const double d = 0.5;
  const double ratio = quasigeodesic_ratio(sp, h2_hypercycle(d, 40.0));
  CHECK(ratio == Catch::Approx(std::cosh(d)).margin(1e-3));
}

TEST_CASE("shadow geodesic of a hypercycle is its axis", "[shadow]") {
  const ModelSpace sp = half_plane();
  const double d = 0.6;
  // the ray from the origin at angle theta with sin(theta) = sech(d) keeps
  // distance d from the vertical axis through 0
  const ShadowResult res = shadow_geodesic(sp, h2_hypercycle(d, 14.0));
  REQUIRE(res.geodesic.vertical);
  CHECK(std::abs(res.geodesic.x0) < 1e-3);
  CHECK(res.fellow_distance == Catch::Approx(d).margin(1e-3));
  CHECK(res.plus_at_inf);
  CHECK_FALSE(res.minus_at_inf);
  CHECK(std::abs(res.end_minus) < 1e-3);
}

TEST_CASE("shadow geodesic of a geodesic is itself", "[shadow]") {
  const ModelSpace sp = half_plane();
  const ShadowResult res = shadow_geodesic(sp, h2_geodesic_circle(2.0, 1.5, 5.0));
  REQUIRE_FALSE(res.geodesic.vertical);
  CHECK(res.geodesic.c == Catch::Approx(2.0).margin(1e-4));
  CHECK(res.geodesic.R == Catch::Approx(1.5).margin(1e-4));
  CHECK(res.fellow_distance < 1e-5);
  CHECK(res.end_minus == Catch::Approx(0.5).margin(1e-3));
  CHECK(res.end_plus == Catch::Approx(3.5).margin(1e-3));

  const ShadowResult vres = shadow_geodesic(sp, h2_geodesic_vertical(-0.7, 1.0, 8.0));
  REQUIRE(vres.geodesic.vertical);
  CHECK(vres.geodesic.x0 == Catch::Approx(-0.7).margin(1e-6));
  CHECK(vres.plus_at_inf);
  CHECK(std::abs(vres.end_minus - (-0.7)) < 1e-3);
}

TEST_CASE("hyperbolic distance helper", "[shadow]") {
  CHECK(h2_distance(0.0, 1.0, 0.0, std::exp(1.0)) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(h2_distance(0.4, 0.3, -1.0, 2.2) ==
        Catch::Approx(h2_distance(-1.0, 2.2, 0.4, 0.3)).epsilon(1e-12));
  // triangle inequality on a fixed triple
  const double ab = h2_distance(0.0, 1.0, 1.0, 1.0);
  const double bc = h2_distance(1.0, 1.0, 1.0, 2.0);
  const double ac = h2_distance(0.0, 1.0, 1.0, 2.0);
  CHECK(ac <= ab + bc + 1e-12);
}

TEST_CASE("arc-length reparametrization reaches unit speed", "[shadow]") {
  const ModelSpace sp = half_plane();
  // quadratic horizontal motion at height 1: metric speed 2t on t in [1, 2],
  // total metric length 3
  SampledCurve c;
  const int n = 2001;
  c.ts.resize(n);
  c.xs.resize(n, 2);
  c.vs.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = 1.0 + i / double(n - 1);
    c.ts[i] = t;
    c.xs(i, 0) = t * t;
    c.xs(i, 1) = 1.0;
    c.vs(i, 0) = 2.0 * t;
    c.vs(i, 1) = 0.0;
  }
  const SampledCurve u = arclength_reparam(sp, c);
  CHECK(u.ts.back() == Catch::Approx(3.0).epsilon(1e-6));
  for (int i : {0, u.n() / 3, u.n() - 1}) {
    vec_t x = u.xs.row(i).transpose(), v = u.vs.row(i).transpose();
    CHECK(sp.tangent_norm(x, v) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("averaged difference against the constant-field closed form", "[shadow]") {
  // along a hypercycle at distance d, omega = B dx / y evaluates to the
  // constant B tanh(d); on its vertical shadow axis it vanishes.  The
  // averaged difference is exactly B tanh(d) and the certified bound
  // (A + D) kappa = 2 B tanh(d) leaves a factor-two margin.
  const ModelSpace sp = half_plane();
  const double B = 0.8, d = 0.45;
  const AnalyticForm form = form_const_field_halfplane(B);
  const SampledCurve c = h2_hypercycle(d, 14.0);
  const AverageDifference ad = average_difference(sp, form, c, 5.0);
  CHECK(ad.measured == Catch::Approx(B * std::tanh(d)).margin(1e-6));
  CHECK(ad.kappa_max == Catch::Approx(std::tanh(d)).margin(1e-5));
  CHECK(ad.bound == Catch::Approx(2.0 * B * std::tanh(d)).margin(1e-4));
  CHECK(ad.measured <= ad.bound + ad.tol());

  // zero form: both integrals vanish
  const AverageDifference z = average_difference(sp, form_zero(2), c, 5.0);
  CHECK(z.measured < 1e-12);

  // uncertified bounds are rejected
  CHECK_THROWS_AS(average_difference(sp, form_const_field_plane(1.0), c, 5.0), Error);
}

TEST_CASE("constant-field orbits are hypercycles with the predicted shadow", "[shadow]") {
  // magnetic orbit in the hyperbolic plane with field strength B at speed s:
  // curvature kappa = B/s, distance to the shadow axis arctanh(B/s)
  const double B = 0.5, s = 1.0;
  const MagneticSystem sys =
      make_system(half_plane(), nullptr, form_const_field_halfplane(B), -1.0, 500);
  vec_t x0(2), v0(2);
  x0 << 0.0, 1.0;
  v0 << s, 0.0;  // metric speed s at height 1
  StepControl ctl;
  ctl.init_step = 1e-3;
  ctl.samples = 6000;
  const Trajectory traj = integrate(sys, x0, v0, 24.0, ctl);
  REQUIRE_FALSE(traj.exited);

  const ModelSpace sp = half_plane();
  SampledCurve curve = curve_from_trajectory(traj);
  curve = arclength_reparam(sp, curve);

  const double kappa = B / s;
  const ShadowReport rep = make_shadow_report(sp, *sys.form, curve, 7.0);
  CHECK(rep.kappa_max == Catch::Approx(kappa).margin(1e-4));
  // the constant is an exact function of the measured curvature; against the
  // analytic value it inherits the curvature tolerance (dC/dkappa < 1 here)
  CHECK(rep.quasi_constant ==
        Catch::Approx(1.0 / std::sqrt(1.0 - rep.kappa_max * rep.kappa_max)).epsilon(1e-12));
  CHECK(rep.quasi_constant == Catch::Approx(1.0 / std::sqrt(1.0 - kappa * kappa)).margin(1e-4));
  CHECK(rep.measured_ratio == Catch::Approx(rep.quasi_constant).margin(1e-3));
  CHECK(rep.shadow.fellow_distance == Catch::Approx(std::atanh(kappa)).margin(1e-3));
  CHECK(rep.measured == Catch::Approx(B * kappa).margin(1e-4));
  CHECK(rep.measured <= rep.bound + 1e-6 + rep.quad_error);
}
