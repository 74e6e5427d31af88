// Magnetic flow integration against closed-form cyclotron motion in the
// Euclidean plane, invariant preservation (speed drift, sphere constraint),
// the circulation integral, running time averages, and the periodic-orbit
// shooting search.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "maglab/flow.hpp"
#include "maglab/forms.hpp"
#include "maglab/model_space.hpp"
#include "maglab/system.hpp"
#include "maglab/util.hpp"

using namespace maglab;

namespace {

MagneticSystem plane_field(double B) {
  return make_system(euclidean_plane(), nullptr, form_const_field_plane(B), -1.0, 200);
}

}  // namespace

TEST_CASE("documented Lorentz force convention", "[flow]") {
  const MagneticSystem sys = plane_field(0.7);
  vec_t x(2), v(2);
  x << 0.3, -1.2;
  v << 1.3, 0.0;
  const vec_t Y = lorentz_force(sys, x, v);
  CHECK(Y[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(Y[1] == Catch::Approx(-0.7 * 1.3).epsilon(1e-12));
  // g(Y, v) = 0: the force never does work
  CHECK(std::abs(Y.dot(v)) < 1e-14);
}

TEST_CASE("cyclotron orbit has radius speed over field strength", "[flow]") {
  const double B = 0.7, s = 1.3;
  const MagneticSystem sys = plane_field(B);
  const double r = s / B, period = 2.0 * kPi / B;

  vec_t x0(2), v0(2);
  x0 << 0.4, 1.1;
  v0 << s, 0.0;
  const Trajectory traj = integrate(sys, x0, v0, period);
  REQUIRE_FALSE(traj.exited);
  CHECK(traj.speed == Catch::Approx(s).epsilon(1e-12));

  // initial force (0, -Bs) points at the center x0 + (0, -r)
  vec_t center = x0;
  center[1] -= r;
  for (int i = 0; i < traj.n(); ++i) {
    const double ri = (traj.xs.row(i).transpose() - center).norm();
    CHECK(std::abs(ri - r) < 1e-6 * r);
  }
  // closes after one period
  CHECK((traj.xs.row(traj.n() - 1).transpose() - x0).norm() < 1e-6 * r);

  // circulation of B x dy over one clockwise loop is -B pi r^2
  CHECK(traj.omega_integral[traj.n() - 1] ==
        Catch::Approx(-B * kPi * r * r).epsilon(1e-6));
}

TEST_CASE("speed drift stays inside the stated budget", "[flow]") {
  const MagneticSystem sys = plane_field(1.1);
  vec_t x0(2), v0(2);
  x0 << 0.0, 0.0;
  v0 << 0.6, 0.8;
  StepControl ctl;
  const Trajectory traj = integrate(sys, x0, v0, 100.0, ctl);
  CHECK(traj.drift <= ctl.drift_tol);  // budget is per 100 time units
  CHECK(traj.horizon() == Catch::Approx(100.0).margin(1e-12));

  StepControl renorm = ctl;
  renorm.renormalize = true;
  const Trajectory rt = integrate(sys, x0, v0, 20.0, renorm);
  CHECK(rt.drift < 1e-12);

  CHECK_THROWS_AS(integrate(sys, x0, vec_t::Zero(2), 1.0), Error);
}

TEST_CASE("running time average approaches half the speed on cyclotron orbits", "[flow]") {
  // closed form: I(t) = -(s^2/2) t + 2 B r c_x cos-terms + (B r^2/4) sin-terms,
  // so with the orbit center on the y-axis (c_x = 0) the normalized running
  // average |I|/(s t) is s/2 with deviation envelope exactly (B r^2/4)/(s t)
  const double B = 0.9, s = 1.4;
  const double r = s / B;
  const MagneticSystem sys = plane_field(B);
  vec_t x0(2), v0(2);
  x0 << -r, 0.5;  // clockwise orbit: center at x0 + (r, 0) = (0, 0.5)
  v0 << 0.0, s;
  const double T = 40.0 * 2.0 * kPi / B;  // whole periods: final sin-term vanishes
  StepControl ctl;
  ctl.samples = 8000;
  const Trajectory traj = integrate(sys, x0, v0, T, ctl);
  const TimeAverage avg = time_average(traj);
  const double amp = 0.25 * B * r * r;
  const double env_window = amp / (s * (T / 10.0));  // worst over [T/10, T]
  const double env_final = amp / (s * T);
  CHECK(avg.value == Catch::Approx(0.5 * s).margin(1.05 * env_window));
  CHECK(avg.final_avg == Catch::Approx(0.5 * s).margin(1.05 * env_final));
  CHECK(avg.tail_span <= 2.1 * env_window);

  Trajectory stub = traj;
  stub.ts.resize(4);
  CHECK_THROWS_AS(time_average(stub), Error);
}

TEST_CASE("half-plane chart exit is reported, not fatal", "[flow]") {
  const MagneticSystem sys =
      make_system(half_plane(), nullptr, form_const_field_halfplane(0.5), -1.0, 200);
  vec_t x0(2), v0(2);
  x0 << 0.0, 0.04;
  v0 << 0.0, -1.0;
  const Trajectory traj = integrate(sys, x0, v0, 5.0);
  CHECK(traj.exited);
  CHECK(traj.horizon() < 5.0);
  CHECK(traj.n() >= 2);
}

TEST_CASE("shooting search recovers the cyclotron period", "[flow]") {
  const double B = 0.8, s = 1.0;
  const MagneticSystem sys = plane_field(B);
  const double period = 2.0 * kPi / B;
  const auto orbit = find_periodic_orbit(sys, s, 6, 2.2 * period);
  REQUIRE(orbit.has_value());
  CHECK(orbit->period == Catch::Approx(period).epsilon(1e-4));
  CHECK(orbit->defect <= 1e-6 * (1.0 + s));
  CHECK(orbit->contractible);

  const MagneticSystem sphere =
      make_system(round_sphere(1.0), nullptr, form_sphere_rotation(0.3), -1.0, 200);
  CHECK_THROWS_AS(find_periodic_orbit(sphere, 1.0, 2, 5.0), Error);
}

TEST_CASE("sphere orbits stay on the sphere", "[flow]") {
  const MagneticSystem sys =
      make_system(round_sphere(1.0), nullptr, form_sphere_rotation(0.4), -1.0, 200);
  vec_t x0(3), v0(3);
  x0 << 1.0, 0.0, 0.0;
  v0 << 0.0, 0.8, 0.3;
  const Trajectory traj = integrate(sys, x0, v0, 30.0);
  REQUIRE_FALSE(traj.exited);
  for (int i = 0; i < traj.n(); ++i) {
    CHECK(std::abs(traj.xs.row(i).norm() - 1.0) < 1e-6);
    // velocity stays tangent
    CHECK(std::abs(traj.xs.row(i).dot(traj.vs.row(i))) < 1e-6);
  }

  // without a form the great circle closes after 2 pi / s
  const MagneticSystem geo = make_system(round_sphere(1.0), nullptr, std::nullopt);
  vec_t u0(3);
  u0 << 0.0, 1.0, 0.0;
  const Trajectory gc = integrate(geo, x0, u0, 2.0 * kPi);
  CHECK((gc.xs.row(gc.n() - 1).transpose() - x0).norm() < 1e-5);
}
