#pragma once

// small shared helpers: constants, periodic wrapping, deterministic sequences,
// and the error type used across the library.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace maglab {

inline constexpr double kPi = 3.14159265358979323846;

using vec_t = Eigen::VectorXd;
using mat_t = Eigen::MatrixXd;

/// library-wide error: every throw carries a short machine-readable code plus
/// a human message with the offending ids/values baked in.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg)
      : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

/// wrap a signed offset into [-period/2, period/2); period <= 0 means aperiodic.
inline double wrap_delta(double d, double period) {
  if (period <= 0.0) return d;
  d = std::remainder(d, period);
  // std::remainder returns in [-p/2, p/2]; fold the closed upper endpoint
  if (d == period / 2) d = -d;
  return d;
}

/// wrap a coordinate into the fundamental domain [0, period).
inline double wrap_coord(double x, double period) {
  if (period <= 0.0) return x;
  double y = std::fmod(x, period);
  if (y < 0) y += period;
  return y;
}

inline vec_t wrap_delta(vec_t d, const vec_t& periods) {
  for (int i = 0; i < d.size(); ++i) d[i] = wrap_delta(d[i], periods[i]);
  return d;
}

inline vec_t wrap_coords(vec_t x, const vec_t& periods) {
  for (int i = 0; i < x.size(); ++i) x[i] = wrap_coord(x[i], periods[i]);
  return x;
}

/// deterministic RNG used everywhere; seeds derive from the scenario seed so
/// byte-identical reruns are possible.
using rng_t = std::mt19937_64;

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 step keeps derived streams decorrelated
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Halton low-discrepancy sequence (used for seeding orbit ensembles; keeps
/// runs reproducible without burning RNG state).
inline double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  for (std::uint64_t i = index + 1; i > 0; i /= base) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
  }
  return r;
}

/// unsigned k-volume of the simplex spanned by the columns of E (edge vectors
/// from one vertex), via the Gram determinant.
inline double simplex_volume(const mat_t& E) {
  const int k = static_cast<int>(E.cols());
  if (k == 0) return 1.0;
  const mat_t G = E.transpose() * E;
  double det = G.determinant();
  if (det < 0) det = 0;  // roundoff guard for degenerate input
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  return std::sqrt(det) / fact;
}

/// circumcenter of the simplex {p0, p0+E.col(0), ...} expressed in ambient
/// coordinates; solves the equidistance system inside the affine span.
inline vec_t circumcenter(const vec_t& p0, const mat_t& E) {
  const int k = static_cast<int>(E.cols());
  if (k == 0) return p0;
  const mat_t G = E.transpose() * E;
  vec_t rhs(k);
  for (int i = 0; i < k; ++i) rhs[i] = 0.5 * E.col(i).squaredNorm();
  const vec_t y = G.ldlt().solve(rhs);
  return p0 + E * y;
}

}  // namespace maglab
