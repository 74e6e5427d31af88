#pragma once
// Scenario orchestration: configuration-driven runs that produce JSONL
// records and CSV extracts, plus a verification pass that re-derives every
// checked inequality from the stored records alone (no recomputation).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <maglab/chains.hpp>
#include <maglab/config.hpp>
#include <maglab/dec.hpp>
#include <maglab/flow.hpp>
#include <maglab/forms.hpp>
#include <maglab/mane.hpp>
#include <maglab/mesh.hpp>
#include <maglab/model_space.hpp>
#include <maglab/records.hpp>
#include <maglab/shadow.hpp>
#include <maglab/spectral.hpp>
#include <maglab/system.hpp>

namespace maglab {

inline constexpr const char* kVersion = "maglab 0.1.0";

// ---------------------------------------------------------------------------
// scenarios

struct Scenario {
  std::string id;
  ConfigSection section;
  std::vector<std::string> analyses;
  std::uint64_t seed = 1;
};

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> k = {"spectrum", "mane",  "flow",
                                             "shadow",   "iso",   "verify"};
  return k;
}

// resolve a config-relative path against the file the key came from
inline std::string resolve_path(const ConfigValue& v) {
  if (!v.raw.empty() && v.raw.front() == '/') return v.raw;
  return detail::dirname_of(v.file) + "/" + v.raw;
}

inline std::vector<Scenario> load_scenarios(const Config& cfg,
                                            std::optional<std::uint64_t> seed_override = {}) {
  std::vector<Scenario> out;
  for (const auto& sec : cfg.sections) {
    Scenario sc;
    sc.id = sec.name;
    sc.section = sec;
    if (sec.has("analyses")) sc.analyses = sec.words("analyses");
    for (const auto& a : sc.analyses)
      if (std::find(known_analyses().begin(), known_analyses().end(), a) ==
          known_analyses().end())
        fail("config.analysis",
             sec.file + ": unknown analysis '" + a + "' in [" + sec.name + "]");
    sc.seed = seed_override ? *seed_override
                            : static_cast<std::uint64_t>(
                                  sec.integer_or("seed", cfg.globals.integer_or("seed", 1)));
    // scenario invariants: tolerances positive, referenced files exist
    for (const auto& [key, val] : sec.values) {
      const bool tolkey =
          key == "tol" || (key.size() > 4 && key.compare(key.size() - 4, 4, "_tol") == 0);
      if (tolkey && !(sec.num(key) > 0.0))
        fail("config.tolerance", val.where() + ": tolerance '" + key + "' must be positive");
      const bool filekey = key == "mesh_file" || key == "cochain_file";
      if (filekey && !std::filesystem::exists(resolve_path(val)))
        fail("config.file",
             val.where() + ": referenced file '" + val.raw + "' does not exist");
    }
    out.push_back(std::move(sc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// geometry and system construction

struct Geometry {
  ModelSpace space = euclidean_plane();
  std::shared_ptr<const Mesh> mesh;  // null for chart-only scenarios
  std::string kind = "none";
};

inline Geometry build_geometry(const ConfigSection& s) {
  Geometry g;
  if (!s.has("geometry")) return g;  // mesh-bound analyses raise dependency errors
  const std::string kind = s.str("geometry");
  g.kind = kind;
  if (kind == "torus2") {
    const double Lx = s.num_or("Lx", 2.0 * kPi), Ly = s.num_or("Ly", Lx);
    const int nx = static_cast<int>(s.integer_or("nx", 48));
    const int ny = static_cast<int>(s.integer_or("ny", nx));
    vec_t periods(2);
    periods << Lx, Ly;
    g.space = flat_torus(periods);
    const std::string layout = s.str_or("layout", "shifted");
    if (layout == "shifted")
      g.mesh = std::make_shared<Mesh>(torus2_shifted(Lx, Ly, nx, ny));
    else if (layout == "diagonal")
      g.mesh = std::make_shared<Mesh>(torus2_diagonal(Lx, Ly, nx, ny));
    else
      fail("config.geometry", s.at("layout").where() + ": unknown layout '" + layout + "'");
  } else if (kind == "torus3") {
    const double L = s.num_or("L", 2.0 * kPi);
    const int n = static_cast<int>(s.integer_or("n", 8));
    vec_t periods(3);
    periods << L, L, L;
    g.space = flat_torus(periods);
    g.mesh = std::make_shared<Mesh>(torus3_bcc(L, n));
  } else if (kind == "sphere") {
    const double r = s.num_or("radius", 1.0);
    g.space = round_sphere(r);
    g.mesh = std::make_shared<Mesh>(icosphere(r, static_cast<int>(s.integer_or("subdiv", 4))));
  } else if (kind == "half_plane") {
    g.space = half_plane();
  } else if (kind == "plane") {
    g.space = euclidean_plane();
  } else if (kind == "mesh_file") {
    auto mesh = std::make_shared<Mesh>(load_mesh(resolve_path(s.at("mesh_file"))));
    const bool periodic = mesh->periods.size() > 0 && mesh->periods.cwiseAbs().maxCoeff() > 0;
    const std::string space = s.str_or("space", periodic ? "torus" : "euclidean");
    if (space == "torus")
      g.space = flat_torus(mesh->periods);
    else if (space == "sphere")
      g.space = round_sphere(s.num_or("radius", 1.0));
    else if (space == "euclidean")
      g.space = ModelSpace{SpaceKind::euclidean, mesh->ambient, {}, 1.0};
    else
      fail("config.geometry", s.at("space").where() + ": unknown space '" + space + "'");
    g.mesh = std::move(mesh);
  } else {
    fail("config.geometry", s.at("geometry").where() + ": unknown geometry '" + kind + "'");
  }
  return g;
}

inline std::optional<AnalyticForm> build_analytic_form(const ConfigSection& s,
                                                       const Geometry& g) {
  const std::string id = s.str_or("form", "zero");
  if (id == "zero") return form_zero(g.space.point_dim());
  if (id == "a_dx") return form_a_dx(s.num_or("a", 0.3), g.space.dim);
  if (id == "sine_dy") return form_sine_dy(s.num_or("eps", 0.25), g.space.dim);
  if (id == "const_field") {
    const double B = s.num_or("B", 1.0);
    if (g.space.kind == SpaceKind::half_space) return form_const_field_halfplane(B);
    if (g.space.kind == SpaceKind::euclidean && g.space.dim == 2)
      return form_const_field_plane(B);
    fail("config.form", "const_field is wired for the plane and half-plane charts");
  }
  if (id == "sphere_rotation")
    return form_sphere_rotation(s.num_or("scale", sphere_rotation_unit_scale()),
                                g.space.radius);
  if (id == "bump") {
    vec_t c(2);
    c << s.num_or("bump_x", 0.0), s.num_or("bump_y", 2.0);
    const double w = s.num_or("bump_width", 1.0);
    return form_h2_bump(s.num_or("bump_amp", 0.05), c, w, 0.0, c, w);
  }
  if (id == "cochain_file" || id == "eigenform") return std::nullopt;
  fail("config.form", s.at("form").where() + ": unknown form '" + id + "'");
}

namespace detail {

// swap the cochain of a mesh-backed system and refresh its estimated bounds
inline void assign_cochain(MagneticSystem& sys, vec_t w) {
  sys.omega = std::move(w);
  sys.bound_sup = sys.dec->sup_norm_edges(sys.omega);
  vec_t dm = sys.mesh->d1 * sys.omega;
  double d = 0.0;
  for (int f = 0; f < sys.mesh->n_simplices(2); ++f)
    d = std::max(d, std::abs(dm[f]) / sys.mesh->volume(2, f));
  sys.bound_dsup = d;
  sys.bounds_certified = false;
}

}  // namespace detail

inline MagneticSystem build_system(const ConfigSection& s, const Geometry& g,
                                   std::uint64_t seed) {
  const double sign = s.num_or("lorentz_sign", -1.0);
  const std::string id = s.str_or("form", "zero");
  if (id == "cochain_file") {
    if (!g.mesh) fail("harness.dependency", "cochain forms need a mesh-backed geometry");
    vec_t w = load_cochain(resolve_path(s.at("cochain_file")));
    if (w.size() != g.mesh->n_edges())
      fail("config.form", "cochain has " + std::to_string(w.size()) + " entries, mesh has " +
                              std::to_string(g.mesh->n_edges()) + " edges");
    return make_cochain_system(g.space, g.mesh, std::move(w), sign);
  }
  if (id == "eigenform") {
    if (!g.mesh) fail("harness.dependency", "eigenform requests need a mesh-backed geometry");
    MagneticSystem sys =
        make_cochain_system(g.space, g.mesh, vec_t::Zero(g.mesh->n_edges()), sign);
    const int index = static_cast<int>(s.integer_or("eigen_index", 0));
    auto eig = coexact_spectrum(*sys.dec, std::max(index + 1, 4), derive_seed(seed, 11));
    if (static_cast<int>(eig.size()) <= index)
      fail("spectral.count", "eigenform index " + std::to_string(index) + " not computed");
    detail::assign_cochain(sys, vec_t(eig[index].form * s.num_or("amp", 1.0)));
    return sys;
  }
  auto form = build_analytic_form(s, g);
  const int samples = static_cast<int>(s.integer_or("verify_samples", 2000));
  return make_system(g.space, g.mesh, std::move(form), sign, samples);
}

// ---------------------------------------------------------------------------
// structured-torus loop parsing: rect:i0:j0:i1:j1 walks an index rectangle

inline vec_t rect_loop_chain(const Mesh& m, const std::string& tok) {
  if (!m.structured ||
      (m.structured->kind != StructuredInfo::Kind::torus2_shifted &&
       m.structured->kind != StructuredInfo::Kind::torus2_diagonal))
    fail("config.loops", "rect loops need a structured 2-torus mesh");
  const StructuredInfo& st = *m.structured;
  long v[4] = {0, 0, 0, 0};
  if (std::sscanf(tok.c_str(), "rect:%ld:%ld:%ld:%ld", &v[0], &v[1], &v[2], &v[3]) != 4)
    fail("config.loops", "cannot parse loop token '" + tok + "'");
  const long i0 = v[0], j0 = v[1], i1 = v[2], j1 = v[3];
  if (i1 <= i0 || j1 <= j0 || i1 - i0 >= st.nx || j1 - j0 >= st.ny)
    fail("config.loops", "degenerate or wrapping rectangle in '" + tok + "'");
  auto vid = [&](long i, long j) {
    const long ii = ((i % st.nx) + st.nx) % st.nx;
    const long jj = ((j % st.ny) + st.ny) % st.ny;
    return static_cast<int>(jj * st.nx + ii);
  };
  std::vector<int> verts;
  for (long i = i0; i < i1; ++i) verts.push_back(vid(i, j0));
  for (long j = j0; j < j1; ++j) verts.push_back(vid(i1, j));
  for (long i = i1; i > i0; --i) verts.push_back(vid(i, j1));
  for (long j = j1; j > j0; --j) verts.push_back(vid(i0, j));
  return m.path_chain(verts);
}

// ---------------------------------------------------------------------------
// symmetric orbit sampling: extend a flow solution to [-T, T].  Reversing a
// magnetic geodesic flips the Lorentz force sign, so the backward half is
// integrated with the opposite sign and mirrored.

inline SampledCurve symmetric_orbit_curve(const MagneticSystem& sys, const vec_t& x0,
                                          const vec_t& v0, double T, StepControl ctl = {}) {
  MagneticSystem back = sys;
  back.lorentz_sign = -sys.lorentz_sign;
  Trajectory fwd = integrate(sys, x0, v0, T, ctl);
  Trajectory bwd = integrate(back, x0, vec_t(-v0), T, ctl);
  if (fwd.exited || bwd.exited)
    fail("flow.exit", "orbit left the chart before the requested horizon");
  const int nb = bwd.n(), nf = fwd.n();
  SampledCurve c;
  c.ts.resize(nb + nf - 1);
  c.xs.resize(nb + nf - 1, x0.size());
  c.vs.resize(nb + nf - 1, x0.size());
  for (int i = 0; i < nb; ++i) {
    const int j = nb - 1 - i;
    c.ts[j] = -bwd.ts[i];
    c.xs.row(j) = bwd.xs.row(i);
    c.vs.row(j) = -bwd.vs.row(i);
  }
  for (int i = 1; i < nf; ++i) {
    c.ts[nb - 1 + i] = fwd.ts[i];
    c.xs.row(nb - 1 + i) = fwd.xs.row(i);
    c.vs.row(nb - 1 + i) = fwd.vs.row(i);
  }
  return c;
}

// ---------------------------------------------------------------------------
// record helpers

namespace detail {

inline bool jhas(const json& r, const char* k) { return r.contains(k) && !r.at(k).is_null(); }

inline double jnum(const json& r, const char* k,
                   double dflt = std::numeric_limits<double>::quiet_NaN()) {
  if (!r.contains(k) || !r.at(k).is_number()) return dflt;
  return r.at(k).get<double>();
}

// sub-record if present and not itself a structured error
inline const json* jsub(const json& r, const char* k) {
  if (!r.contains(k) || !r.at(k).is_object() || r.at(k).contains("error")) return nullptr;
  return &r.at(k);
}

inline json error_json(const Error& e) {
  return json{{"code", e.code}, {"message", e.what()}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verification rows

struct VerifyRow {
  std::string name;
  std::string verdict;  // PASS / FAIL / INCONCLUSIVE
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double rhs = std::numeric_limits<double>::quiet_NaN();
  double tol = 0.0;
  double slack = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

inline json rows_to_json(const std::vector<VerifyRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back(json{{"name", r.name},
                     {"verdict", r.verdict},
                     {"lhs", r.lhs},
                     {"rhs", r.rhs},
                     {"tol", r.tol},
                     {"slack", r.slack},
                     {"note", r.note}});
  return a;
}

// Re-derive every checked inequality from a stored scenario record.  Rows are
// emitted in a fixed order; INCONCLUSIVE is reserved for sampling-limited
// claims (attainment of suprema, existence of closed orbits) and for missing
// inputs, never for a violated rigorous direction.
inline std::vector<VerifyRow> verify_record(const json& rec, double tol_scale = 1.0) {
  using detail::jnum;
  using detail::jsub;
  std::vector<VerifyRow> rows;
  const json* mane = jsub(rec, "mane");
  const json* flow = jsub(rec, "flow");
  const json* shadow = jsub(rec, "shadow");
  const json* iso = jsub(rec, "iso");
  const json* lag = mane ? jsub(*mane, "lagrangian") : nullptr;

  // L2 norm of the coexact field component vs sqrt(vol) * critical speed.
  {
    VerifyRow r;
    r.name = "norm-comparison";
    if (!mane) {
      r.verdict = "INCONCLUSIVE";
      r.note = "potential analysis missing";
    } else {
      r.lhs = jnum(*mane, "norm_l2_coexact");
      const double c0 = jnum(*mane, "c0");
      r.rhs = std::sqrt(std::max(jnum(*mane, "volume"), 0.0)) *
              std::sqrt(std::max(2.0 * c0, 0.0));
      r.tol = tol_scale * (1e-6 + 1e-3 * r.rhs);
      r.slack = r.rhs + r.tol - r.lhs;
      r.verdict = r.lhs <= r.rhs + r.tol ? "PASS" : "FAIL";
      r.note = "coexact-component L2 norm vs sqrt(vol)*sqrt(2*c0)";
    }
    rows.push_back(std::move(r));
  }

  // Hamiltonian (potential minimax) vs Lagrangian (loop bisection) route.
  {
    VerifyRow r;
    r.name = "critical-value-match";
    if (!mane || !lag) {
      r.verdict = "INCONCLUSIVE";
      r.note = !mane ? "potential analysis missing" : "loop-route estimate missing";
    } else {
      r.lhs = jnum(*lag, "c");
      r.rhs = jnum(*mane, "c");
      r.tol = tol_scale * 0.05 * std::max(std::abs(r.rhs), 1e-6);
      r.slack = r.tol - std::abs(r.lhs - r.rhs);
      r.verdict = std::abs(r.lhs - r.rhs) <= r.tol ? "PASS" : "FAIL";
      r.note = "independent routes to the critical value agree within 5%";
    }
    rows.push_back(std::move(r));
  }

  // Best null-homologous loop: circulation/length reaches the critical speed
  // from below (above it would contradict the subsolution Stokes bound).
  {
    VerifyRow r;
    r.name = "loop-circulation";
    const json* w = lag ? jsub(*lag, "witness") : nullptr;
    if (!mane || !w) {
      r.verdict = "INCONCLUSIVE";
      r.note = !mane ? "potential analysis missing" : "no loop witness recorded";
    } else {
      const double cap = std::sqrt(std::max(2.0 * jnum(*mane, "c0"), 0.0));
      r.lhs = jnum(*w, "ratio");
      r.rhs = cap;
      r.tol = tol_scale * (0.05 * cap + 1e-9);
      r.slack = r.lhs - (r.rhs - r.tol);
      bool null_homologous = true;
      if (w->contains("winding"))
        for (const auto& x : w->at("winding"))
          if (x.get<long>() != 0) null_homologous = false;
      if (!null_homologous) {
        r.verdict = "INCONCLUSIVE";
        r.note = "best witness winds around the torus; cap argument needs a bounding chain";
      } else if (r.lhs > r.rhs + r.tol) {
        r.verdict = "FAIL";
        r.note = "loop average exceeds the critical speed: Stokes cap violated";
      } else if (r.lhs >= r.rhs - r.tol) {
        r.verdict = "PASS";
        r.note = "normalized circulation reaches sqrt(2*c0) within 5%";
      } else {
        r.verdict = "INCONCLUSIVE";
        r.note = "witness below the bar; attainment of the supremum is sampling-limited";
      }
    }
    rows.push_back(std::move(r));
  }

  // On simply-connected-in-homology spaces (b1 = 0) the orbit-average comass
  // peaks at the critical speed and stays below it at any speed.
  {
    VerifyRow r;
    r.name = "comass-critical-speed";
    const long b1 = mane ? static_cast<long>(jnum(*mane, "harmonic_rank", -1)) : -1;
    if (!mane || !flow || !flow->contains("comass")) {
      r.verdict = "INCONCLUSIVE";
      r.note = !mane ? "potential analysis missing" : "flow analysis missing";
    } else if (b1 != 0) {
      r.verdict = "INCONCLUSIVE";
      r.note = "first Betti number is nonzero; equality statement needs b1 = 0";
    } else {
      const double cap = std::sqrt(std::max(2.0 * jnum(*mane, "c0"), 0.0));
      r.rhs = cap;
      r.tol = tol_scale * (0.05 * cap + 1e-9);
      double at_s0 = std::numeric_limits<double>::quiet_NaN();
      double worst = 0.0;
      bool have_double_speed_ok = true;
      for (const auto& e : flow->at("comass")) {
        const double est = jnum(e, "estimate");
        worst = std::max(worst, est);
        const std::string role = e.value("role", "custom");
        if (role == "s0") at_s0 = est;
        if (role == "2s0" && est > cap + r.tol) have_double_speed_ok = false;
      }
      r.lhs = at_s0;
      r.slack = cap + r.tol - worst;
      if (worst > cap + r.tol) {
        r.verdict = "FAIL";
        r.note = "orbit-average comass exceeds the critical speed cap";
      } else if (!std::isnan(at_s0) && std::abs(at_s0 - cap) <= r.tol &&
                 have_double_speed_ok) {
        r.verdict = "PASS";
        r.note = "comass attains sqrt(2*c0) at the critical speed, capped elsewhere";
      } else {
        r.verdict = "INCONCLUSIVE";
        r.note = std::isnan(at_s0) ? "no run at the derived critical speed"
                                   : "comass under-resolved at the critical speed "
                                     "(attainment is sampling-limited)";
      }
    }
    rows.push_back(std::move(r));
  }

  // Averaged line-integral difference between a curve and its shadow geodesic
  // is bounded by (sup-norm + derivative-sup) * max curvature.
  {
    VerifyRow r;
    r.name = "average-difference-bound";
    if (!shadow) {
      r.verdict = "INCONCLUSIVE";
      r.note = "shadow analysis missing";
    } else {
      r.lhs = jnum(*shadow, "measured");
      r.rhs = jnum(*shadow, "bound");
      r.tol = tol_scale * (1e-6 + jnum(*shadow, "quad_error", 0.0));
      r.slack = r.rhs + r.tol - r.lhs;
      r.verdict = r.lhs <= r.rhs + r.tol ? "PASS" : "FAIL";
      r.note = "measured average difference vs (A+D)*kappa certificate";
    }
    rows.push_back(std::move(r));
  }

  // Per-loop isoperimetric inequality through the LP spanning chain.
  {
    VerifyRow r;
    r.name = "cheeger-chain";
    if (!iso || !iso->contains("loops") || iso->at("loops").empty()) {
      r.verdict = "INCONCLUSIVE";
      r.note = "isoperimetric analysis missing or no loops configured";
    } else {
      bool ok = true;
      std::string why;
      double worst_slack = std::numeric_limits<double>::infinity();
      for (const auto& l : iso->at("loops")) {
        const double lhs = jnum(l, "lhs"), rhs = jnum(l, "rhs");
        if (lhs > rhs * (1.0 + 1e-9) + 1e-11) {
          ok = false;
          why = "normalized circulation exceeds sup|dw|*mass/length";
        }
        if (jnum(l, "stokes") > tol_scale * 1e-12) {
          ok = false;
          why = "discrete Stokes defect above 1e-12";
        }
        if (jnum(l, "gap") > 1e-6 * std::max(jnum(l, "mass"), 1e-12) * (1.0 + 1e-9) + 1e-12) {
          ok = false;
          why = "duality gap uncertified";
        }
        if (rhs - lhs < worst_slack) {
          worst_slack = rhs - lhs;
          r.lhs = lhs;
          r.rhs = rhs;
        }
      }
      r.tol = tol_scale * 1e-11;
      r.slack = worst_slack;
      r.verdict = ok ? "PASS" : "FAIL";
      r.note = ok ? "all loops satisfy the spanning-chain inequality" : why;
    }
    rows.push_back(std::move(r));
  }

  // Existence of a closed sub-critical orbit: a located orbit is a proof, a
  // failed search is not a refutation.
  {
    VerifyRow r;
    r.name = "periodic-orbit";
    const json* orb = flow ? jsub(*flow, "orbit_search") : nullptr;
    if (!orb) {
      r.verdict = "INCONCLUSIVE";
      r.note = "orbit search not requested";
    } else if (orb->value("found", false)) {
      r.lhs = jnum(*orb, "defect");
      r.rhs = 1e-6 * jnum(*orb, "speed");
      r.tol = 0.0;
      r.slack = r.rhs - r.lhs;
      r.verdict = r.lhs <= r.rhs ? "PASS" : "FAIL";
      r.note = "closed orbit located; phase-space closure defect within budget";
    } else {
      r.verdict = "INCONCLUSIVE";
      r.note = "no closed orbit located; absence is not certified";
    }
    rows.push_back(std::move(r));
  }

  return rows;
}

inline std::string format_verify_table(const std::vector<VerifyRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %-13s %13s %13s %10s %11s  %s\n", "check", "verdict",
                "lhs", "rhs", "tol", "slack", "note");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-26s %-13s %13.6g %13.6g %10.3g %11.4g  %s\n",
                  r.name.c_str(), r.verdict.c_str(), r.lhs, r.rhs, r.tol, r.slack,
                  r.note.c_str());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// scenario runner

class ScenarioRunner {
 public:
  ScenarioRunner(Scenario sc, double tol_scale = 1.0)
      : sc_(std::move(sc)), tol_scale_(tol_scale) {}

  json run() {
    json rec;
    rec["scenario"] = sc_.id;
    rec["version"] = kVersion;
    rec["seed"] = sc_.seed;
    try {
      geo_ = build_geometry(sc_.section);
      rec["geometry"] = geometry_record();
      sys_ = build_system(sc_.section, geo_, sc_.seed);
      rec["form"] = form_record();
    } catch (const Error& e) {
      rec["error"] = detail::error_json(e);
      return rec;
    }
    run_one(rec, "spectrum", [&](json& j) { run_spectrum(j); });
    run_one(rec, "mane", [&](json& j) { run_mane(j); });
    run_one(rec, "flow", [&](json& j) { run_flow(j); });
    run_one(rec, "shadow", [&](json& j) { run_shadow(j); });
    run_one(rec, "iso", [&](json& j) { run_iso(j); });
    if (requested("verify")) rec["verify"] = rows_to_json(verify_record(rec, tol_scale_));
    return rec;
  }

 private:
  Scenario sc_;
  double tol_scale_;
  Geometry geo_;
  MagneticSystem sys_;
  std::optional<CriticalValueReport> plain_, strict_;
  std::optional<std::vector<vec_t>> basis_;

  bool requested(const std::string& a) const {
    return std::find(sc_.analyses.begin(), sc_.analyses.end(), a) != sc_.analyses.end();
  }

  template <class F>
  void run_one(json& rec, const char* name, F&& body) {
    if (!requested(name)) return;
    try {
      json sub;
      body(sub);
      rec[name] = std::move(sub);
    } catch (const Error& e) {
      rec[name] = json{{"error", detail::error_json(e)}};
    }
  }

  json geometry_record() const {
    json g;
    g["kind"] = geo_.kind;
    switch (geo_.space.kind) {
      case SpaceKind::euclidean: g["space"] = "euclidean"; break;
      case SpaceKind::flat_torus: g["space"] = "flat_torus"; break;
      case SpaceKind::half_space: g["space"] = "half_space"; break;
      case SpaceKind::sphere: g["space"] = "sphere"; break;
    }
    g["dim"] = geo_.space.dim;
    if (geo_.mesh) {
      g["vertices"] = geo_.mesh->n_vertices();
      g["edges"] = geo_.mesh->n_edges();
      g["faces"] = geo_.mesh->n_tris();
      if (geo_.mesh->dim == 3) g["cells"] = geo_.mesh->n_tets();
      g["volume"] = geo_.mesh->total_volume();
      g["euler"] = geo_.mesh->euler_characteristic();
    }
    return g;
  }

  json form_record() const {
    json f;
    f["id"] = sys_.form ? sys_.form->id : sc_.section.str_or("form", "zero");
    f["lorentz_sign"] = sys_.lorentz_sign;
    f["certified"] = sys_.bounds_certified;
    f["bound_sup"] = sys_.bound_sup;
    f["bound_dsup"] = sys_.bound_dsup;
    return f;
  }

  const std::vector<vec_t>& harmonics() {
    if (!basis_) basis_ = harmonic_basis(*sys_.dec);
    return *basis_;
  }

  void need_cochain(const char* who) const {
    if (!sys_.dec || sys_.omega.size() != geo_.mesh->n_edges())
      fail("harness.dependency", std::string(who) + " needs a mesh-backed 1-cochain; "
                                                    "give a `geometry` with a mesh");
  }

  void run_spectrum(json& out) {
    if (!sys_.dec)
      fail("harness.dependency", "spectrum needs a mesh-backed geometry");
    const ConfigSection& s = sc_.section;
    const int count = static_cast<int>(s.integer_or("spectrum_count", 6));
    auto eig = coexact_spectrum(*sys_.dec, count, derive_seed(sc_.seed, 11));
    json lam = json::array(), res = json::array(), def = json::array();
    for (const auto& e : eig) {
      lam.push_back(e.lambda);
      res.push_back(e.residual);
      def.push_back(e.coexact_defect);
    }
    out["coexact"] = std::move(lam);
    out["residuals"] = std::move(res);
    out["coexact_defects"] = std::move(def);
    if (!eig.empty()) out["mean_value_C"] = mean_value_ratio(*sys_.dec, eig.front().form);
    if (geo_.mesh->dim == 3) {
      auto curl = curl_spectrum(*geo_.mesh, static_cast<int>(s.integer_or("curl_count", count)),
                                s.num_or("curl_sigma", 0.4), derive_seed(sc_.seed, 12));
      json mu = json::array(), mres = json::array(), pe = json::array();
      for (const auto& e : curl) {
        mu.push_back(e.lambda);
        mres.push_back(e.residual);
      }
      const std::size_t k = std::min(eig.size(), curl.size());
      for (std::size_t i = 0; i < k; ++i)
        pe.push_back(std::abs(curl[i].lambda * curl[i].lambda - eig[i].lambda) /
                     std::max(eig[i].lambda, 1e-300));
      out["curl"] = std::move(mu);
      out["curl_residuals"] = std::move(mres);
      out["pair_rel_error"] = std::move(pe);
    }
  }

  void run_mane(json& out) {
    need_cochain("mane");
    const ConfigSection& s = sc_.section;
    const double tol = s.num_or("mane_tol", 1e-8);
    plain_ = critical_value_hamiltonian(*sys_.dec, sys_.omega, tol);
    const auto& hb = harmonics();
    strict_ = hb.empty() ? plain_
                         : std::optional<CriticalValueReport>(critical_value_minimax(
                               *sys_.dec, sys_.omega,
                               basis_matrix(hb, geo_.mesh->n_edges()), tol));
    out["tol"] = tol;
    out["c"] = plain_->c;
    out["converged"] = plain_->converged;
    out["iterations"] = plain_->iterations;
    out["max_edge"] = plain_->max_edge;
    out["gnorm"] = plain_->gnorm;
    out["c0"] = strict_->c;
    out["c0_converged"] = strict_->converged;
    out["harmonic_rank"] = static_cast<long>(hb.size());
    if (strict_->h.size() > 0) out["harmonic_shift"] = to_json(strict_->h);
    out["subsolution_defect"] = subsolution_defect(*sys_.dec, plain_->u, sys_.omega, plain_->c);
    HodgeParts parts = decompose(*sys_.dec, sys_.omega);
    out["norm_l2"] = sys_.dec->norm_l2(1, sys_.omega);
    out["norm_l2_coexact"] = sys_.dec->norm_l2(1, parts.coexact);
    out["volume"] = geo_.mesh->total_volume();

    if (s.flag("lagrangian", false)) {
      if (!sys_.analytic())
        fail("harness.dependency", "the loop route needs an analytic form");
      LagrangianOptions opt;
      opt.tol = s.num_or("lagrangian_tol", 1e-3);
      opt.nodes = static_cast<int>(s.integer_or("loop_nodes", 64));
      opt.seeds_per_class = static_cast<int>(s.integer_or("loop_seeds", 16));
      opt.nullhomologous_only = s.flag("nullhomologous_only", false);
      opt.seed = derive_seed(sc_.seed, 21);
      LagrangianReport lag = critical_value_lagrangian(sys_, opt);
      json lj;
      lj["c"] = lag.c;
      lj["k_lo"] = lag.k_lo;
      lj["k_hi"] = lag.k_hi;
      lj["tol"] = opt.tol;
      lj["found_any"] = lag.found_any;
      if (lag.found_any) {
        json w;
        w["winding"] = json::array({lag.best.winding[0], lag.best.winding[1]});
        w["action"] = lag.best.action;
        w["length"] = lag.best.length;
        w["circulation"] = lag.best.circulation;
        w["ratio"] = lag.best.ratio;
        w["k"] = lag.best.k;
        json nodes = json::array();
        for (int i = 0; i < lag.best.nodes.rows(); ++i)
          nodes.push_back(json::array({lag.best.nodes(i, 0), lag.best.nodes(i, 1)}));
        w["nodes"] = std::move(nodes);
        lj["witness"] = std::move(w);
      }
      out["lagrangian"] = std::move(lj);
    }

    if (s.has("cover_orders")) {
      if (!sys_.analytic() || !geo_.mesh->structured)
        fail("harness.dependency", "the cover tower needs an analytic form on a structured torus");
      std::vector<int> orders;
      for (double v : s.nums("cover_orders")) orders.push_back(static_cast<int>(v));
      auto tower = universal_critical_value_estimate(
          geo_.space, {geo_.mesh->structured->nx, geo_.mesh->structured->ny}, *sys_.form,
          orders, tol);
      json cj = json::array();
      for (const auto& ce : tower)
        cj.push_back(json{{"order", ce.order}, {"c", ce.c}});
      out["covers"] = std::move(cj);
    }
  }

  void run_flow(json& out) {
    if (geo_.kind == "none")
      fail("harness.dependency", "flow needs a `geometry` entry");
    if (!sys_.analytic())
      fail("harness.dependency", "flow needs an analytic form");
    const ConfigSection& s = sc_.section;
    StepControl ctl;
    ctl.init_step = s.num_or("flow_step", 5e-3);
    ctl.drift_tol = s.num_or("drift_tol", 1e-8);
    ctl.samples = static_cast<int>(s.integer_or("flow_samples", 4000));
    const double horizon = s.num_or("flow_horizon", 200.0);
    const int orbits = static_cast<int>(s.integer_or("flow_orbits", 12));

    double s0 = std::numeric_limits<double>::quiet_NaN();
    if (strict_ && strict_->c > 1e-12) s0 = std::sqrt(2.0 * strict_->c);
    std::vector<double> speeds;
    if (s.has("speeds")) {
      speeds = s.nums("speeds");
    } else {
      if (std::isnan(s0))
        fail("harness.dependency",
             "flow has no explicit `speeds` and no usable critical speed from mane");
      speeds = {s0, 2.0 * s0};
    }
    out["drift_tol"] = ctl.drift_tol;
    out["horizon"] = horizon;
    out["orbits"] = orbits;
    if (!std::isnan(s0)) out["s0"] = s0;

    json arr = json::array();
    for (double sp : speeds) {
      ComassReport cr = comass_estimate(sys_, sp, orbits, horizon, ctl);
      json e;
      e["speed"] = sp;
      std::string role = "custom";
      if (!std::isnan(s0)) {
        if (std::abs(sp - s0) <= 1e-9 * (1.0 + s0)) role = "s0";
        if (std::abs(sp - 2.0 * s0) <= 1e-9 * (1.0 + s0)) role = "2s0";
      }
      e["role"] = role;
      e["estimate"] = cr.estimate;
      e["tail_span_max"] = cr.tail_span_max;
      json per = json::array();
      for (double v : cr.per_orbit) per.push_back(v);
      e["per_orbit"] = std::move(per);
      arr.push_back(std::move(e));
    }
    out["comass"] = std::move(arr);

    if (s.flag("orbit_search", false)) {
      const double so = s.num_or("orbit_speed", speeds.front());
      auto po = find_periodic_orbit(sys_, so, static_cast<int>(s.integer_or("orbit_seeds", 24)),
                                    s.num_or("orbit_horizon", 40.0), ctl);
      json oj;
      oj["speed"] = so;
      oj["found"] = po.has_value();
      if (po) {
        oj["period"] = po->period;
        oj["defect"] = po->defect;
        oj["contractible"] = po->contractible;
        json wind = json::array();
        for (long w : po->winding) wind.push_back(w);
        oj["winding"] = std::move(wind);
      }
      out["orbit_search"] = std::move(oj);
    }
  }

  void run_shadow(json& out) {
    if (sys_.space.kind != SpaceKind::half_space || sys_.space.dim != 2)
      fail("harness.dependency", "shadow analysis is wired for the hyperbolic half-plane");
    if (!sys_.analytic())
      fail("harness.dependency", "shadow analysis needs an analytic form");
    const ConfigSection& s = sc_.section;
    double speed;
    if (s.has("shadow_speed")) {
      speed = s.num("shadow_speed");
    } else {
      const double kappa = s.num_or("shadow_kappa", 0.5);
      if (!(kappa > 0.0 && kappa < 1.0))
        fail("config.value", "shadow_kappa must sit in (0, 1)");
      const double B = sys_.bound_dsup;
      if (!(B > 0.0) || !std::isfinite(B))
        fail("harness.dependency",
             "cannot derive a speed from this form; give `shadow_speed`");
      speed = B / kappa;
    }
    const double T = s.num_or("shadow_horizon", 12.0);
    const double T_avg = s.num_or("shadow_avg", 0.6 * speed * T);
    StepControl ctl;
    ctl.init_step = s.num_or("flow_step", 1e-3);
    ctl.drift_tol = s.num_or("drift_tol", 1e-8);
    ctl.samples = static_cast<int>(s.integer_or("flow_samples", 6000));

    vec_t x0(2), v0(2);
    x0 << s.num_or("x0", 0.0), s.num_or("y0", 1.0);
    const double ang = s.num_or("launch_angle", 0.0);
    v0 << speed * std::cos(ang), speed * std::sin(ang);
    v0 *= x0[1];  // chart velocity: |v|_g = |v| / y

    SampledCurve curve = symmetric_orbit_curve(sys_, x0, v0, T, ctl);
    ShadowReport rep = make_shadow_report(sys_.space, *sys_.form, curve, T_avg);

    out["speed"] = speed;
    out["horizon"] = T;
    out["avg_window"] = T_avg;
    out["kappa_max"] = rep.kappa_max;
    out["quasi_constant"] = rep.quasi_constant;
    out["measured_ratio"] = rep.measured_ratio;
    out["measured"] = rep.measured;
    out["bound"] = rep.bound;
    out["quad_error"] = rep.quad_error;
    json geod;
    geod["vertical"] = rep.shadow.geodesic.vertical;
    geod["x0"] = rep.shadow.geodesic.x0;
    geod["c"] = rep.shadow.geodesic.c;
    geod["R"] = rep.shadow.geodesic.R;
    out["geodesic"] = std::move(geod);
    out["end_minus"] = rep.shadow.end_minus;
    out["end_plus"] = rep.shadow.end_plus;
    out["endpoint_drift"] = rep.shadow.endpoint_drift;
    out["fellow_distance"] = rep.shadow.fellow_distance;
    if (sys_.form->id == "const_halfplane") {
      const double kap = sys_.bound_dsup / speed;
      out["kappa_expected"] = kap;
      out["distance_expected"] = std::atanh(kap);
    }
  }

  void run_iso(json& out) {
    need_cochain("iso");
    const ConfigSection& s = sc_.section;
    if (!s.has("loops"))
      fail("harness.dependency", "iso needs a `loops` entry (rect:i0:j0:i1:j1 tokens)");
    const double gap_tol = s.num_or("gap_tol", 1e-6);
    const double feas_tol = s.num_or("feas_tol", 1e-9);
    mat_t H = basis_matrix(harmonics(), geo_.mesh->n_edges());
    out["gap_tol"] = gap_tol;
    json arr = json::array();
    double best_ratio = std::numeric_limits<double>::infinity();
    int best = -1, idx = 0;
    for (const std::string& tok : s.words("loops")) {
      vec_t cycle = rect_loop_chain(*geo_.mesh, tok);
      SpanningChain scn = minimal_spanning_chain(*sys_.dec, cycle, H, gap_tol, feas_tol);
      CheegerCheck ck = cheeger_chain_check(*sys_.dec, sys_.omega, scn);
      json l;
      l["spec"] = tok;
      l["length"] = ck.length;
      l["mass"] = scn.mass;
      l["gap"] = scn.gap;
      l["feasibility"] = scn.feasibility;
      l["iterations"] = scn.iterations;
      l["stokes"] = ck.stokes;
      l["lhs"] = ck.lhs;
      l["rhs"] = ck.rhs;
      l["dsup"] = ck.dsup;
      l["ok"] = ck.ok;
      arr.push_back(std::move(l));
      if (scn.mass > 0.0 && ck.length / scn.mass < best_ratio) {
        best_ratio = ck.length / scn.mass;
        best = idx;
      }
      ++idx;
    }
    out["loops"] = std::move(arr);
    if (best >= 0) {
      out["h1_ratio"] = best_ratio;
      out["h1_witness"] = best;
    }
  }
};

// ---------------------------------------------------------------------------
// suite driver

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  double tol_scale = 1.0;
  std::vector<std::string> only;  // non-empty: replace each scenario's analyses
};

struct RunSummary {
  int scenarios = 0;
  int errors = 0;     // structured per-analysis errors
  int fail_rows = 0;  // verification FAIL verdicts
  std::string records_path;
  bool ok() const { return errors == 0 && fail_rows == 0; }
};

inline int count_errors(const json& rec) {
  int n = rec.contains("error") ? 1 : 0;
  for (const char* k : {"spectrum", "mane", "flow", "shadow", "iso"})
    if (rec.contains(k) && rec.at(k).is_object() && rec.at(k).contains("error")) ++n;
  return n;
}

inline int count_fail_rows(const json& rec) {
  if (!rec.contains("verify") || !rec.at("verify").is_array()) return 0;
  int n = 0;
  for (const auto& row : rec.at("verify"))
    if (row.value("verdict", "") == "FAIL") ++n;
  return n;
}

inline RunSummary run_config(const RunOptions& opt) {
  Config cfg = parse_config(opt.config_path);
  std::vector<Scenario> scs = load_scenarios(cfg, opt.seed);
  if (!opt.only.empty())
    for (auto& sc : scs) sc.analyses = opt.only;

  std::string out_dir = opt.out_dir;
  if (const char* env = std::getenv("MAGLAB_OUT_DIR")) out_dir = env;
  ensure_dir(out_dir);

  std::vector<json> recs(scs.size());
  std::vector<double> secs(scs.size(), 0.0);
  auto work = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      recs[i] = ScenarioRunner(scs[i], opt.tol_scale).run();
    } catch (const Error& e) {  // defensive; analyses catch their own errors
      recs[i] = json{{"scenario", scs[i].id},
                     {"version", kVersion},
                     {"seed", scs[i].seed},
                     {"error", detail::error_json(e)}};
    }
    secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const int budget = std::max(1, opt.threads);
  if (budget == 1) {
    for (std::size_t i = 0; i < scs.size(); ++i) work(i);
  } else {
    // scenario-level parallelism; records are still written in config order
    for (std::size_t base = 0; base < scs.size(); base += budget) {
      std::vector<std::future<void>> batch;
      for (std::size_t i = base; i < std::min(scs.size(), base + budget); ++i)
        batch.push_back(std::async(std::launch::async, work, i));
      for (auto& f : batch) f.get();
    }
  }

  RunSummary sum;
  sum.scenarios = static_cast<int>(scs.size());
  sum.records_path = out_dir + "/records.jsonl";
  RecordWriter writer(sum.records_path);
  for (const json& r : recs) {
    writer.append(r);
    sum.errors += count_errors(r);
    sum.fail_rows += count_fail_rows(r);
  }
  writer.flush();

  // wall-clock sidecar: intentionally outside the canonical (deterministic) records
  std::vector<std::vector<double>> trows;
  for (std::size_t i = 0; i < secs.size(); ++i)
    trows.push_back({static_cast<double>(i), secs[i]});
  write_csv(out_dir + "/timings.csv", {"scenario_index", "seconds"}, trows);
  return sum;
}

// ---------------------------------------------------------------------------
// CSV extraction for plots: spectra, cover towers, comass-vs-speed, witnesses

inline std::vector<std::string> plot_data(const std::string& records_path,
                                          const std::string& out_dir) {
  using detail::jnum;
  const std::vector<json> recs = read_jsonl(records_path);
  ensure_dir(out_dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::vector<std::string>& hdr,
                  const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return;
    const std::string path = out_dir + "/" + name;
    write_csv(path, hdr, rows);
    written.push_back(path);
  };
  for (const json& r : recs) {
    const std::string id = r.value("scenario", std::string("unknown"));
    if (const json* sp = detail::jsub(r, "spectrum")) {
      std::vector<std::vector<double>> rows;
      if (sp->contains("coexact"))
        for (std::size_t i = 0; i < sp->at("coexact").size(); ++i)
          rows.push_back({static_cast<double>(i), sp->at("coexact")[i].get<double>()});
      emit(id + "_spectrum.csv", {"index", "lambda"}, rows);
      rows.clear();
      if (sp->contains("curl"))
        for (std::size_t i = 0; i < sp->at("curl").size(); ++i) {
          const double mu = sp->at("curl")[i].get<double>();
          rows.push_back({static_cast<double>(i), mu, mu * mu});
        }
      emit(id + "_curl.csv", {"index", "mu", "mu_squared"}, rows);
    }
    if (const json* mn = detail::jsub(r, "mane")) {
      std::vector<std::vector<double>> rows;
      if (mn->contains("covers"))
        for (const auto& ce : mn->at("covers"))
          rows.push_back({jnum(ce, "order"), jnum(ce, "c")});
      emit(id + "_cover.csv", {"order", "c"}, rows);
      if (const json* lg = detail::jsub(*mn, "lagrangian")) {
        rows.clear();
        if (lg->contains("witness") && lg->at("witness").contains("nodes")) {
          const auto& nodes = lg->at("witness").at("nodes");
          for (std::size_t i = 0; i < nodes.size(); ++i)
            rows.push_back({static_cast<double>(i), nodes[i][0].get<double>(),
                            nodes[i][1].get<double>()});
        }
        emit(id + "_loop.csv", {"node", "x", "y"}, rows);
      }
    }
    if (const json* fl = detail::jsub(r, "flow")) {
      std::vector<std::vector<double>> rows;
      if (fl->contains("comass"))
        for (const auto& e : fl->at("comass"))
          rows.push_back({jnum(e, "speed"), jnum(e, "estimate"), jnum(e, "tail_span_max")});
      emit(id + "_comass.csv", {"speed", "estimate", "tail_span"}, rows);
    }
  }
  return written;
}

}  // namespace maglab
