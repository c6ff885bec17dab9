#pragma once
/// Scenario runners and rate fitting: the user-facing experiment surface.
///
/// Each scenario builds a ScenarioResult holding a JSON summary, CSV payloads,
/// and a machine-readable failure list; run_scenario materializes those under
/// the scenario's output directory. Scenarios are pure given (config, seed):
/// identical inputs produce bit-identical CSV bytes on one platform. The
/// summary's "constants" array records, for every asserted constant, whether
/// it comes from an analytic formula, a derived identity, a numerical oracle,
/// or is a chosen margin of the harness.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kslab/dynamics.hpp"
#include "kslab/functionals.hpp"
#include "kslab/io.hpp"
#include "kslab/linearization.hpp"
#include "kslab/profile.hpp"

namespace kslab {

// ---------------------------------------------------------------------------
// Rate fitting.

struct FitResult {
  double rate = 0.0;
  double intercept = 0.0;
  double residual = 0.0; // rms of log-space residuals
};

namespace detail {

/// Plain least squares y ~ a x + b; residual is the rms misfit.
inline FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  FitResult r;
  r.rate = sxy / sxx;
  r.intercept = my - r.rate * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.rate * x[i] + r.intercept);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  return r;
}

} // namespace detail

/// Least squares on (t, log d) over the window; needs >= 5 positive samples.
inline FitResult fit_decay_rate(const std::vector<double>& times,
                                const std::vector<double>& distances,
                                std::pair<double, double> window) {
  if (times.size() != distances.size())
    throw std::invalid_argument("fit_decay_rate: size mismatch");
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second) continue;
    if (!(distances[i] > 0.0))
      throw std::invalid_argument("fit_decay_rate: nonpositive distance in window");
    t.push_back(times[i]);
    y.push_back(std::log(distances[i]));
  }
  if (t.size() < 5)
    throw std::invalid_argument("fit_decay_rate: need at least 5 samples in window");
  return detail::fit_line(t, y);
}

// ---------------------------------------------------------------------------
// Scenario plumbing.

struct Scenario {
  std::string name;
  SimConfig config;
  std::string out_dir;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "subcritical-convergence", "supercritical-blowup", "moment-bound",
      "inequality-suite",        "stationarity",         "rescale-consistency",
      "short-time-l43",          "semigroup-decay"};
  return names;
}

/// Tuned per-scenario defaults; user config overrides are applied on top.
inline SimConfig scenario_default_config(const std::string& name) {
  SimConfig c;
  if (name == "subcritical-convergence") {
    c.regime = Regime::rescaled;
    c.center_x = 0.5; // excites mode 1, whose e^{-t} decay is the bottleneck
    // the fitted rate flattens once |g - G| reaches the h^2 gap between the
    // discrete equilibrium and the interpolated profile; half_width 7 is the
    // tightest domain the displaced datum allows (6-sigma guard) and buys the
    // late fit window a 3x smaller floor than half_width 12 would
    c.half_width = 7.0;
    c.dt = 1e-3;
    c.t_end = 6.0;
    c.record_every = 20;
  } else if (name == "supercritical-blowup") {
    c.regime = Regime::physical;
    c.mass = 10.0 * M_PI;
    c.sigma = std::sqrt(1.0 / (10.0 * M_PI)); // second moment M2(0) = 2
    c.n = 512;
    c.half_width = 3.0; // the collapsing peak needs h << sigma, not domain
    c.dt = 1e-4;
    c.t_end = 0.08;
    c.record_every = 10;
    c.neg_tol = 1e-5;
    c.blowup_linf_factor = 30.0;
  } else if (name == "moment-bound") {
    c.regime = Regime::rescaled;
    c.dt = 1e-3;
    c.t_end = 10.0;
    c.record_every = 50;
    c.seed = 1;
  } else if (name == "inequality-suite") {
    c.seed = 1;
  } else if (name == "stationarity") {
    c.regime = Regime::rescaled;
    c.dt = 2e-3;
    c.t_end = 0.2;     // exactly 100 measured steps
    c.relax_time = 8.0; // settles the O(h^2) interpolation transient to ~1e-9
    c.record_every = 10;
  } else if (name == "rescale-consistency") {
    c.regime = Regime::physical;
    c.center_x = 0.5;
    // the cross-run mismatch is the difference of the two legs' convolution
    // quadrature errors, which is O(h^2) and quadratic in mass (measured at
    // n = 256, L = 16: 2.0e-5 for M = pi/4, 8.8e-5 for pi/2, 4.0e-4 for pi,
    // 9.6e-3 for 4pi); pi/4 meets the 1e-4 contract with a 5x margin, while
    // a strongly interacting mass would need n ~ 3400 to get there
    c.mass = 0.25 * M_PI;
    c.n = 256;
    c.half_width = 16.0; // the physical solution spreads by R(s) ~ 2.7
    c.dt = 1e-3;
    c.t_end = 0.5 * (std::exp(2.0) - 1.0); // physical time of rescaled t = 1
    c.record_every = 100;
  } else if (name == "short-time-l43") {
    c.regime = Regime::physical;
    c.sigma = 0.05;
    c.n = 1024;
    c.half_width = 4.0;
    c.dt = 5e-5;
    c.t_end = 0.066;
    c.record_every = 20;
  } else if (name == "semigroup-decay") {
    c.regime = Regime::rescaled;
    c.dt = 1e-3;
    c.t_end = 3.0;
    c.record_every = 20;
    c.seed = 1;
  } else {
    throw std::invalid_argument("unknown scenario: \"" + name + "\"");
  }
  return c;
}

struct ScenarioResult {
  std::string name;
  bool passed = true;
  json failures = json::array(); // items {check, detail}
  json summary;
  std::vector<std::pair<std::string, std::string>> files; // filename -> bytes
};

namespace detail {

inline json constant_entry(const char* name, double value, const char* source) {
  return json{{"name", name}, {"value", value}, {"source", source}};
}

inline void expect(ScenarioResult& res, bool ok, const std::string& check,
                   const std::string& detail) {
  if (ok) return;
  res.passed = false;
  res.failures.push_back(json{{"check", check}, {"detail", detail}});
}

inline Field2D profile_on_grid(double M, const Grid2D& grid) {
  const RadialGrid rg = make_radial_grid(2048, default_r_max(M));
  const ProfileResult p = solve_profile(M, rg);
  return radial_to_2d(p.G, grid);
}

/// Step to t_target with uniform dt plus one shorter landing step.
inline void evolve_to(SimState& s, double t_target, double dt) {
  while (s.t < t_target - 1e-12) {
    const double step = std::min(dt, t_target - s.t);
    s = (s.regime == Regime::physical) ? step_physical(s, step)
                                       : step_rescaled(s, step);
  }
}

/// Nonnegative mixture of ncomp Gaussian bumps, renormalized to `mass`.
inline Field2D seeded_mixture(const Grid2D& grid, double mass, int ncomp,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uc(-2.0, 2.0), us(0.6, 1.4), uw(0.5, 1.5);
  Field2D f(grid);
  for (int c = 0; c < ncomp; ++c) {
    const double cx = uc(rng), cy = uc(rng), sig = us(rng), w = uw(rng);
    const double inv = 1.0 / (2.0 * sig * sig);
    for (int iy = 0; iy < grid.n; ++iy) {
      const double dy = grid.x(iy) - cy;
      for (int ix = 0; ix < grid.n; ++ix) {
        const double dx = grid.x(ix) - cx;
        f.at(ix, iy) += w * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  const double m = integrate(f);
  for (double& v : f.v) v *= mass / m;
  return f;
}

/// Signed low-frequency bump sum used to seed perturbations (|q| = O(1)).
inline Field2D seeded_signed_bumps(const Grid2D& grid, int ncomp,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uc(-2.0, 2.0), us(0.5, 1.2), ua(-1.0, 1.0);
  Field2D q(grid);
  for (int c = 0; c < ncomp; ++c) {
    const double cx = uc(rng), cy = uc(rng), sig = us(rng), a = ua(rng);
    const double inv = 1.0 / (2.0 * sig * sig);
    for (int iy = 0; iy < grid.n; ++iy) {
      const double dy = grid.x(iy) - cy;
      for (int ix = 0; ix < grid.n; ++ix) {
        const double dx = grid.x(ix) - cx;
        q.at(ix, iy) += a * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return q;
}

inline std::string csv_row(std::initializer_list<double> cols) {
  std::string s;
  bool first = true;
  for (double c : cols) {
    if (!first) s += ',';
    s += format_g17(c);
    first = false;
  }
  s += '\n';
  return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Scenarios.

/// Displaced subcritical Gaussian relaxes to the profile at the optimal rate:
/// the fitted slope of log |g(t) - G|_{4/3} over the window equals -1.
inline ScenarioResult scenario_subcritical_convergence(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "subcritical-convergence";
  if (!(cfg.mass < kCriticalMass))
    throw std::invalid_argument("subcritical-convergence: mass must be < 8 pi");
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  const Field2D G = detail::profile_on_grid(cfg.mass, grid);

  SimState s = make_state(initial_datum(cfg), Regime::rescaled, cfg.neg_tol,
                          cfg.attraction_off);
  TrajectoryRecord rec;
  std::vector<double> times, d43, d43k;
  auto record = [&]() {
    rec.samples.push_back(measure(s.f, s.t, cfg.attraction_off));
    times.push_back(s.t);
    d43.push_back(lp_distance(s.f, G, 4.0 / 3.0));
    d43k.push_back(lp_distance(s.f, G, 4.0 / 3.0, 8.0 / 5.0));
  };
  record();
  const long nsteps = std::max<long>(1, std::llround(cfg.t_end / cfg.dt));
  for (long k = 1; k <= nsteps; ++k) {
    s = step_rescaled(s, cfg.dt);
    if (k % cfg.record_every == 0 || k == nsteps) record();
  }

  const std::pair<double, double> window{2.0, std::min(6.0, cfg.t_end)};
  const FitResult fit = fit_decay_rate(times, d43, window);
  const FitResult fitw = fit_decay_rate(times, d43k, window);
  detail::expect(res, std::abs(fit.rate + 1.0) <= 0.05, "decay-rate",
                 "fitted L^{4/3} rate " + format_g17(fit.rate) +
                     " outside -1 +/- 0.05");

  std::string csv = "t,d43,d43k\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    csv += detail::csv_row({times[i], d43[i], d43k[i]});
  res.files.emplace_back("distances.csv", csv);
  res.files.emplace_back("trajectory.csv", format_trajectory_csv(rec));

  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"fit_window", {window.first, window.second}},
      {"l43", {{"rate", fit.rate}, {"intercept", fit.intercept}, {"residual", fit.residual}}},
      {"l43_weighted",
       {{"rate", fitw.rate}, {"intercept", fitw.intercept}, {"residual", fitw.residual}, {"weight_exponent", 8.0 / 5.0}}},
      {"constants",
       json::array({detail::constant_entry("expected_rate", -1.0, "analytic formula"),
                    detail::constant_entry("rate_tolerance", 0.05, "chosen margin"),
                    detail::constant_entry("weight_exponent", 8.0 / 5.0, "analytic formula")})},
  };
  return res;
}

/// Supercritical collapse: M2 falls linearly with slope C1(M) < 0 and the run
/// flags blow-up no later than 1.2x the moment-vanishing time.
inline ScenarioResult scenario_supercritical_blowup(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "supercritical-blowup";
  if (!(cfg.mass > kCriticalMass))
    throw std::invalid_argument("supercritical-blowup: mass must be > 8 pi");
  const TrajectoryRecord rec = run(cfg);
  if (rec.samples.empty()) throw std::runtime_error("no samples recorded");

  const double mass = rec.samples.front().mass;
  const double m20 = rec.samples.front().m2;
  const double linf0 = rec.samples.front().linf;
  const double c1 = moment_production_constant(mass); // negative here
  const double vanish = 2.0 * M_PI * m20 / (mass * (mass - kCriticalMass));

  detail::expect(res, rec.blew_up, "blowup-detected", "run reached t_end without detection");
  if (rec.blew_up)
    detail::expect(res, rec.blowup_time <= 1.2 * vanish, "blowup-before-bound",
                   "detected at t=" + format_g17(rec.blowup_time) + " > 1.2 * " +
                       format_g17(vanish));

  // slope of M2 while the peak is still resolved (L_inf within 10x initial)
  std::vector<double> ts, m2s;
  for (const TrajectorySample& q : rec.samples) {
    if (q.linf > 10.0 * linf0) break;
    ts.push_back(q.t);
    m2s.push_back(q.m2);
  }
  double slope = 0.0;
  if (ts.size() >= 5) {
    slope = detail::fit_line(ts, m2s).rate;
    detail::expect(res, std::abs(slope - c1) <= 0.02 * std::abs(c1), "m2-slope",
                   "fitted " + format_g17(slope) + " vs C1 " + format_g17(c1));
  } else {
    detail::expect(res, false, "m2-slope", "fewer than 5 resolved samples");
  }

  // L_inf must grow (weakly) monotonically through 10x initial before the bound
  bool monotone = true;
  double t_cross = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < rec.samples.size(); ++i)
    if (rec.samples[i + 1].linf < rec.samples[i].linf * (1.0 - 1e-3)) monotone = false;
  for (const TrajectorySample& q : rec.samples)
    if (q.linf > 10.0 * linf0) {
      t_cross = q.t;
      break;
    }
  detail::expect(res, monotone, "linf-monotone", "L_inf decreased along the collapse");
  detail::expect(res, t_cross < vanish, "linf-growth",
                 "L_inf never exceeded 10x initial before the vanish bound");

  res.files.emplace_back("trajectory.csv", format_trajectory_csv(rec));
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"blew_up", rec.blew_up},
      {"blowup_time", rec.blew_up ? json(rec.blowup_time) : json()},
      {"blowup_reason", rec.blowup_reason},
      {"m2_slope", slope},
      {"constants",
       json::array(
           {detail::constant_entry("m2_slope_expected", c1, "analytic formula"),
            detail::constant_entry("vanish_time", vanish, "derived identity"),
            detail::constant_entry("slope_tolerance", 0.02, "chosen margin"),
            detail::constant_entry("blowup_time_bound", 1.2 * vanish, "chosen margin")})},
  };
  return res;
}

/// Uniform-in-time fourth-moment bound for the rescaled flow:
/// sup_t M4(g) <= max(9 M, M4(g0)) up to a 1% discretization allowance.
inline ScenarioResult scenario_moment_bound(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "moment-bound";
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  std::mt19937_64 rng(cfg.seed);
  const Field2D g0 = detail::seeded_mixture(grid, cfg.mass, 3, rng);
  SimConfig c = cfg;
  c.regime = Regime::rescaled;
  const TrajectoryRecord rec = run(c, g0);
  if (rec.blew_up) throw std::runtime_error("unexpected blow-up: " + rec.blowup_reason);

  const double mass = rec.samples.front().mass;
  const double m40 = rec.samples.front().m4;
  const double bound = std::max(9.0 * mass, m40) * 1.01;
  double sup_m4 = 0.0;
  for (const TrajectorySample& q : rec.samples) sup_m4 = std::max(sup_m4, q.m4);
  detail::expect(res, sup_m4 <= bound, "m4-bound",
                 "sup M4 " + format_g17(sup_m4) + " > " + format_g17(bound));

  const double e0 = std::abs(rec.samples.front().E);
  bool e_monotone = true;
  for (std::size_t i = 0; i + 1 < rec.samples.size(); ++i)
    if (rec.samples[i + 1].E > rec.samples[i].E + 1e-6 * e0) e_monotone = false;
  detail::expect(res, e_monotone, "rescaled-energy-decay",
                 "E increased beyond the per-sample allowance");

  res.files.emplace_back("trajectory.csv", format_trajectory_csv(rec));
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"sup_m4", sup_m4},
      {"m4_initial", m40},
      {"constants",
       json::array(
           {detail::constant_entry("m4_envelope", 9.0 * mass, "analytic formula"),
            detail::constant_entry("bound_allowance", 1.01, "chosen margin"),
            detail::constant_entry("energy_slack_scale", 1e-6, "chosen margin")})},
  };
  return res;
}

/// Functional-inequality audit over seeded Gaussian mixtures: every bound
/// holds with nonnegative slack (up to roundoff floor) and the scale-invariant
/// ratios stay within a narrow band.
inline ScenarioResult scenario_inequality_suite(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "inequality-suite";
  const int ndraws = 100;
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> umass(2.0, 20.0);
  std::uniform_int_distribution<int> ucomp(1, 3);

  std::string csv = "draw,mass,name,kind,lhs,rhs,slack,pass\n";
  std::map<std::string, std::pair<double, double>> ratio_range; // name -> min,max
  int bound_failures = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int d = 0; d < ndraws; ++d) {
    const double mass = umass(rng);
    const Field2D f = detail::seeded_mixture(grid, mass, ucomp(rng), rng);
    for (const InequalityReport& r : check_inequalities(f)) {
      if (r.skipped) continue;
      csv += std::to_string(d) + ',' + format_g17(mass) + ',' + r.name + ',' +
             (r.is_ratio ? "ratio" : "bound") + ',' + format_g17(r.lhs) + ',' +
             format_g17(r.rhs) + ',' + format_g17(r.slack) + ',' +
             (r.pass ? "1" : "0") + '\n';
      if (r.is_ratio) {
        auto it = ratio_range.find(r.name);
        if (it == ratio_range.end())
          ratio_range.emplace(r.name, std::make_pair(r.slack, r.slack));
        else {
          it->second.first = std::min(it->second.first, r.slack);
          it->second.second = std::max(it->second.second, r.slack);
        }
        if (!r.pass) ++bound_failures;
      } else {
        if (!r.pass) ++bound_failures;
        worst_slack = std::min(worst_slack, r.slack);
      }
    }
  }
  detail::expect(res, bound_failures == 0, "all-inequalities",
                 std::to_string(bound_failures) + " failing reports");
  json ranges = json::object();
  for (const auto& [name, mm] : ratio_range) {
    const double spread = mm.second / mm.first;
    ranges[name] = json{{"min", mm.first}, {"max", mm.second}, {"spread", spread}};
    if (name == "critical-hls-ratio" || name == "nash-ratio")
      detail::expect(res, spread < 10.0, name + "-spread",
                     "max/min " + format_g17(spread) + " >= 10");
  }

  res.files.emplace_back("draws.csv", csv);
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"draws", ndraws},
      {"worst_bound_slack", worst_slack},
      {"ratio_ranges", ranges},
      {"constants",
       json::array(
           {detail::constant_entry("log_hls_constant_at_4pi", log_hls_constant(4.0 * M_PI), "analytic formula"),
            detail::constant_entry("subcritical_gap_at_4pi", subcritical_gap_constant(4.0 * M_PI), "analytic formula"),
            detail::constant_entry("entropy_bound_at_4pi", entropy_bound_constant(4.0 * M_PI), "analytic formula"),
            detail::constant_entry("negative_entropy_at_4pi", negative_entropy_constant(4.0 * M_PI), "analytic formula"),
            detail::constant_entry("slack_floor_scale", -1e-8, "chosen margin"),
            detail::constant_entry("ratio_spread_bound", 10.0, "chosen margin")})},
  };
  return res;
}

/// The self-similar profile, moved to the 2D grid, is stationary for the
/// rescaled integrator: 100 steps move it by at most 1e-6 in L1.
///
/// The interpolated continuum profile misses the scheme's own equilibrium by
/// the spatial truncation, |A_h(G)|_L1 ~ 9.4 h^2 (0.083 at n = 256), so a raw
/// 100-step drift from it is ~1e-3 at any desk-scale resolution. The run
/// therefore settles for relax_time units first (the settling distance is
/// reported as the consistency gap and shrinks at 2nd order), and the 1e-6
/// contract is asserted on the 100 steps that follow.
inline ScenarioResult scenario_stationarity(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "stationarity";
  if (!(cfg.mass < kCriticalMass))
    throw std::invalid_argument("stationarity: mass must be < 8 pi");
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  const RadialGrid rg = make_radial_grid(2048, default_r_max(cfg.mass));
  const ProfileResult p = solve_profile(cfg.mass, rg);
  const Field2D G2d = radial_to_2d(p.G, grid);

  SimState s = make_state(G2d, Regime::rescaled, cfg.neg_tol, cfg.attraction_off);
  const long relax_steps = std::llround(cfg.relax_time / cfg.dt);
  std::string csv = "t,phase,l1_from_G,l1_drift\n";
  csv += detail::csv_row({0.0, 0.0, 0.0, 0.0});
  for (long k = 1; k <= relax_steps; ++k) {
    s = step_rescaled(s, cfg.dt);
    if (k % (cfg.record_every * 10) == 0 || k == relax_steps)
      csv += detail::csv_row({s.t, 0.0, l1_distance(s.f, G2d), 0.0});
  }
  const Field2D settled = s.f;
  const double consistency_gap = l1_distance(settled, G2d);

  const long nsteps = std::max<long>(1, std::llround(cfg.t_end / cfg.dt));
  double drift = 0.0;
  for (long k = 1; k <= nsteps; ++k) {
    s = step_rescaled(s, cfg.dt);
    drift = std::max(drift, l1_distance(s.f, settled));
    if (k % cfg.record_every == 0 || k == nsteps)
      csv += detail::csv_row({s.t, 1.0, l1_distance(s.f, G2d), drift});
  }
  detail::expect(res, drift <= 1e-6, "stationary-drift",
                 "L1 drift " + format_g17(drift) + " > 1e-6 over " +
                     std::to_string(nsteps) + " measured steps");

  const double m2_expected = 2.0 * cfg.mass * (1.0 - cfg.mass / kCriticalMass);
  const double m2 = moment(G2d, 2.0);
  detail::expect(res, std::abs(m2 - m2_expected) <= 1e-3 * m2_expected, "profile-m2",
                 "M2(G) " + format_g17(m2) + " vs " + format_g17(m2_expected));

  res.files.emplace_back("drift.csv", csv);
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"drift_l1", drift},
      {"consistency_gap_l1", consistency_gap},
      {"profile_m2", m2},
      {"picard_iters", p.picard_iters},
      {"picard_residual_l1", p.residual_l1},
      {"stationary_residual", p.stationary_residual},
      {"constants",
       json::array(
           {detail::constant_entry("profile_m2_expected", m2_expected, "derived identity"),
            detail::constant_entry("drift_bound", 1e-6, "chosen margin"),
            detail::constant_entry("relax_time", cfg.relax_time, "chosen margin")})},
  };
  return res;
}

/// A physical run pushed through the self-similar change of variables must
/// match an independently stepped rescaled run at matched times.
inline ScenarioResult scenario_rescale_consistency(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "rescale-consistency";
  const Field2D f0 = initial_datum(cfg);
  SimState phys = make_state(f0, Regime::physical, cfg.neg_tol, cfg.attraction_off);
  SimState resc = make_state(f0, Regime::rescaled, cfg.neg_tol, cfg.attraction_off);

  const std::vector<double> taus = {0.5, 1.0};
  std::string csv = "tau,s,l1_mismatch\n";
  json dist = json::array();
  for (double tau : taus) {
    const double s_time = 0.5 * (std::exp(2.0 * tau) - 1.0);
    detail::evolve_to(phys, s_time, cfg.dt);
    detail::evolve_to(resc, tau, cfg.dt);
    auto [gt, tau_back] = physical_to_rescaled(phys.f, phys.t);
    const double d = l1_distance(gt, resc.f);
    detail::expect(res, d <= 1e-4, "matched-time-l1",
                   "tau=" + format_g17(tau) + ": L1 mismatch " + format_g17(d));
    detail::expect(res, std::abs(tau_back - tau) <= 1e-9, "time-map",
                   "change of variables returned tau " + format_g17(tau_back));
    csv += detail::csv_row({tau, s_time, d});
    dist.push_back(json{{"tau", tau}, {"s", s_time}, {"l1", d}});
  }

  res.files.emplace_back("mismatch.csv", csv);
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"distances", dist},
      {"constants",
       json::array(
           {detail::constant_entry("scale_factor_rule", 2.0, "derived identity"),
            detail::constant_entry("l1_tolerance", 1e-4, "chosen margin")})},
  };
  return res;
}

/// Short-time regularization monitor t^{1/4} |f(t)|_{4/3} decreases toward 0
/// as t -> 0+ for a peaked datum: value(t/4) < value(t) across the window.
inline ScenarioResult scenario_short_time_l43(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "short-time-l43";
  const auto series = short_time_l43(cfg);

  std::string csv = "t,t14l43\n";
  for (const auto& [t, v] : series) csv += detail::csv_row({t, v});

  auto value_at = [&](double t) -> const std::pair<double, double>* {
    for (const auto& q : series)
      if (std::abs(q.first - t) <= 0.5 * cfg.dt) return &q;
    return nullptr;
  };
  int pairs = 0, bad = 0;
  json checks = json::array();
  for (const auto& [t, v] : series) {
    if (t < 4e-3 - 1e-12 || t > 0.1) continue;
    const auto* quarter = value_at(0.25 * t);
    if (!quarter || !(quarter->first >= 1e-3 - 1e-12)) continue;
    ++pairs;
    const double ratio = quarter->second / v;
    if (!(ratio < 1.0)) ++bad;
    checks.push_back(json{{"t", t}, {"ratio", ratio}});
  }
  detail::expect(res, pairs >= 3, "enough-pairs",
                 "only " + std::to_string(pairs) + " (t/4, t) sample pairs");
  detail::expect(res, bad == 0, "monotone-toward-zero",
                 std::to_string(bad) + " pairs with value(t/4) >= value(t)");

  res.files.emplace_back("series.csv", csv);
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"pairs", checks},
      {"constants",
       json::array({detail::constant_entry("quarter_ratio_bound", 1.0,
                                           "derived identity")})},
  };
  return res;
}

/// Decay of a mass-zero, first-moment-zero perturbation of the profile: the
/// gap beyond the mode-1 eigenvalue makes it relax strictly faster than
/// e^{-t}. The perturbation is measured against a matched unperturbed run so
/// the shared discretization drift cancels.
inline ScenarioResult scenario_semigroup_decay(const SimConfig& cfg) {
  ScenarioResult res;
  res.name = "semigroup-decay";
  if (!(cfg.mass < kCriticalMass))
    throw std::invalid_argument("semigroup-decay: mass must be < 8 pi");
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  const RadialGrid rg = make_radial_grid(2048, default_r_max(cfg.mass));
  const ProfileResult p = solve_profile(cfg.mass, rg);
  const Field2D G2d = radial_to_2d(p.G, grid);
  const ProjectionBasis basis = make_projection_basis(p, grid);

  std::mt19937_64 rng(cfg.seed);
  const Field2D q = detail::seeded_signed_bumps(grid, 5, rng);
  Field2D pert(grid);
  for (std::size_t i = 0; i < pert.v.size(); ++i) pert.v[i] = G2d.v[i] * q.v[i];
  for (int pass = 0; pass < 2; ++pass) { // repeat once for numerical exactness
    axpy(pert, -1.0, project_pi0(pert, basis));
    axpy(pert, -1.0, project_pi1(pert, basis));
  }
  const double eps = 1e-4 * linf_norm(G2d) / linf_norm(pert);
  Field2D gA = G2d;
  axpy(gA, eps, pert);
  detail::expect(res, min_value(gA) >= 0.0, "perturbed-datum-positive",
                 "perturbation overwhelms the profile floor");
  const double pert_mass = integrate(gA) - integrate(G2d);
  auto [pmx, pmy] = first_moments(pert);

  SimState sA = make_state(gA, Regime::rescaled, cfg.neg_tol, cfg.attraction_off);
  SimState sB = make_state(G2d, Regime::rescaled, cfg.neg_tol, cfg.attraction_off);
  std::vector<double> times, d_pert, d_to_G;
  auto record = [&]() {
    times.push_back(sA.t);
    d_pert.push_back(lp_distance(sA.f, sB.f, 4.0 / 3.0));
    d_to_G.push_back(lp_distance(sA.f, G2d, 4.0 / 3.0));
  };
  record();
  const long nsteps = std::max<long>(1, std::llround(cfg.t_end / cfg.dt));
  for (long k = 1; k <= nsteps; ++k) {
    sA = step_rescaled(sA, cfg.dt);
    sB = step_rescaled(sB, cfg.dt);
    if (k % cfg.record_every == 0 || k == nsteps) record();
  }

  const std::pair<double, double> window{0.5, std::min(3.0, cfg.t_end)};
  const FitResult fit = fit_decay_rate(times, d_pert, window);
  detail::expect(res, fit.rate <= -1.05, "spectral-gap-rate",
                 "fitted rate " + format_g17(fit.rate) + " > -1.05");

  std::string csv = "t,d_pert,d_to_G\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    csv += detail::csv_row({times[i], d_pert[i], d_to_G[i]});
  res.files.emplace_back("decay.csv", csv);
  res.summary = json{
      {"scenario", res.name},
      {"config", config_to_json(cfg)},
      {"fit_window", {window.first, window.second}},
      {"rate", fit.rate},
      {"intercept", fit.intercept},
      {"residual", fit.residual},
      {"perturbation_mass", pert_mass},
      {"perturbation_first_moments", {pmx, pmy}},
      {"epsilon", eps},
      {"constants",
       json::array(
           {detail::constant_entry("mode1_rate", -1.0, "analytic formula"),
            detail::constant_entry("gap_margin", 0.05, "chosen margin")})},
  };
  return res;
}

// ---------------------------------------------------------------------------
// Dispatch and reporting.

inline ScenarioResult run_scenario(const Scenario& s) {
  ScenarioResult res;
  try {
    if (s.name == "subcritical-convergence")
      res = scenario_subcritical_convergence(s.config);
    else if (s.name == "supercritical-blowup")
      res = scenario_supercritical_blowup(s.config);
    else if (s.name == "moment-bound")
      res = scenario_moment_bound(s.config);
    else if (s.name == "inequality-suite")
      res = scenario_inequality_suite(s.config);
    else if (s.name == "stationarity")
      res = scenario_stationarity(s.config);
    else if (s.name == "rescale-consistency")
      res = scenario_rescale_consistency(s.config);
    else if (s.name == "short-time-l43")
      res = scenario_short_time_l43(s.config);
    else if (s.name == "semigroup-decay")
      res = scenario_semigroup_decay(s.config);
    else
      throw std::invalid_argument("unknown scenario: \"" + s.name + "\"");
  } catch (const std::exception& e) {
    res.name = s.name;
    res.passed = false;
    res.failures.push_back(json{{"check", "execution"}, {"detail", e.what()}});
    res.summary = json{{"scenario", s.name}};
    res.files.clear();
  }
  res.summary["passed"] = res.passed;
  res.summary["failures"] = res.failures;
  if (!s.out_dir.empty()) {
    std::filesystem::create_directories(s.out_dir);
    const std::filesystem::path root(s.out_dir);
    for (const auto& [fname, bytes] : res.files)
      write_text_file((root / fname).string(), bytes);
    write_text_file((root / "summary.json").string(), res.summary.dump(2) + "\n");
  }
  return res;
}

/// Run scenarios with up to `jobs` worker threads (no shared mutable state).
inline std::vector<ScenarioResult> run_scenarios(const std::vector<Scenario>& list,
                                                 int jobs) {
  std::vector<ScenarioResult> out(list.size());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(list.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < list.size(); ++i) out[i] = run_scenario(list[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= list.size()) return;
      out[i] = run_scenario(list[i]);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return out;
}

} // namespace kslab
