#pragma once
/// Time integration of the physical and rescaled systems.
///
/// Scheme: IMEX with the diffusion semigroup applied exactly in Fourier
/// space and the transport term in divergence form advanced by an
/// integrating-factor Heun step,
///   k1 = T(u),  ubar = e^{dt L}(u + dt k1),  k2 = T(ubar),
///   u+ = e^{dt L}(u + (dt/2) k1) + (dt/2) k2.
/// Divergence-form transport leaves the zero Fourier mode untouched and the
/// semigroup fixes it, so mass is conserved to roundoff. The explicit
/// transport carries an advective CFL restriction dt <= 0.5 h / max|speed|
/// which is re-checked every step.
///
/// Failure policy: a step that trips the CFL bound, produces non-finite
/// values, or undershoots below -neg_tol * |u|_inf throws BlowupError with
/// the last valid state; run() converts the throw into recorded blow-up data
/// when the mass is supercritical (no global solution exists there) and
/// propagates it as a genuine failure otherwise. Small spectral undershoots
/// within tolerance are clipped to zero and the mass renormalized.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kslab/fft.hpp"
#include "kslab/functionals.hpp"
#include "kslab/grid.hpp"
#include "kslab/potential.hpp"

namespace kslab {

enum class Regime { physical, rescaled };

inline const char* regime_name(Regime r) {
  return r == Regime::physical ? "physical" : "rescaled";
}

struct SimConfig {
  int n = 256;
  double half_width = 12.0;
  double mass = 4.0 * M_PI;
  double sigma = 1.0;
  double center_x = 0.0, center_y = 0.0;
  std::string field_path; // initial datum from a field dump instead of a Gaussian
  double dt = 2e-4;
  double t_end = 1.0;
  Regime regime = Regime::physical;
  int record_every = 10;
  double neg_tol = 1e-8;
  double blowup_linf_factor = 1e3;
  double relax_time = 0.0; // settling phase before the measured window (stationarity)
  std::uint64_t seed = 0;
  std::string out_dir;
  bool attraction_off = false; // test hook: pure heat / pure Fokker-Planck
};

inline void validate(const SimConfig& c) {
  if (!(c.dt > 0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (!(c.t_end > 0)) throw std::invalid_argument("SimConfig: t_end must be positive");
  if (c.record_every < 1)
    throw std::invalid_argument("SimConfig: record_every must be >= 1");
  if (!(c.neg_tol >= 0)) throw std::invalid_argument("SimConfig: neg_tol must be >= 0");
  if (!(c.blowup_linf_factor > 1))
    throw std::invalid_argument("SimConfig: blowup_linf_factor must be > 1");
  if (!(c.relax_time >= 0))
    throw std::invalid_argument("SimConfig: relax_time must be >= 0");
}

struct SimState {
  Field2D f;
  double t = 0.0;
  long steps = 0;
  PotentialPair pot; // velocity cache for f (K * f)
  Regime regime = Regime::physical;
  bool attraction_off = false;
  double neg_tol = 1e-8;
};

class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& reason, SimState last)
      : std::runtime_error("blow-up or instability: " + reason),
        reason_(reason),
        last_(std::move(last)) {}
  const std::string& reason() const { return reason_; }
  const SimState& last_state() const { return last_; }

 private:
  std::string reason_;
  SimState last_;
};

namespace detail {

inline PotentialPair velocity_of(const Field2D& f, bool attraction_off) {
  if (attraction_off) {
    PotentialPair pp;
    pp.potential = Field2D(f.grid);
    pp.vx = Field2D(f.grid);
    pp.vy = Field2D(f.grid);
    pp.has_potential = true;
    pp.has_velocity = true;
    return pp;
  }
  return log_kernel_convolve(f, false, true);
}

/// Pointwise advective speed bound: max |K*f| physical, max |x + K*f| rescaled.
inline double max_speed(const Field2D& f, const PotentialPair& pot, Regime regime) {
  if (regime == Regime::physical) return pot.max_speed;
  const Grid2D& g = f.grid;
  double m2 = 0.0;
  for (int iy = 0; iy < g.n; ++iy) {
    const double y = g.x(iy);
    for (int ix = 0; ix < g.n; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
      const double wx = pot.vx.v[i] + g.x(ix);
      const double wy = pot.vy.v[i] + y;
      m2 = std::max(m2, wx * wx + wy * wy);
    }
  }
  return std::sqrt(m2);
}

/// T(f) = div(f w), w = K*f (+x in the rescaled regime), evaluated spectrally.
inline Field2D transport_rhs(const Field2D& f, const PotentialPair& pot, Regime regime) {
  const Grid2D& g = f.grid;
  Field2D fx(g), fy(g);
  if (regime == Regime::physical) {
    for (std::size_t i = 0; i < f.v.size(); ++i) {
      fx.v[i] = f.v[i] * pot.vx.v[i];
      fy.v[i] = f.v[i] * pot.vy.v[i];
    }
  } else {
    for (int iy = 0; iy < g.n; ++iy) {
      const double y = g.x(iy);
      for (int ix = 0; ix < g.n; ++ix) {
        const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
        fx.v[i] = f.v[i] * (pot.vx.v[i] + g.x(ix));
        fy.v[i] = f.v[i] * (pot.vy.v[i] + y);
      }
    }
  }
  return fft::divergence(fx, fy);
}

inline SimState step_imex(const SimState& s, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step: dt must be positive");
  const double speed = max_speed(s.f, s.pot, s.regime);
  const double bound = (speed > 0) ? 0.5 * s.f.grid.h / speed
                                   : std::numeric_limits<double>::infinity();
  if (dt > bound)
    throw BlowupError("time step " + std::to_string(dt) +
                          " exceeds the advective CFL bound " + std::to_string(bound),
                      s);

  const Grid2D& g = s.f.grid;
  const Field2D k1 = transport_rhs(s.f, s.pot, s.regime);
  Field2D stage(g);
  for (std::size_t i = 0; i < stage.v.size(); ++i)
    stage.v[i] = s.f.v[i] + dt * k1.v[i];
  const Field2D ubar = fft::diffuse(stage, dt);
  const PotentialPair pot_bar = velocity_of(ubar, s.attraction_off);
  const Field2D k2 = transport_rhs(ubar, pot_bar, s.regime);
  for (std::size_t i = 0; i < stage.v.size(); ++i)
    stage.v[i] = s.f.v[i] + 0.5 * dt * k1.v[i];
  Field2D next = fft::diffuse(stage, dt);
  for (std::size_t i = 0; i < next.v.size(); ++i) next.v[i] += 0.5 * dt * k2.v[i];

  for (double x : next.v)
    if (!std::isfinite(x)) throw BlowupError("non-finite values in the update", s);

  const double mn = min_value(next);
  if (mn < 0.0) {
    const double linf = linf_norm(next);
    if (mn < -s.neg_tol * linf)
      throw BlowupError("negativity beyond tolerance: min " + std::to_string(mn) +
                            " vs -neg_tol*|f|_inf " + std::to_string(-s.neg_tol * linf),
                        s);
    const double mass_before = integrate(s.f);
    for (double& x : next.v)
      if (x < 0.0) x = 0.0;
    const double mass_after = integrate(next);
    if (mass_after > 0.0) {
      const double scale = mass_before / mass_after;
      for (double& x : next.v) x *= scale;
    }
  }

  SimState out;
  out.f = std::move(next);
  out.t = s.t + dt;
  out.steps = s.steps + 1;
  out.pot = velocity_of(out.f, s.attraction_off);
  out.regime = s.regime;
  out.attraction_off = s.attraction_off;
  out.neg_tol = s.neg_tol;
  return out;
}

} // namespace detail

/// Assembles a fresh state around an initial datum.
inline SimState make_state(Field2D f0, Regime regime, double neg_tol = 1e-8,
                           bool attraction_off = false) {
  require_nonempty(f0, "make_state");
  SimState s;
  s.f = std::move(f0);
  s.regime = regime;
  s.attraction_off = attraction_off;
  s.neg_tol = neg_tol;
  s.pot = detail::velocity_of(s.f, attraction_off);
  return s;
}

inline SimState step_physical(const SimState& s, double dt) {
  if (s.regime != Regime::physical)
    throw std::invalid_argument("step_physical: state is not in the physical regime");
  return detail::step_imex(s, dt);
}

inline SimState step_rescaled(const SimState& s, double dt) {
  if (s.regime != Regime::rescaled)
    throw std::invalid_argument("step_rescaled: state is not in the rescaled regime");
  return detail::step_imex(s, dt);
}

// ---------------------------------------------------------------------------
// Trajectory recording.

struct TrajectorySample {
  double t = 0, mass = 0, m2 = 0, m4 = 0;
  double H = 0, Hplus = 0, H2 = 0, F = 0, DF = 0, I = 0, E = 0, DE = 0;
  double l43 = 0, l2 = 0, l3 = 0, linf = 0, t14l43 = 0;
};

inline constexpr const char* kTrajectoryCsvHeader =
    "t,mass,m2,m4,H,Hplus,H2,F,DF,I,E,DE,l43,l2,l3,linf,t14l43";

/// Full diagnostic row for a field at time t (fresh convolution inside).
inline TrajectorySample measure(const Field2D& f, double t,
                                bool attraction_off = false) {
  PotentialPair pp;
  if (attraction_off) {
    pp = detail::velocity_of(f, true);
  } else {
    pp = log_kernel_convolve(f, true, true);
  }
  TrajectorySample s;
  s.t = t;
  s.mass = integrate(f);
  s.m2 = moment(f, 2.0);
  s.m4 = moment(f, 4.0);
  s.H = entropy(f);
  s.Hplus = positive_entropy(f);
  s.H2 = h2_functional(f);
  s.F = free_energy(f, pp);
  s.DF = free_energy_dissipation(f, pp);
  s.I = fisher_information(f);
  s.E = rescaled_energy(f, pp);
  s.DE = rescaled_dissipation(f, pp);
  s.l43 = lp_norm(f, 4.0 / 3.0);
  s.l2 = lp_norm(f, 2.0);
  s.l3 = lp_norm(f, 3.0);
  s.linf = linf_norm(f);
  s.t14l43 = std::pow(std::max(t, 0.0), 0.25) * s.l43;
  return s;
}

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  std::string blowup_reason;
  Field2D final_f; // last valid field
  double final_t = 0.0;
};

/// Gaussian initial datum described by the config.
inline Field2D initial_datum(const SimConfig& cfg) {
  if (!cfg.field_path.empty())
    throw std::invalid_argument(
        "initial_datum: config names a field dump; load it and call run(cfg, f0)");
  const Grid2D grid = make_grid(cfg.n, cfg.half_width);
  return gaussian_datum(grid, cfg.mass, cfg.sigma, cfg.center_x, cfg.center_y);
}

/// Fixed-dt run to t_end with periodic recording. A blow-up under
/// supercritical mass ends the run early and is reported in the record; the
/// same event under subcritical mass rethrows (it indicates a bad dt or a
/// genuine instability, both caller errors there).
inline TrajectoryRecord run(const SimConfig& cfg, Field2D f0) {
  validate(cfg);
  require_nonempty(f0, "run");
  const double mass0 = integrate(f0);
  const double linf0 = linf_norm(f0);
  SimState s = make_state(std::move(f0), cfg.regime, cfg.neg_tol, cfg.attraction_off);

  TrajectoryRecord rec;
  const long nsteps = std::max<long>(1, std::llround(cfg.t_end / cfg.dt));
  rec.samples.push_back(measure(s.f, 0.0, cfg.attraction_off));

  for (long i = 0; i < nsteps; ++i) {
    try {
      SimState nxt = detail::step_imex(s, cfg.dt);
      s = std::move(nxt);
    } catch (const BlowupError& e) {
      if (mass0 > kCriticalMass) {
        rec.blew_up = true;
        rec.blowup_time = s.t;
        rec.blowup_reason = e.reason();
        if (s.t > rec.samples.back().t)
          rec.samples.push_back(measure(s.f, s.t, cfg.attraction_off));
        break;
      }
      throw;
    }
    const double t = (i + 1) * cfg.dt;
    const double linf = linf_norm(s.f);
    const bool l_inf_blown = linf0 > 0 && linf > cfg.blowup_linf_factor * linf0;
    if (l_inf_blown) {
      if (mass0 > kCriticalMass) {
        rec.blew_up = true;
        rec.blowup_time = t;
        rec.blowup_reason = "|f|_inf exceeded " + std::to_string(cfg.blowup_linf_factor) +
                            " times its initial value";
        rec.samples.push_back(measure(s.f, t, cfg.attraction_off));
        break;
      }
      throw BlowupError("|f|_inf grew beyond blowup_linf_factor on subcritical mass", s);
    }
    if ((i + 1) % cfg.record_every == 0 || i + 1 == nsteps)
      rec.samples.push_back(measure(s.f, t, cfg.attraction_off));
  }
  rec.final_f = s.f;
  rec.final_t = s.t;
  return rec;
}

inline TrajectoryRecord run(const SimConfig& cfg) { return run(cfg, initial_datum(cfg)); }

/// Series (t, t^{1/4} |f(t)|_{4/3}) from a physical run of the config.
inline std::vector<std::pair<double, double>> short_time_l43(const SimConfig& cfg) {
  SimConfig c = cfg;
  c.regime = Regime::physical;
  TrajectoryRecord rec = run(c);
  std::vector<std::pair<double, double>> out;
  out.reserve(rec.samples.size());
  for (const TrajectorySample& s : rec.samples) out.emplace_back(s.t, s.t14l43);
  return out;
}

/// Self-similar change of variables: a physical solution f at time s maps to
/// the rescaled solution g(tau, x) = R^2 f(s, R x) with R = sqrt(1 + 2s),
/// tau = log(R). Samples f bicubically at R x on the same grid (the image
/// shrinks toward the origin, so no data leaves the domain).
inline std::pair<Field2D, double> physical_to_rescaled(const Field2D& f, double s_time) {
  if (!(s_time >= 0)) throw std::invalid_argument("physical_to_rescaled: time must be >= 0");
  const double R = std::sqrt(1.0 + 2.0 * s_time);
  const double tau = std::log(R);
  const Grid2D& g = f.grid;
  Field2D out(g);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      out.at(ix, iy) = R * R * sample_bicubic(f, R * g.x(ix), R * g.x(iy));
  return {std::move(out), tau};
}

} // namespace kslab
