#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kslab/dynamics.hpp"
#include "kslab/io.hpp"

using namespace kslab;

TEST_CASE("pure-heat hook: exact second-moment production and dH/dt = -I") {
  // attraction off leaves k1 = k2 = 0, so the IMEX step applies the exact
  // heat semigroup; only the quadrature separates us from the closed form
  SimConfig cfg;
  cfg.n = 128;
  cfg.half_width = 10.0;
  cfg.mass = 1.0;
  cfg.sigma = 1.0;
  cfg.dt = 1e-2;
  cfg.t_end = 0.2;
  cfg.record_every = 10;
  cfg.attraction_off = true;
  const TrajectoryRecord rec = run(cfg);
  REQUIRE_FALSE(rec.blew_up);
  const TrajectorySample& a = rec.samples.front();
  const TrajectorySample& b = rec.samples.back();

  // M2(t) = M2(0) + 4 M t under the heat flow
  CHECK(b.m2 - a.m2 == Catch::Approx(4.0 * cfg.mass * b.t).epsilon(1e-3));

  // H(t) = -log(2 pi (1+2t)) - 1 and I(t) = 2/(1+2t); the trapezoid average
  // of -I matches the increment to second order in the window length
  const double slope = (b.H - a.H) / (b.t - a.t);
  CHECK(slope == Catch::Approx(-0.5 * (a.I + b.I)).epsilon(2e-2));
  CHECK(b.I == Catch::Approx(2.0 / (1.0 + 2.0 * b.t)).epsilon(1e-3));
}

TEST_CASE("Ornstein-Uhlenbeck hook: rescaled drift relaxes the variance") {
  // attraction off in the rescaled regime is the Fokker-Planck equation;
  // Gaussians stay Gaussian with sigma^2(tau) = 1 + (sigma0^2 - 1) e^{-2 tau}
  SimConfig cfg;
  cfg.n = 128;
  cfg.half_width = 10.0;
  cfg.mass = 1.0;
  cfg.sigma = 1.3;
  cfg.dt = 5e-4;
  cfg.t_end = 0.35;
  cfg.record_every = 100;
  cfg.regime = Regime::rescaled;
  cfg.attraction_off = true;
  const TrajectoryRecord rec = run(cfg);
  const double s2 = 1.0 + (1.69 - 1.0) * std::exp(-2.0 * 0.35);
  const Field2D want =
      gaussian_datum(rec.final_f.grid, cfg.mass, std::sqrt(s2));
  CHECK(l1_distance(rec.final_f, want) < 1e-5 * cfg.mass);
  CHECK(rec.samples.back().m2 == Catch::Approx(2.0 * s2).epsilon(1e-4));
}

TEST_CASE("physical flow: constant second-moment production rate") {
  SimConfig cfg;
  cfg.n = 256;
  cfg.half_width = 12.0;
  cfg.mass = 1.0;
  cfg.sigma = 1.0;
  cfg.dt = 2e-3;
  cfg.t_end = 0.5;
  cfg.record_every = 50;
  const TrajectoryRecord rec = run(cfg);
  REQUIRE_FALSE(rec.blew_up);
  const TrajectorySample& a = rec.samples.front();
  const TrajectorySample& b = rec.samples.back();
  const double rate = (b.m2 - a.m2) / (b.t - a.t);
  CHECK(rate == Catch::Approx(moment_production_constant(1.0)).epsilon(1e-2));
  CHECK(moment_production_constant(1.0) == Catch::Approx(3.8408).margin(1e-4));
}

TEST_CASE("mass is conserved to roundoff in both regimes") {
  for (Regime regime : {Regime::physical, Regime::rescaled}) {
    SimConfig cfg;
    cfg.n = 128;
    cfg.half_width = 10.0;
    cfg.mass = 4.0 * M_PI;
    cfg.sigma = 1.0;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0; // 1000 steps
    cfg.record_every = 250;
    cfg.regime = regime;
    const TrajectoryRecord rec = run(cfg);
    REQUIRE_FALSE(rec.blew_up);
    const double m0 = rec.samples.front().mass;
    for (const TrajectorySample& s : rec.samples)
      CHECK(std::abs(s.mass - m0) <= 1e-8 * m0);
  }
}

TEST_CASE("free-energy balance F(t) - F(0) = -int D_F") {
  SimConfig cfg;
  cfg.n = 256;
  cfg.half_width = 12.0;
  cfg.mass = 4.0 * M_PI;
  cfg.sigma = 1.0;
  cfg.dt = 2e-4;
  cfg.t_end = 0.05;
  cfg.record_every = 25;
  const TrajectoryRecord rec = run(cfg);
  REQUIRE_FALSE(rec.blew_up);
  REQUIRE(rec.samples.size() >= 5);
  double integral = 0.0;
  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    const TrajectorySample& p = rec.samples[i - 1];
    const TrajectorySample& q = rec.samples[i];
    integral += 0.5 * (p.DF + q.DF) * (q.t - p.t);
  }
  const double f0 = rec.samples.front().F;
  const double drop = f0 - rec.samples.back().F;
  CHECK(drop == Catch::Approx(integral).margin(0.02 * std::abs(f0)));
  for (std::size_t i = 1; i < rec.samples.size(); ++i)
    CHECK(rec.samples[i].F <= rec.samples[i - 1].F + 1e-6 * std::abs(f0));
}

TEST_CASE("zero field is a fixed point of the step") {
  const Grid2D g = make_grid(64, 8.0);
  SimState s = make_state(Field2D(g), Regime::physical);
  s = step_physical(s, 0.1);
  CHECK(linf_norm(s.f) == 0.0);
  CHECK(s.t == Catch::Approx(0.1));
}

TEST_CASE("second-order convergence in dt") {
  auto final_field = [](double dt) {
    SimConfig cfg;
    cfg.n = 128;
    cfg.half_width = 10.0;
    cfg.mass = 4.0 * M_PI;
    cfg.sigma = 1.0;
    cfg.dt = dt;
    cfg.t_end = 0.1;
    cfg.record_every = 1000000;
    return run(cfg).final_f;
  };
  const Field2D c = final_field(4e-3);
  const Field2D m = final_field(2e-3);
  const Field2D f = final_field(1e-3);
  const double d1 = l1_distance(c, m);
  const double d2 = l1_distance(m, f);
  REQUIRE(d2 > 0.0);
  CHECK(d1 / d2 >= 3.5); // ratio 4 for a clean second-order scheme
}

TEST_CASE("CFL violation throws and subcritical runs propagate it") {
  const Grid2D g = make_grid(64, 8.0);
  SimState s = make_state(gaussian_datum(g, 4.0 * M_PI, 1.0), Regime::physical);
  CHECK_THROWS_AS(step_physical(s, 10.0), BlowupError);
  CHECK_THROWS_AS(step_rescaled(s, 1e-3), std::invalid_argument); // regime mix-up

  SimConfig cfg;
  cfg.n = 64;
  cfg.half_width = 8.0;
  cfg.mass = 4.0 * M_PI; // subcritical: the throw must reach the caller
  cfg.dt = 10.0;
  cfg.t_end = 20.0;
  CHECK_THROWS_AS(run(cfg), BlowupError);
}

TEST_CASE("supercritical mass blows up within the predicted window") {
  SimConfig cfg;
  cfg.n = 256;
  cfg.half_width = 6.0;
  cfg.mass = 10.0 * M_PI;
  cfg.sigma = std::sqrt(1.0 / (10.0 * M_PI));
  cfg.dt = 1e-4;
  cfg.t_end = 0.08;
  cfg.record_every = 50;
  cfg.neg_tol = 1e-5;
  cfg.blowup_linf_factor = 30.0;
  const TrajectoryRecord rec = run(cfg);
  REQUIRE(rec.blew_up);
  CHECK_FALSE(rec.blowup_reason.empty());
  // all of M2 vanishes by 2 pi M2(0) / (M (M - 8 pi)); the detector must fire
  // no later than 1.2x that horizon
  const double m20 = 2.0 * cfg.mass * cfg.sigma * cfg.sigma;
  const double vanish =
      2.0 * M_PI * m20 / (cfg.mass * (cfg.mass - 8.0 * M_PI));
  CHECK(rec.blowup_time <= 1.2 * vanish);
  CHECK(rec.blowup_time > 0.0);
}

TEST_CASE("trajectory recording is deterministic") {
  SimConfig cfg;
  cfg.n = 128;
  cfg.half_width = 10.0;
  cfg.mass = 4.0 * M_PI;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  cfg.record_every = 10;
  const std::string a = format_trajectory_csv(run(cfg));
  const std::string b = format_trajectory_csv(run(cfg));
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) == kTrajectoryCsvHeader);
}

TEST_CASE("change of variables maps heat spreading onto rescaled fixed points") {
  const Grid2D g = make_grid(512, 12.0);

  SECTION("s = 0 is the identity") {
    const Field2D f = gaussian_datum(g, 4.0 * M_PI, 1.5, 0.3, -0.2);
    const auto [out, tau] = physical_to_rescaled(f, 0.0);
    CHECK(tau == 0.0);
    CHECK(l1_distance(out, f) < 1e-12 * integrate(f));
  }

  SECTION("Gaussian at s = 1.5 contracts by R = 2") {
    const double M = 4.0 * M_PI;
    const Field2D f = gaussian_datum(g, M, 2.0);
    const auto [out, tau] = physical_to_rescaled(f, 1.5);
    CHECK(tau == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    const Field2D want = gaussian_datum(g, M, 1.0);
    CHECK(l1_distance(out, want) < 1e-5 * M);
  }

  CHECK_THROWS_AS(
      physical_to_rescaled(gaussian_datum(g, 1.0, 1.0), -0.1),
      std::invalid_argument);
}

TEST_CASE("rescaled second moment relaxes along the exact linear ODE") {
  // dM2/dtau = 4M - M^2/(2 pi) - 2 M2, so
  // M2(tau) = eq + (M2(0) - eq) e^{-2 tau}, eq = 2M (1 - M/(8 pi))
  SimConfig cfg;
  cfg.n = 256;
  cfg.half_width = 12.0;
  cfg.mass = 4.0 * M_PI;
  cfg.sigma = 0.8;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.record_every = 100;
  cfg.regime = Regime::rescaled;
  const TrajectoryRecord rec = run(cfg);
  REQUIRE_FALSE(rec.blew_up);
  const double eq = 2.0 * cfg.mass * (1.0 - cfg.mass / (8.0 * M_PI));
  const double m20 = rec.samples.front().m2;
  for (const TrajectorySample& s : rec.samples) {
    const double want = eq + (m20 - eq) * std::exp(-2.0 * s.t);
    CHECK(s.m2 == Catch::Approx(want).epsilon(5e-3));
  }
}

TEST_CASE("short-time series reports t^{1/4} |f|_{4/3}") {
  SimConfig cfg;
  cfg.n = 128;
  cfg.half_width = 6.0;
  cfg.mass = 4.0 * M_PI;
  cfg.sigma = 0.3;
  cfg.dt = 1e-4;
  cfg.t_end = 0.01;
  cfg.record_every = 20;
  const auto series = short_time_l43(cfg);
  REQUIRE(series.size() >= 4);
  CHECK(series.front().first == 0.0);
  CHECK(series.front().second == 0.0); // t^{1/4} kills the t = 0 sample
  for (const auto& [t, v] : series)
    if (t > 0) CHECK(v > 0.0);
}
