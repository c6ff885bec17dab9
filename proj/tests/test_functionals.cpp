#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kslab/functionals.hpp"
#include "kslab/potential.hpp"

using namespace kslab;

namespace {

constexpr double kGammaEuler = 0.57721566490153286;

// E[log |X-Y|] for X, Y iid standard 2D normals: X-Y is centered normal with
// variance 2, so the value is log sqrt(2) + (log 2 - gamma)/2 = log 2 - gamma/2.
const double kPairLogDist = std::log(2.0) - 0.5 * kGammaEuler;

PotentialPair zero_potential(const Grid2D& g) {
  PotentialPair pp;
  pp.potential = Field2D(g);
  pp.vx = Field2D(g);
  pp.vy = Field2D(g);
  pp.has_potential = true;
  pp.has_velocity = true;
  return pp;
}

} // namespace

TEST_CASE("entropy of Gaussians matches the closed form") {
  const Grid2D g = make_grid(256, 12.0);
  const Field2D f1 = gaussian_datum(g, 1.0, 1.0);
  // H(Gaussian M, sigma) = M (log(M / (2 pi sigma^2)) - 1)
  CHECK(entropy(f1) == Catch::Approx(-std::log(2.0 * M_PI) - 1.0).margin(1e-8));
  CHECK(entropy(f1) == Catch::Approx(-2.8378770664).margin(1e-6)); // frozen

  const double M = 4.0 * M_PI;
  const Field2D f2 = gaussian_datum(g, M, 1.0);
  CHECK(entropy(f2) == Catch::Approx(M * (std::log(2.0) - 1.0)).margin(1e-7));
  CHECK(entropy(f2) == Catch::Approx(-3.856026).margin(1e-4)); // frozen

  SECTION("dilation law: H(lambda^2 f(lambda x)) = H(f) + 2 M log lambda") {
    const Field2D half = gaussian_datum(g, M, 0.5); // lambda = 2 dilation of f2
    CHECK(entropy(half) - entropy(f2) ==
          Catch::Approx(2.0 * M * std::log(2.0)).epsilon(1e-8));
  }

  SECTION("negative values are rejected") {
    Field2D bad = f1;
    bad.v[bad.v.size() / 2] = -1e-3;
    CHECK_THROWS_AS(entropy(bad), std::invalid_argument);
  }
}

TEST_CASE("positive entropy and H2") {
  const Grid2D g = make_grid(256, 12.0);
  const Field2D f1 = gaussian_datum(g, 1.0, 1.0); // peak 1/(2 pi) < 1
  CHECK(positive_entropy(f1) == 0.0);

  const double M = 4.0 * M_PI; // peak 2 > 1
  const Field2D f2 = gaussian_datum(g, M, 1.0);
  // int_{f>1} f log f = M (a - 1 + e^{-a}) with a = log 2 (substituting the
  // radial exponent), giving 4 pi (log 2 - 1/2); the integrand kink on the
  // f = 1 circle limits the quadrature to 2nd order (measured 3.8e-4 here)
  CHECK(positive_entropy(f2) ==
        Catch::Approx(M * (std::log(2.0) - 0.5)).margin(1.5e-3));

  // peak of f1 is far below e, so the truncated log is identically 1
  CHECK(h2_functional(f1) == Catch::Approx(integrate(f1)).epsilon(1e-12));

  const Field2D zero(g);
  CHECK(entropy(zero) == 0.0);
  CHECK(positive_entropy(zero) == 0.0);
  CHECK(h2_functional(zero) == 0.0);
  CHECK(fisher_information(zero) == 0.0);
}

TEST_CASE("Fisher information of Gaussians is 2 M / sigma^2") {
  const Grid2D g = make_grid(256, 12.0);
  CHECK(fisher_information(gaussian_datum(g, 1.0, 1.0)) ==
        Catch::Approx(2.0).epsilon(1e-4));
  const double M = 4.0 * M_PI;
  CHECK(fisher_information(gaussian_datum(g, M, 0.8)) ==
        Catch::Approx(2.0 * M / 0.64).epsilon(1e-4));
}

TEST_CASE("free energy of Gaussians") {
  const Grid2D g = make_grid(512, 12.0);
  const Field2D f1 = gaussian_datum(g, 1.0, 1.0);
  const PotentialPair pp1 = log_kernel_convolve(f1, true, true);

  // interaction = (1/(4 pi)) iint f f log|x-y| = E[log|X-Y|]/(4 pi) at M = 1
  const double inter1 = kPairLogDist / (4.0 * M_PI);
  CHECK(inter1 == Catch::Approx(0.032192218463).margin(1e-10)); // frozen
  CHECK(interaction_energy(f1, pp1) == Catch::Approx(inter1).epsilon(3e-4));
  CHECK(free_energy(f1, pp1) ==
        Catch::Approx(-std::log(2.0 * M_PI) - 1.0 + inter1).margin(1e-4));

  const double M = 4.0 * M_PI;
  const Field2D f2 = gaussian_datum(g, M, 1.0);
  // H + M^2 E[log|X-Y|]/(4 pi) = 4 pi (log 2 - 1) + 4 pi (log 2 - gamma/2)
  const double want = M * (std::log(2.0) - 1.0) + M * kPairLogDist;
  CHECK(want == Catch::Approx(1.227565).margin(1e-4)); // frozen
  CHECK(free_energy(f2) == Catch::Approx(want).margin(1.5e-3)); // measured 5.5e-4

  SECTION("potential/field mismatch is rejected") {
    const Field2D other = gaussian_datum(make_grid(128, 12.0), 1.0, 1.0);
    CHECK_THROWS_AS(free_energy(other, pp1), std::invalid_argument);
  }
}

TEST_CASE("rescaled energy and dissipation") {
  const Grid2D g = make_grid(512, 12.0);
  const double M = 4.0 * M_PI;
  const Field2D f = gaussian_datum(g, M, 1.0);

  SECTION("zero-interaction identity E = H + mass + M2/2") {
    const PotentialPair none = zero_potential(g);
    CHECK(rescaled_energy(f, none) ==
          Catch::Approx(entropy(f) + integrate(f) + 0.5 * moment(f, 2.0))
              .epsilon(1e-12));
  }

  SECTION("Gaussian dissipation closed form M^3 log(4/3) / (8 pi^2)") {
    // grad log g + x cancels for the unit-variance Gaussian, leaving only the
    // attraction field whose squared g-weighted integral is the Frullani value
    const PotentialPair pp = log_kernel_convolve(f, true, true);
    const double want = std::pow(M, 3) * std::log(4.0 / 3.0) / (8.0 * M_PI * M_PI);
    CHECK(rescaled_dissipation(f, pp) == Catch::Approx(want).epsilon(1e-3)); // measured 4.1e-4
  }

  SECTION("dissipations are nonnegative on seeded mixtures") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uc(-1.5, 1.5), us(0.7, 1.3);
    for (int k = 0; k < 3; ++k) {
      Field2D mix(g);
      for (int c = 0; c < 2; ++c) {
        const double cx = uc(rng), cy = uc(rng), s = us(rng);
        const Field2D bump = gaussian_datum(g, 2.0, s, cx, cy);
        axpy(mix, 1.0, bump);
      }
      const PotentialPair pp = log_kernel_convolve(mix, true, true);
      CHECK(free_energy_dissipation(mix, pp) >= 0.0);
      CHECK(rescaled_dissipation(mix, pp) >= 0.0);
      CHECK(fisher_information(mix) >= 0.0);
    }
  }
}

TEST_CASE("inequality suite on Gaussians") {
  const Grid2D g = make_grid(256, 12.0);

  SECTION("unit Gaussian: sharp-constant slack of the log-HLS bound") {
    const Field2D f = gaussian_datum(g, 1.0, 1.0);
    const auto reports = check_inequalities(f);
    bool found = false;
    for (const auto& r : reports) {
      if (r.name != "log-hls") continue;
      found = true;
      CHECK_FALSE(r.skipped);
      CHECK(r.pass);
      // H + 2 E[log|X-Y|] + C2(1) with C2(1) = 1 + log pi
      const double want =
          -std::log(2.0 * M_PI) - 1.0 + 2.0 * kPairLogDist + (1.0 + std::log(M_PI));
      CHECK(want == Catch::Approx(0.115932).margin(1e-5)); // frozen
      CHECK(r.slack == Catch::Approx(want).margin(1e-3));
    }
    CHECK(found);
    CHECK(log_hls_constant(1.0) == Catch::Approx(1.0 + std::log(M_PI)).epsilon(1e-14));
  }

  SECTION("M = 4 pi: every report passes, C3 = 2") {
    CHECK(subcritical_gap_constant(4.0 * M_PI) == Catch::Approx(2.0).epsilon(1e-14));
    const Field2D f = gaussian_datum(g, 4.0 * M_PI, 1.0);
    int ratios = 0, bounds = 0;
    for (const auto& r : check_inequalities(f)) {
      CHECK_FALSE(r.skipped);
      CHECK(r.pass);
      if (r.is_ratio) {
        ++ratios;
        CHECK(std::isfinite(r.slack));
        CHECK(r.slack > 0.0);
      } else {
        ++bounds;
      }
    }
    CHECK(ratios == 4);
    CHECK(bounds == 4);
  }

  SECTION("supercritical mass skips the entropy chain with a reason") {
    const Field2D f = gaussian_datum(g, 9.0 * M_PI, 1.0);
    int skipped = 0;
    for (const auto& r : check_inequalities(f))
      if (r.skipped) {
        ++skipped;
        CHECK_FALSE(r.witness.empty());
        CHECK(r.pass); // skipping is not a failure
      }
    CHECK(skipped == 3);
  }

  SECTION("nonpositive mass is rejected") {
    const Field2D zero(g);
    CHECK_THROWS_AS(check_inequalities(zero), std::invalid_argument);
  }
}

TEST_CASE("moment production constant") {
  CHECK(moment_production_constant(1.0) == Catch::Approx(3.8408).margin(1e-4));
  CHECK(moment_production_constant(8.0 * M_PI) == 0.0);
  CHECK(moment_production_constant(4.0 * M_PI) ==
        Catch::Approx(8.0 * M_PI).epsilon(1e-14));
}
