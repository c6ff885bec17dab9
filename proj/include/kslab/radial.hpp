#pragma once
/// Uniform radial grids for radially symmetric fields and angular modes.
///
/// Nodes r_i = i*dr, i = 1..n (n even), dr = r_max/n. Full integrals over
/// R^2 use composite-Simpson weights times 2*pi*r; the r = 0 endpoint needs
/// no sample because every radial integrand here carries that 2*pi*r factor.
/// Cumulative integrals (mass profiles, kernel tails) use a 4th-order rule:
/// per-interval integration of the local cubic, one-sided at the ends.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kslab/grid.hpp"

namespace kslab {

struct RadialGrid {
  int n = 0;
  double r_max = 0;
  double dr = 0;
  std::vector<double> r; // r[i] = (i+1)*dr
  std::vector<double> w; // quadrature weights incl. 2*pi*r (Simpson)

  bool same(const RadialGrid& o) const { return n == o.n && r_max == o.r_max; }
};

inline RadialGrid make_radial_grid(int n, double r_max) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("make_radial_grid: n must be even and >= 8");
  if (!(r_max > 0) || !std::isfinite(r_max))
    throw std::invalid_argument("make_radial_grid: r_max must be positive");
  RadialGrid g;
  g.n = n;
  g.r_max = r_max;
  g.dr = r_max / n;
  g.r.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    g.r[i] = (i + 1) * g.dr;
    // Simpson coefficients over nodes 0..n with the value at node 0 dropped
    // (integrand vanishes there): 4/3, 2/3, ..., 4/3, 1/3.
    double c = (i == n - 1) ? 1.0 / 3.0 : ((i % 2 == 0) ? 4.0 / 3.0 : 2.0 / 3.0);
    g.w[i] = 2.0 * M_PI * g.r[i] * c * g.dr;
  }
  return g;
}

/// Default radial extent for mass-M profiles: the Gaussian-envelope tail of
/// the stationary state is below 1e-12 well inside 8 + 2*sqrt(M).
inline double default_r_max(double mass) { return 8.0 + 2.0 * std::sqrt(mass); }

struct RadialField {
  RadialGrid grid;
  std::vector<double> v;

  RadialField() = default;
  explicit RadialField(const RadialGrid& g) : grid(g), v(g.n, 0.0) {}
};

inline void require_same_grid(const RadialField& a, const RadialField& b, const char* who) {
  if (!a.grid.same(b.grid))
    throw std::invalid_argument(std::string(who) + ": radial grids differ");
}

inline double integrate(const RadialField& f) {
  if (f.grid.n == 0) throw std::invalid_argument("integrate: empty radial field");
  double s = 0.0;
  for (int i = 0; i < f.grid.n; ++i) s += f.grid.w[i] * f.v[i];
  return s;
}

inline double moment(const RadialField& f, double k) {
  if (k < 0) throw std::invalid_argument("moment: order k must be >= 0");
  double s = 0.0;
  for (int i = 0; i < f.grid.n; ++i)
    s += f.grid.w[i] * f.v[i] * std::pow(f.grid.r[i], k);
  return s;
}

inline double lp_norm(const RadialField& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  for (int i = 0; i < f.grid.n; ++i)
    s += f.grid.w[i] * std::pow(std::abs(f.v[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double l1_distance(const RadialField& a, const RadialField& b) {
  require_same_grid(a, b, "l1_distance");
  double s = 0.0;
  for (int i = 0; i < a.grid.n; ++i) s += a.grid.w[i] * std::abs(a.v[i] - b.v[i]);
  return s;
}

inline RadialField radial_gaussian(const RadialGrid& g, double mass, double sigma) {
  if (!(mass > 0) || !(sigma > 0))
    throw std::invalid_argument("radial_gaussian: mass and sigma must be positive");
  RadialField f(g);
  const double amp = mass / (2.0 * M_PI * sigma * sigma);
  for (int i = 0; i < g.n; ++i)
    f.v[i] = amp * std::exp(-g.r[i] * g.r[i] / (2.0 * sigma * sigma));
  return f;
}

// ---------------------------------------------------------------------------
// 4th-order cumulative integration on the radial nodes.
//
// Input: integrand values phi_i at nodes r_i = (i+1)*dr plus the known value
// phi(0) = phi0 at r = 0. Output: I_i ~ integral from 0 to r_i.
// Each interval integrates the cubic through the 4 nearest nodes:
//   interior [r_{j-1}, r_j]:    dr*(-phi_{j-2} + 13 phi_{j-1} + 13 phi_j - phi_{j+1})/24
//   first    [0, r_1]:          dr*( 9 phi(0) + 19 phi_1 - 5 phi_2 + phi_3)/24
//   last     [r_{n-1}, r_n]:    dr*(  phi_{n-3} - 5 phi_{n-2} + 19 phi_{n-1} + 9 phi_n)/24
inline std::vector<double> cumulative_integral(const RadialGrid& g,
                                               const std::vector<double>& phi,
                                               double phi0 = 0.0) {
  const int n = g.n;
  if (static_cast<int>(phi.size()) != n)
    throw std::invalid_argument("cumulative_integral: size mismatch");
  if (n < 4)
    throw std::invalid_argument("cumulative_integral: need at least 4 nodes");
  std::vector<double> out(n);
  const double c = g.dr / 24.0;
  out[0] = c * (9.0 * phi0 + 19.0 * phi[0] - 5.0 * phi[1] + phi[2]);
  // second interval [r_1, r_2] uses stencil (phi0, phi_1, phi_2, phi_3)
  out[1] = out[0] + c * (-phi0 + 13.0 * phi[0] + 13.0 * phi[1] - phi[2]);
  for (int j = 2; j < n - 1; ++j)
    out[j] = out[j - 1] + c * (-phi[j - 2] + 13.0 * phi[j - 1] + 13.0 * phi[j] - phi[j + 1]);
  out[n - 1] = out[n - 2] +
               c * (phi[n - 4] - 5.0 * phi[n - 3] + 19.0 * phi[n - 2] + 9.0 * phi[n - 1]);
  return out;
}

/// Complementary cumulative integral T_i ~ integral from r_i to r_max
/// (the tail beyond r_max is the caller's responsibility; fields handled
/// here decay below roundoff before r_max).
inline std::vector<double> cumulative_integral_tail(const RadialGrid& g,
                                                    const std::vector<double>& phi,
                                                    double phi0 = 0.0) {
  std::vector<double> cum = cumulative_integral(g, phi, phi0);
  const double total = cum[g.n - 1];
  for (double& x : cum) x = total - x;
  return cum;
}

// ---------------------------------------------------------------------------
// Radial <-> 2D transfer.

namespace detail {
/// Cubic (Catmull-Rom) interpolation of radial node data at radius r in
/// [0, r_max]. Below r_1 an even-symmetric parabola through (r_1, r_2) is
/// used, consistent with smooth radial fields (zero slope at the origin).
inline double interp_radial(const RadialField& f, double r) {
  const RadialGrid& g = f.grid;
  if (r <= g.r[0]) {
    const double r1 = g.r[0], r2 = g.r[1];
    const double b = (f.v[1] - f.v[0]) / (r2 * r2 - r1 * r1);
    const double a = f.v[0] - b * r1 * r1;
    return a + b * r * r;
  }
  double t = r / g.dr - 1.0; // node index space, node i at t = i
  int i = static_cast<int>(std::floor(t));
  i = std::min(std::max(i, 1), g.n - 3); // need i-1..i+2
  const double s = t - i;
  const double pm1 = f.v[i - 1], p0 = f.v[i], p1 = f.v[i + 1], p2 = f.v[i + 2];
  return p0 + 0.5 * s * (p1 - pm1 +
         s * (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2 +
         s * (3.0 * (p0 - p1) + p2 - pm1)));
}
} // namespace detail

/// Map a radial field onto a 2D grid. Radii beyond r_max require the radial
/// tail to have decayed (|last nodes| <= 1e-12 * max); such cells are filled
/// with 0. A non-decayed tail would silently lose mass, so it is an error.
inline Field2D radial_to_2d(const RadialField& f, const Grid2D& grid) {
  if (f.grid.n == 0) throw std::invalid_argument("radial_to_2d: empty radial field");
  const double corner = std::sqrt(2.0) * grid.half_width;
  if (corner > f.grid.r_max) {
    double vmax = 0.0;
    for (double x : f.v) vmax = std::max(vmax, std::abs(x));
    const int k = std::max(1, f.grid.n / 64);
    for (int i = f.grid.n - k; i < f.grid.n; ++i)
      if (std::abs(f.v[i]) > 1e-12 * vmax)
        throw std::invalid_argument(
            "radial_to_2d: grid extends beyond r_max and the radial tail has not decayed");
  }
  Field2D out(grid);
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.x(iy);
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.x(ix);
      const double r = std::hypot(x, y);
      out.at(ix, iy) = (r <= f.grid.r_max) ? detail::interp_radial(f, r) : 0.0;
    }
  }
  return out;
}

/// Angular average of a 2D field onto radial nodes (bicubic sampling on
/// uniformly spaced angles; trapezoid in theta is spectrally accurate for a
/// periodic smooth integrand). Every sampled circle must fit inside the grid.
inline RadialField radial_project(const Field2D& f, const RadialGrid& rg) {
  const double usable = f.grid.half_width - 2.0 * f.grid.h;
  if (rg.r_max > usable)
    throw std::invalid_argument(
        "radial_project: radial grid reaches past the usable interior of the 2D grid");
  RadialField out(rg);
  for (int i = 0; i < rg.n; ++i) {
    const double r = rg.r[i];
    const int k = std::max(32, 4 * static_cast<int>(std::ceil(2.0 * M_PI * r / f.grid.h)));
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      const double th = 2.0 * M_PI * j / k;
      s += sample_bicubic(f, r * std::cos(th), r * std::sin(th));
    }
    out.v[i] = s / k;
  }
  return out;
}

/// Angular Fourier coefficient a_m(r) = (1/pi) * integral f(r,theta) cos(m theta) dtheta.
inline double angular_mode(const Field2D& f, double r, int m) {
  const int k = std::max(64, 8 * (m + 1) * static_cast<int>(std::ceil(2.0 * M_PI * r / f.grid.h)));
  double s = 0.0;
  for (int j = 0; j < k; ++j) {
    const double th = 2.0 * M_PI * j / k;
    s += sample_bicubic(f, r * std::cos(th), r * std::sin(th)) * std::cos(m * th);
  }
  return s * 2.0 / k; // (1/pi) * (2 pi / k) * sum
}

} // namespace kslab
