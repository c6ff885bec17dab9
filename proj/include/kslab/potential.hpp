#pragma once
/// Free-space logarithmic potential and attraction field.
///
/// 2D route: Hockney's method. The field is zero-padded to (2n)^2, the
/// kernels kappa = (1/2pi) log|z| and K = grad kappa are sampled at cell
/// displacements on the padded grid, and one circular convolution per kernel
/// evaluates the exact discrete sum h^2 sum_b ker(x_a - x_b) f(x_b) for every
/// target cell, free of periodic images.
///
/// Kernel regularization at the origin cell:
///   kappa  -> its exact cell average, (log h + C_ORIGIN)/(2pi), a closed
///             form derived once by adaptive quadrature and checked in tests;
///   grad kappa -> 0 (odd symmetry), which keeps the discrete interaction
///             antisymmetric and is second-order consistent for smooth f.
///
/// Radial route: closed-form shell formulas on radial grids, used by the
/// profile solver and as an independent cross-check of the 2D route.

#include <complex>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "kslab/fft.hpp"
#include "kslab/grid.hpp"
#include "kslab/radial.hpp"

namespace kslab {

/// Cell mean of log|z| over an h x h cell centered at the origin minus log h:
/// pi/4 - 3/2 - (log 2)/2.
inline constexpr double kLogCellMeanShift = -1.0611754268825244;

/// Exact cell average of (1/2pi) log|z| over the h x h cell at the origin.
inline double log_kernel_cell_average(double h) {
  return (std::log(h) + kLogCellMeanShift) / (2.0 * M_PI);
}

struct PotentialPair {
  Field2D potential; // kappa * f
  Field2D vx, vy;    // K * f = grad(kappa * f); equals -grad c for c = -kappa*f
  double max_speed = 0.0;
  bool has_potential = false, has_velocity = false;
};

namespace detail {

struct KernelTable {
  int npad = 0;
  fft::Spectrum log_hat, kx_hat, ky_hat;
};

inline const KernelTable& kernel_table(const Grid2D& g) {
  thread_local std::map<std::pair<int, double>, std::unique_ptr<KernelTable>> cache;
  auto key = std::make_pair(g.n, g.half_width);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto tab = std::make_unique<KernelTable>();
  const int N = 2 * g.n;
  tab->npad = N;
  const double h = g.h;
  Grid2D pad;
  pad.n = N;
  pad.half_width = 2.0 * g.half_width;
  pad.h = h;
  Field2D ker(pad);
  auto shift = [N](int i) { return (i <= N / 2) ? i : i - N; };

  for (int iy = 0; iy < N; ++iy) {
    const double zy = shift(iy) * h;
    for (int ix = 0; ix < N; ++ix) {
      const double zx = shift(ix) * h;
      const double r2 = zx * zx + zy * zy;
      ker.at(ix, iy) = (r2 == 0.0) ? log_kernel_cell_average(h)
                                   : 0.25 * std::log(r2) / M_PI;
    }
  }
  tab->log_hat = fft::forward(ker);

  for (int iy = 0; iy < N; ++iy) {
    const double zy = shift(iy) * h;
    for (int ix = 0; ix < N; ++ix) {
      const double zx = shift(ix) * h;
      const double r2 = zx * zx + zy * zy;
      ker.at(ix, iy) = (r2 == 0.0) ? 0.0 : zx / (2.0 * M_PI * r2);
    }
  }
  tab->kx_hat = fft::forward(ker);

  for (int iy = 0; iy < N; ++iy) {
    const double zy = shift(iy) * h;
    for (int ix = 0; ix < N; ++ix) {
      const double zx = shift(ix) * h;
      const double r2 = zx * zx + zy * zy;
      ker.at(ix, iy) = (r2 == 0.0) ? 0.0 : zy / (2.0 * M_PI * r2);
    }
  }
  tab->ky_hat = fft::forward(ker);

  const KernelTable& ref = *tab;
  cache.emplace(key, std::move(tab));
  return ref;
}

} // namespace detail

/// Free-space convolution with kappa and/or grad kappa.
inline PotentialPair log_kernel_convolve(const Field2D& f, bool want_potential = true,
                                         bool want_velocity = true) {
  require_nonempty(f, "log_kernel_convolve");
  const Grid2D& g = f.grid;
  const int n = g.n, N = 2 * n;
  const detail::KernelTable& tab = detail::kernel_table(g);
  fft::Engine& eng = fft::Engine::get(N);

  thread_local std::vector<double> padded;
  padded.assign(static_cast<std::size_t>(N) * N, 0.0);
  for (int iy = 0; iy < n; ++iy)
    std::copy(f.v.begin() + static_cast<std::size_t>(iy) * n,
              f.v.begin() + static_cast<std::size_t>(iy + 1) * n,
              padded.begin() + static_cast<std::size_t>(iy) * N);
  fft::Spectrum fhat(eng.ncplx());
  eng.forward(padded.data(), fhat.data());

  const double h2 = g.h * g.h;
  fft::Spectrum work(eng.ncplx());
  std::vector<double> out(static_cast<std::size_t>(N) * N);
  auto extract = [&](Field2D& dst) {
    dst = Field2D(g);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        dst.at(ix, iy) = out[static_cast<std::size_t>(iy) * N + ix] * h2;
  };

  PotentialPair pp;
  if (want_potential) {
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = fhat[i] * tab.log_hat[i];
    eng.inverse(work.data(), out.data());
    extract(pp.potential);
    pp.has_potential = true;
  }
  if (want_velocity) {
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = fhat[i] * tab.kx_hat[i];
    eng.inverse(work.data(), out.data());
    extract(pp.vx);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = fhat[i] * tab.ky_hat[i];
    eng.inverse(work.data(), out.data());
    extract(pp.vy);
    pp.has_velocity = true;
    double m2 = 0.0;
    for (std::size_t i = 0; i < pp.vx.v.size(); ++i) {
      const double s2 = pp.vx.v[i] * pp.vx.v[i] + pp.vy.v[i] * pp.vy.v[i];
      m2 = std::max(m2, s2);
    }
    pp.max_speed = std::sqrt(m2);
  }
  return pp;
}

/// Radial potential (kappa * g)(r) = (1/2pi)[log r * m(r) + int_r^inf log s g(s) 2 pi s ds],
/// with m(r) the cumulative mass. Tail beyond r_max is dropped (decayed fields).
inline RadialField radial_log_potential(const RadialField& g) {
  const RadialGrid& gr = g.grid;
  std::vector<double> phi_mass(gr.n), phi_tail(gr.n);
  for (int i = 0; i < gr.n; ++i) {
    phi_mass[i] = 2.0 * M_PI * gr.r[i] * g.v[i];
    phi_tail[i] = std::log(gr.r[i]) * phi_mass[i];
  }
  // s log s * g -> 0 as s -> 0 for bounded g
  std::vector<double> m = cumulative_integral(gr, phi_mass, 0.0);
  std::vector<double> tail = cumulative_integral_tail(gr, phi_tail, 0.0);
  RadialField pot(gr);
  for (int i = 0; i < gr.n; ++i)
    pot.v[i] = (std::log(gr.r[i]) * m[i] + tail[i]) / (2.0 * M_PI);
  return pot;
}

/// Radial attraction |K * g|(r) = m(r)/(2 pi r) (shell theorem).
inline RadialField radial_attraction(const RadialField& g) {
  const RadialGrid& gr = g.grid;
  std::vector<double> phi(gr.n);
  for (int i = 0; i < gr.n; ++i) phi[i] = 2.0 * M_PI * gr.r[i] * g.v[i];
  std::vector<double> m = cumulative_integral(gr, phi, 0.0);
  RadialField a(gr);
  for (int i = 0; i < gr.n; ++i) a.v[i] = m[i] / (2.0 * M_PI * gr.r[i]);
  return a;
}

/// Cumulative mass profile m(r_i).
inline std::vector<double> cumulative_mass(const RadialField& g) {
  const RadialGrid& gr = g.grid;
  std::vector<double> phi(gr.n);
  for (int i = 0; i < gr.n; ++i) phi[i] = 2.0 * M_PI * gr.r[i] * g.v[i];
  return cumulative_integral(gr, phi, 0.0);
}

/// Angular mode m >= 1 of the log-kernel convolution:
/// (kappa * h_m cos(m theta))_m(r) = -(1/2m) int (r_</r_>)^m h_m(s) s ds.
/// m = 0 reduces to radial_log_potential.
inline RadialField radial_mode_potential(const RadialField& h, int m) {
  if (m < 0) throw std::invalid_argument("radial_mode_potential: m must be >= 0");
  if (m == 0) return radial_log_potential(h);
  const RadialGrid& gr = h.grid;
  std::vector<double> chi_lo(gr.n), chi_hi(gr.n);
  for (int i = 0; i < gr.n; ++i) {
    chi_lo[i] = std::pow(gr.r[i], m + 1) * h.v[i];
    chi_hi[i] = std::pow(gr.r[i], 1 - m) * h.v[i];
  }
  std::vector<double> A = cumulative_integral(gr, chi_lo, 0.0);
  std::vector<double> B = cumulative_integral_tail(gr, chi_hi, 0.0);
  RadialField psi(gr);
  for (int i = 0; i < gr.n; ++i) {
    const double r = gr.r[i];
    psi.v[i] = -(std::pow(r, -m) * A[i] + std::pow(r, m) * B[i]) / (2.0 * m);
  }
  return psi;
}

/// Radial derivative of the mode-m kernel potential,
/// psi_m'(r) = (1/2)[r^{-m-1} A(r) - r^{m-1} B(r)]  (m >= 1),
/// psi_0'(r) = m(r)/(2 pi r).
inline RadialField radial_mode_potential_deriv(const RadialField& h, int m) {
  if (m < 0) throw std::invalid_argument("radial_mode_potential_deriv: m must be >= 0");
  if (m == 0) return radial_attraction(h);
  const RadialGrid& gr = h.grid;
  std::vector<double> chi_lo(gr.n), chi_hi(gr.n);
  for (int i = 0; i < gr.n; ++i) {
    chi_lo[i] = std::pow(gr.r[i], m + 1) * h.v[i];
    chi_hi[i] = std::pow(gr.r[i], 1 - m) * h.v[i];
  }
  std::vector<double> A = cumulative_integral(gr, chi_lo, 0.0);
  std::vector<double> B = cumulative_integral_tail(gr, chi_hi, 0.0);
  RadialField dpsi(gr);
  for (int i = 0; i < gr.n; ++i) {
    const double r = gr.r[i];
    dpsi.v[i] = 0.5 * (std::pow(r, -m - 1) * A[i] - std::pow(r, m - 1) * B[i]);
  }
  return dpsi;
}

} // namespace kslab
