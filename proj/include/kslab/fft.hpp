#pragma once
/// Thin FFTW3 wrapper: cached per-size plans, spectral derivatives, exact
/// diffusion factors.
///
/// Plans use FFTW_ESTIMATE so repeated runs are bit-identical (FFTW_MEASURE
/// picks timing-dependent algorithms). Engines are cached thread_local with
/// private buffers, so concurrent scenario workers never share FFTW state;
/// plan creation itself is serialized (the FFTW planner is not thread-safe).

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "kslab/grid.hpp"

namespace kslab::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Engine {
 public:
  explicit Engine(int n) : n_(n) {
    rbuf_ = fftw_alloc_real(static_cast<std::size_t>(n) * n);
    cbuf_ = fftw_alloc_complex(static_cast<std::size_t>(n) * (n / 2 + 1));
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n, n, rbuf_, cbuf_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(n, n, cbuf_, rbuf_, FFTW_ESTIMATE);
  }
  ~Engine() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(rbuf_);
    fftw_free(cbuf_);
  }
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  int n() const { return n_; }
  std::size_t nreal() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t ncplx() const { return static_cast<std::size_t>(n_) * (n_ / 2 + 1); }

  void forward(const double* in, std::complex<double>* out) {
    std::copy(in, in + nreal(), rbuf_);
    fftw_execute(fwd_);
    auto* c = reinterpret_cast<std::complex<double>*>(cbuf_);
    std::copy(c, c + ncplx(), out);
  }

  /// Inverse transform normalized by 1/n^2 (FFTW is unnormalized).
  void inverse(const std::complex<double>* in, double* out) {
    auto* c = reinterpret_cast<std::complex<double>*>(cbuf_);
    std::copy(in, in + ncplx(), c);
    fftw_execute(bwd_);
    const double scale = 1.0 / static_cast<double>(nreal());
    for (std::size_t i = 0; i < nreal(); ++i) out[i] = rbuf_[i] * scale;
  }

  static Engine& get(int n) {
    thread_local std::map<int, std::unique_ptr<Engine>> cache;
    auto it = cache.find(n);
    if (it == cache.end())
      it = cache.emplace(n, std::make_unique<Engine>(n)).first;
    return *it->second;
  }

 private:
  int n_;
  double* rbuf_;
  fftw_complex* cbuf_;
  fftw_plan fwd_, bwd_;
};

using Spectrum = std::vector<std::complex<double>>;

inline Spectrum forward(const Field2D& f) {
  Engine& e = Engine::get(f.grid.n);
  Spectrum s(e.ncplx());
  e.forward(f.v.data(), s.data());
  return s;
}

inline Field2D inverse(const Spectrum& s, const Grid2D& g) {
  Engine& e = Engine::get(g.n);
  Field2D f(g);
  e.inverse(s.data(), f.v.data());
  return f;
}

/// Wavenumber of row/column index k on a grid of period 2L: xi = (pi/L) * k',
/// with k' = k for k <= n/2 and k - n beyond.
inline double wavenumber(int k, int n, double half_width) {
  const int kk = (k <= n / 2) ? k : k - n;
  return M_PI * kk / half_width;
}

/// Spectral gradient. The Nyquist mode is zeroed in each differentiated
/// direction (its derivative has no consistent sign on a real grid).
inline std::pair<Field2D, Field2D> gradient(const Field2D& f) {
  const int n = f.grid.n;
  const double L = f.grid.half_width;
  Spectrum s = forward(f);
  Spectrum sx(s.size()), sy(s.size());
  const int ncx = n / 2 + 1;
  for (int ky = 0; ky < n; ++ky) {
    const double wy = (ky == n / 2) ? 0.0 : wavenumber(ky, n, L);
    for (int kx = 0; kx < ncx; ++kx) {
      const double wx = (kx == n / 2) ? 0.0 : wavenumber(kx, n, L);
      const std::complex<double> v = s[static_cast<std::size_t>(ky) * ncx + kx];
      const std::complex<double> iv(-v.imag(), v.real());
      sx[static_cast<std::size_t>(ky) * ncx + kx] = iv * wx;
      sy[static_cast<std::size_t>(ky) * ncx + kx] = iv * wy;
    }
  }
  return {inverse(sx, f.grid), inverse(sy, f.grid)};
}

/// Spectral divergence d_x fx + d_y fy.
inline Field2D divergence(const Field2D& fx, const Field2D& fy) {
  require_same_grid(fx, fy, "divergence");
  const int n = fx.grid.n;
  const double L = fx.grid.half_width;
  Spectrum ax = forward(fx);
  Spectrum ay = forward(fy);
  const int ncx = n / 2 + 1;
  for (int ky = 0; ky < n; ++ky) {
    const double wy = (ky == n / 2) ? 0.0 : wavenumber(ky, n, L);
    for (int kx = 0; kx < ncx; ++kx) {
      const double wx = (kx == n / 2) ? 0.0 : wavenumber(kx, n, L);
      const std::size_t id = static_cast<std::size_t>(ky) * ncx + kx;
      const std::complex<double> vx = ax[id], vy = ay[id];
      ax[id] = std::complex<double>(-(vx.imag() * wx + vy.imag() * wy),
                                    vx.real() * wx + vy.real() * wy);
    }
  }
  return inverse(ax, fx.grid);
}

/// Heat semigroup applied exactly in Fourier space: multiply by e^{-|xi|^2 dt}.
inline void diffuse_in_place(Spectrum& s, const Grid2D& g, double dt) {
  const int n = g.n;
  const int ncx = n / 2 + 1;
  for (int ky = 0; ky < n; ++ky) {
    const double wy = wavenumber(ky, n, g.half_width);
    for (int kx = 0; kx < ncx; ++kx) {
      const double wx = wavenumber(kx, n, g.half_width);
      s[static_cast<std::size_t>(ky) * ncx + kx] *= std::exp(-(wx * wx + wy * wy) * dt);
    }
  }
}

inline Field2D diffuse(const Field2D& f, double dt) {
  Spectrum s = forward(f);
  diffuse_in_place(s, f.grid, dt);
  return inverse(s, f.grid);
}

} // namespace kslab::fft
