#pragma once
/// Cell-centered square grids and scalar fields.
///
/// The computational domain is [-L, L]^2 discretized into n x n cells of
/// width h = 2L/n; fields store cell-center samples row-major (y outer,
/// x inner). All quadrature on these grids is the midpoint rule h^2 * sum,
/// which is spectrally accurate for smooth fields that decay below roundoff
/// before the boundary.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kslab {

struct Grid2D {
  int n = 0;            // cells per side, power of two >= 16
  double half_width = 0; // L
  double h = 0;          // cell width 2L/n

  double x(int i) const { return -half_width + (i + 0.5) * h; }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  bool same(const Grid2D& o) const {
    return n == o.n && half_width == o.half_width;
  }
};

inline Grid2D make_grid(int n, double half_width) {
  if (n < 16 || (n & (n - 1)) != 0)
    throw std::invalid_argument("make_grid: n must be a power of two >= 16, got " +
                                std::to_string(n));
  if (!(half_width > 0) || !std::isfinite(half_width))
    throw std::invalid_argument("make_grid: half_width must be positive");
  Grid2D g;
  g.n = n;
  g.half_width = half_width;
  g.h = 2.0 * half_width / n;
  return g;
}

struct Field2D {
  Grid2D grid;
  std::vector<double> v;

  Field2D() = default;
  explicit Field2D(const Grid2D& g) : grid(g), v(g.size(), 0.0) {}

  double& at(int ix, int iy) { return v[static_cast<std::size_t>(iy) * grid.n + ix]; }
  double at(int ix, int iy) const { return v[static_cast<std::size_t>(iy) * grid.n + ix]; }
};

inline void require_same_grid(const Field2D& a, const Field2D& b, const char* who) {
  if (!a.grid.same(b.grid))
    throw std::invalid_argument(std::string(who) + ": fields live on different grids");
}

inline void require_nonempty(const Field2D& f, const char* who) {
  if (f.grid.n == 0 || f.v.empty())
    throw std::invalid_argument(std::string(who) + ": empty field");
}

/// Sampled Gaussian mass*exp(-|x-c|^2/(2 sigma^2))/(2 pi sigma^2).
/// The center must sit at least 6 sigma away from every edge so the tail is
/// negligible on the grid; the samples are not renormalized (midpoint
/// quadrature already reproduces the mass far below 1e-10 for resolved sigma).
inline Field2D gaussian_datum(const Grid2D& grid, double mass, double sigma,
                              double cx = 0.0, double cy = 0.0) {
  if (!(mass > 0) || !std::isfinite(mass))
    throw std::invalid_argument("gaussian_datum: mass must be positive");
  if (!(sigma > 0) || !std::isfinite(sigma))
    throw std::invalid_argument("gaussian_datum: sigma must be positive");
  const double margin = 6.0 * sigma;
  if (std::abs(cx) > grid.half_width - margin || std::abs(cy) > grid.half_width - margin)
    throw std::invalid_argument("gaussian_datum: center violates the 6-sigma margin");
  Field2D f(grid);
  const double amp = mass / (2.0 * M_PI * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int iy = 0; iy < grid.n; ++iy) {
    const double dy = grid.x(iy) - cy;
    for (int ix = 0; ix < grid.n; ++ix) {
      const double dx = grid.x(ix) - cx;
      f.at(ix, iy) = amp * std::exp(-(dx * dx + dy * dy) * inv2s2);
    }
  }
  return f;
}

inline double integrate(const Field2D& f) {
  require_nonempty(f, "integrate");
  double s = 0.0;
  for (double x : f.v) s += x;
  return s * f.grid.h * f.grid.h;
}

/// k-th absolute moment h^2 * sum f |x|^k (k >= 0).
inline double moment(const Field2D& f, double k) {
  require_nonempty(f, "moment");
  if (k < 0) throw std::invalid_argument("moment: order k must be >= 0");
  if (k == 0) return integrate(f);
  const int n = f.grid.n;
  double s = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double y = f.grid.x(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = f.grid.x(ix);
      const double r2 = x * x + y * y;
      s += f.at(ix, iy) * std::pow(r2, 0.5 * k);
    }
  }
  return s * f.grid.h * f.grid.h;
}

/// First moments (integral of x_i f), used by the moment-matching projectors.
inline std::pair<double, double> first_moments(const Field2D& f) {
  require_nonempty(f, "first_moments");
  const int n = f.grid.n;
  double sx = 0.0, sy = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double y = f.grid.x(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double val = f.at(ix, iy);
      sx += val * f.grid.x(ix);
      sy += val * y;
    }
  }
  const double h2 = f.grid.h * f.grid.h;
  return {sx * h2, sy * h2};
}

/// (h^2 sum |f <x>^k|^p)^{1/p} with <x> = (1+|x|^2)^{1/2}; k = 0 is the plain
/// Lebesgue norm and takes the fast path.
inline double lp_norm(const Field2D& f, double p, double k = 0.0) {
  require_nonempty(f, "lp_norm");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("lp_norm: p must be in [1, inf)");
  if (!(k >= 0.0) || !std::isfinite(k))
    throw std::invalid_argument("lp_norm: k must be in [0, inf)");
  double s = 0.0;
  if (k == 0.0) {
    if (p == 1.0) {
      for (double x : f.v) s += std::abs(x);
    } else if (p == 2.0) {
      for (double x : f.v) s += x * x;
    } else {
      for (double x : f.v) s += std::pow(std::abs(x), p);
    }
  } else {
    const int n = f.grid.n;
    for (int iy = 0; iy < n; ++iy) {
      const double y = f.grid.x(iy);
      for (int ix = 0; ix < n; ++ix) {
        const double x = f.grid.x(ix);
        const double w = std::pow(1.0 + x * x + y * y, 0.5 * k);
        s += std::pow(std::abs(f.at(ix, iy)) * w, p);
      }
    }
  }
  return std::pow(s * f.grid.h * f.grid.h, 1.0 / p);
}

inline double linf_norm(const Field2D& f) {
  require_nonempty(f, "linf_norm");
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

inline double min_value(const Field2D& f) {
  require_nonempty(f, "min_value");
  double m = f.v[0];
  for (double x : f.v) m = std::min(m, x);
  return m;
}

// ---------------------------------------------------------------------------
// Field arithmetic helpers (same-grid checked).

inline Field2D& axpy(Field2D& y, double a, const Field2D& x) {
  require_same_grid(y, x, "axpy");
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
  return y;
}

inline Field2D lin_comb(double a, const Field2D& x, double b, const Field2D& y) {
  require_same_grid(x, y, "lin_comb");
  Field2D r(x.grid);
  for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] = a * x.v[i] + b * y.v[i];
  return r;
}

inline double l1_distance(const Field2D& a, const Field2D& b) {
  require_same_grid(a, b, "l1_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += std::abs(a.v[i] - b.v[i]);
  return s * a.grid.h * a.grid.h;
}

inline double lp_distance(const Field2D& a, const Field2D& b, double p,
                          double k = 0.0) {
  Field2D d = lin_comb(1.0, a, -1.0, b);
  return lp_norm(d, p, k);
}

/// Catmull-Rom bicubic sampler for cell-centered data. Points closer than
/// 1.5h to the edge fall back to the clamped stencil; points outside the
/// domain return 0 (fields handled here decay below roundoff at the edge).
inline double sample_bicubic(const Field2D& f, double x, double y) {
  const Grid2D& g = f.grid;
  const double gx = (x + g.half_width) / g.h - 0.5;
  const double gy = (y + g.half_width) / g.h - 0.5;
  if (gx < -0.5 || gy < -0.5 || gx > g.n - 0.5 || gy > g.n - 0.5) return 0.0;
  int ix = static_cast<int>(std::floor(gx));
  int iy = static_cast<int>(std::floor(gy));
  double tx = gx - ix, ty = gy - iy;
  auto clampi = [&](int i) { return std::min(std::max(i, 0), g.n - 1); };
  auto cr = [](double pm1, double p0, double p1, double p2, double t) {
    return p0 + 0.5 * t * (p1 - pm1 +
           t * (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2 +
           t * (3.0 * (p0 - p1) + p2 - pm1)));
  };
  double col[4];
  for (int j = -1; j <= 2; ++j) {
    const int yy = clampi(iy + j);
    col[j + 1] = cr(f.at(clampi(ix - 1), yy), f.at(clampi(ix), yy),
                    f.at(clampi(ix + 1), yy), f.at(clampi(ix + 2), yy), tx);
  }
  return cr(col[0], col[1], col[2], col[3], ty);
}

} // namespace kslab
