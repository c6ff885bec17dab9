#pragma once
/// Dense discretization of the linearized operator around G_M per angular
/// mode, its spectrum, and the spectral projections.
///
/// Acting on h(x) = h_m(r) cos(m theta), the operator
///   L h = div(grad h + x h + (K*G) h + (K*h) G)
/// reduces to
///   L_m h = (1/r) (r G (h/G)')' - (m^2/r^2) h + G h + G' psi_m'
/// where the first group collects the local transport terms via the exact
/// profile relation G'/G = -(r + a_G), and psi_m is the mode-m component of
/// kappa * h. The local part is discretized in flux form with geometric-mean
/// face values of G: for Gaussian-decaying G the geometric mean matches the
/// midpoint value to O(dr^2) (log-linear interpolation is exact on
/// exponentials) and every matrix entry stays O(1/dr^2) because only ratios
/// of adjacent G values enter.
///
/// Boundary rules: at r = 0, even extension for m = 0 (ghost value
/// (4 h_1 - h_2)/3) and h(0) = 0 for m >= 1; at r_max, homogeneous Dirichlet
/// with log-linear extension of G.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <lapacke.h>

#include "kslab/potential.hpp"
#include "kslab/profile.hpp"
#include "kslab/radial.hpp"

namespace kslab {

struct LinearizedOperator {
  int mode = 0;
  double M = 0.0;
  RadialGrid grid;
  std::vector<double> a; // dense n x n, column-major: a[i + j*n] = A_ij
  RadialField G, Gp;     // profile and its exact derivative

  std::vector<double> apply(const std::vector<double>& x) const {
    const int n = grid.n;
    std::vector<double> y(n, 0.0);
    for (int j = 0; j < n; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const double* col = a.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) y[i] += col[i] * xj;
    }
    return y;
  }
};

namespace detail {

/// Dense matrix of the 4th-order cumulative integral: (C phi)_i ~
/// int_0^{r_i} phi, assuming phi(0) = 0 (true for every integrand used
/// here, which all carry at least one factor of s).
inline std::vector<double> cumulative_matrix(const RadialGrid& g) {
  const int n = g.n;
  const double c = g.dr / 24.0;
  std::vector<double> row(n, 0.0), C(static_cast<std::size_t>(n) * n, 0.0);
  auto flush = [&](int i) {
    for (int j = 0; j < n; ++j) C[static_cast<std::size_t>(j) * n + i] = row[j];
  };
  row[0] += 19.0 * c;
  row[1] += -5.0 * c;
  row[2] += 1.0 * c;
  flush(0);
  row[0] += 13.0 * c;
  row[1] += 13.0 * c;
  row[2] += -1.0 * c;
  flush(1);
  for (int i = 2; i < n - 1; ++i) {
    row[i - 2] += -1.0 * c;
    row[i - 1] += 13.0 * c;
    row[i] += 13.0 * c;
    row[i + 1] += -1.0 * c;
    flush(i);
  }
  row[n - 4] += 1.0 * c;
  row[n - 3] += -5.0 * c;
  row[n - 2] += 19.0 * c;
  row[n - 1] += 9.0 * c;
  flush(n - 1);
  return C;
}

} // namespace detail

inline LinearizedOperator assemble_linearized(const ProfileResult& p, int m) {
  if (!p.converged)
    throw std::invalid_argument("assemble_linearized: unconverged profile");
  if (m < 0) throw std::invalid_argument("assemble_linearized: mode must be >= 0");
  const RadialGrid& gr = p.G.grid;
  const int n = gr.n;
  const double dr = gr.dr;

  LinearizedOperator op;
  op.mode = m;
  op.M = p.M;
  op.grid = gr;
  op.G = p.G;
  op.Gp = profile_derivative(p);
  op.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  auto A = [&](int i, int j) -> double& {
    return op.a[static_cast<std::size_t>(j) * n + i];
  };
  const std::vector<double>& G = p.G.v;

  // Local flux-form part: (1/r)(r G (h/G)')' - (m^2/r^2) h.
  for (int i = 0; i < n; ++i) {
    const double ri = gr.r[i];
    const double inv = 1.0 / (ri * dr * dr);
    const double rf_out = ri + 0.5 * dr;
    const double rf_in = ri - 0.5 * dr;
    if (i + 1 < n) {
      A(i, i + 1) += rf_out * inv * std::sqrt(G[i] / G[i + 1]);
      A(i, i) -= rf_out * inv * std::sqrt(G[i + 1] / G[i]);
    } else {
      // Dirichlet ghost beyond r_max; G extended log-linearly
      A(i, i) -= rf_out * inv * std::sqrt(G[n - 1] / G[n - 2]);
    }
    if (i >= 1) {
      A(i, i - 1) += rf_in * inv * std::sqrt(G[i] / G[i - 1]);
      A(i, i) -= rf_in * inv * std::sqrt(G[i - 1] / G[i]);
    } else {
      // inner face at dr/2 against the r = 0 ghost node
      const double G0 = std::max((4.0 * G[0] - G[1]) / 3.0, 0.5 * G[0]);
      const double face = rf_in * inv * std::sqrt(G0 * G[0]);
      A(0, 0) -= face / G[0];
      if (m == 0) {
        // ghost h(0) = (4 h_1 - h_2)/3 (even extension)
        A(0, 0) += face / G0 * (4.0 / 3.0);
        A(0, 1) += face / G0 * (-1.0 / 3.0);
      }
      // m >= 1: ghost h(0) = 0, nothing to add
    }
    A(i, i) -= static_cast<double>(m) * m / (ri * ri);
  }

  // Nonlocal part: G h + G' psi_m'.
  const std::vector<double> C = detail::cumulative_matrix(gr);
  for (int i = 0; i < n; ++i) A(i, i) += G[i];
  if (m == 0) {
    // psi_0'(r_i) = (1/r_i) int_0^{r_i} s h(s) ds
    for (int j = 0; j < n; ++j) {
      const double sj = gr.r[j];
      for (int i = 0; i < n; ++i) {
        const double cij = C[static_cast<std::size_t>(j) * n + i];
        if (cij != 0.0) A(i, j) += op.Gp.v[i] * cij * sj / gr.r[i];
      }
    }
  } else {
    // psi_m'(r) = ((s/r)^{m+1} weights on [0,r]) - ((r/s)^{m-1} weights on [r, r_max]),
    // each halved; tail matrix T_ij = C_{n-1,j} - C_ij
    for (int j = 0; j < n; ++j) {
      const double sj = gr.r[j];
      const double clast = C[static_cast<std::size_t>(j) * n + (n - 1)];
      for (int i = 0; i < n; ++i) {
        const double ri = gr.r[i];
        const double cij = C[static_cast<std::size_t>(j) * n + i];
        const double tij = clast - cij;
        double w = 0.0;
        if (cij != 0.0) w += cij * std::pow(sj / ri, m + 1);
        if (tij != 0.0) w -= tij * std::pow(ri / sj, m - 1);
        if (w != 0.0) A(i, j) += op.Gp.v[i] * 0.5 * w;
      }
    }
  }
  return op;
}

// ---------------------------------------------------------------------------
// Dense spectrum.

struct EigenPair {
  double re = 0.0, im = 0.0;
  RadialField vec;       // real part of the eigenvector, unit weighted norm
  double residual = 0.0; // |A v - lambda v|_w / |v|_w, complex-aware
  bool real = false;     // |im| <= 1e-6
};

struct SpectrumResult {
  int mode = 0;
  double M = 0.0;
  std::vector<EigenPair> pairs; // sorted by re, descending
};

inline SpectrumResult eigen_spectrum(const LinearizedOperator& op, int count) {
  const int n = op.grid.n;
  if (count < 1) throw std::invalid_argument("eigen_spectrum: count must be >= 1");
  count = std::min(count, n);

  std::vector<double> a = op.a; // dgeev destroys its input
  std::vector<double> wr(n), wi(n), vr(static_cast<std::size_t>(n) * n);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, wr.data(), wi.data(),
                    nullptr, 1, vr.data(), n);
  if (info != 0)
    throw std::runtime_error("eigen_spectrum: dgeev failed with info " +
                             std::to_string(info));

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return wr[i] > wr[j]; });

  SpectrumResult out;
  out.mode = op.mode;
  out.M = op.M;
  const std::vector<double>& w = op.grid.w;
  for (int k = 0; k < count; ++k) {
    const int j = idx[k];
    EigenPair ep;
    ep.re = wr[j];
    ep.im = wi[j];
    ep.real = std::abs(wi[j]) <= 1e-6;

    // dgeev packs a conjugate pair into columns (j, j+1) = (Re, Im), where j
    // is the first of the pair; locate the companion column.
    std::vector<double> vre(n), vim(n, 0.0);
    if (wi[j] == 0.0) {
      for (int i = 0; i < n; ++i) vre[i] = vr[static_cast<std::size_t>(j) * n + i];
    } else {
      const bool first = wi[j] > 0.0;
      const int jr = first ? j : j - 1;
      const double sgn = first ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) {
        vre[i] = vr[static_cast<std::size_t>(jr) * n + i];
        vim[i] = sgn * vr[static_cast<std::size_t>(jr + 1) * n + i];
      }
    }

    const std::vector<double> Are = op.apply(vre);
    const std::vector<double> Aim = op.apply(vim);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      const double rre = Are[i] - (ep.re * vre[i] - ep.im * vim[i]);
      const double rim = Aim[i] - (ep.re * vim[i] + ep.im * vre[i]);
      num += (rre * rre + rim * rim) * w[i];
      den += (vre[i] * vre[i] + vim[i] * vim[i]) * w[i];
    }
    ep.residual = std::sqrt(num / den);

    ep.vec = RadialField(op.grid);
    const double scale = 1.0 / std::sqrt(den);
    for (int i = 0; i < n; ++i) ep.vec.v[i] = vre[i] * scale;
    out.pairs.push_back(std::move(ep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral projections Pi_0 (onto h_{0,0}) and Pi_1 (onto span of
// dG/dx_1, dG/dx_2).

struct ProjectionBasis {
  RadialField h00_radial; // dG/dM, normalized to unit radial mass
  Field2D h00;            // same, transferred to unit 2D discrete mass
  Field2D h1x, h1y;       // G'(r) x_i / r
  double axx = 0, axy = 0, ayx = 0, ayy = 0; // measured first moments of h1x, h1y
};

inline ProjectionBasis make_projection_basis(const ProfileResult& p, const Grid2D& grid,
                                             double dM = 0.0) {
  if (!p.converged)
    throw std::invalid_argument("make_projection_basis: unconverged profile");
  if (dM <= 0.0) dM = 0.02 * std::min(p.M, 8.0 * M_PI - p.M);
  ProjectionBasis b;
  b.h00_radial = d_profile_dM(p.M, dM, p.G.grid);
  {
    const double mr = integrate(b.h00_radial);
    for (double& x : b.h00_radial.v) x /= mr;
  }
  b.h00 = radial_to_2d(b.h00_radial, grid);
  {
    const double m2d = integrate(b.h00);
    for (double& x : b.h00.v) x /= m2d;
  }
  const RadialField gp = profile_derivative(p);
  b.h1x = Field2D(grid);
  b.h1y = Field2D(grid);
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.x(iy);
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.x(ix);
      const double r = std::hypot(x, y);
      const double val = (r <= p.G.grid.r_max) ? detail::interp_radial(gp, r) : 0.0;
      b.h1x.at(ix, iy) = val * x / r;
      b.h1y.at(ix, iy) = val * y / r;
    }
  }
  auto fm = [&](const Field2D& f) { return first_moments(f); };
  auto [mxx, mxy] = fm(b.h1x);
  auto [myx, myy] = fm(b.h1y);
  b.axx = mxx;
  b.axy = myx; // int h1y * x
  b.ayx = mxy; // int h1x * y
  b.ayy = myy;
  return b;
}

/// Pi_0 h = mass(h) * h00.
inline Field2D project_pi0(const Field2D& h, const ProjectionBasis& b) {
  require_same_grid(h, b.h00, "project_pi0");
  const double m = integrate(h);
  Field2D out(h.grid);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = m * b.h00.v[i];
  return out;
}

inline RadialField project_pi0(const RadialField& h, const ProjectionBasis& b) {
  require_same_grid(h, b.h00_radial, "project_pi0");
  const double m = integrate(h);
  RadialField out(h.grid);
  for (int i = 0; i < h.grid.n; ++i) out.v[i] = m * b.h00_radial.v[i];
  return out;
}

/// Pi_1 h = c_x h1x + c_y h1y, with coefficients chosen so the projection
/// reproduces the measured first moments of h (then idempotence is exact up
/// to the 2x2 solve).
inline Field2D project_pi1(const Field2D& h, const ProjectionBasis& b) {
  require_same_grid(h, b.h1x, "project_pi1");
  auto [mx, my] = first_moments(h);
  const double det = b.axx * b.ayy - b.axy * b.ayx;
  if (std::abs(det) < 1e-12)
    throw std::runtime_error("project_pi1: degenerate moment matrix");
  const double cx = (mx * b.ayy - b.axy * my) / det;
  const double cy = (b.axx * my - mx * b.ayx) / det;
  Field2D out(h.grid);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = cx * b.h1x.v[i] + cy * b.h1y.v[i];
  return out;
}

/// Radial fields carry no angular mode-1 content: Pi_1 vanishes on them.
inline RadialField project_pi1(const RadialField& h, const ProjectionBasis&) {
  return RadialField(h.grid);
}

} // namespace kslab
