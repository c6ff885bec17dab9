#pragma once
/// Self-similar profile G_M for subcritical mass via the implicit form
///   G = M e^{U - r^2/2} / Z,   U = -kappa * G,   Z = int e^{U - r^2/2},
/// solved by damped Picard iteration on a radial grid.
///
/// Every iterate is normalized to mass M by the discrete Z, so the mass
/// constraint holds by construction. Plain Picard can oscillate as M
/// approaches 8 pi; the damping factor omega (default 0.5) is exposed and
/// non-convergence is reported with the residual history, never silently.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kslab/potential.hpp"
#include "kslab/radial.hpp"

namespace kslab {

struct ProfileResult {
  double M = 0.0;
  RadialField G;
  RadialField U;          // -kappa * G
  RadialField attraction; // |K * G|(r) = m_G(r) / (2 pi r)
  double Z = 0.0;
  long picard_iters = 0;
  double residual_l1 = 0.0;        // |G_{k+1} - G_k|_L1 at the last iteration
  double stationary_residual = 0.0; // |div(grad G + x G + (K*G) G)|_L1, central differences
  double M2 = 0.0;
  bool converged = false;
};

namespace detail {

/// Central-difference radial derivative; one-sided 2nd order at the ends.
inline std::vector<double> radial_derivative(const RadialGrid& g,
                                             const std::vector<double>& v) {
  const int n = g.n;
  std::vector<double> d(n);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * g.dr);
  for (int i = 1; i < n - 1; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * g.dr);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * g.dr);
  return d;
}

} // namespace detail

/// L1 norm of the stationary-equation residual (1/r) d/dr (r Phi) with
/// Phi = G' + (r + a_G) G, evaluated by central differences.
inline double stationary_residual_l1(const RadialField& G, const RadialField& a) {
  const RadialGrid& gr = G.grid;
  const std::vector<double> dG = detail::radial_derivative(gr, G.v);
  std::vector<double> rphi(gr.n);
  for (int i = 0; i < gr.n; ++i)
    rphi[i] = gr.r[i] * (dG[i] + (gr.r[i] + a.v[i]) * G.v[i]);
  const std::vector<double> drphi = detail::radial_derivative(gr, rphi);
  double s = 0.0;
  for (int i = 0; i < gr.n; ++i) s += std::abs(drphi[i] / gr.r[i]) * gr.w[i];
  return s;
}

inline ProfileResult solve_profile(double M, const RadialGrid& rgrid,
                                   double omega = 0.5, double tol = 1e-10,
                                   long max_iters = 100000) {
  if (!(M > 0)) throw std::invalid_argument("solve_profile: mass must be positive");
  if (M >= 8.0 * M_PI)
    throw std::domain_error("solve_profile: no profile at or above mass 8*pi, got " +
                            std::to_string(M));
  if (!(omega > 0) || omega > 1)
    throw std::invalid_argument("solve_profile: omega must lie in (0, 1]");
  if (!(tol > 0)) throw std::invalid_argument("solve_profile: tol must be positive");

  RadialField G = radial_gaussian(rgrid, M, 1.0);
  RadialField U(rgrid), w(rgrid);
  double Z = 0.0;
  double res = std::numeric_limits<double>::infinity();
  long iters = 0;
  std::vector<double> history;

  while (iters < max_iters) {
    const RadialField pot = radial_log_potential(G);
    for (int i = 0; i < rgrid.n; ++i) {
      U.v[i] = -pot.v[i];
      w.v[i] = std::exp(U.v[i] - 0.5 * rgrid.r[i] * rgrid.r[i]);
    }
    Z = integrate(w);
    res = 0.0;
    for (int i = 0; i < rgrid.n; ++i) {
      const double next = (1.0 - omega) * G.v[i] + omega * M * w.v[i] / Z;
      res += std::abs(next - G.v[i]) * rgrid.w[i];
      G.v[i] = next;
    }
    ++iters;
    history.push_back(res);
    if (res < tol) break;
  }

  if (res >= tol) {
    std::string msg = "solve_profile: no convergence after " +
                      std::to_string(iters) + " iterations; residuals:";
    for (std::size_t k = 0; k < history.size();
         k += std::max<std::size_t>(1, history.size() / 8))
      msg += " " + std::to_string(history[k]);
    msg += " (last " + std::to_string(res) + ")";
    throw std::runtime_error(msg);
  }

  ProfileResult out;
  out.M = M;
  out.G = G;
  {
    const RadialField pot = radial_log_potential(G);
    out.U = RadialField(rgrid);
    for (int i = 0; i < rgrid.n; ++i) {
      out.U.v[i] = -pot.v[i];
      w.v[i] = std::exp(out.U.v[i] - 0.5 * rgrid.r[i] * rgrid.r[i]);
    }
    out.Z = integrate(w);
  }
  out.attraction = radial_attraction(G);
  out.picard_iters = iters;
  out.residual_l1 = res;
  out.stationary_residual = stationary_residual_l1(G, out.attraction);
  out.M2 = moment(G, 2.0);
  out.converged = true;
  for (double x : G.v)
    if (!(x > 0))
      throw std::runtime_error("solve_profile: converged iterate is not positive");
  return out;
}

/// Exact radial derivative of the converged profile, G' = -G (r + a_G),
/// from differentiating log G = log(M/Z) + U - r^2/2 with U' = -a_G.
inline RadialField profile_derivative(const ProfileResult& p) {
  if (!p.converged) throw std::invalid_argument("profile_derivative: unconverged profile");
  RadialField d(p.G.grid);
  for (int i = 0; i < p.G.grid.n; ++i)
    d.v[i] = -p.G.v[i] * (p.G.grid.r[i] + p.attraction.v[i]);
  return d;
}

struct EnvelopeReport {
  double eps = 0.0;
  double c_lower = 0.0; // G >= e^{-(1+eps) r^2/2 + c_lower}
  double c_upper = 0.0; // G <= e^{-(1-eps) r^2/2 + c_upper}
  double r_at_lower = 0.0, r_at_upper = 0.0;
  bool pass = false;
};

/// Gaussian-envelope verification: fit the extreme constants of
/// log G + (1 +- eps) r^2/2 and confirm both are finite, so the two-sided
/// envelope holds node-wise with the fitted constants.
inline EnvelopeReport envelope_check(const ProfileResult& p, double eps) {
  if (!p.converged) throw std::invalid_argument("envelope_check: unconverged profile");
  if (!(eps > 0) || !(eps < 1))
    throw std::invalid_argument("envelope_check: eps must lie in (0, 1)");
  const RadialGrid& gr = p.G.grid;
  EnvelopeReport rep;
  rep.eps = eps;
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < gr.n; ++i) {
    const double lg = std::log(p.G.v[i]);
    const double r2h = 0.5 * gr.r[i] * gr.r[i];
    const double lo = lg + (1.0 + eps) * r2h;
    const double hi = lg + (1.0 - eps) * r2h;
    if (lo < rep.c_lower) {
      rep.c_lower = lo;
      rep.r_at_lower = gr.r[i];
    }
    if (hi > rep.c_upper) {
      rep.c_upper = hi;
      rep.r_at_upper = gr.r[i];
    }
  }
  rep.pass = std::isfinite(rep.c_lower) && std::isfinite(rep.c_upper);
  return rep;
}

/// h_{0,0} = dG_M/dM by central finite difference at tight tolerance.
inline RadialField d_profile_dM(double M, double dM, const RadialGrid& rgrid,
                                double omega = 0.5, double tol = 1e-12,
                                long max_iters = 200000) {
  if (!(dM > 0)) throw std::invalid_argument("d_profile_dM: dM must be positive");
  if (!(M - dM > 0) || !(M + dM < 8.0 * M_PI))
    throw std::invalid_argument("d_profile_dM: M +- dM must stay inside (0, 8*pi)");
  const ProfileResult hi = solve_profile(M + dM, rgrid, omega, tol, max_iters);
  const ProfileResult lo = solve_profile(M - dM, rgrid, omega, tol, max_iters);
  RadialField d(rgrid);
  for (int i = 0; i < rgrid.n; ++i)
    d.v[i] = (hi.G.v[i] - lo.G.v[i]) / (2.0 * dM);
  return d;
}

} // namespace kslab
