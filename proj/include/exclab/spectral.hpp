#pragma once

// Spectral solutions of d_t rho = D rho'' on (0,1) with Dirichlet, Robin and
// Neumann boundary conditions.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/profiles.hpp"
#include "exclab/stationary.hpp"

namespace exclab {

struct SpectralSolution {
  std::vector<double> lambda;  // eigenvalues of -d^2/dq^2
  std::vector<double> coeff;   // C_n
  std::vector<double> values;  // rho_t on the grid
  int modes = 0;
  double tail_bound = 0.0;     // sup-norm bound on the dropped modes (L2 bound when sup_control is false)
  bool sup_control = true;
};

namespace detail {

/// Smallest M with B sum_{n>M} exp(-lambda_n D t) <= tol, where lambda_n >= ((n-1) pi)^2.
inline int modes_for_tail(double bound, double dt, double tol, int floor_modes, int cap) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int m = floor_modes; m < cap; ++m) {
    // Robin roots satisfy s_n >= (n-1) pi, so sum_{n>m+1} e^{-s_n^2 D t} <= e^{-a m^2} / (1 - e^{-a (2m+1)})
    const double a = pi2 * dt;
    const double head = std::exp(-a * static_cast<double>(m) * m);
    const double ratio = 1.0 - std::exp(-a * (2.0 * m + 1.0));
    if (ratio > 0.0 && bound * head / ratio <= tol) return m;
  }
  return cap;
}

}  // namespace detail

/// rho_t = rho_dir + sum_n C_n e^{-(n pi)^2 D t} sin(n pi q), C_n = 2 int (g - rho_dir) sin(n pi q).
/// D is the diffusion coefficient (1/2 for the nearest-neighbour model).
inline SpectralSolution heat_dirichlet_spectral(const Profile& g, double alpha, double beta, double t,
                                                const std::vector<double>& grid, double tol = 1e-10,
                                                double diffusion = 0.5, int max_modes = 4000) {
  if (!(t >= 0.0)) throw InvalidArgument("heat_dirichlet_spectral: t must be >= 0");
  const double pi = std::numbers::pi;
  SpectralSolution s;
  const QuadratureRule rule = composite_gauss(g.breaks, std::max(64, 2 * max_modes / 10));
  std::vector<double> resid(rule.x.size());
  double bound = 0.0;
  for (std::size_t j = 0; j < rule.x.size(); ++j) {
    resid[j] = g(rule.x[j]) - rho_dir(rule.x[j], alpha, beta);
    bound += rule.w[j] * std::abs(resid[j]);
  }
  bound *= 2.0;  // |C_n| <= 2 int |g - rho_dir|
  if (t > 0.0) {
    s.modes = detail::modes_for_tail(bound, diffusion * t, tol, 1, max_modes) + 1;
  } else {
    s.modes = max_modes;
    s.sup_control = false;
  }
  for (int n = 1; n <= s.modes; ++n) {
    double c = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) c += rule.w[j] * resid[j] * std::sin(n * pi * rule.x[j]);
    s.coeff.push_back(2.0 * c);
    s.lambda.push_back(n * n * pi * pi);
  }
  if (s.sup_control) {
    const double a = pi * pi * diffusion * t;
    const double m = s.modes;
    s.tail_bound = bound * std::exp(-a * (m + 1) * (m + 1)) / (1.0 - std::exp(-a * (2 * m + 3)));
  } else {
    // L2 tail: sum_{n>M} C_n^2 / 2 from Parseval
    double l2 = 0.0, kept = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) l2 += rule.w[j] * resid[j] * resid[j];
    for (double c : s.coeff) kept += 0.5 * c * c;
    s.tail_bound = std::sqrt(std::max(0.0, l2 - kept));
  }
  for (double q : grid) {
    double v = rho_dir(q, alpha, beta);
    for (int n = 1; n <= s.modes; ++n)
      v += s.coeff[static_cast<std::size_t>(n - 1)] * std::exp(-s.lambda[static_cast<std::size_t>(n - 1)] * diffusion * t) *
           std::sin(n * pi * q);
    s.values.push_back(v);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Robin problem: X'' = -s^2 X, X'(0) = k X(0), X'(1) = -k X(1)
// ---------------------------------------------------------------------------

/// Eigenfunction X = (k sin(sq) + s cos(sq)) / norm, which satisfies X'(0) = k X(0).
/// The right condition gives f(s) = 2 s k cos s - (s^2 - k^2) sin s = 0, i.e.
/// tan s = 2 s k / (s^2 - k^2); with k = 1 this is tan s = 2s/(s^2 - 1).
inline double robin_characteristic(double s, double k) {
  return 2.0 * s * k * std::cos(s) - (s * s - k * k) * std::sin(s);
}

struct RobinRoot {
  int n;
  double sqrt_lambda;
  double lambda;
  double residual;  // |f(s)| / (s^2 + k^2)
};

/// Roots s_n in ((n-1) pi, n pi), n = 1..n_max, by bisection. k = 0 returns n pi.
inline std::vector<RobinRoot> robin_eigenvalues(double k, int n_max, double tol = 1e-14) {
  if (!(k >= 0.0)) throw InvalidArgument("robin_eigenvalues: kappa must be >= 0");
  if (n_max < 1) throw InvalidArgument("robin_eigenvalues: n must be >= 1");
  const double pi = std::numbers::pi;
  std::vector<RobinRoot> out;
  for (int n = 1; n <= n_max; ++n) {
    if (k == 0.0) {
      const double s = n * pi;
      out.push_back({n, s, s * s, 0.0});
      continue;
    }
    double lo = (n - 1) * pi, hi = n * pi;
    // f > 0 just right of 0 for n = 1; the signs alternate at multiples of pi
    double flo = n == 1 ? 1.0 : robin_characteristic(lo, k);
    const double fhi = robin_characteristic(hi, k);
    if (n == 1) lo = 0.0;
    if (flo * fhi > 0.0)
      throw NumericalFailure("robin_eigenvalues: no sign change in bracket n=" + std::to_string(n));
    for (int it = 0; it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = robin_characteristic(mid, k);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double s = 0.5 * (lo + hi);
    out.push_back({n, s, s * s, std::abs(robin_characteristic(s, k)) / (s * s + k * k)});
  }
  return out;
}

/// Normalized Robin eigenfunction for root s (k >= 0; k = 0 gives sqrt(2) cos).
inline double robin_mode(double q, double s, double k) {
  // ||k sin + s cos||^2 on (0,1)
  const double s2 = std::sin(2.0 * s), c2 = std::cos(2.0 * s);
  const double norm2 = k * k * (0.5 - s2 / (4.0 * s)) + s * s * (0.5 + s2 / (4.0 * s)) + k * s * (1.0 - c2) / (2.0 * s);
  return (k * std::sin(s * q) + s * std::cos(s * q)) / std::sqrt(norm2);
}

/// rho_t for d_t rho = D rho'', rho'(0) = k (rho(0) - alpha), rho'(1) = k (beta - rho(1)).
/// For k = 0 (Neumann) the constant mode carries the mean of g.
inline SpectralSolution robin_spectral_solution(const Profile& g, double k, double alpha, double beta, double t,
                                                const std::vector<double>& grid, double tol = 1e-10,
                                                double diffusion = 0.5, int max_modes = 4000) {
  if (!(t >= 0.0)) throw InvalidArgument("robin_spectral_solution: t must be >= 0");
  if (!(diffusion > 0.0)) throw InvalidArgument("robin_spectral_solution: diffusion must be positive");
  SpectralSolution s;
  const QuadratureRule rule = composite_gauss(g.breaks, std::max(64, 2 * max_modes / 10));
  double level = 0.0;
  if (k == 0.0)
    for (std::size_t j = 0; j < rule.x.size(); ++j) level += rule.w[j] * g(rule.x[j]);
  auto base = [&](double q) { return k == 0.0 ? level : rho_rob(q, k, alpha, beta); };
  std::vector<double> resid(rule.x.size());
  double bound = 0.0;
  for (std::size_t j = 0; j < rule.x.size(); ++j) {
    resid[j] = g(rule.x[j]) - base(rule.x[j]);
    bound += rule.w[j] * std::abs(resid[j]);
  }
  // |C_n X_n(q)| <= ||g - base||_1 sup|X_n|^2 with sup|X_n|^2 <= (k^2 + s^2) / norm2.
  // norm2 >= (k^2 + s^2)(1/2 - 1/(4s)), and every dropped mode has s >= pi.
  bound /= 0.5 - 0.25 / std::numbers::pi;
  if (t > 0.0) {
    s.modes = detail::modes_for_tail(bound, diffusion * t, tol, 1, max_modes) + 1;
  } else {
    s.modes = max_modes;
    s.sup_control = false;
  }
  const auto roots = robin_eigenvalues(k, s.modes);
  for (const auto& r : roots) {
    double c = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) c += rule.w[j] * resid[j] * robin_mode(rule.x[j], r.sqrt_lambda, k);
    s.coeff.push_back(c);
    s.lambda.push_back(r.lambda);
  }
  if (s.sup_control) {
    const double a = std::numbers::pi * std::numbers::pi * diffusion * t;
    const double m = s.modes;
    s.tail_bound = bound * std::exp(-a * m * m) / (1.0 - std::exp(-a * (2 * m + 1)));
  } else {
    double l2 = 0.0, kept = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) l2 += rule.w[j] * resid[j] * resid[j];
    for (double c : s.coeff) kept += c * c;
    s.tail_bound = std::sqrt(std::max(0.0, l2 - kept));
  }
  for (double q : grid) {
    double v = base(q);
    for (std::size_t n = 0; n < roots.size(); ++n)
      v += s.coeff[n] * std::exp(-s.lambda[n] * diffusion * t) * robin_mode(q, roots[n].sqrt_lambda, k);
    s.values.push_back(v);
  }
  return s;
}

}  // namespace exclab
