#pragma once

// Nonlocal operators on (0,1): the regional fractional Laplacian
//   (L G)(q) = c PV int_0^1 (G(v) - G(q)) |v - q|^-(1+g) dv,
// the whole-line fractional Laplacian, and their discrete counterparts.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/model.hpp"

namespace exclab {

using RealFn = std::function<double(double)>;

struct PvControl {
  double delta = 0.0;   // symmetric window; 0 -> min(q, 1-q) (capped at 1/4)
  double core = 0.0;    // Taylor core radius; 0 -> 2e-3
  double tol = 1e-10;   // relative tolerance of the Gauss-Kronrod pieces; 1e-12 is out of reach for C-infinity bumps
  int max_depth = 15;
};

struct PvValue {
  double value = 0.0;
  double richardson = 0.0;  // |value(delta) - value(delta/2)|
  double quad_error = 0.0;
};

namespace detail {

inline double gk(const RealFn& f, double a, double b, double tol, int depth, double* err) {
  if (!(b > a)) return 0.0;
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, static_cast<unsigned>(depth), tol, &e);
  if (err) *err += e * (b - a);
  return v;
}

/// int_0^r D(h) h^-(1+g) dh for the symmetric second difference
/// D(h) = G(q+h) + G(q-h) - 2G(q). D(h)/h^2 = a2 + a4 h^2 + a6 h^4 + ... is
/// fitted through three radii and the series is integrated term by term.
inline double taylor_core(const RealFn& G, double q, double r, double gamma) {
  const double g0 = G(q);
  double u[3], f[3];
  for (int i = 0; i < 3; ++i) {
    const double h = r / static_cast<double>(1 << i);
    u[i] = h * h;
    f[i] = (G(q + h) + G(q - h) - 2.0 * g0) / u[i];
  }
  // Newton divided differences in u = h^2
  const double d01 = (f[0] - f[1]) / (u[0] - u[1]);
  const double d12 = (f[1] - f[2]) / (u[1] - u[2]);
  const double d012 = (d01 - d12) / (u[0] - u[2]);
  // f(u) = f2 + d12 (u - u2) + d012 (u - u2)(u - u1) -> monomials
  const double a6 = d012;
  const double a4 = d12 - d012 * (u[1] + u[2]);
  const double a2 = f[2] - d12 * u[2] + d012 * u[1] * u[2];
  auto mono = [&](double p) { return std::pow(r, p) / p; };  // int_0^r h^{p-1}
  return a2 * mono(2.0 - gamma) + a4 * mono(4.0 - gamma) + a6 * mono(6.0 - gamma);
}

// Large enough that D(h) keeps ~8 digits, small enough that the h^6 term is negligible.
inline double default_core(double scale) { return 2e-3 * scale; }

}  // namespace detail

/// (L G)(q) for G smooth near q; c_gamma taken from the kernel constant.
inline PvValue regional_frac_laplacian_apply(const RealFn& G, double q, double gamma, double c_gamma,
                                             PvControl ctl = {}) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw InvalidArgument("regional_frac_laplacian: gamma must lie in (0,2)");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("regional_frac_laplacian: q outside (0,1)");
  const double edge = std::min(q, 1.0 - q);
  const double delta = ctl.delta > 0.0 ? ctl.delta : std::min(edge, 0.25);
  if (delta > edge) throw InvalidArgument("regional_frac_laplacian: q within delta of the boundary");
  auto eval = [&](double dl) {
    const double core = std::min(ctl.core > 0.0 ? ctl.core : detail::default_core(1.0), 0.5 * dl);
    double err = 0.0;
    const double g0 = G(q);
    double s = detail::taylor_core(G, q, core, gamma);
    s += detail::gk([&](double h) { return (G(q + h) + G(q - h) - 2.0 * g0) * std::pow(h, -(1.0 + gamma)); }, core, dl,
                    ctl.tol, ctl.max_depth, &err);
    // one-sided remainders of (0,1)
    auto side = [&](double v) { return (G(v) - g0) * std::pow(std::abs(v - q), -(1.0 + gamma)); };
    s += detail::gk(side, 0.0, q - dl, ctl.tol, ctl.max_depth, &err);
    s += detail::gk(side, q + dl, 1.0, ctl.tol, ctl.max_depth, &err);
    return std::pair{c_gamma * s, c_gamma * err};
  };
  const auto [full, err] = eval(delta);
  const auto half = eval(0.5 * delta);
  return {full, std::abs(full - half.first), err};
}

/// (-Delta)^{g/2} G(q) on R for G vanishing outside [0,1]:
/// c int_0^inf (2G(q) - G(q+h) - G(q-h)) h^-(1+g) dh.
inline PvValue fractional_laplacian(const RealFn& G, double q, double gamma, double c_gamma, PvControl ctl = {}) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw InvalidArgument("fractional_laplacian: gamma must lie in (0,2)");
  auto Gx = [&](double v) { return (v <= 0.0 || v >= 1.0) ? 0.0 : G(v); };
  const double g0 = Gx(q);
  const double far = std::max(std::abs(q), std::abs(1.0 - q));
  const double near = std::max(0.0, std::min(std::abs(q), std::abs(1.0 - q)));
  // a different core radius from the regional routine on purpose
  const double core = std::min(ctl.core > 0.0 ? ctl.core : 0.5 * detail::default_core(1.0), 0.5 * std::max(near, 1e-3));
  double err = 0.0;
  double s = -detail::taylor_core(Gx, q, core, gamma);
  auto f = [&](double h) { return (2.0 * g0 - Gx(q + h) - Gx(q - h)) * std::pow(h, -(1.0 + gamma)); };
  std::vector<double> cuts{core};
  if (near > core) cuts.push_back(near);
  if (far > cuts.back()) cuts.push_back(far);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += detail::gk(f, cuts[i], cuts[i + 1], ctl.tol, ctl.max_depth, &err);
  s += 2.0 * g0 * std::pow(cuts.back(), -gamma) / gamma;  // both shifts outside the support
  return {c_gamma * s, 0.0, c_gamma * err};
}

/// V_1(q) = (c / g) (q^-g + (1-q)^-g)
inline double v1_potential(double q, double gamma, double c_gamma) {
  return c_gamma / gamma * (std::pow(q, -gamma) + std::pow(1.0 - q, -gamma));
}

struct IdentityCheck {
  double regional = 0.0;   // L G(q)
  double whole_line = 0.0; // -(-Delta)^{g/2} G(q) + V_1(q) G(q)
  double residual = 0.0;
};

/// Compares L G with -(-Delta)^{g/2} G + V_1 G computed by an independent quadrature.
inline IdentityCheck fractional_identity_check(const RealFn& G, double q, double gamma, double c_gamma,
                                               PvControl ctl = {}) {
  IdentityCheck c;
  c.regional = regional_frac_laplacian_apply(G, q, gamma, c_gamma, ctl).value;
  c.whole_line = -fractional_laplacian(G, q, gamma, c_gamma, ctl).value + v1_potential(q, gamma, c_gamma) * G(q);
  c.residual = std::abs(c.regional - c.whole_line);
  return c;
}

/// N^g (L~_N G)(x/N) = N^g sum_{y in Lambda_N} p(y - x) (G(y/N) - G(x/N)).
inline double discrete_regional_apply(const JumpKernel& k, const RealFn& G, int x, double scale_exponent) {
  const int n = k.lattice_size();
  if (x < 1 || x > n - 1) throw InvalidArgument("discrete_regional_apply: x outside Lambda_N");
  const double gx = G(static_cast<double>(x) / n);
  double s = 0.0;
  for (int y = 1; y <= n - 1; ++y)
    if (y != x) s += k.prob(y - x) * (G(static_cast<double>(y) / n) - gx);
  return std::pow(static_cast<double>(n), scale_exponent) * s;
}

struct FractionalConvergence {
  int N = 0;
  double sup_error = 0.0;
  double argmax = 0.0;
};

/// sup over x/N in [lo, hi] of |N^g (L~_N G)(x/N) - (L G)(x/N)|.
inline FractionalConvergence fractional_generator_check(const JumpKernel& k, const RealFn& G, double lo = 0.2,
                                                        double hi = 0.8, PvControl ctl = {}) {
  if (!k.is_long_jump() || !(k.gamma() > 1.0 && k.gamma() < 2.0))
    throw Unsupported("fractional_generator_check: needs a long-jump kernel with gamma in (1,2)");
  const int n = k.lattice_size();
  FractionalConvergence r;
  r.N = n;
  for (int x = 1; x <= n - 1; ++x) {
    const double q = static_cast<double>(x) / n;
    if (q < lo || q > hi) continue;
    const double d = std::abs(discrete_regional_apply(k, G, x, k.gamma()) -
                              regional_frac_laplacian_apply(G, q, k.gamma(), k.c_gamma(), ctl).value);
    if (d > r.sup_error) {
      r.sup_error = d;
      r.argmax = q;
    }
  }
  return r;
}

struct LaplacianCheckRow {
  int N = 0;
  double sup_error = 0.0;
};

/// For each N: sup_x | N^2 sum_{z != 0} p(z) (G((x+z)/N) - G(x/N)) - (sigma^2/2) G''(x/N) |.
/// G is taken as zero outside `support` when one is given; otherwise the
/// symmetric sum is truncated where p(z) drops below machine precision.
inline std::vector<LaplacianCheckRow> kernel_laplacian_check(const RealFn& G, const RealFn& G2, KernelChoice choice,
                                                             const std::vector<int>& sizes,
                                                             std::optional<std::pair<double, double>> support = std::pair{0.0, 1.0}) {
  if (choice.is_long_jump() && !(choice.gamma > 2.0))
    throw Unsupported("kernel_laplacian_check: needs finite variance (gamma > 2)");
  std::vector<LaplacianCheckRow> out;
  for (int n : sizes) {
    const JumpKernel k = build_kernel(choice, n);
    const double half_var = 0.5 * *k.sigma2();
    const double n2 = static_cast<double>(n) * n;
    LaplacianCheckRow row{n, 0.0};
    for (int x = 1; x <= n - 1; ++x) {
      const double q = static_cast<double>(x) / n;
      const double g0 = G(q);
      double s = 0.0;
      if (!k.is_long_jump()) {
        s = 0.5 * (G(q + 1.0 / n) + G(q - 1.0 / n) - 2.0 * g0);
      } else {
        long zmax;
        if (support) {
          // beyond this both q +- z/N leave the support
          const double reach = std::max(q - support->first, support->second - q);
          zmax = static_cast<long>(std::floor(reach * n)) + 1;
        } else {
          zmax = static_cast<long>(std::ceil(std::pow(std::numeric_limits<double>::epsilon(), -1.0 / (k.gamma() + 1.0))));
        }
        for (long z = zmax; z >= 1; --z) {
          const double h = static_cast<double>(z) / n;
          s += k.prob(z) * (G(q + h) + G(q - h) - 2.0 * g0);
        }
        if (support) s -= 2.0 * g0 * k.tail(zmax + 1);
      }
      row.sup_error = std::max(row.sup_error, std::abs(n2 * s - half_var * G2(q)));
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace exclab
