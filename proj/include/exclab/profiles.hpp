#pragma once

// Initial profiles g : [0,1] -> [0,1] with known discontinuities, and
// composite Gauss-Legendre integration that respects them.

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/model.hpp"

namespace exclab {

struct Profile {
  std::function<double(double)> f;
  std::vector<double> breaks;  // interior points where f may jump
  std::string name = "custom";

  double operator()(double q) const { return f(q); }
  InitialMeasure measure() const { return BernoulliProduct{f}; }
};

/// lo on [0, at), hi on (at, 1], midpoint value at the jump (keeps sampled steps antisymmetric).
inline Profile step_profile(double lo, double hi, double at = 0.5) {
  return {[=](double q) { return q < at ? lo : q > at ? hi : 0.5 * (lo + hi); }, {at}, "step"};
}
inline Profile linear_profile(double a, double b) {
  return {[=](double q) { return a + (b - a) * q; }, {}, "linear"};
}
inline Profile flat_profile(double c) {
  return {[=](double) { return c; }, {}, "constant"};
}
/// base + height * exp(1 - 1/(1 - u^2)) for |u| < 1, u = (q - center) / halfwidth.
inline Profile bump_profile(double base, double height, double center = 0.5, double halfwidth = 0.25) {
  return {[=](double q) {
            const double u = (q - center) / halfwidth;
            if (std::abs(u) >= 1.0) return base;
            return base + height * std::exp(1.0 - 1.0 / (1.0 - u * u));
          },
          {},
          "bump"};
}

/// Named presets with the conventions used by the CLI and the harness.
inline Profile profile_preset(const std::string& name, double a, double b) {
  if (name == "step") return step_profile(a, b);
  if (name == "linear") return linear_profile(a, b);
  if (name == "constant") return flat_profile(a);
  if (name == "bump") return bump_profile(a, b - a);
  throw InvalidArgument("unknown profile preset '" + name + "' (step, linear, constant, bump)");
}

/// Panel edges on [0,1]: `panels` equal panels refined at every break.
inline std::vector<double> panel_edges(const std::vector<double>& breaks, int panels) {
  std::vector<double> e;
  for (int i = 0; i <= panels; ++i) e.push_back(static_cast<double>(i) / panels);
  for (double b : breaks)
    if (b > 0.0 && b < 1.0) e.push_back(b);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }), e.end());
  return e;
}

/// Nodes and weights of a composite 10-point Gauss-Legendre rule on [0,1].
struct QuadratureRule {
  std::vector<double> x, w;
};

inline QuadratureRule composite_gauss(const std::vector<double>& breaks, int panels) {
  using GL = boost::math::quadrature::gauss<double, 10>;
  const auto& abs = GL::abscissa();
  const auto& wts = GL::weights();
  QuadratureRule r;
  const auto e = panel_edges(breaks, panels);
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    const double mid = 0.5 * (e[i] + e[i + 1]), half = 0.5 * (e[i + 1] - e[i]);
    for (std::size_t j = 0; j < abs.size(); ++j) {
      // boost stores the non-negative half of a symmetric rule
      r.x.push_back(mid + half * abs[j]);
      r.w.push_back(half * wts[j]);
      if (abs[j] != 0.0) {
        r.x.push_back(mid - half * abs[j]);
        r.w.push_back(half * wts[j]);
      }
    }
  }
  return r;
}

}  // namespace exclab
