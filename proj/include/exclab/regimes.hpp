#pragma once

// Which limiting equation governs a (kernel, gamma, theta) combination.

#include <cmath>
#include <optional>
#include <string>

#include "exclab/model.hpp"

namespace exclab {

enum class PdeFamily {
  HeatDirichletCompact,  // NN, theta < 0: test functions with compact support
  HeatDirichlet,
  HeatRobin,
  HeatNeumann,
  Reaction,                     // sigma_hat = 0
  ReactionDiffusionDirichlet,   // sigma_hat = sigma, kappa_hat = kappa c_gamma
  FractionalReactionDiffusion,  // regional fractional Laplacian, Dirichlet
  Unsupported
};

inline std::string family_name(PdeFamily f) {
  switch (f) {
    case PdeFamily::HeatDirichletCompact: return "heat-dirichlet(compact-support)";
    case PdeFamily::HeatDirichlet: return "heat-dirichlet";
    case PdeFamily::HeatRobin: return "heat-robin";
    case PdeFamily::HeatNeumann: return "heat-neumann";
    case PdeFamily::Reaction: return "reaction";
    case PdeFamily::ReactionDiffusionDirichlet: return "reaction-diffusion-dirichlet";
    case PdeFamily::FractionalReactionDiffusion: return "fractional-reaction-diffusion";
    case PdeFamily::Unsupported: return "unsupported";
  }
  return "unsupported";
}

struct Regime {
  PdeFamily family = PdeFamily::Unsupported;
  double sigma_hat = 0.0;
  double kappa_hat = 0.0;
  double m_hat = 0.0;
  double time_exponent = 2.0;  // Theta(N) = N^time_exponent
  std::string note;

  bool supported() const { return family != PdeFamily::Unsupported; }
  /// Robin coefficient 2 m_hat / sigma_hat^2 (kappa for the nearest-neighbour model).
  std::optional<double> robin_coefficient() const {
    if (family != PdeFamily::HeatRobin && family != PdeFamily::HeatNeumann) return std::nullopt;
    return 2.0 * m_hat / (sigma_hat * sigma_hat);
  }
  double diffusion() const { return 0.5 * sigma_hat * sigma_hat; }
};

/// Total: every input maps to a family or to Unsupported, never throws.
inline Regime regime_dispatch(KernelChoice kernel, double theta, double kappa = 1.0) {
  Regime r;
  if (!std::isfinite(theta) || !(kappa >= 0.0)) {
    r.note = "invalid theta or kappa";
    return r;
  }
  if (!kernel.is_long_jump()) {
    r.sigma_hat = 1.0;
    r.time_exponent = 2.0;
    if (theta < 0.0) {
      r.family = PdeFamily::HeatDirichletCompact;
      r.note = "Dirichlet; weak form tested against compactly supported functions";
    } else if (theta < 1.0) {
      r.family = PdeFamily::HeatDirichlet;
    } else if (theta == 1.0) {
      r.family = PdeFamily::HeatRobin;
      r.m_hat = kappa / 2.0;
    } else {
      r.family = PdeFamily::HeatNeumann;
    }
    return r;
  }
  const double g = kernel.gamma;
  if (!(g > 1.0)) {
    r.note = "long-jump kernel needs gamma > 1";
    return r;
  }
  if (g == 2.0) {
    r.note = "gamma = 2: time scale N^2/log N, not implemented";
    return r;
  }
  const double c = 1.0 / (2.0 * power_tail_sum(g + 1.0, 1));
  if (g < 2.0) {
    if (theta == -1.0) {
      r.family = PdeFamily::FractionalReactionDiffusion;
      r.kappa_hat = kappa;  // L_kappa = L - kappa V~_1, V~_1 already carries c_gamma
      r.time_exponent = g;
    } else if (theta < -1.0) {
      r.family = PdeFamily::Reaction;
      r.kappa_hat = kappa * c;
      r.time_exponent = g + theta + 1.0;
    } else {
      r.note = "gamma in (1,2) with theta > -1 is open";
    }
    return r;
  }
  const double sigma = std::sqrt(2.0 * c * power_tail_sum(g - 1.0, 1));
  if (theta < 1.0 - g) {
    r.family = PdeFamily::Reaction;
    r.kappa_hat = kappa * c;
    r.time_exponent = g + theta + 1.0;
  } else if (theta == 1.0 - g) {
    r.family = PdeFamily::ReactionDiffusionDirichlet;
    r.sigma_hat = sigma;
    r.kappa_hat = kappa * c;
  } else if (theta < 1.0) {
    r.family = PdeFamily::HeatDirichlet;
    r.sigma_hat = sigma;
  } else if (theta == 1.0) {
    r.family = PdeFamily::HeatRobin;
    r.sigma_hat = sigma;
    r.m_hat = kappa / 2.0;
  } else {
    r.family = PdeFamily::HeatNeumann;
    r.sigma_hat = sigma;
  }
  return r;
}

}  // namespace exclab
