#pragma once

// Model parameterization, jump kernels and lattice configurations for the
// symmetric exclusion process with stochastic reservoirs at sites 0 and N.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "exclab/error.hpp"

namespace exclab {

// ---------------------------------------------------------------------------
// Series helpers
// ---------------------------------------------------------------------------

/// Sum_{z >= from} z^{-s} for s > 1, from >= 1.
///
/// Terms below a cutoff M are summed explicitly (smallest first); the tail
/// from M on uses Euler-Maclaurin through the B6 term. M is doubled until the
/// first neglected correction is below `tol`.
inline double power_tail_sum(double s, long from, double tol = 1e-12) {
  if (!(s > 1.0)) throw InvalidArgument("power_tail_sum: exponent must exceed 1");
  if (from < 1) throw InvalidArgument("power_tail_sum: start index must be >= 1");
  long cutoff = std::max<long>(from, 64);
  auto remainder_bound = [s](double m) {
    // magnitude of the B8 term: |B8|/8! * s(s+1)...(s+6) m^{-s-7}
    double poch = 1.0;
    for (int k = 0; k < 7; ++k) poch *= (s + k);
    return poch / 1209600.0 * std::pow(m, -s - 7.0);
  };
  while (remainder_bound(static_cast<double>(cutoff)) > 0.1 * tol && cutoff < (1L << 30))
    cutoff *= 2;
  const double m = static_cast<double>(cutoff);
  const double ms = std::pow(m, -s);
  double tail = m * ms / (s - 1.0) + 0.5 * ms + s * ms / m / 12.0 -
                s * (s + 1) * (s + 2) * ms / (m * m * m) / 720.0 +
                s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * ms / std::pow(m, 5) / 30240.0;
  double head = 0.0;
  for (long z = cutoff - 1; z >= from; --z) head += std::pow(static_cast<double>(z), -s);
  return head + tail;
}

// ---------------------------------------------------------------------------
// Kernel
// ---------------------------------------------------------------------------

enum class KernelKind { NearestNeighbor, LongJump };

struct KernelChoice {
  KernelKind kind = KernelKind::NearestNeighbor;
  double gamma = 0.0;  // only meaningful for LongJump

  static KernelChoice nearest_neighbor() { return {KernelKind::NearestNeighbor, 0.0}; }
  static KernelChoice long_jump(double gamma) { return {KernelKind::LongJump, gamma}; }

  bool is_long_jump() const { return kind == KernelKind::LongJump; }
  std::string name() const { return is_long_jump() ? "lj" : "nn"; }
};

/// Symmetric transition probability p(.) on Z\{0} with its derived constants.
///
/// Nearest neighbour: p(+-1) = 1/2. Long jump: p(z) = c_gamma |z|^{-(gamma+1)}.
/// Tails and the Theta sums are tabulated for 1 <= x <= N+1 at build time.
class JumpKernel {
 public:
  JumpKernel() = default;

  const KernelChoice& choice() const { return choice_; }
  bool is_long_jump() const { return choice_.is_long_jump(); }
  double gamma() const { return choice_.gamma; }
  int lattice_size() const { return n_; }

  double prob(long z) const {
    if (z == 0) return 0.0;
    const long a = z < 0 ? -z : z;
    if (!is_long_jump()) return a == 1 ? 0.5 : 0.0;
    if (a < static_cast<long>(prob_.size())) return prob_[a];
    return c_ * std::pow(static_cast<double>(a), -(choice_.gamma + 1.0));
  }

  /// Largest |z| with p(z) > 0 (max long for unbounded kernels).
  long range() const { return is_long_jump() ? std::numeric_limits<long>::max() : 1; }

  double c_gamma() const { return c_; }
  /// Variance sum_z z^2 p(z); nullopt stands for an infinite variance.
  std::optional<double> sigma2() const { return sigma2_; }
  /// One-sided mean m = sum_{z>=1} z p(z).
  double mean_one_sided() const { return m_; }

  /// sum_{y >= x} p(y), x >= 1.
  double tail(long x) const {
    if (x < 1) throw InvalidArgument("tail: x must be >= 1");
    if (!is_long_jump()) return x == 1 ? 0.5 : 0.0;
    if (x < static_cast<long>(tail_.size())) return tail_[x];
    return c_ * power_tail_sum(choice_.gamma + 1.0, x, tol_);
  }
  /// sum_{z >= x} z p(z), x >= 1.
  double moment_tail(long x) const {
    if (x < 1) throw InvalidArgument("moment_tail: x must be >= 1");
    if (!is_long_jump()) return x == 1 ? 0.5 : 0.0;
    if (x < static_cast<long>(moment_tail_.size())) return moment_tail_[x];
    return c_ * power_tail_sum(choice_.gamma, x, tol_);
  }

  // Finite-N boundary quantities, x in Lambda_N.
  double r_minus(long x) const { return tail(x); }
  double r_plus(long x) const { return tail(n_ - x); }
  double theta_minus(long x) const { return moment_tail(x); }
  double theta_plus(long x) const { return moment_tail(n_ - x); }

  // Continuum limits on (0,1).
  double p_cont(double q) const { return c_ * std::pow(q, -(choice_.gamma + 1.0)); }
  double r_minus_cont(double u) const { return c_ / choice_.gamma * std::pow(u, -choice_.gamma); }
  double r_plus_cont(double u) const { return r_minus_cont(1.0 - u); }
  double v1(double q) const { return r_minus_cont(q) + r_plus_cont(q); }
  double v1_tilde(double q) const { return p_cont(q) + p_cont(1.0 - q); }
  double v0_tilde(double q, double alpha, double beta) const {
    return alpha * p_cont(q) + beta * p_cont(1.0 - q);
  }

 private:
  friend JumpKernel build_kernel(KernelChoice, int, double);

  KernelChoice choice_{};
  int n_ = 0;
  double tol_ = 1e-12;
  double c_ = 0.5;
  std::optional<double> sigma2_ = 1.0;
  double m_ = 0.5;
  std::vector<double> prob_;
  std::vector<double> tail_;
  std::vector<double> moment_tail_;
};

/// Build p(.) and its constants for a lattice of size N.
/// Throws InvalidArgument for gamma <= 1 or a non-positive tolerance.
inline JumpKernel build_kernel(KernelChoice choice, int n, double series_tol = 1e-12) {
  if (!(series_tol > 0.0)) throw InvalidArgument("build_kernel: series_tol must be positive");
  if (n < 2) throw InvalidArgument("build_kernel: N must be >= 2");
  JumpKernel k;
  k.choice_ = choice;
  k.n_ = n;
  k.tol_ = series_tol;
  if (!choice.is_long_jump()) return k;

  const double g = choice.gamma;
  if (!(g > 1.0))
    throw InvalidArgument("build_kernel: long-jump kernel requires gamma > 1 (got " +
                          std::to_string(g) + ")");
  // Relative accuracy is what matters for c; the sums are O(1).
  k.c_ = 1.0 / (2.0 * power_tail_sum(g + 1.0, 1, series_tol));
  k.m_ = k.c_ * power_tail_sum(g, 1, series_tol);
  if (g > 2.0)
    k.sigma2_ = 2.0 * k.c_ * power_tail_sum(g - 1.0, 1, series_tol);
  else
    k.sigma2_ = std::nullopt;

  const long top = n + 1;
  k.prob_.assign(top + 1, 0.0);
  for (long z = 1; z <= top; ++z) k.prob_[z] = k.c_ * std::pow(static_cast<double>(z), -(g + 1.0));
  k.tail_.assign(top + 1, 0.0);
  k.moment_tail_.assign(top + 1, 0.0);
  k.tail_[top] = k.c_ * power_tail_sum(g + 1.0, top, series_tol);
  k.moment_tail_[top] = k.c_ * power_tail_sum(g, top, series_tol);
  for (long x = top - 1; x >= 1; --x) {
    k.tail_[x] = k.tail_[x + 1] + k.prob_[x];
    k.moment_tail_[x] = k.moment_tail_[x + 1] + static_cast<double>(x) * k.prob_[x];
  }
  return k;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Full model parameterization. Bulk is {1, ..., N-1}; reservoirs sit at 0 and N.
struct ModelParams {
  int N = 2;
  double alpha = 0.5;
  double beta = 0.5;
  double kappa = 1.0;
  double theta = 0.0;
  KernelChoice kernel{};
  /// Replaces the regime-determined time scale (exploratory runs only).
  std::optional<double> time_scale_override{};

  void validate() const {
    if (N < 2) throw InvalidArgument("N must be >= 2");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0,1]");
    // kappa = 0 is accepted for bulk-only diagnostics.
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be >= 0");
    if (!std::isfinite(theta)) throw InvalidArgument("theta must be finite");
    if (kernel.is_long_jump() && !(kernel.gamma > 1.0))
      throw InvalidArgument("long-jump kernel requires gamma > 1");
  }

  /// kappa N^{-theta}
  double boundary_strength() const { return kappa * std::pow(static_cast<double>(N), -theta); }

  /// r(0) = alpha, r(N) = beta.
  double reservoir_density(int y) const { return y == 0 ? alpha : beta; }

  /// Theta(N), the macroscopic-to-microscopic time factor.
  double time_scale() const {
    if (time_scale_override) return *time_scale_override;
    const double n = static_cast<double>(N);
    if (!kernel.is_long_jump()) return n * n;
    const double g = kernel.gamma;
    if (g > 2.0) return theta >= 1.0 - g ? n * n : std::pow(n, g + theta + 1.0);
    if (g > 1.0 && g < 2.0) {
      if (theta <= -1.0) return std::pow(n, g + theta + 1.0);
      throw Unsupported("time scale for gamma in (1,2) with theta > -1 is open");
    }
    throw Unsupported("time scale for gamma = 2 is not implemented");
  }
};

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

/// Occupation configuration on {1, ..., N-1} plus the microscopic clock.
struct LatticeState {
  std::vector<std::uint8_t> occupancy;  // occupancy[x-1] = eta(x)
  double micro_time = 0.0;

  LatticeState() = default;
  explicit LatticeState(int n) : occupancy(static_cast<std::size_t>(n - 1), 0) {}

  int N() const { return static_cast<int>(occupancy.size()) + 1; }
  int operator()(int x) const { return occupancy[static_cast<std::size_t>(x - 1)]; }
  void set(int x, int v) { occupancy[static_cast<std::size_t>(x - 1)] = static_cast<std::uint8_t>(v); }
  void flip(int x) { occupancy[static_cast<std::size_t>(x - 1)] ^= 1U; }
  void exchange(int x, int y) { std::swap(occupancy[x - 1], occupancy[y - 1]); }
  int particles() const {
    int s = 0;
    for (auto v : occupancy) s += v;
    return s;
  }
  double macro_time(double time_scale) const { return micro_time / time_scale; }

  /// Bit (x-1) of the index holds eta(x); used by the exact small-N oracles.
  std::uint32_t encode() const {
    std::uint32_t code = 0;
    for (std::size_t i = 0; i < occupancy.size(); ++i) code |= static_cast<std::uint32_t>(occupancy[i]) << i;
    return code;
  }
  static LatticeState decode(std::uint32_t code, int n) {
    LatticeState s(n);
    for (int i = 0; i < n - 1; ++i) s.occupancy[static_cast<std::size_t>(i)] = (code >> i) & 1U;
    return s;
  }
};

/// Independent sites with P(eta(x) = 1) = g(x/N).
struct BernoulliProduct {
  std::function<double(double)> g;
};
/// A fixed configuration (indexed like LatticeState::occupancy).
struct ExactConfiguration {
  std::vector<std::uint8_t> occupancy;
};
/// A probability vector over encoded states, e.g. the exact stationary law.
struct StationarySample {
  std::vector<double> distribution;
};

using InitialMeasure = std::variant<BernoulliProduct, ExactConfiguration, StationarySample>;

inline InitialMeasure constant_profile(double rho) {
  return BernoulliProduct{[rho](double) { return rho; }};
}

}  // namespace exclab
