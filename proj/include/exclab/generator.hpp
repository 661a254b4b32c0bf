#pragma once

// The infinitesimal generator as explicit rate maps, and the dense small-N
// oracles built from it.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/model.hpp"

namespace exclab {

enum class EventKind : std::uint8_t { Exchange, Flip };

/// A state-changing transition. Exchange swaps eta(x), eta(y) (x < y);
/// Flip sets eta(x) to 1 - eta(x) (y unused).
struct Event {
  EventKind kind;
  int x;
  int y;
  double rate;
};

inline void apply_event(LatticeState& s, const Event& e) {
  if (e.kind == EventKind::Exchange)
    s.exchange(e.x, e.y);
  else
    s.flip(e.x);
}

/// Flip rate at x through reservoir y in {0, N}:
///   kappa N^{-theta} p(y - x) [ r(y)(1 - eta(x)) + (1 - r(y)) eta(x) ].
/// With p(+-1) = 1/2 this is the nearest-neighbour boundary rate verbatim.
inline double reservoir_flip_rate(const ModelParams& params, const JumpKernel& kernel, int x, int y,
                                  int eta_x) {
  const double r = params.reservoir_density(y);
  const double affinity = eta_x ? (1.0 - r) : r;
  return params.boundary_strength() * kernel.prob(y - x) * affinity;
}

/// Total flip rate at x, summed over both reservoirs.
inline double flip_rate(const ModelParams& params, const JumpKernel& kernel, int x, int eta_x) {
  return reservoir_flip_rate(params, kernel, x, 0, eta_x) +
         reservoir_flip_rate(params, kernel, x, params.N, eta_x);
}

/// Every state-changing event out of `state` with its rate. Exchanges of equal
/// occupations are no-ops and are omitted. An unordered pair {x,y} exchanges
/// at rate p(y - x).
inline std::vector<Event> event_rates(const LatticeState& state, const ModelParams& params,
                                      const JumpKernel& kernel) {
  const int n = params.N;
  if (state.N() != n) throw InvalidArgument("event_rates: state size does not match N");
  std::vector<Event> events;
  const long reach = std::min<long>(kernel.range(), n - 2);
  for (int x = 1; x <= n - 1; ++x) {
    for (long d = 1; d <= reach && x + d <= n - 1; ++d) {
      const int y = x + static_cast<int>(d);
      if (state(x) != state(y)) {
        const double r = kernel.prob(d);
        if (r > 0.0) events.push_back({EventKind::Exchange, x, y, r});
      }
    }
  }
  for (int x = 1; x <= n - 1; ++x) {
    const double r = flip_rate(params, kernel, x, state(x));
    if (r > 0.0) events.push_back({EventKind::Flip, x, 0, r});
  }
  return events;
}

inline double total_rate(const std::vector<Event>& events) {
  double t = 0.0;
  for (const auto& e : events) t += e.rate;
  return t;
}

constexpr int kMaxOracleStates = 4096;

/// Dense rate matrix over all 2^{N-1} configurations (state index = LatticeState::encode).
/// Q(i,j) is the rate i -> j, diagonal is minus the row sum.
inline Eigen::MatrixXd generator_matrix(const ModelParams& params, const JumpKernel& kernel) {
  params.validate();
  const int n = params.N;
  if (n - 1 > 12 || (1 << (n - 1)) > kMaxOracleStates)
    throw InvalidArgument("generator_matrix: N too large for the dense oracle (2^{N-1} > 4096)");
  const int states = 1 << (n - 1);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(states, states);
  for (int i = 0; i < states; ++i) {
    const LatticeState s = LatticeState::decode(static_cast<std::uint32_t>(i), n);
    double row = 0.0;
    for (const Event& e : event_rates(s, params, kernel)) {
      LatticeState t = s;
      apply_event(t, e);
      q(i, static_cast<int>(t.encode())) += e.rate;
      row += e.rate;
    }
    q(i, i) = -row;
  }
  return q;
}

/// Bernoulli product weight nu_rho(eta).
inline double bernoulli_weight(std::uint32_t code, int n, double rho) {
  double w = 1.0;
  for (int i = 0; i < n - 1; ++i) w *= ((code >> i) & 1U) ? rho : 1.0 - rho;
  return w;
}

/// max over ordered pairs |nu(eta) Q(eta,eta') - nu(eta') Q(eta',eta)| for nu = nu_rho.
/// Only defined for alpha == beta.
inline double detailed_balance_check(const ModelParams& params, const JumpKernel& kernel) {
  if (params.alpha != params.beta)
    throw InvalidArgument("detailed_balance_check: requires alpha == beta");
  const double rho = params.alpha;
  const Eigen::MatrixXd q = generator_matrix(params, kernel);
  const int states = static_cast<int>(q.rows());
  const int n = params.N;
  std::vector<double> nu(static_cast<std::size_t>(states));
  for (int i = 0; i < states; ++i) nu[static_cast<std::size_t>(i)] = bernoulli_weight(static_cast<std::uint32_t>(i), n, rho);
  double worst = 0.0;
  for (int i = 0; i < states; ++i)
    for (int j = i + 1; j < states; ++j)
      worst = std::max(worst, std::abs(nu[static_cast<std::size_t>(i)] * q(i, j) -
                                       nu[static_cast<std::size_t>(j)] * q(j, i)));
  return worst;
}

}  // namespace exclab
