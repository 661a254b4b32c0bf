#pragma once

// Statistical observables built from snapshots and trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/generator.hpp"
#include "exclab/kmc.hpp"
#include "exclab/model.hpp"

namespace exclab {

/// <pi^N, G> = (N-1)^{-1} sum_x G(x/N) eta(x).
template <class G>
double pair(const LatticeState& s, G&& g) {
  const int n = s.N();
  double sum = 0.0;
  for (int x = 1; x <= n - 1; ++x)
    if (s(x)) sum += g(static_cast<double>(x) / n);
  return sum / (n - 1);
}

// ---------------------------------------------------------------------------
// Box averages
// ---------------------------------------------------------------------------

/// Number of sites in the boundary box, 1 + floor(eps N), capped at N-1.
inline int box_size(int n, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("box: eps must lie in (0,1]");
  return std::min(n - 1, 1 + static_cast<int>(std::floor(eps * n)));
}

/// Forward box at site 1: mean occupation of sites 1, ..., 1 + floor(eps N).
inline double box_forward(const LatticeState& s, double eps) {
  const int m = box_size(s.N(), eps);
  int c = 0;
  for (int x = 1; x <= m; ++x) c += s(x);
  return static_cast<double>(c) / m;
}

/// Backward box at site N-1: mean occupation of sites N-1-floor(eps N), ..., N-1.
inline double box_backward(const LatticeState& s, double eps) {
  const int n = s.N();
  const int m = box_size(n, eps);
  int c = 0;
  for (int x = n - 1; x >= n - m; --x) c += s(x);
  return static_cast<double>(c) / m;
}

/// <pi^N, eps^{-1} 1_(0,eps)>
inline double iota_left(const LatticeState& s, double eps) {
  return pair(s, [eps](double q) { return q > 0.0 && q < eps ? 1.0 / eps : 0.0; });
}

/// <pi^N, eps^{-1} 1_(1-eps,1)>
inline double iota_right(const LatticeState& s, double eps) {
  return pair(s, [eps](double q) { return q > 1.0 - eps && q < 1.0 ? 1.0 / eps : 0.0; });
}

// ---------------------------------------------------------------------------
// Snapshot accumulators
// ---------------------------------------------------------------------------

struct DensityEstimate {
  int N = 0;
  double alpha = 0.0, beta = 0.0;
  std::size_t replicas = 0;
  std::vector<double> mean;    // index x-1
  std::vector<double> stderr_;  // sample sd / sqrt(R)

  /// Extended profile: rho(0) = alpha, rho(N) = beta.
  double at(int x) const {
    if (x <= 0) return alpha;
    if (x >= N) return beta;
    return mean[static_cast<std::size_t>(x - 1)];
  }
};

/// Per-snapshot occupation counts. Exact integer merge.
class DensityAccumulator {
 public:
  DensityAccumulator(std::size_t snapshots, int n)
      : n_(n), counts_(snapshots, std::vector<std::int64_t>(static_cast<std::size_t>(n - 1), 0)),
        replicas_(snapshots, 0) {}

  void on_snapshot(std::size_t k, const LatticeState& s) {
    if (s.N() != n_ || k >= counts_.size()) throw InvalidArgument("DensityAccumulator: shape mismatch");
    auto& c = counts_[k];
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += s.occupancy[i];
    ++replicas_[k];
  }

  void merge(const DensityAccumulator& o) {
    if (o.n_ != n_ || o.counts_.size() != counts_.size())
      throw InvalidArgument("DensityAccumulator: merge shape mismatch");
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      for (std::size_t i = 0; i < counts_[k].size(); ++i) counts_[k][i] += o.counts_[k][i];
      replicas_[k] += o.replicas_[k];
    }
  }

  std::size_t snapshots() const { return counts_.size(); }

  DensityEstimate estimate(std::size_t k, double alpha, double beta) const {
    const std::size_t r = replicas_.at(k);
    if (r < 2) throw InvalidArgument("DensityAccumulator: need >= 2 replicas for a standard error");
    DensityEstimate e;
    e.N = n_;
    e.alpha = alpha;
    e.beta = beta;
    e.replicas = r;
    const double rr = static_cast<double>(r);
    for (auto c : counts_[k]) {
      const double p = static_cast<double>(c) / rr;
      e.mean.push_back(p);
      // unbiased variance of a 0/1 sample is R p (1-p) / (R-1)
      e.stderr_.push_back(std::sqrt(p * (1.0 - p) / (rr - 1.0)));
    }
    return e;
  }

 private:
  int n_;
  std::vector<std::vector<std::int64_t>> counts_;
  std::vector<std::size_t> replicas_;
};

/// Averages each replica's snapshots k >= first over time, then treats the
/// per-replica averages as the i.i.d. sample. Used for stationary estimates.
class TimeAveragedDensity {
 public:
  TimeAveragedDensity(std::size_t snapshots, std::size_t first, int n)
      : n_(n), total_(snapshots), first_(first), current_(static_cast<std::size_t>(n - 1), 0),
        sum_(static_cast<std::size_t>(n - 1), 0.0), sum2_(static_cast<std::size_t>(n - 1), 0.0) {
    if (first >= snapshots) throw InvalidArgument("TimeAveragedDensity: empty averaging window");
  }

  void on_snapshot(std::size_t k, const LatticeState& s) {
    if (s.N() != n_) throw InvalidArgument("TimeAveragedDensity: shape mismatch");
    if (k >= first_)
      for (std::size_t i = 0; i < current_.size(); ++i) current_[i] += s.occupancy[i];
    if (k + 1 == total_) {
      const double w = static_cast<double>(total_ - first_);
      for (std::size_t i = 0; i < current_.size(); ++i) {
        const double a = current_[i] / w;
        sum_[i] += a;
        sum2_[i] += a * a;
        current_[i] = 0;
      }
      ++replicas_;
    }
  }

  void merge(const TimeAveragedDensity& o) {
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      sum_[i] += o.sum_[i];
      sum2_[i] += o.sum2_[i];
    }
    replicas_ += o.replicas_;
  }

  DensityEstimate estimate(double alpha, double beta) const {
    if (replicas_ < 2) throw InvalidArgument("TimeAveragedDensity: need >= 2 replicas");
    DensityEstimate e;
    e.N = n_;
    e.alpha = alpha;
    e.beta = beta;
    e.replicas = replicas_;
    const double r = static_cast<double>(replicas_);
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      const double m = sum_[i] / r;
      const double var = std::max(0.0, (sum2_[i] - r * m * m) / (r - 1.0));
      e.mean.push_back(m);
      e.stderr_.push_back(std::sqrt(var / r));
    }
    return e;
  }

 private:
  int n_;
  std::size_t total_, first_;
  std::vector<std::int64_t> current_;
  std::vector<double> sum_, sum2_;
  std::size_t replicas_ = 0;
};

/// phi(x,y) for 0 < x < y < N, stored row-major over the upper triangle.
struct CorrelationEstimate {
  int N = 0;
  std::size_t replicas = 0;
  std::vector<double> value;
  std::vector<double> stderr_;

  static std::size_t index(int n, int x, int y) {
    // rows x = 1..N-2, each holding y = x+1..N-1
    const std::size_t m = static_cast<std::size_t>(n - 1);
    const std::size_t i = static_cast<std::size_t>(x - 1);
    return i * m - i * (i + 1) / 2 + static_cast<std::size_t>(y - x - 1);
  }
  /// Zero on the boundary of V_N; symmetric.
  double at(int x, int y) const {
    if (x > y) std::swap(x, y);
    if (x <= 0 || y >= N || x == y) return 0.0;
    return value[index(N, x, y)];
  }
};

/// Integer sums of eta(x) and eta(x)eta(y) per snapshot.
class CorrelationAccumulator {
 public:
  CorrelationAccumulator(std::size_t snapshots, int n)
      : n_(n), pairs_(static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n - 2) / 2),
        single_(snapshots, std::vector<std::int64_t>(static_cast<std::size_t>(n - 1), 0)),
        joint_(snapshots, std::vector<std::int64_t>(pairs_, 0)), replicas_(snapshots, 0) {}

  void on_snapshot(std::size_t k, const LatticeState& s) {
    if (s.N() != n_ || k >= single_.size()) throw InvalidArgument("CorrelationAccumulator: shape mismatch");
    auto& a = single_[k];
    auto& b = joint_[k];
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s.occupancy[i];
    std::size_t idx = 0;
    for (int x = 1; x <= n_ - 2; ++x) {
      if (!s(x)) {
        idx += static_cast<std::size_t>(n_ - 1 - x);
        continue;
      }
      for (int y = x + 1; y <= n_ - 1; ++y, ++idx) b[idx] += s(y);
    }
    ++replicas_[k];
  }

  void merge(const CorrelationAccumulator& o) {
    if (o.n_ != n_ || o.single_.size() != single_.size())
      throw InvalidArgument("CorrelationAccumulator: merge shape mismatch");
    for (std::size_t k = 0; k < single_.size(); ++k) {
      for (std::size_t i = 0; i < single_[k].size(); ++i) single_[k][i] += o.single_[k][i];
      for (std::size_t i = 0; i < pairs_; ++i) joint_[k][i] += o.joint_[k][i];
      replicas_[k] += o.replicas_[k];
    }
  }

  /// Sample covariance with (R-1) normalization. The standard error is the
  /// plug-in sd of (X - mx)(Y - my) under the empirical joint law of (X, Y).
  CorrelationEstimate estimate(std::size_t k) const {
    const std::size_t r = replicas_.at(k);
    if (r < 2) throw InvalidArgument("CorrelationAccumulator: need >= 2 replicas");
    const double rr = static_cast<double>(r);
    CorrelationEstimate e;
    e.N = n_;
    e.replicas = r;
    e.value.resize(pairs_);
    e.stderr_.resize(pairs_);
    std::size_t idx = 0;
    for (int x = 1; x <= n_ - 2; ++x)
      for (int y = x + 1; y <= n_ - 1; ++y, ++idx) {
        const double px = single_[k][static_cast<std::size_t>(x - 1)] / rr;
        const double py = single_[k][static_cast<std::size_t>(y - 1)] / rr;
        const double pxy = joint_[k][idx] / rr;
        const double cov = pxy - px * py;
        e.value[idx] = cov * rr / (rr - 1.0);
        // joint cells (1,1), (1,0), (0,1), (0,0)
        const double p11 = pxy, p10 = px - pxy, p01 = py - pxy, p00 = 1.0 - px - py + pxy;
        auto sq = [](double v) { return v * v; };
        const double m2 = p11 * sq((1 - px) * (1 - py)) + p10 * sq((1 - px) * py) +
                          p01 * sq(px * (1 - py)) + p00 * sq(px * py);
        e.stderr_[idx] = std::sqrt(std::max(0.0, m2 - cov * cov) / rr);
      }
    return e;
  }

 private:
  int n_;
  std::size_t pairs_;
  std::vector<std::vector<std::int64_t>> single_;
  std::vector<std::vector<std::int64_t>> joint_;
  std::vector<std::size_t> replicas_;
};

// ---------------------------------------------------------------------------
// Path observers (exact time integrals between events)
// ---------------------------------------------------------------------------

/// Integrates f(state) over micro time. Requires a sampler whose state is
/// exact between events (not LazyReservoir).
template <class F>
struct TimeIntegral {
  F f;
  double integral = 0.0;
  double elapsed = 0.0;

  void on_hold(const LatticeState& s, double dt) {
    if (dt <= 0.0) return;
    integral += f(s) * dt;
    elapsed += dt;
  }
};

/// (1/t)|int_0^t (eta_s(site) - target) ds| over one realized path.
struct BoundaryTimeAverage {
  int site;
  double target;
  double integral = 0.0;
  double elapsed = 0.0;

  void on_hold(const LatticeState& s, double dt) {
    integral += (s(site) - target) * dt;
    elapsed += dt;
  }
  double value() const {
    if (!(elapsed > 0.0)) throw InvalidArgument("boundary_time_average: horizon must be positive");
    return std::abs(integral) / elapsed;
  }
};

/// Dynkin martingale M_t(G) = <pi_t,G> - <pi_0,G> - int_0^t Theta L <pi_s,G> ds
/// and the integral of the carre du champ, for the nearest-neighbour model.
/// Drift and carre du champ are kept as sums of local terms (bonds, flips) and
/// refreshed around each changed site.
class DynkinProbe {
 public:
  template <class G>
  DynkinProbe(const ModelParams& params, const JumpKernel& kernel, G&& g)
      : params_(params), kernel_(&kernel), n_(params.N) {
    if (params.kernel.is_long_jump())
      throw Unsupported("dynkin_probe: defined for the nearest-neighbour model only");
    gx_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
    for (int x = 1; x <= n_ - 1; ++x) gx_[static_cast<std::size_t>(x)] = g(static_cast<double>(x) / n_);
  }

  void start(const LatticeState& s) {
    bond_d_.assign(static_cast<std::size_t>(n_), 0.0);
    bond_q_.assign(static_cast<std::size_t>(n_), 0.0);
    flip_d_.assign(static_cast<std::size_t>(n_), 0.0);
    flip_q_.assign(static_cast<std::size_t>(n_), 0.0);
    drift_ = qv_ = 0.0;
    for (int x = 1; x <= n_ - 2; ++x) set_bond(s, x);
    for (int x = 1; x <= n_ - 1; ++x) set_flip(s, x);
    f0_ = functional(s);
    drift_integral_ = qv_integral_ = 0.0;
  }

  void on_hold(const LatticeState&, double dt) {
    drift_integral_ += drift_ * dt;
    qv_integral_ += qv_ * dt;
  }

  void on_event(const LatticeState& s, const Event& e) {
    touch(s, e.x);
    if (e.kind == EventKind::Exchange) touch(s, e.y);
  }

  double martingale(const LatticeState& s) const { return functional(s) - f0_ - drift_integral_; }
  double quadratic_variation() const { return qv_integral_; }

  /// Current Theta-free generator action L<pi,G> (micro time units).
  double drift() const { return drift_; }

  double functional(const LatticeState& s) const {
    double sum = 0.0;
    for (int x = 1; x <= n_ - 1; ++x)
      if (s(x)) sum += gx_[static_cast<std::size_t>(x)];
    return sum / (n_ - 1);
  }

 private:
  void touch(const LatticeState& s, int x) {
    if (x - 1 >= 1) set_bond(s, x - 1);
    if (x <= n_ - 2) set_bond(s, x);
    set_flip(s, x);
  }
  // bond {x, x+1}
  void set_bond(const LatticeState& s, int x) {
    const std::size_t i = static_cast<std::size_t>(x);
    const double inv = 1.0 / (n_ - 1);
    const double dg = (gx_[i + 1] - gx_[i]) * inv;
    const double rate = kernel_->prob(1);
    const int diff = s(x) - s(x + 1);
    const double d = rate * dg * diff;
    const double q = diff != 0 ? rate * dg * dg : 0.0;
    drift_ += d - bond_d_[i];
    qv_ += q - bond_q_[i];
    bond_d_[i] = d;
    bond_q_[i] = q;
  }
  void set_flip(const LatticeState& s, int x) {
    const std::size_t i = static_cast<std::size_t>(x);
    const double rate = flip_rate(params_, *kernel_, x, s(x));
    const double jump = gx_[i] * (1 - 2 * s(x)) / (n_ - 1);
    const double d = rate * jump;
    const double q = rate * jump * jump;
    drift_ += d - flip_d_[i];
    qv_ += q - flip_q_[i];
    flip_d_[i] = d;
    flip_q_[i] = q;
  }

  ModelParams params_;
  const JumpKernel* kernel_;
  int n_;
  std::vector<double> gx_;
  std::vector<double> bond_d_, bond_q_, flip_d_, flip_q_;
  double drift_ = 0.0, qv_ = 0.0;
  double f0_ = 0.0, drift_integral_ = 0.0, qv_integral_ = 0.0;
};

/// Run `replicas` independent paths to macro time `horizon`. For each replica,
/// make_observer(const LatticeState& initial) builds a fresh observer; it is
/// driven through advance() and summarize(observer, final_state) produces the
/// per-replica record. Records are returned in replica order.
template <class MakeObserver, class Summarize>
auto run_paths(const ModelParams& params, const JumpKernel& kernel, const InitialMeasure& measure,
               double horizon, const EnsembleOptions& opt, MakeObserver&& make_observer,
               Summarize&& summarize) {
  params.validate();
  if (opt.replicas < 1) throw InvalidArgument("run_paths: replicas must be >= 1");
  if (!(horizon >= 0.0)) throw InvalidArgument("run_paths: horizon must be >= 0");
  if (opt.mode == SamplerMode::LazyReservoir)
    throw InvalidArgument("run_paths: path integrals need an event-exact sampler");
  using Obs = decltype(make_observer(std::declval<const LatticeState&>()));
  using Rec = decltype(summarize(std::declval<Obs&>(), std::declval<const LatticeState&>()));
  std::vector<Rec> out(opt.replicas);
  const double micro = horizon * params.time_scale();
  for_each_replica(opt.replicas, effective_threads(opt.threads, opt.replicas),
                   [&](unsigned, std::size_t r) {
                     RngStream rng(opt.seed, opt.first_replica + r);
                     LatticeState s = init_state(measure, params.N, rng);
                     EventSampler sampler(params, kernel, opt.mode, s);
                     Obs obs = make_observer(s);
                     sampler.advance(s, rng, micro, obs, opt.max_events);
                     out[r] = summarize(obs, s);
                   });
  return out;
}

/// Sample mean and standard error of a scalar sample.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;  // (R-1)-normalized
};

inline MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr m;
  const double r = static_cast<double>(v.size());
  if (v.size() < 2) throw InvalidArgument("mean_stderr: need >= 2 samples");
  for (double x : v) m.mean += x;
  m.mean /= r;
  for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= (r - 1.0);
  m.stderr_ = std::sqrt(m.variance / r);
  return m;
}

}  // namespace exclab
