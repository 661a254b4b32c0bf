#pragma once

// Event-driven kinetic Monte Carlo for eta_{t Theta(N)}.
//
// Three exact samplers are provided:
//   ExactTable     - binary-indexed tree over the live event rates; state-
//                    dependent total rate, no rejections.
//   Thinning       - state-independent envelope (every pair at p(y-x), every
//                    reservoir flip at its maximal rate); attempts are accepted
//                    with probability actual/envelope.
//   LazyReservoir  - bulk pairs are attempted at p(y-x) irrespective of the
//                    state; the reservoir dynamics at each site is an
//                    autonomous two-state chain which is only resolved (by its
//                    exact transition law) when the site is touched by a bulk
//                    attempt or a snapshot is taken. Intended for regimes where
//                    boundary flips dominate the event count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/generator.hpp"
#include "exclab/model.hpp"
#include "exclab/rng.hpp"
#include "exclab/sampling.hpp"

namespace exclab {

enum class SamplerMode { ExactTable, Thinning, LazyReservoir };

inline const char* to_string(SamplerMode m) {
  switch (m) {
    case SamplerMode::ExactTable: return "exact";
    case SamplerMode::Thinning: return "thinning";
    case SamplerMode::LazyReservoir: return "lazy";
  }
  return "?";
}

/// Default sampler: ExactTable for nearest neighbour, Thinning for long jumps.
inline SamplerMode default_mode(const ModelParams& p) {
  return p.kernel.is_long_jump() ? SamplerMode::Thinning : SamplerMode::ExactTable;
}

/// Draw an initial configuration. micro_time is 0.
inline LatticeState init_state(const InitialMeasure& measure, int n, RngStream& rng) {
  LatticeState s(n);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BernoulliProduct>) {
          for (int x = 1; x <= n - 1; ++x) {
            const double g = m.g(static_cast<double>(x) / n);
            if (!(g >= 0.0 && g <= 1.0))
              throw InvalidArgument("init_state: profile value outside [0,1] at x=" + std::to_string(x));
            s.set(x, rng.uniform() < g ? 1 : 0);
          }
        } else if constexpr (std::is_same_v<M, ExactConfiguration>) {
          if (m.occupancy.size() != static_cast<std::size_t>(n - 1))
            throw InvalidArgument("init_state: configuration length must be N-1");
          for (auto v : m.occupancy)
            if (v > 1) throw InvalidArgument("init_state: occupation must be 0 or 1");
          s.occupancy = m.occupancy;
        } else {
          if (m.distribution.size() != (std::size_t{1} << (n - 1)))
            throw InvalidArgument("init_state: stationary distribution has wrong size");
          double u = rng.uniform();
          std::size_t code = 0;
          for (; code + 1 < m.distribution.size(); ++code) {
            u -= m.distribution[code];
            if (u < 0.0) break;
          }
          s = LatticeState::decode(static_cast<std::uint32_t>(code), n);
        }
      },
      measure);
  s.micro_time = 0.0;
  return s;
}

struct StepOutcome {
  Event event;
  double waiting_time;
  bool applied;  // false for thinning rejections and no-op attempts
};

/// Event sampler bound to one trajectory. Construct from the starting state;
/// afterwards the state must only be modified through step()/advance().
class EventSampler {
 public:
  EventSampler(const ModelParams& params, const JumpKernel& kernel, SamplerMode mode,
               const LatticeState& state)
      : params_(params), kernel_(&kernel), mode_(mode), n_(params.N) {
    params.validate();
    if (state.N() != n_) throw InvalidArgument("EventSampler: state size does not match N");
    if (kernel.lattice_size() != 0 && kernel.is_long_jump() && kernel.lattice_size() < n_)
      throw InvalidArgument("EventSampler: kernel was built for a smaller lattice");
    build_pairs();
    switch (mode_) {
      case SamplerMode::ExactTable: build_table(state); break;
      case SamplerMode::Thinning: build_envelope(); break;
      case SamplerMode::LazyReservoir: build_lazy(state); break;
    }
  }

  SamplerMode mode() const { return mode_; }

  /// Current total attempt rate (state-dependent only for ExactTable).
  double total_attempt_rate() const {
    switch (mode_) {
      case SamplerMode::ExactTable: return table_.total();
      case SamplerMode::Thinning: return pair_rate_ + flip_env_rate_;
      case SamplerMode::LazyReservoir: return pair_rate_;
    }
    return 0.0;
  }

  /// One clock ring: advance micro_time by Exp(total) and apply the event.
  StepOutcome step(LatticeState& s, RngStream& rng) {
    const double total = total_attempt_rate();
    if (!(total > 0.0)) throw AbsorbedState("step: total rate is zero");
    const double dt = rng.exponential(total);
    s.micro_time += dt;
    StepOutcome out = fire(s, rng);
    out.waiting_time = dt;
    return out;
  }

  /// Run until micro time `horizon` (state at the last event <= horizon).
  /// Observer hooks (all optional): on_hold(const LatticeState&, double dt)
  /// before each jump and at the horizon; on_event(const LatticeState&, const Event&)
  /// after each applied event.
  template <class Observer>
  long long advance(LatticeState& s, RngStream& rng, double horizon, Observer&& obs,
                    long long max_events) {
    long long events = 0;
    for (;;) {
      const double total = total_attempt_rate();
      const double dt = total > 0.0 ? rng.exponential(total) : INFINITY;
      if (s.micro_time + dt > horizon) {
        if constexpr (requires { obs.on_hold(s, 0.0); }) obs.on_hold(s, horizon - s.micro_time);
        s.micro_time = horizon;
        break;
      }
      if constexpr (requires { obs.on_hold(s, 0.0); }) obs.on_hold(s, dt);
      s.micro_time += dt;
      const StepOutcome out = fire(s, rng);
      if (out.applied) {
        if constexpr (requires { obs.on_event(s, out.event); }) obs.on_event(s, out.event);
      }
      if (++events > max_events)
        throw ResourceCapExceeded("advance: event cap exceeded", events, s.micro_time);
    }
    if (mode_ == SamplerMode::LazyReservoir) synchronize(s, rng);
    return events;
  }

  long long advance(LatticeState& s, RngStream& rng, double horizon, long long max_events) {
    struct Null {} null;
    return advance(s, rng, horizon, null, max_events);
  }

  /// Resolve every lazily tracked site at the current micro time.
  void synchronize(LatticeState& s, RngStream& rng) {
    if (mode_ != SamplerMode::LazyReservoir) return;
    for (int x = 1; x <= n_ - 1; ++x) resolve(s, x, rng);
  }

 private:
  struct Pair {
    int x, y;
  };

  void build_pairs() {
    const long reach = std::min<long>(kernel_->range(), n_ - 2);
    // Pair displacement d has (N-1-d) placements, each at rate p(d).
    disp_.clear();
    std::vector<double> w;
    for (long d = 1; d <= reach; ++d) {
      const double pd = kernel_->prob(d);
      if (pd <= 0.0) continue;
      disp_.push_back(static_cast<int>(d));
      w.push_back(pd * static_cast<double>(n_ - 1 - d));
    }
    pair_rate_ = 0.0;
    for (double v : w) pair_rate_ += v;
    if (!w.empty()) disp_table_ = AliasTable(w);
  }

  Pair draw_pair(RngStream& rng) const {
    const int d = disp_[disp_table_.sample(rng)];
    const int x = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ - 1 - d)));
    return {x, x + d};
  }

  // ---- ExactTable -------------------------------------------------------
  void build_table(const LatticeState& s) {
    pairs_.clear();
    site_pairs_.assign(static_cast<std::size_t>(n_), {});
    for (int d : disp_)
      for (int x = 1; x + d <= n_ - 1; ++x) {
        site_pairs_[static_cast<std::size_t>(x)].push_back(static_cast<int>(pairs_.size()));
        site_pairs_[static_cast<std::size_t>(x + d)].push_back(static_cast<int>(pairs_.size()));
        pairs_.push_back({x, x + d});
      }
    flip_slot_.assign(static_cast<std::size_t>(n_), -1);
    flip_sites_.clear();
    for (int x = 1; x <= n_ - 1; ++x)
      if (kernel_->prob(x) > 0.0 || kernel_->prob(n_ - x) > 0.0) {
        flip_slot_[static_cast<std::size_t>(x)] = static_cast<int>(pairs_.size() + flip_sites_.size());
        flip_sites_.push_back(x);
      }
    table_ = FenwickTree(pairs_.size() + flip_sites_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) refresh_pair(s, i);
    for (int x : flip_sites_) refresh_flip(s, x);
  }

  void refresh_pair(const LatticeState& s, std::size_t i) {
    const Pair& pr = pairs_[i];
    table_.set(i, s(pr.x) != s(pr.y) ? kernel_->prob(pr.y - pr.x) : 0.0);
  }
  void refresh_flip(const LatticeState& s, int x) {
    const int slot = flip_slot_[static_cast<std::size_t>(x)];
    if (slot >= 0) table_.set(static_cast<std::size_t>(slot), flip_rate(params_, *kernel_, x, s(x)));
  }
  void refresh_site(const LatticeState& s, int x) {
    for (int i : site_pairs_[static_cast<std::size_t>(x)]) refresh_pair(s, static_cast<std::size_t>(i));
    refresh_flip(s, x);
  }

  // ---- Thinning ---------------------------------------------------------
  void build_envelope() {
    flip_env_.clear();
    std::vector<double> w;
    flip_env_rate_ = 0.0;
    for (int x = 1; x <= n_ - 1; ++x)
      for (int y : {0, n_}) {
        const double r = params_.reservoir_density(y);
        const double env = params_.boundary_strength() * kernel_->prob(y - x) * std::max(r, 1.0 - r);
        if (env <= 0.0) continue;
        flip_env_.push_back({x, y});
        w.push_back(env);
        flip_env_rate_ += env;
      }
    if (!w.empty()) flip_table_ = AliasTable(w);
  }

  // ---- LazyReservoir ----------------------------------------------------
  void build_lazy(const LatticeState& s) {
    const std::size_t m = static_cast<std::size_t>(n_);
    lazy_rate_.assign(m, 0.0);
    lazy_target_.assign(m, 0.0);
    lazy_clock_.assign(m, s.micro_time);
    for (int x = 1; x <= n_ - 1; ++x) {
      const double pl = kernel_->prob(x), pr = kernel_->prob(n_ - x);
      const double a = params_.boundary_strength() * (pl + pr);
      lazy_rate_[static_cast<std::size_t>(x)] = a;
      lazy_target_[static_cast<std::size_t>(x)] =
          a > 0.0 ? (params_.alpha * pl + params_.beta * pr) / (pl + pr) : 0.0;
    }
  }

  void resolve(LatticeState& s, int x, RngStream& rng) {
    const std::size_t i = static_cast<std::size_t>(x);
    const double a = lazy_rate_[i];
    const double elapsed = s.micro_time - lazy_clock_[i];
    lazy_clock_[i] = s.micro_time;
    if (a <= 0.0 || elapsed <= 0.0) return;
    const double target = lazy_target_[i];
    const double decay = std::exp(-a * elapsed);
    const double p1 = target + (static_cast<double>(s(x)) - target) * decay;
    s.set(x, rng.uniform() < p1 ? 1 : 0);
  }

  // ---- dispatch ---------------------------------------------------------
  StepOutcome fire(LatticeState& s, RngStream& rng) {
    switch (mode_) {
      case SamplerMode::ExactTable: {
        const double total = table_.total();
        const std::size_t slot = table_.find(rng.uniform() * total);
        Event e{};
        if (slot < pairs_.size()) {
          const Pair& pr = pairs_[slot];
          e = {EventKind::Exchange, pr.x, pr.y, table_.value(slot)};
          s.exchange(pr.x, pr.y);
          refresh_site(s, pr.x);
          refresh_site(s, pr.y);
        } else {
          const int x = flip_sites_[slot - pairs_.size()];
          e = {EventKind::Flip, x, 0, table_.value(slot)};
          s.flip(x);
          refresh_site(s, x);
        }
        return {e, 0.0, true};
      }
      case SamplerMode::Thinning: {
        if (rng.uniform() * (pair_rate_ + flip_env_rate_) < pair_rate_) {
          const Pair pr = draw_pair(rng);
          const Event e{EventKind::Exchange, pr.x, pr.y, kernel_->prob(pr.y - pr.x)};
          if (s(pr.x) == s(pr.y)) return {e, 0.0, false};
          s.exchange(pr.x, pr.y);
          return {e, 0.0, true};
        }
        const Pair fe = flip_env_[flip_table_.sample(rng)];
        const int x = fe.x, y = fe.y;
        const double r = params_.reservoir_density(y);
        const double actual = s(x) ? 1.0 - r : r;
        const Event e{EventKind::Flip, x, 0, params_.boundary_strength() * kernel_->prob(y - x) * actual};
        if (rng.uniform() * std::max(r, 1.0 - r) < actual) {
          s.flip(x);
          return {e, 0.0, true};
        }
        return {e, 0.0, false};
      }
      case SamplerMode::LazyReservoir: {
        const Pair pr = draw_pair(rng);
        resolve(s, pr.x, rng);
        resolve(s, pr.y, rng);
        const Event e{EventKind::Exchange, pr.x, pr.y, kernel_->prob(pr.y - pr.x)};
        if (s(pr.x) == s(pr.y)) return {e, 0.0, false};
        s.exchange(pr.x, pr.y);
        return {e, 0.0, true};
      }
    }
    throw InvalidArgument("unknown sampler mode");
  }

  ModelParams params_;
  const JumpKernel* kernel_;
  SamplerMode mode_;
  int n_;

  std::vector<int> disp_;
  AliasTable disp_table_;
  double pair_rate_ = 0.0;

  std::vector<Pair> pairs_;
  std::vector<std::vector<int>> site_pairs_;
  std::vector<int> flip_slot_;
  std::vector<int> flip_sites_;
  FenwickTree table_;

  std::vector<Pair> flip_env_;  // (site, reservoir)
  AliasTable flip_table_;
  double flip_env_rate_ = 0.0;

  std::vector<double> lazy_rate_;
  std::vector<double> lazy_target_;
  std::vector<double> lazy_clock_;
};

/// Macroscopic snapshot times t_1 < ... < t_k.
struct SnapshotSchedule {
  std::vector<double> times;

  void validate() const {
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!(times[i] >= 0.0)) throw InvalidArgument("snapshot times must be >= 0");
      if (i > 0 && !(times[i] > times[i - 1]))
        throw InvalidArgument("snapshot times must be strictly increasing");
    }
  }
};

struct EnsembleOptions {
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  SamplerMode mode = SamplerMode::ExactTable;
  long long max_events = 1'000'000'000LL;  // per replica
  unsigned threads = 1;
  /// Replica ids start here; lets callers split one ensemble into chunks.
  std::uint64_t first_replica = 0;
};

/// Observer contract for run_ensemble: an accumulator with
///   void on_snapshot(std::size_t k, const LatticeState& s);
///   void merge(const Acc& other);   // associative and commutative
template <class Acc>
concept SnapshotAccumulator = requires(Acc a, const Acc& b, const LatticeState& s) {
  a.on_snapshot(std::size_t{}, s);
  a.merge(b);
};

/// Simulate one replica through the schedule, handing every snapshot to `acc`.
template <class Acc>
void run_replica(const ModelParams& params, const JumpKernel& kernel, const InitialMeasure& measure,
                 const SnapshotSchedule& schedule, SamplerMode mode, RngStream& rng, Acc& acc,
                 long long max_events) {
  LatticeState s = init_state(measure, params.N, rng);
  EventSampler sampler(params, kernel, mode, s);
  const double scale = params.time_scale();
  long long used = 0;
  for (std::size_t k = 0; k < schedule.times.size(); ++k) {
    used += sampler.advance(s, rng, schedule.times[k] * scale, max_events - used);
    acc.on_snapshot(k, s);
  }
}

/// Run fn(worker, r) for r in [0, count) on `threads` workers (replica r goes
/// to worker r % threads). The first exception thrown by any worker is rethrown.
template <class Fn>
void for_each_replica(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> failure(threads);
  auto worker = [&](unsigned t) {
    try {
      for (std::size_t r = t; r < count; r += threads) fn(t, r);
    } catch (...) {
      failure[t] = std::current_exception();
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& f : failure)
    if (f) std::rethrow_exception(f);
}

inline unsigned effective_threads(unsigned requested, std::size_t replicas) {
  return std::max(1U, std::min<unsigned>(requested, static_cast<unsigned>(replicas)));
}

/// Independent replicas r = first_replica, ..., each on RngStream(seed, r).
/// Results do not depend on the thread count when Acc::merge is exact.
template <SnapshotAccumulator Acc>
Acc run_ensemble(const ModelParams& params, const JumpKernel& kernel, const InitialMeasure& measure,
                 const SnapshotSchedule& schedule, const EnsembleOptions& opt, const Acc& prototype) {
  if (opt.replicas < 1) throw InvalidArgument("run_ensemble: replicas must be >= 1");
  schedule.validate();
  params.validate();
  const unsigned threads = effective_threads(opt.threads, opt.replicas);
  std::vector<Acc> partial(threads, prototype);
  for_each_replica(opt.replicas, threads, [&](unsigned t, std::size_t r) {
    RngStream rng(opt.seed, opt.first_replica + r);
    run_replica(params, kernel, measure, schedule, opt.mode, rng, partial[t], opt.max_events);
  });
  Acc result = prototype;
  for (const auto& p : partial) result.merge(p);
  return result;
}

}  // namespace exclab
