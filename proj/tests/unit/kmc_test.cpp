#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "exclab/kmc.hpp"
#include "exclab/mean_dynamics.hpp"
#include "exclab/observables.hpp"

using namespace exclab;

namespace {

ModelParams nn(int n, double theta, double kappa, double a, double b) {
  ModelParams p;
  p.N = n;
  p.theta = theta;
  p.kappa = kappa;
  p.alpha = a;
  p.beta = b;
  return p;
}

// Encoded-state histogram at one snapshot.
struct Histogram {
  std::vector<std::int64_t> counts;
  explicit Histogram(int n = 2) : counts(std::size_t{1} << (n - 1), 0) {}
  void on_snapshot(std::size_t, const LatticeState& s) { ++counts[s.encode()]; }
  void merge(const Histogram& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  }
};

// Two-sample chi-square homogeneity p-value (cells with small expected counts pooled).
double homogeneity_p(const Histogram& a, const Histogram& b) {
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    na += a.counts[i];
    nb += b.counts[i];
  }
  double chi = 0.0, pa = 0.0, pb = 0.0;
  int dof = -1;
  auto cell = [&](double ca, double cb) {
    const double tot = ca + cb;
    const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
    chi += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    ++dof;
  };
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    const double ca = a.counts[i], cb = b.counts[i];
    if (ca + cb < 20) {
      pa += ca;
      pb += cb;
      continue;
    }
    cell(ca, cb);
  }
  if (pa + pb > 0) cell(pa, pb);
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, chi));
}

}  // namespace

TEST(InitState, DeterministicProfiles) {
  RngStream rng(3, 0);
  const auto ones = init_state(constant_profile(1.0), 50, rng);
  EXPECT_EQ(ones.particles(), 49);
  const auto zeros = init_state(constant_profile(0.0), 50, rng);
  EXPECT_EQ(zeros.particles(), 0);
  EXPECT_THROW(init_state(constant_profile(1.5), 5, rng), InvalidArgument);
}

TEST(InitState, LinearProfileMean) {
  RngStream rng(11, 0);
  const int n = 10000;
  const auto s = init_state(BernoulliProduct{[](double q) { return q; }}, n, rng);
  // Var of the site mean: sum q(1-q) / (N-1)^2
  double var = 0.0;
  for (int x = 1; x < n; ++x) var += (double(x) / n) * (1 - double(x) / n);
  const double se = std::sqrt(var) / (n - 1);
  EXPECT_LE(std::abs(double(s.particles()) / (n - 1) - 0.5), 3 * se);
}

TEST(Sampler, AbsorbingStateSignals) {
  const ModelParams p = nn(6, 0.0, 1.0, 0.0, 0.0);
  const JumpKernel k = build_kernel(p.kernel, 6);
  LatticeState s(6);
  EventSampler sm(p, k, SamplerMode::ExactTable, s);
  RngStream rng(1, 0);
  EXPECT_THROW(sm.step(s, rng), AbsorbedState);
}

TEST(Sampler, TwoSiteHoldingTimeIsExponential) {
  const ModelParams p = nn(2, 0.5, 1.0, 0.3, 0.5);
  const JumpKernel k = build_kernel(p.kernel, 2);
  const double rate = std::pow(2.0, -0.5) * 0.4;
  std::vector<double> w;
  RngStream rng(7, 0);
  for (int i = 0; i < 100000; ++i) {
    LatticeState s(2);
    EventSampler sm(p, k, SamplerMode::ExactTable, s);
    w.push_back(sm.step(s, rng).waiting_time);
  }
  std::sort(w.begin(), w.end());
  double d = 0.0;
  const double n = static_cast<double>(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double f = 1.0 - std::exp(-rate * w[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  // Kolmogorov critical value at level 0.01
  EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(Sampler, EventFrequenciesMatchRates) {
  const ModelParams p = nn(4, 0.0, 1.0, 0.3, 0.6);
  const JumpKernel k = build_kernel(p.kernel, 4);
  for (SamplerMode mode : {SamplerMode::ExactTable, SamplerMode::Thinning}) {
    LatticeState start(4);
    start.set(2, 1);
    const auto ev = event_rates(start, p, k);
    const double total = total_rate(ev);
    std::map<std::tuple<int, int, int>, int> seen;
    RngStream rng(5, static_cast<std::uint64_t>(mode));
    const int draws = 200000;
    int applied = 0;
    while (applied < draws) {
      LatticeState s = start;
      EventSampler sm(p, k, mode, s);
      const auto out = sm.step(s, rng);
      if (!out.applied) continue;
      ++applied;
      ++seen[{static_cast<int>(out.event.kind), out.event.x, out.event.y}];
    }
    for (const auto& e : ev) {
      const double pr = e.rate / total;
      const double f = seen[{static_cast<int>(e.kind), e.x, e.y}] / double(draws);
      EXPECT_LE(std::abs(f - pr), 4 * std::sqrt(pr * (1 - pr) / draws)) << to_string(mode);
    }
  }
}

TEST(Ensemble, InitialSnapshotOnly) {
  const ModelParams p = nn(8, 0.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 8);
  EnsembleOptions opt;
  opt.replicas = 1;
  opt.seed = 42;
  const auto h = run_ensemble(p, k, ExactConfiguration{{1, 0, 1, 1, 0, 0, 1}}, SnapshotSchedule{{0.0}}, opt, Histogram(8));
  std::uint32_t code = 0;
  for (int i : {0, 2, 3, 6}) code |= 1U << i;
  EXPECT_EQ(h.counts[code], 1);
}

TEST(Ensemble, SameSeedIsBitIdentical) {
  ModelParams p = nn(40, 0.5, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 40);
  EnsembleOptions opt;
  opt.replicas = 30;
  opt.seed = 9;
  const SnapshotSchedule sch{{0.01, 0.05}};
  auto a = run_ensemble(p, k, constant_profile(0.5), sch, opt, DensityAccumulator(2, 40)).estimate(1, 0.2, 0.8);
  auto b = run_ensemble(p, k, constant_profile(0.5), sch, opt, DensityAccumulator(2, 40)).estimate(1, 0.2, 0.8);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr_, b.stderr_);
  opt.threads = 3;
  auto c = run_ensemble(p, k, constant_profile(0.5), sch, opt, DensityAccumulator(2, 40)).estimate(1, 0.2, 0.8);
  EXPECT_EQ(a.mean, c.mean);
}

TEST(Ensemble, EventCapIsAnError) {
  const ModelParams p = nn(40, 0.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 40);
  EnsembleOptions opt;
  opt.max_events = 100;
  EXPECT_THROW(run_ensemble(p, k, constant_profile(0.5), SnapshotSchedule{{0.1}}, opt, DensityAccumulator(1, 40)),
               ResourceCapExceeded);
}

TEST(Ensemble, ExactTableAndThinningAgree) {
  const ModelParams p = nn(8, 0.0, 1.0, 0.1, 0.7);
  const JumpKernel k = build_kernel(p.kernel, 8);
  EnsembleOptions opt;
  opt.replicas = 40000;
  opt.seed = 21;
  const SnapshotSchedule sch{{0.02}};
  const auto step = BernoulliProduct{[](double q) { return q < 0.5 ? 0.9 : 0.1; }};
  const auto a = run_ensemble(p, k, step, sch, opt, Histogram(8));
  opt.mode = SamplerMode::Thinning;
  opt.seed = 22;
  const auto b = run_ensemble(p, k, step, sch, opt, Histogram(8));
  EXPECT_GT(homogeneity_p(a, b), 1e-3);
}

TEST(Ensemble, LazyReservoirAgreesWithThinning) {
  ModelParams p = nn(8, -1.0, 1.0, 0.1, 0.7);
  p.kernel = KernelChoice::long_jump(3.0);
  const JumpKernel k = build_kernel(p.kernel, 8);
  EnsembleOptions opt;
  opt.replicas = 40000;
  opt.seed = 31;
  opt.mode = SamplerMode::Thinning;
  const SnapshotSchedule sch{{0.05}};
  const auto a = run_ensemble(p, k, constant_profile(0.5), sch, opt, Histogram(8));
  opt.mode = SamplerMode::LazyReservoir;
  opt.seed = 32;
  const auto b = run_ensemble(p, k, constant_profile(0.5), sch, opt, Histogram(8));
  EXPECT_GT(homogeneity_p(a, b), 1e-3);
}

TEST(Ensemble, BulkOnlyConservesParticles) {
  const ModelParams p = nn(30, 0.0, 0.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 30);
  RngStream rng(3, 0);
  LatticeState s = init_state(constant_profile(0.4), 30, rng);
  const int m = s.particles();
  EventSampler sm(p, k, SamplerMode::ExactTable, s);
  sm.advance(s, rng, 0.2 * p.time_scale(), 1'000'000);
  EXPECT_EQ(s.particles(), m);
}

TEST(Ensemble, MeanMatchesKolmogorovOde) {
  const ModelParams p = nn(32, 1.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 32);
  const auto g = [](double q) { return q < 0.5 ? 0.2 : 0.8; };
  EnsembleOptions opt;
  opt.replicas = 3000;
  opt.seed = 77;
  const auto est = run_ensemble(p, k, BernoulliProduct{g}, SnapshotSchedule{{0.1}}, opt, DensityAccumulator(1, 32))
                       .estimate(0, 0.2, 0.8);
  const auto ode = discrete_profile_ode(p, sample_profile(g, 32), {0.1}).front();
  int outside = 0;
  for (int x = 1; x < 32; ++x)
    if (std::abs(est.at(x) - ode[x - 1]) > 3 * est.stderr_[x - 1]) ++outside;
  EXPECT_LE(outside, 2);
}
