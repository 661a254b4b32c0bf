#include <gtest/gtest.h>

#include <cmath>

#include "exclab/kmc.hpp"
#include "exclab/observables.hpp"
#include "exclab/stationary.hpp"

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

LatticeState config(std::vector<std::uint8_t> occ) {
  LatticeState s(static_cast<int>(occ.size()) + 1);
  s.occupancy = std::move(occ);
  return s;
}

}  // namespace

TEST(Pairing, Examples) {
  EXPECT_DOUBLE_EQ(pair(config({1, 1, 1, 1}), [](double) { return 1.0; }), 1.0);
  EXPECT_DOUBLE_EQ(pair(config({0, 0, 0}), [](double q) { return std::sin(q) + 3; }), 0.0);
  EXPECT_DOUBLE_EQ(pair(config({1, 0, 1}), [](double q) { return q; }), 1.0 / 3.0);
}

TEST(Pairing, LinearAndMonotone) {
  const auto s = config({1, 0, 1, 1, 0, 1, 0});
  auto f = [](double q) { return q * q; };
  auto g = [](double q) { return std::cos(q); };
  EXPECT_NEAR(pair(s, [&](double q) { return 2 * f(q) - 3 * g(q); }), 2 * pair(s, f) - 3 * pair(s, g), 1e-15);
  auto t = s;
  t.set(2, 1);
  EXPECT_GE(pair(t, f), pair(s, f));
  double bound = 0.0;
  for (int x = 1; x < 8; ++x) bound += std::abs(g(x / 8.0));
  EXPECT_LE(std::abs(pair(s, g)), bound / 7);
}

TEST(Boxes, SizesAndValues) {
  EXPECT_EQ(box_size(100, 0.1), 11);
  const auto s = config({1, 1, 0, 0, 0, 0, 0, 0, 1});  // N = 10
  EXPECT_DOUBLE_EQ(box_forward(s, 0.2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(box_backward(s, 0.2), 1.0 / 3.0);
  EXPECT_THROW(box_size(10, 0.0), InvalidArgument);
}

TEST(Accumulators, DeterministicOnes) {
  const int n = 12;
  DensityAccumulator d(1, n);
  CorrelationAccumulator c(1, n);
  LatticeState s(n);
  for (int x = 1; x < n; ++x) s.set(x, 1);
  for (int r = 0; r < 5; ++r) {
    d.on_snapshot(0, s);
    c.on_snapshot(0, s);
  }
  const auto e = d.estimate(0, 0.0, 1.0);
  for (int x = 1; x < n; ++x) {
    EXPECT_EQ(e.at(x), 1.0);
    EXPECT_EQ(e.stderr_[x - 1], 0.0);
  }
  EXPECT_EQ(e.at(0), 0.0);
  EXPECT_EQ(e.at(n), 1.0);
  const auto ce = c.estimate(0);
  for (double v : ce.value) EXPECT_EQ(v, 0.0);
}

TEST(Accumulators, CorrelationSymmetricAndIndexed) {
  const int n = 6;
  CorrelationAccumulator c(1, n);
  RngStream rng(2, 0);
  for (int r = 0; r < 50; ++r) c.on_snapshot(0, init_state(constant_profile(0.4), n, rng));
  const auto e = c.estimate(0);
  for (int x = 1; x < n; ++x)
    for (int y = x + 1; y < n; ++y) EXPECT_EQ(e.at(x, y), e.at(y, x));
}

TEST(Accumulators, ProductMeasureHasNoCorrelation) {
  const int n = 10;
  const ModelParams p = nn(n, 0.0, 1.0, 0.3, 0.3);
  const JumpKernel k = build_kernel(p.kernel, n);
  EnsembleOptions opt;
  opt.replicas = 20000;
  opt.seed = 17;
  const auto e = run_ensemble(p, k, BernoulliProduct{[](double q) { return 0.2 + 0.6 * q; }}, SnapshotSchedule{{0.0}}, opt,
                              CorrelationAccumulator(1, n))
                     .estimate(0);
  int outside = 0;
  for (int x = 1; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      if (std::abs(e.at(x, y)) > 3 * e.stderr_[CorrelationEstimate::index(n, x, y)]) ++outside;
  EXPECT_LE(outside, 2);  // 36 pairs
}

TEST(Accumulators, StationaryCorrelationAtFourSites) {
  const ModelParams p = nn(4, 0.0, 1.0, 1.0, 0.0);
  const JumpKernel k = build_kernel(p.kernel, 4);
  const auto o = brute_force_stationary(p, k);
  EnsembleOptions opt;
  opt.replicas = 40000;
  opt.seed = 23;
  // start from the empty lattice and burn in far past the relaxation time
  const auto e = run_ensemble(p, k, constant_profile(0.0), SnapshotSchedule{{2.0}}, opt, CorrelationAccumulator(1, 4))
                     .estimate(0);
  EXPECT_LE(std::abs(e.at(1, 2) - (-1.0 / 24.0)), 3 * e.stderr_[CorrelationEstimate::index(4, 1, 2)]);
  EXPECT_NEAR(o.correlation[0][1], -1.0 / 24.0, 1e-12);
}

TEST(BoundaryAverage, FrozenDynamics) {
  // alpha = beta = 1 and a full lattice: no event is possible
  const ModelParams p = nn(8, 0.0, 1.0, 1.0, 1.0);
  const JumpKernel k = build_kernel(p.kernel, 8);
  EnsembleOptions opt;
  opt.replicas = 3;
  const auto v = run_paths(p, k, constant_profile(1.0), 0.3, opt,
                           [](const LatticeState&) { return BoundaryTimeAverage{1, 1.0}; },
                           [](BoundaryTimeAverage& b, const LatticeState&) { return b.value(); });
  for (double x : v) EXPECT_EQ(x, 0.0);
  BoundaryTimeAverage b{1, 0.5};
  EXPECT_THROW(b.value(), InvalidArgument);
}

TEST(BoundaryAverage, DecreasesWithNForDirichlet) {
  double prev = INFINITY;
  for (int n : {32, 64, 128}) {
    const ModelParams p = nn(n, 0.0, 1.0, 0.2, 0.8);
    const JumpKernel k = build_kernel(p.kernel, n);
    EnsembleOptions opt;
    opt.replicas = 400;
    opt.seed = 100 + n;
    const auto v = run_paths(p, k, constant_profile(0.5), 0.02, opt,
                             [](const LatticeState&) { return BoundaryTimeAverage{1, 0.2}; },
                             [](BoundaryTimeAverage& b, const LatticeState&) { return b.value(); });
    const double m = mean_stderr(v).mean;
    EXPECT_LT(m, prev) << "N=" << n;
    prev = m;
  }
}

TEST(Dynkin, ZeroTestFunction) {
  const ModelParams p = nn(16, 1.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 16);
  EnsembleOptions opt;
  opt.replicas = 20;
  const auto v = run_paths(
      p, k, constant_profile(0.5), 0.1, opt,
      [&](const LatticeState& s) {
        DynkinProbe d(p, k, [](double) { return 0.0; });
        d.start(s);
        return d;
      },
      [](DynkinProbe& d, const LatticeState& s) { return d.martingale(s); });
  for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(Dynkin, RejectsLongJumps) {
  ModelParams p = nn(16, 0.0, 1.0, 0.2, 0.8);
  p.kernel = KernelChoice::long_jump(3.0);
  const JumpKernel k = build_kernel(p.kernel, 16);
  EXPECT_THROW(DynkinProbe(p, k, [](double q) { return q; }), Unsupported);
}

TEST(Dynkin, MeanZeroAndVarianceMatchesQuadraticVariation) {
  const ModelParams p = nn(16, 1.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 16);
  EnsembleOptions opt;
  opt.replicas = 4000;
  opt.seed = 55;
  struct Rec {
    double m = 0, qv = 0;
  };
  const auto recs = run_paths(
      p, k, BernoulliProduct{[](double q) { return q < 0.5 ? 0.9 : 0.1; }}, 0.1, opt,
      [&](const LatticeState& s) {
        DynkinProbe d(p, k, [](double q) { return q * (1 - q); });
        d.start(s);
        return d;
      },
      [](DynkinProbe& d, const LatticeState& s) { return Rec{d.martingale(s), d.quadratic_variation()}; });
  std::vector<double> m, y;
  for (const auto& r : recs) {
    m.push_back(r.m);
    y.push_back(r.m * r.m - r.qv);
  }
  const auto ms = mean_stderr(m);
  EXPECT_LE(std::abs(ms.mean), 3 * ms.stderr_);
  const auto ys = mean_stderr(y);
  EXPECT_LE(std::abs(ys.mean), 3 * ys.stderr_);
}
