#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/special_functions/zeta.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "exclab/mean_dynamics.hpp"
#include "exclab/reaction.hpp"
#include "exclab/spectral.hpp"
#include "exclab/stationary.hpp"

using namespace exclab;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams nn(int n, double theta, double kappa, double a, double b) {
  ModelParams p;
  p.N = n;
  p.theta = theta;
  p.kappa = kappa;
  p.alpha = a;
  p.beta = b;
  return p;
}

std::vector<double> uniform_grid(int m) {
  std::vector<double> g;
  for (int i = 1; i < m; ++i) g.push_back(double(i) / m);
  return g;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

// ---- Dirichlet ----------------------------------------------------------

TEST(Profiles, SampledStepIsAntisymmetric) {
  const auto g = sample_profile(step_profile(0.2, 0.8).f, 128);
  EXPECT_EQ(g[63], 0.5);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i] - 0.5, 0.5 - g[g.size() - 1 - i], 1e-15);
}

TEST(HeatDirichlet, StationaryDataStaysPut) {
  const auto grid = uniform_grid(50);
  const auto s = heat_dirichlet_spectral(linear_profile(0.2, 0.8), 0.2, 0.8, 0.3, grid);
  for (double c : s.coeff) EXPECT_NEAR(c, 0.0, 1e-13);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(s.values[i], rho_dir(grid[i], 0.2, 0.8), 1e-13);
}

TEST(HeatDirichlet, SingleMode) {
  const Profile g{[](double q) { return 0.2 + 0.6 * q + std::sin(kPi * q); }, {}, "mode"};
  const auto grid = uniform_grid(40);
  for (double t : {0.01, 0.1, 0.5}) {
    const auto s = heat_dirichlet_spectral(g, 0.2, 0.8, t, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(s.values[i], 0.2 + 0.6 * grid[i] + std::exp(-kPi * kPi * t / 2) * std::sin(kPi * grid[i]), 1e-10);
  }
}

TEST(HeatDirichlet, LongTimeLimit) {
  const auto grid = uniform_grid(20);
  const auto s = heat_dirichlet_spectral(step_profile(0.9, 0.1), 0.2, 0.8, 20.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(s.values[i], rho_dir(grid[i], 0.2, 0.8), 1e-12);
}

TEST(HeatDirichlet, InitialTimeHasOnlyL2Control) {
  const auto s = heat_dirichlet_spectral(step_profile(0.2, 0.8), 0.2, 0.8, 0.0, {0.25}, 1e-10, 0.5, 400);
  EXPECT_FALSE(s.sup_control);
}

// ---- Robin ----------------------------------------------------------------

TEST(RobinSpectrum, NeumannRoots) {
  for (const auto& r : robin_eigenvalues(0.0, 5)) {
    EXPECT_DOUBLE_EQ(r.sqrt_lambda, r.n * kPi);
    EXPECT_EQ(r.residual, 0.0);
  }
}

TEST(RobinSpectrum, FirstRootAtKappaOne) {
  const auto r = robin_eigenvalues(1.0, 1).front();
  // independent: tan s = 2s/(s^2-1) rewritten as (s^2-1) sin s - 2s cos s = 0, solved with TOMS 748
  auto h = [](double s) { return (s * s - 1.0) * std::sin(s) - 2.0 * s * std::cos(s); };
  boost::uintmax_t it = 100;
  const auto br = boost::math::tools::toms748_solve(h, 1.0, 1.5, boost::math::tools::eps_tolerance<double>(50), it);
  EXPECT_NEAR(r.sqrt_lambda, 0.5 * (br.first + br.second), 1e-13);
  EXPECT_NEAR(r.sqrt_lambda, 1.3065, 5e-5);
  EXPECT_NEAR(r.lambda, 1.707, 1e-3);
}

TEST(RobinSpectrum, ResidualsAndBrackets) {
  for (double k : {0.3, 1.0, 4.0}) {
    const auto roots = robin_eigenvalues(k, 50);
    for (const auto& r : roots) {
      EXPECT_LE(r.residual, 1e-10);
      EXPECT_GT(r.sqrt_lambda, (r.n - 1) * kPi);
      EXPECT_LT(r.sqrt_lambda, r.n * kPi);
    }
  }
}

TEST(RobinSpectrum, AsymptoticShift) {
  // s_n - (n-1) pi ~ 2k / ((n-1) pi): the roots hug the left end of their bracket
  const double k = 1.0;
  const auto roots = robin_eigenvalues(k, 60);
  for (int n : {20, 40, 60}) {
    const double s = roots[n - 1].sqrt_lambda;
    EXPECT_NEAR(s - (n - 1) * kPi, 2 * k / ((n - 1) * kPi), 2e-3);
  }
}

TEST(RobinSpectrum, Orthonormality) {
  const auto rule = composite_gauss({}, 200);
  for (double k : {0.0, 1.0, 2.5}) {
    const auto roots = robin_eigenvalues(k, 10);
    for (std::size_t a = 0; a < roots.size(); ++a)
      for (std::size_t b = a; b < roots.size(); ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < rule.x.size(); ++j)
          s += rule.w[j] * robin_mode(rule.x[j], roots[a].sqrt_lambda, k) * robin_mode(rule.x[j], roots[b].sqrt_lambda, k);
        EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-8) << "k=" << k;
      }
  }
}

TEST(RobinSpectrum, ModesSatisfyBoundaryConditions) {
  const double k = 1.7, h = 1e-6;
  for (const auto& r : robin_eigenvalues(k, 5)) {
    auto X = [&](double q) { return robin_mode(q, r.sqrt_lambda, k); };
    EXPECT_NEAR((X(h) - X(-h)) / (2 * h), k * X(0.0), 1e-6);
    EXPECT_NEAR((X(1 + h) - X(1 - h)) / (2 * h), -k * X(1.0), 1e-6);
  }
}

TEST(RobinSolution, StationaryDataStaysPut) {
  const Profile g{[](double q) { return rho_rob(q, 1.0, 0.2, 0.8); }, {}, "rob"};
  const auto grid = uniform_grid(30);
  const auto s = robin_spectral_solution(g, 1.0, 0.2, 0.8, 0.2, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(s.values[i], rho_rob(grid[i], 1.0, 0.2, 0.8), 1e-10);
}

TEST(RobinSolution, NeumannConservesMass) {
  const auto g = step_profile(0.9, 0.3, 0.4);
  const auto grid = uniform_grid(20);
  const auto s = robin_spectral_solution(g, 0.0, 0.2, 0.8, 10.0, grid);
  const double mass = 0.9 * 0.4 + 0.3 * 0.6;
  for (double v : s.values) EXPECT_NEAR(v, mass, 1e-9);
}

TEST(RobinSolution, LongTimeLimitKappaOne) {
  const auto grid = uniform_grid(20);
  const auto s = robin_spectral_solution(step_profile(0.9, 0.1), 1.0, 0.2, 0.8, 40.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(s.values[i], 0.2 * grid[i] + 0.4, 1e-9);
}

TEST(RobinSolution, AgreesWithDiscreteEvolution) {
  const int n = 512;
  const ModelParams p = nn(n, 1.0, 1.0, 0.2, 0.8);
  const auto g = step_profile(0.2, 0.8);
  const auto disc = discrete_profile_ode(p, sample_profile(g.f, n), {0.05}).front();
  const auto cont = robin_spectral_solution(g, 1.0, 0.2, 0.8, 0.05, uniform_grid(n)).values;
  EXPECT_LE(sup_diff(disc, cont), 0.01);
}

// ---- discrete Kolmogorov equations -----------------------------------------

TEST(DiscreteProfile, ConstantAndFixedPoint) {
  const ModelParams flat = nn(40, 0.5, 1.0, 0.3, 0.3);
  const auto out = discrete_profile_ode(flat, std::vector<double>(39, 0.3), {0.1});
  for (double v : out.front()) EXPECT_NEAR(v, 0.3, 1e-13);
  for (double theta : {-1.0, 0.0, 1.0, 2.0}) {
    const ModelParams p = nn(40, theta, 1.5, 0.1, 0.9);
    const auto r = rho_ss_profile(p);
    EXPECT_LE(sup_diff(discrete_profile_ode(p, r, {0.3}).front(), r), 1e-12);
    std::vector<double> out;
    MeanProfileSystem(p, build_kernel(p.kernel, 40)).apply(r, out);
    for (double v : out) EXPECT_LE(std::abs(v), 1e-12 * p.time_scale());
  }
}

TEST(DiscreteProfile, ApplyBIsAnnihilatedByAffineStationary) {
  for (int n : {8, 64, 128}) {
    const ModelParams p = nn(n, 0.7, 1.3, 0.25, 0.6);
    std::vector<double> f;
    f.push_back(p.alpha);
    for (int x = 1; x <= n - 1; ++x) f.push_back(rho_ss(x, p));
    f.push_back(p.beta);
    const auto b = apply_B(p, f);
    for (double v : b) EXPECT_LE(std::abs(v), 1e-12 * n * n);
  }
}

TEST(DiscreteProfile, DenseAndAdaptivePathsAgree) {
  const ModelParams p = nn(200, 0.0, 1.0, 0.2, 0.8);
  const JumpKernel k = build_kernel(p.kernel, 200);
  const auto g = sample_profile(step_profile(0.2, 0.8).f, 200);
  const auto dense = mean_profile_ode(p, k, g, {0.02}).front();
  MeanProfileSystem sys(p, k);
  const auto rk = detail::integrate_dopri([&](const std::vector<double>& y, std::vector<double>& dy) { sys.apply(y, dy); },
                                          g, {0.02}, 1e-10)
                      .front();
  EXPECT_LE(sup_diff(dense, rk), 1e-7);
}

TEST(DiscreteProfile, ConvergesToHeatEquation) {
  const ModelParams p = nn(128, 0.0, 1.0, 0.2, 0.8);
  const auto g = step_profile(0.2, 0.8);
  const auto disc = discrete_profile_ode(p, sample_profile(g.f, 128), {0.05}).front();
  const auto cont = heat_dirichlet_spectral(g, 0.2, 0.8, 0.05, uniform_grid(128)).values;
  EXPECT_LE(sup_diff(disc, cont), 0.01);
}

TEST(Correlation, EqualReservoirsStayUncorrelated) {
  const ModelParams p = nn(12, 0.0, 1.0, 0.4, 0.4);
  CorrelationSystem cs(p);
  const auto phi = cs.evolve(build_kernel(p.kernel, 12), std::vector<double>(11, 0.4), std::vector<double>(cs.dim(), 0.0),
                             {0.05, 0.2});
  for (const auto& v : phi)
    for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(Correlation, SteadyStateIsClosedForm) {
  for (int n : {5, 32, 128})
    for (double theta : {0.0, 1.0, 2.0}) {
      const ModelParams p = nn(n, theta, 1.0, 0.0, 1.0);
      CorrelationSystem cs(p);
      const auto phi = cs.steady_state(rho_ss_profile(p));
      double err = 0.0;
      for (int x = 1; x < n; ++x)
        for (int y = x + 1; y < n; ++y) err = std::max(err, std::abs(phi[cs.index(x, y)] - phi_ss(x, y, p)));
      EXPECT_LE(err, 1e-10) << "N=" << n << " theta=" << theta;
    }
}

TEST(Correlation, RobinBoundIsOrderOneOverN) {
  std::vector<double> scaled;
  for (int n : {25, 50, 100}) {
    const ModelParams p = nn(n, 1.0, 1.0, 0.0, 1.0);
    CorrelationSystem cs(p);
    const JumpKernel k = build_kernel(p.kernel, n);
    const auto phi = cs.evolve(k, sample_profile(step_profile(0.0, 1.0).f, n), std::vector<double>(cs.dim(), 0.0),
                               {0.01, 0.03, 0.1, 0.3, 1.0});
    double sup = 0.0;
    for (const auto& v : phi)
      for (double x : v) sup = std::max(sup, std::abs(x));
    scaled.push_back(sup * n);
  }
  // C = N sup|phi| stable: within a factor 1.5 across the sizes
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  EXPECT_LE(*hi / *lo, 1.5);
}

TEST(Correlation, ScalingOfClosedFormMaximum) {
  // theta = 1: successive maxima ratios within [1.6, 2.5]
  double prev = 0.0;
  for (int n : {25, 50, 100}) {
    const double m = max_abs_phi_ss(nn(n, 1.0, 1.0, 0.0, 1.0));
    if (prev > 0) {
      EXPECT_GE(prev / m, 1.6);
      EXPECT_LE(prev / m, 2.5);
    }
    prev = m;
  }
}

TEST(Correlation, ThetaZeroMaximumIsQuarterOverN) {
  // with N^theta = 1 the closed form is -x (N - y) / (N^2 (N - 1)); at the centre this is ~ 1/(4N)
  for (int n : {64, 256, 1024}) {
    const double m = max_abs_phi_ss(nn(n, 0.0, 1.0, 0.0, 1.0));
    EXPECT_NEAR(m * n, 0.25, 2.0 / n);
  }
}

// ---- reaction / reaction-diffusion ----------------------------------------

TEST(Reaction, InitialTimeAndEquilibrium) {
  const auto grid = uniform_grid(10);
  const auto g = bump_profile(0.1, 0.5);
  const auto r0 = reaction_exact(g, 2.0, 3.0, 0.2, 0.8, 0.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(r0[i], g(grid[i]), 1e-15);
  for (double v : reaction_exact(flat_profile(0.3), 2.0, 3.0, 0.3, 0.3, 1.0, grid)) EXPECT_NEAR(v, 0.3, 1e-15);
  EXPECT_THROW(reaction_exact(g, 1.0, 3.0, 0.2, 0.8, 0.1, {0.0}), InvalidArgument);
}

TEST(Reaction, MidpointExampleAgainstRungeKutta) {
  EXPECT_NEAR(reaction_weight(0.5, 1.5), 2.0 * std::pow(2.0, 2.5), 1e-12);
  EXPECT_NEAR(reaction_weight(0.5, 1.5), 11.3137, 1e-4);
  EXPECT_NEAR(reaction_equilibrium(0.5, 1.5, 0.2, 0.8), 0.5, 1e-15);
  // d rho/dt = kh [(alpha - rho) q^-(g+1) + (beta - rho) (1-q)^-(g+1)]
  const double q = 0.5, g = 1.5;
  using State = std::vector<double>;
  State y{0.0};
  boost::numeric::odeint::integrate_adaptive(
      boost::numeric::odeint::make_controlled(1e-12, 1e-12, boost::numeric::odeint::runge_kutta_dopri5<State>()),
      [&](const State& x, State& dx, double) {
        dx[0] = (0.2 - x[0]) * std::pow(q, -g - 1) + (0.8 - x[0]) * std::pow(1 - q, -g - 1);
      },
      y, 0.0, 0.07, 1e-4);
  const double v = reaction_exact(flat_profile(0.0), 1.0, g, 0.2, 0.8, 0.07, {q}).front();
  EXPECT_NEAR(v, y[0], 1e-9);
  EXPECT_NEAR(v, 0.5 * (1 - std::exp(-11.313708498984761 * 0.07)), 1e-12);
}

TEST(ReactionDiffusion, ZeroReactionMatchesSpectral) {
  ReactionDiffusionOptions opt;
  opt.cells = 512;
  const auto g = step_profile(0.2, 0.8);
  for (double t : {0.01, 0.05}) {
    const auto fd = reaction_diffusion_fd(g, 1.0, 0.0, 3.0, 0.2, 0.8, t, opt);
    const auto sp = heat_dirichlet_spectral(g, 0.2, 0.8, t, fd.grid);
    EXPECT_LE(sup_diff(fd.values, sp.values), 1e-3) << "t=" << t;
  }
}

TEST(ReactionDiffusion, StationaryProfileDoesNotDrift) {
  const double c = 1.0 / (2.0 * boost::math::zeta(4.0));
  const double sigma = std::sqrt(2.0 * c * boost::math::zeta(2.0));
  ReactionDiffusionFd fd(sigma, c, 3.0, 0.2, 0.8);
  const auto r = fd.run(fd.stationary(), 1.0);
  EXPECT_LE(sup_diff(r.values, fd.stationary()), 1e-6);
  // the semi-discrete residual of u* is zero up to rounding in the stiff boundary cells
  double res = 0.0, scale = 0.0;
  for (double v : fd.rhs(fd.stationary())) res = std::max(res, std::abs(v));
  for (double v : fd.rhs(std::vector<double>(fd.grid().size(), 0.0))) scale = std::max(scale, std::abs(v));
  EXPECT_LE(res, 1e-12 * scale);
}

TEST(ReactionDiffusion, SmallDiffusionApproachesReaction) {
  ReactionDiffusionOptions opt;
  opt.cells = 400;
  const auto g = bump_profile(0.3, 0.4);
  const double t = 0.02;
  double prev = INFINITY;
  for (double sh : {0.1, 0.03, 0.01}) {
    const auto fd = reaction_diffusion_fd(g, sh, 1.0, 3.0, 0.2, 0.8, t, opt);
    std::vector<double> grid, vals;
    for (std::size_t i = 0; i < fd.grid.size(); ++i)
      if (fd.grid[i] > 0.2 && fd.grid[i] < 0.8) {
        grid.push_back(fd.grid[i]);
        vals.push_back(fd.values[i]);
      }
    const double d = sup_diff(vals, reaction_exact(g, 1.0, 3.0, 0.2, 0.8, t, grid));
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(ReactionDiffusion, SecondOrderInSpace) {
  // smooth data, errors against a fine reference at cell centres shared by all grids
  const auto g = bump_profile(0.4, 0.3);
  const double t = 0.02;
  auto run = [&](int m) {
    ReactionDiffusionOptions opt;
    opt.cells = m;
    opt.dt_max = 1e-4;
    return reaction_diffusion_fd(g, 1.0, 0.5, 3.0, 0.4, 0.4, t, opt);
  };
  const auto ref = run(1458);  // 2 * 729: every coarse centre below is a fine centre
  auto err = [&](int m) {
    const auto r = run(m);
    const int f = 1458 / m;  // odd ratio keeps centres aligned
    double e = 0.0;
    for (int i = 0; i < m; ++i) e = std::max(e, std::abs(r.values[i] - ref.values[i * f + f / 2]));
    return e;
  };
  const double e54 = err(54), e162 = err(162);
  EXPECT_GT(e54 / e162, 9.0 * 0.8);  // factor 3 in h
}

TEST(Solvers, MaximumPrinciple) {
  const auto g = step_profile(0.9, 0.1);
  const double lo = 0.1, hi = 0.9, tol = 1e-9;
  auto check = [&](const std::vector<double>& v) {
    for (double x : v) {
      EXPECT_GE(x, lo - tol);
      EXPECT_LE(x, hi + tol);
    }
  };
  const auto grid = uniform_grid(100);
  check(heat_dirichlet_spectral(g, 0.2, 0.8, 0.01, grid).values);
  check(robin_spectral_solution(g, 1.0, 0.2, 0.8, 0.01, grid).values);
  check(reaction_exact(g, 1.0, 3.0, 0.2, 0.8, 0.05, grid));
  check(reaction_diffusion_fd(g, 1.0, 1.0, 3.0, 0.2, 0.8, 0.01).values);
  check(discrete_profile_ode(nn(100, 0.0, 1.0, 0.2, 0.8), sample_profile(g.f, 100), {0.01}).front());
}
