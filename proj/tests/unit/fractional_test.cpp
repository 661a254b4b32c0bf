#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <numbers>

#include "exclab/fractional.hpp"
#include "exclab/mean_dynamics.hpp"
#include "exclab/profiles.hpp"
#include "exclab/regimes.hpp"

using namespace exclab;

namespace {

ModelParams lj(int n, double gamma, double theta, double a, double b) {
  ModelParams p;
  p.N = n;
  p.theta = theta;
  p.alpha = a;
  p.beta = b;
  p.kernel = KernelChoice::long_jump(gamma);
  return p;
}

double bump(double q) {
  const double u = (q - 0.5) / 0.25;
  return std::abs(u) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - u * u));
}

}  // namespace

TEST(Fractional, ConstantIsAnnihilated) {
  const double c = build_kernel(KernelChoice::long_jump(1.5), 8).c_gamma();
  for (double q : {0.3, 0.5, 0.71})
    EXPECT_NEAR(regional_frac_laplacian_apply([](double) { return 2.5; }, q, 1.5, c).value, 0.0, 1e-14);
}

TEST(Fractional, RejectsPointsNearTheBoundary) {
  PvControl ctl;
  ctl.delta = 0.2;
  EXPECT_THROW(regional_frac_laplacian_apply(bump, 0.1, 1.5, 0.4, ctl), InvalidArgument);
  EXPECT_THROW(regional_frac_laplacian_apply(bump, 0.0, 1.5, 0.4), InvalidArgument);
}

TEST(Fractional, IdentityWithWholeLineOperator) {
  const double c = build_kernel(KernelChoice::long_jump(1.5), 8).c_gamma();
  for (double q : {0.5, 0.4, 0.62}) {
    const auto r = fractional_identity_check(bump, q, 1.5, c);
    EXPECT_LE(r.residual, 1e-8) << "q=" << q;
  }
}

TEST(Fractional, QuadraticHasClosedForm) {
  // G = q^2 on (0,1): PV int (v^2 - q^2)|v-q|^{-1-g} dv has a closed form in q
  const double g = 1.5, q = 0.4;
  // v = q + h: v^2 - q^2 = 2qh + h^2; the odd part only survives as a PV
  const double odd = 2 * q * (std::pow(1 - q, 1 - g) - std::pow(q, 1 - g)) / (1 - g);
  const double even = (std::pow(1 - q, 2 - g) + std::pow(q, 2 - g)) / (2 - g);
  const double exact = odd + even;
  const auto v = regional_frac_laplacian_apply([](double x) { return x * x; }, q, g, 1.0);
  EXPECT_NEAR(v.value, exact, 1e-8);
}

TEST(Fractional, GeneratorErrorMatchesLeadingTerm) {
  // N^g sum_z p(z)(G(q + z/N) - G(q)) - L G(q) ~ c zeta(g - 1) G''(q) N^{g-2}
  const double g = 1.5, q = 0.3;
  const double h = 1e-4;
  const double g2 = (bump(q + h) + bump(q - h) - 2 * bump(q)) / (h * h);
  std::vector<double> ratio;
  for (int n : {1000, 4000}) {
    const JumpKernel k = build_kernel(KernelChoice::long_jump(g), n);
    const int x = static_cast<int>(std::lround(q * n));
    const double err = discrete_regional_apply(k, bump, x, g) -
                       regional_frac_laplacian_apply(bump, q, g, k.c_gamma()).value;
    const double lead = k.c_gamma() * boost::math::zeta(g - 1.0) * g2 * std::pow(n, g - 2.0);
    ratio.push_back(err / lead);
  }
  EXPECT_NEAR(ratio[1], 1.0, 0.02);
  EXPECT_LT(std::abs(ratio[1] - 1.0), std::abs(ratio[0] - 1.0) + 1e-3);
}

TEST(Fractional, GeneratorCheckDecreasesWithN) {
  double prev = INFINITY;
  for (int n : {256, 1024}) {
    const auto r = fractional_generator_check(build_kernel(KernelChoice::long_jump(1.5), n), bump);
    EXPECT_LT(r.sup_error, prev);
    EXPECT_GE(r.argmax, 0.2);
    EXPECT_LE(r.argmax, 0.8);
    prev = r.sup_error;
  }
  EXPECT_THROW(fractional_generator_check(build_kernel(KernelChoice::long_jump(3.0), 64), bump), Unsupported);
}

TEST(KernelLaplacian, LinearFunctionIsExact) {
  const auto rows = kernel_laplacian_check([](double q) { return 0.3 + 2 * q; }, [](double) { return 0.0; },
                                           KernelChoice::long_jump(3.0), {64, 256}, std::nullopt);
  for (const auto& r : rows) EXPECT_LE(r.sup_error, 1e-9);
  const auto nn = kernel_laplacian_check([](double q) { return 0.3 + 2 * q; }, [](double) { return 0.0; },
                                         KernelChoice::nearest_neighbor(), {64, 256});
  for (const auto& r : nn) EXPECT_LE(r.sup_error, 1e-9);
}

TEST(KernelLaplacian, NearestNeighbourIsSecondOrder) {
  auto G = [](double q) { return std::sin(2 * std::numbers::pi * q); };
  auto G2 = [](double q) { return -4 * std::numbers::pi * std::numbers::pi * std::sin(2 * std::numbers::pi * q); };
  const auto rows = kernel_laplacian_check(G, G2, KernelChoice::nearest_neighbor(), {64, 128, 256});
  // Taylor remainder: (1/24) N^{-2} sup|G''''| = (2 pi)^4 / (24 N^2)
  const double g4 = std::pow(2 * std::numbers::pi, 4);
  for (const auto& r : rows) EXPECT_LE(r.sup_error, g4 / (24.0 * r.N * r.N) * 1.0001);
  EXPECT_NEAR(rows[1].sup_error / rows[2].sup_error, 4.0, 0.05);
}

TEST(KernelLaplacian, DecreasesForGammaThree) {
  auto G = [](double q) { return std::sin(2 * std::numbers::pi * q) * bump(q); };
  auto G2 = [&](double q) {
    const double h = 1e-4;
    return (G(q + h) + G(q - h) - 2 * G(q)) / (h * h);
  };
  const auto rows = kernel_laplacian_check(G, G2, KernelChoice::long_jump(3.0), {256, 512, 1024});
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].sup_error, rows[i - 1].sup_error);
  EXPECT_THROW(kernel_laplacian_check(G, G2, KernelChoice::long_jump(1.5), {64}), Unsupported);
}

TEST(FractionalOde, ConstantStaysConstant) {
  const ModelParams p = lj(64, 1.5, -1.0, 0.35, 0.35);
  const JumpKernel k = build_kernel(p.kernel, 64);
  const auto out = fractional_generator_ode(p, k, std::vector<double>(63, 0.35), {0.1});
  for (double v : out.front()) EXPECT_NEAR(v, 0.35, 1e-12);
  EXPECT_THROW(fractional_generator_ode(lj(64, 1.5, 0.0, 0.2, 0.8), k, std::vector<double>(63, 0.3), {0.1}), Unsupported);
  EXPECT_THROW(fractional_generator_ode(lj(64, 3.0, -1.0, 0.2, 0.8), build_kernel(KernelChoice::long_jump(3.0), 64),
                                        std::vector<double>(63, 0.3), {0.1}),
               Unsupported);
}

TEST(FractionalOde, SteadyStatePinsAndIsMonotone) {
  const ModelParams p = lj(256, 1.5, -1.0, 0.2, 0.8);
  const auto r = fractional_steady_state(p, build_kernel(p.kernel, 256));
  EXPECT_LE(std::abs(r.front() - 0.2), 0.05);
  EXPECT_LE(std::abs(r.back() - 0.8), 0.05);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r[i], r[i - 1]);
}

TEST(FractionalOde, CauchyUnderDoubling) {
  auto steady = [](int n) {
    const ModelParams p = lj(n, 1.5, -1.0, 0.2, 0.8);
    return fractional_steady_state(p, build_kernel(p.kernel, n));
  };
  const auto a = steady(512), b = steady(1024);
  double d = 0.0;
  for (int x = 1; x < 512; ++x) {
    const double q = double(x) / 512;
    if (q < 0.1 || q > 0.9) continue;
    d = std::max(d, std::abs(a[x - 1] - b[2 * x - 1]));  // x/512 = 2x/1024
  }
  EXPECT_LE(d, 1e-2);
}

TEST(FractionalOde, OperatorSymmetricWithNonPositiveSpectrum) {
  for (int n : {64, 256}) {
    const ModelParams p = lj(n, 1.5, -1.0, 0.2, 0.8);
    const Eigen::MatrixXd a = MeanProfileSystem(p, build_kernel(p.kernel, n)).matrix();
    EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0);
  }
}

TEST(Regimes, NearestNeighbourTable) {
  const auto k = KernelChoice::nearest_neighbor();
  EXPECT_EQ(regime_dispatch(k, -0.5).family, PdeFamily::HeatDirichletCompact);
  const auto d = regime_dispatch(k, 0.5);
  EXPECT_EQ(d.family, PdeFamily::HeatDirichlet);
  EXPECT_EQ(d.time_exponent, 2.0);
  EXPECT_EQ(d.diffusion(), 0.5);
  const auto r = regime_dispatch(k, 1.0, 2.0);
  EXPECT_EQ(r.family, PdeFamily::HeatRobin);
  EXPECT_EQ(*r.robin_coefficient(), 2.0);
  const auto n = regime_dispatch(k, 3.0);
  EXPECT_EQ(n.family, PdeFamily::HeatNeumann);
  EXPECT_EQ(*n.robin_coefficient(), 0.0);
}

TEST(Regimes, LongJumpTable) {
  const double c3 = 1.0 / (2.0 * boost::math::zeta(4.0));
  const auto r = regime_dispatch(KernelChoice::long_jump(3.0), -3.0, 2.0);
  EXPECT_EQ(r.family, PdeFamily::Reaction);
  EXPECT_NEAR(r.kappa_hat, 2.0 * c3, 1e-12);
  EXPECT_EQ(r.sigma_hat, 0.0);
  EXPECT_NEAR(r.time_exponent, 1.0, 1e-15);
  const auto rd = regime_dispatch(KernelChoice::long_jump(3.0), -2.0);
  EXPECT_EQ(rd.family, PdeFamily::ReactionDiffusionDirichlet);
  EXPECT_NEAR(rd.sigma_hat * rd.sigma_hat, 2 * c3 * boost::math::zeta(2.0), 1e-12);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(3.0), 0.0).family, PdeFamily::HeatDirichlet);
  const auto rob = regime_dispatch(KernelChoice::long_jump(3.0), 1.0, 1.0);
  EXPECT_EQ(rob.family, PdeFamily::HeatRobin);
  EXPECT_EQ(rob.m_hat, 0.5);
  EXPECT_NEAR(*rob.robin_coefficient(), 1.0 / (rob.sigma_hat * rob.sigma_hat), 1e-15);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(3.0), 1.5).family, PdeFamily::HeatNeumann);
  const auto f = regime_dispatch(KernelChoice::long_jump(1.5), -1.0);
  EXPECT_EQ(f.family, PdeFamily::FractionalReactionDiffusion);
  EXPECT_EQ(f.time_exponent, 1.5);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(1.5), -2.0).family, PdeFamily::Reaction);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(1.5), 0.0).family, PdeFamily::Unsupported);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(2.0), 0.0).family, PdeFamily::Unsupported);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(0.5), 0.0).family, PdeFamily::Unsupported);
  EXPECT_EQ(regime_dispatch(KernelChoice::long_jump(3.0), NAN).family, PdeFamily::Unsupported);
}

TEST(Regimes, TimeExponentMatchesModel) {
  for (double theta : {-4.0, -3.0, -2.0, 0.0, 1.0, 2.0}) {
    ModelParams p = lj(50, 3.0, theta, 0.2, 0.8);
    EXPECT_NEAR(std::pow(50.0, regime_dispatch(p.kernel, theta).time_exponent), p.time_scale(), 1e-9 * p.time_scale());
  }
}
