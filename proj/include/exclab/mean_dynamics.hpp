#pragma once

// Discrete Kolmogorov equations: the mean profile (any kernel) and the
// two-point correlation (nearest neighbour). Occupation means obey a closed
// linear system because the exclusion dynamics is linear in eta.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <functional>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/model.hpp"
#include "exclab/profiles.hpp"

namespace exclab {

// ---------------------------------------------------------------------------
// Discrete operators on f : {0, ..., N} -> R
// ---------------------------------------------------------------------------

inline double laplacian_N(const std::vector<double>& f, int x) { return f[x + 1] + f[x - 1] - 2.0 * f[x]; }
inline double grad_plus_N(const std::vector<double>& f, int x, int n) { return n * (f[x + 1] - f[x]); }
inline double grad_minus_N(const std::vector<double>& f, int x, int n) { return n * (f[x] - f[x - 1]); }

/// (N^2 B_N^theta f)(x) for x in Lambda_N; f(0) and f(N) enter as boundary data.
inline std::vector<double> apply_B(const ModelParams& p, const std::vector<double>& f) {
  if (p.kernel.is_long_jump()) throw Unsupported("apply_B: nearest-neighbour operator");
  const int n = p.N;
  if (static_cast<int>(f.size()) != n + 1) throw InvalidArgument("apply_B: f must be given on {0,...,N}");
  const double n2 = static_cast<double>(n) * n;
  const double b = p.boundary_strength() / 2.0;
  std::vector<double> out(static_cast<std::size_t>(n - 1));
  for (int x = 1; x <= n - 1; ++x) {
    double v = 0.0;
    if (x > 1) v += 0.5 * (f[x - 1] - f[x]);
    else v += b * (f[0] - f[1]);
    if (x < n - 1) v += 0.5 * (f[x + 1] - f[x]);
    else v += b * (f[n] - f[n - 1]);
    out[static_cast<std::size_t>(x - 1)] = n2 * v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mean profile: d rho / dt = Theta (A rho + c)
// ---------------------------------------------------------------------------

/// A(x,y) = p(y-x) on the bulk, A(x,x) = -sum_y p(y-x) - kappa N^-theta (p(x) + p(N-x)),
/// c(x) = kappa N^-theta (alpha p(x) + beta p(N-x)). Macroscopic time.
class MeanProfileSystem {
 public:
  MeanProfileSystem(const ModelParams& p, const JumpKernel& k) : params_(p), kernel_(&k) {
    p.validate();
    n_ = p.N;
    scale_ = p.time_scale();
    const double s = p.boundary_strength();
    diag_.assign(static_cast<std::size_t>(n_ - 1), 0.0);
    c_.assign(static_cast<std::size_t>(n_ - 1), 0.0);
    prob_.assign(static_cast<std::size_t>(n_), 0.0);
    for (int d = 1; d < n_; ++d) prob_[static_cast<std::size_t>(d)] = k.prob(d);
    for (int x = 1; x <= n_ - 1; ++x) {
      double out = 0.0;
      if (k.is_long_jump()) {
        out = (k.tail(1) - k.tail(x)) + (k.tail(1) - k.tail(n_ - x));  // sum over y in bulk, y != x
      } else {
        out = (x > 1 ? 0.5 : 0.0) + (x < n_ - 1 ? 0.5 : 0.0);
      }
      const double pl = k.prob(x), pr = k.prob(n_ - x);
      diag_[static_cast<std::size_t>(x - 1)] = -out - s * (pl + pr);
      c_[static_cast<std::size_t>(x - 1)] = s * (p.alpha * pl + p.beta * pr);
    }
  }

  int size() const { return n_ - 1; }
  double scale() const { return scale_; }
  const ModelParams& params() const { return params_; }

  /// out = Theta (A rho + c)
  void apply(const std::vector<double>& rho, std::vector<double>& out) const {
    const std::size_t m = static_cast<std::size_t>(n_ - 1);
    out.assign(m, 0.0);
    if (!kernel_->is_long_jump()) {
      for (std::size_t i = 0; i < m; ++i) {
        double v = diag_[i] * rho[i] + c_[i];
        if (i > 0) v += 0.5 * rho[i - 1];
        if (i + 1 < m) v += 0.5 * rho[i + 1];
        out[i] = scale_ * v;
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      double v = diag_[i] * rho[i] + c_[i];
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) v += prob_[i > j ? i - j : j - i] * rho[j];
      out[i] = scale_ * v;
    }
  }

  Eigen::MatrixXd matrix() const {
    const int m = n_ - 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      a(i, i) = scale_ * diag_[static_cast<std::size_t>(i)];
      for (int j = 0; j < m; ++j)
        if (j != i) a(i, j) = scale_ * prob_[static_cast<std::size_t>(std::abs(i - j))];
    }
    return a;
  }

  Eigen::SparseMatrix<double> sparse_matrix() const {
    const int m = n_ - 1;
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < m; ++i) {
      t.emplace_back(i, i, scale_ * diag_[static_cast<std::size_t>(i)]);
      for (int j = 0; j < m; ++j) {
        const double v = prob_[static_cast<std::size_t>(std::abs(i - j))];
        if (j != i && v != 0.0) t.emplace_back(i, j, scale_ * v);
      }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }

  Eigen::VectorXd offset() const {
    Eigen::VectorXd c(n_ - 1);
    for (int i = 0; i < n_ - 1; ++i) c(i) = scale_ * c_[static_cast<std::size_t>(i)];
    return c;
  }

  /// Solution of A rho + c = 0. Fails when there is no boundary coupling.
  std::vector<double> stationary() const {
    if (!(params_.kappa > 0.0)) throw NumericalFailure("stationary profile is not unique for kappa = 0");
    Eigen::VectorXd r;
    if (!kernel_->is_long_jump()) {
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sparse_matrix());
      if (lu.info() != Eigen::Success) throw NumericalFailure("stationary: sparse factorization failed");
      r = lu.solve(-offset());
    } else {
      r = matrix().partialPivLu().solve(-offset());
    }
    return {r.data(), r.data() + r.size()};
  }

 private:
  ModelParams params_;
  const JumpKernel* kernel_;
  int n_ = 0;
  double scale_ = 1.0;
  std::vector<double> diag_, c_, prob_;
};

/// Exact evolution through the spectral decomposition of the symmetric
/// matrix Theta A: rho(t) = V [ e^{lt} V^T rho0 + (e^{lt} - 1)/l V^T c ].
class ProfileEvolution {
 public:
  explicit ProfileEvolution(const MeanProfileSystem& sys) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.matrix());
    if (es.info() != Eigen::Success) throw NumericalFailure("ProfileEvolution: eigendecomposition failed");
    lambda_ = es.eigenvalues();
    v_ = es.eigenvectors();
    c_ = v_.transpose() * sys.offset();
  }

  std::vector<double> at(const std::vector<double>& rho0, double t) const {
    const Eigen::Map<const Eigen::VectorXd> r0(rho0.data(), static_cast<Eigen::Index>(rho0.size()));
    const Eigen::VectorXd a = v_.transpose() * r0;
    Eigen::VectorXd y(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double l = lambda_(k);
      const double e = std::exp(l * t);
      const double phi = std::abs(l * t) < 1e-300 ? t : std::expm1(l * t) / l;
      y(k) = e * a(k) + phi * c_(k);
    }
    const Eigen::VectorXd r = v_ * y;
    return {r.data(), r.data() + r.size()};
  }

  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

  /// 1 / (smallest decay rate), the slowest relaxation time of the mean.
  double relaxation_time() const { return 1.0 / lambda_.cwiseAbs().minCoeff(); }

  /// Slowest relaxation time among modes that rho0 - rho_ss actually excites
  /// (coefficient above rel_tol times the largest one).
  double excited_relaxation_time(const std::vector<double>& rho0, const std::vector<double>& rho_ss,
                                 double rel_tol = 1e-8) const {
    Eigen::VectorXd d(static_cast<Eigen::Index>(rho0.size()));
    for (std::size_t i = 0; i < rho0.size(); ++i) d(static_cast<Eigen::Index>(i)) = rho0[i] - rho_ss[i];
    const Eigen::VectorXd a = (v_.transpose() * d).cwiseAbs();
    const double top = a.maxCoeff();
    double slow = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
      if (a(k) > rel_tol * top) slow = std::max(slow, 1.0 / std::abs(lambda_(k)));
    return slow;
  }

 private:
  Eigen::VectorXd lambda_, c_;
  Eigen::MatrixXd v_;
};

constexpr int kDenseEvolutionMaxN = 256;

namespace detail {

/// Adaptive Dormand-Prince integration of y' = f(y) through `times`.
template <class Rhs>
std::vector<std::vector<double>> integrate_dopri(Rhs&& rhs, std::vector<double> y, const std::vector<double>& times,
                                                 double tol, long max_steps = 20'000'000L) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
  std::vector<std::vector<double>> out;
  double t = 0.0;
  long steps = 0;
  auto sys = [&](const State& x, State& dx, double) { rhs(x, dx); };
  for (double target : times) {
    if (target < t) throw InvalidArgument("integrate: times must be non-decreasing");
    if (target > t) {
      double dt = std::min(target - t, 1e-6 * std::max(1.0, target));
      while (t < target) {
        if (t + dt > target) dt = target - t;
        const auto res = stepper.try_step(sys, y, t, dt);
        if (res == ode::fail) {
          if (dt < 1e-300 || !std::isfinite(dt)) throw NumericalFailure("integrate: step size collapsed");
          continue;
        }
        if (++steps > max_steps)
          throw NumericalFailure("integrate: step budget exhausted (stiff system; use the matrix-exponential path)");
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace detail

/// Sample g at x/N, x in Lambda_N.
inline std::vector<double> sample_profile(const std::function<double(double)>& g, int n) {
  std::vector<double> r;
  for (int x = 1; x <= n - 1; ++x) r.push_back(g(static_cast<double>(x) / n));
  return r;
}

/// Mean profile rho_t^N at each requested macroscopic time.
inline std::vector<std::vector<double>> mean_profile_ode(const ModelParams& p, const JumpKernel& k,
                                                         const std::vector<double>& rho0,
                                                         const std::vector<double>& times, double tol = 1e-9) {
  MeanProfileSystem sys(p, k);
  if (static_cast<int>(rho0.size()) != sys.size()) throw InvalidArgument("mean_profile_ode: rho0 has wrong length");
  for (double t : times)
    if (!(t >= 0.0)) throw InvalidArgument("mean_profile_ode: times must be >= 0");
  std::vector<std::vector<double>> out;
  if (p.N <= kDenseEvolutionMaxN) {
    ProfileEvolution ev(sys);
    for (double t : times) out.push_back(ev.at(rho0, t));
    return out;
  }
  return detail::integrate_dopri([&](const std::vector<double>& y, std::vector<double>& dy) { sys.apply(y, dy); },
                                 rho0, times, tol);
}

/// Nearest-neighbour discrete heat equation.
inline std::vector<std::vector<double>> discrete_profile_ode(const ModelParams& p, const std::vector<double>& rho0,
                                                             const std::vector<double>& times, double tol = 1e-9) {
  if (p.kernel.is_long_jump()) throw Unsupported("discrete_profile_ode: nearest-neighbour model only");
  const JumpKernel k = build_kernel(p.kernel, p.N);
  return mean_profile_ode(p, k, rho0, times, tol);
}

inline void require_fractional(const ModelParams& p) {
  if (!p.kernel.is_long_jump() || !(p.kernel.gamma > 1.0 && p.kernel.gamma < 2.0))
    throw Unsupported("fractional_generator_ode: needs a long-jump kernel with gamma in (1,2)");
  if (p.theta != -1.0) throw Unsupported("fractional_generator_ode: only theta = -1 is covered by the theory");
}

/// Long-jump Kolmogorov system with gamma in (1,2), theta = -1 (time scale N^gamma).
inline std::vector<std::vector<double>> fractional_generator_ode(const ModelParams& p, const JumpKernel& k,
                                                                 const std::vector<double>& rho0,
                                                                 const std::vector<double>& times,
                                                                 double tol = 1e-9) {
  require_fractional(p);
  return mean_profile_ode(p, k, rho0, times, tol);
}

inline std::vector<double> fractional_steady_state(const ModelParams& p, const JumpKernel& k) {
  require_fractional(p);
  return MeanProfileSystem(p, k).stationary();
}

// ---------------------------------------------------------------------------
// Two-point correlations (nearest neighbour)
// ---------------------------------------------------------------------------

/// d phi/dt = N^2 A phi + g_t on V_N with phi = 0 on the absorbing boundary.
/// A is the exact generator of the walk (x,y) -> (x +- 1, y), (x, y +- 1):
/// rate 1/2 inside V_N, kappa N^-theta / 2 into {x = 0} or {y = N}, no moves
/// onto the diagonal. Source g(x, x+1) = -(N^2/2) (rho(x+1) - rho(x))^2.
class CorrelationSystem {
 public:
  explicit CorrelationSystem(const ModelParams& p) : params_(p), n_(p.N) {
    if (p.kernel.is_long_jump()) throw Unsupported("correlation_ode: nearest-neighbour model only");
    p.validate();
    if (n_ < 3) throw InvalidArgument("correlation_ode: V_N is empty for N < 3");
    dim_ = static_cast<std::size_t>(n_ - 1) * static_cast<std::size_t>(n_ - 2) / 2;
    const double scale = static_cast<double>(n_) * n_;
    const double absorb = p.boundary_strength() / 2.0;
    std::vector<Eigen::Triplet<double>> t;
    for (int x = 1; x <= n_ - 2; ++x)
      for (int y = x + 1; y <= n_ - 1; ++y) {
        const int i = static_cast<int>(index(x, y));
        double out = 0.0;
        const int moves[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& mv : moves) {
          const int u = mv[0], v = mv[1];
          if (u == v) continue;
          if (u == 0 || v == n_) {
            out += absorb;
            continue;
          }
          t.emplace_back(i, static_cast<int>(index(u, v)), 0.5 * scale);
          out += 0.5;
        }
        t.emplace_back(i, i, -out * scale);
      }
    a_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    a_.setFromTriplets(t.begin(), t.end());
  }

  std::size_t dim() const { return dim_; }
  std::size_t index(int x, int y) const {
    const std::size_t m = static_cast<std::size_t>(n_ - 1);
    const std::size_t i = static_cast<std::size_t>(x - 1);
    return i * m - i * (i + 1) / 2 + static_cast<std::size_t>(y - x - 1);
  }
  const Eigen::SparseMatrix<double>& matrix() const { return a_; }

  /// Source term for a bulk profile rho (index x-1).
  Eigen::VectorXd source(const std::vector<double>& rho) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    const double scale = static_cast<double>(n_) * n_;
    for (int x = 1; x <= n_ - 2; ++x) {
      const double d = rho[static_cast<std::size_t>(x)] - rho[static_cast<std::size_t>(x - 1)];
      g(static_cast<Eigen::Index>(index(x, x + 1))) = -0.5 * scale * d * d;
    }
    return g;
  }

  /// Stationary correlations for a stationary profile rho.
  std::vector<double> steady_state(const std::vector<double>& rho) const {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a_);
    if (lu.info() != Eigen::Success) throw NumericalFailure("correlation steady state: factorization failed");
    const Eigen::VectorXd phi = lu.solve(-source(rho));
    return {phi.data(), phi.data() + phi.size()};
  }

  /// Joint integration of (rho, phi) from (rho0, phi0) through `times`.
  /// Returns phi at each time.
  std::vector<std::vector<double>> evolve(const JumpKernel& k, const std::vector<double>& rho0,
                                          const std::vector<double>& phi0, const std::vector<double>& times,
                                          double tol = 1e-9) const {
    const std::size_t m = static_cast<std::size_t>(n_ - 1);
    if (rho0.size() != m) throw InvalidArgument("correlation_ode: rho path has the wrong dimension");
    if (phi0.size() != dim_) throw InvalidArgument("correlation_ode: phi0 has the wrong dimension");
    MeanProfileSystem prof(params_, k);
    std::vector<double> y(rho0);
    y.insert(y.end(), phi0.begin(), phi0.end());
    std::vector<double> rho_buf(m), drho(m);
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds) {
      ds.resize(s.size());
      std::copy(s.begin(), s.begin() + static_cast<long>(m), rho_buf.begin());
      prof.apply(rho_buf, drho);
      std::copy(drho.begin(), drho.end(), ds.begin());
      const Eigen::Map<const Eigen::VectorXd> phi(s.data() + m, static_cast<Eigen::Index>(dim_));
      Eigen::Map<Eigen::VectorXd> dphi(ds.data() + m, static_cast<Eigen::Index>(dim_));
      dphi = a_ * phi + source(rho_buf);
    };
    auto states = detail::integrate_dopri(rhs, y, times, tol);
    std::vector<std::vector<double>> out;
    for (auto& s : states) out.emplace_back(s.begin() + static_cast<long>(m), s.end());
    return out;
  }

 private:
  ModelParams params_;
  int n_;
  std::size_t dim_ = 0;
  Eigen::SparseMatrix<double> a_;
};

}  // namespace exclab
