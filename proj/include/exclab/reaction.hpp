#pragma once

// Reaction and reaction-diffusion equations with the singular boundary
// potential of the long-jump model:
//   d_t rho = D rho'' + kh { (alpha - rho) q^-(g+1) + (beta - rho) (1-q)^-(g+1) },  D = sh^2 / 2.

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/profiles.hpp"

namespace exclab {

/// W(q) = q^-(g+1) + (1-q)^-(g+1)
inline double reaction_weight(double q, double gamma) {
  return std::pow(q, -(gamma + 1.0)) + std::pow(1.0 - q, -(gamma + 1.0));
}

/// Pointwise equilibrium of the reaction term.
inline double reaction_equilibrium(double q, double gamma, double alpha, double beta) {
  // divide through by q^-(g+1) + (1-q)^-(g+1) in a form that stays finite near the ends
  const double a = std::pow(1.0 - q, gamma + 1.0), b = std::pow(q, gamma + 1.0);
  return (alpha * a + beta * b) / (a + b);
}

/// rho_t(q) = rho_inf(q) + (g(q) - rho_inf(q)) exp(-kh W(q) t).
inline std::vector<double> reaction_exact(const Profile& g, double kappa_hat, double gamma, double alpha, double beta,
                                          double t, const std::vector<double>& grid) {
  if (!(t >= 0.0)) throw InvalidArgument("reaction_exact: t must be >= 0");
  if (!(kappa_hat >= 0.0)) throw InvalidArgument("reaction_exact: kappa_hat must be >= 0");
  std::vector<double> out;
  out.reserve(grid.size());
  for (double q : grid) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("reaction_exact: grid point outside (0,1), potential is singular");
    const double inf = reaction_equilibrium(q, gamma, alpha, beta);
    out.push_back(inf + (g(q) - inf) * std::exp(-kappa_hat * reaction_weight(q, gamma) * t));
  }
  return out;
}

struct ReactionDiffusionResult {
  std::vector<double> grid;    // cell centres (i - 1/2) / M
  std::vector<double> values;
  std::vector<double> stationary;
  int steps = 0;
  double dt = 0.0;
};

struct ReactionDiffusionOptions {
  int cells = 512;
  double dt_max = 0.0;   // 0 -> 1/M
  int startup_steps = 2; // backward-Euler half steps replacing the first Crank-Nicolson step
};

/// Cell-centred finite volumes with Dirichlet ghosts 2 alpha - u_1, 2 beta - u_M.
///
/// The scheme evolves v = u - u*, u* the semi-discrete steady state, by Strang
/// splitting: exact reaction half steps v <- v exp(-kh W dt / 2) around a
/// Crank-Nicolson diffusion step. u* is therefore an exact fixed point.
class ReactionDiffusionFd {
 public:
  ReactionDiffusionFd(double sigma_hat, double kappa_hat, double gamma, double alpha, double beta,
                      ReactionDiffusionOptions opt = {})
      : d_(0.5 * sigma_hat * sigma_hat), kh_(kappa_hat), gamma_(gamma), alpha_(alpha), beta_(beta), opt_(opt) {
    if (!(sigma_hat > 0.0)) throw InvalidArgument("reaction_diffusion_fd: sigma_hat must be positive");
    if (!(kappa_hat >= 0.0)) throw InvalidArgument("reaction_diffusion_fd: kappa_hat must be >= 0");
    if (opt_.cells < 16) throw InvalidArgument("reaction_diffusion_fd: need at least 16 cells");
    if (!(opt_.dt_max >= 0.0)) throw InvalidArgument("reaction_diffusion_fd: dt_max must be >= 0");
    const int m = opt_.cells;
    h_ = 1.0 / m;
    for (int i = 1; i <= m; ++i) grid_.push_back((i - 0.5) * h_);
    for (double q : grid_) rate_.push_back(kh_ * reaction_weight(q, gamma_));
    lap_ = laplacian();
    solve_stationary();
  }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& stationary() const { return ustar_; }

  /// Semi-discrete right-hand side D L u + b + kh W (rho_inf - u).
  std::vector<double> rhs(const std::vector<double>& u) const {
    const Eigen::Map<const Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd r = d_ * (lap_ * x);
    const int m = opt_.cells;
    r(0) += d_ * 2.0 * alpha_ / (h_ * h_);
    r(m - 1) += d_ * 2.0 * beta_ / (h_ * h_);
    for (int i = 0; i < m; ++i)
      r(i) += rate_[static_cast<std::size_t>(i)] *
              (reaction_equilibrium(grid_[static_cast<std::size_t>(i)], gamma_, alpha_, beta_) - u[static_cast<std::size_t>(i)]);
    return {r.data(), r.data() + r.size()};
  }

  ReactionDiffusionResult run(const Profile& g, double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("reaction_diffusion_fd: t must be >= 0");
    std::vector<double> u0;
    for (double q : grid_) u0.push_back(g(q));
    return run(u0, t);
  }

  ReactionDiffusionResult run(const std::vector<double>& u0, double t) const {
    const int m = opt_.cells;
    if (static_cast<int>(u0.size()) != m) throw InvalidArgument("reaction_diffusion_fd: initial data has wrong size");
    ReactionDiffusionResult res;
    res.grid = grid_;
    res.stationary = ustar_;
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = u0[static_cast<std::size_t>(i)] - ustar_[static_cast<std::size_t>(i)];
    if (t > 0.0) {
      const double cap = opt_.dt_max > 0.0 ? opt_.dt_max : h_;
      const int n = std::max(1, static_cast<int>(std::ceil(t / cap - 1e-12)));
      const double dt = t / n;
      res.dt = dt;
      res.steps = n;
      const int start = std::min(n, std::max(0, opt_.startup_steps / 2));
      if (start > 0) {
        // Rannacher start: each of the first steps is two implicit Euler half steps
        const auto be = factor(dt / 2.0, 1.0);
        for (int s = 0; s < start; ++s) {
          react(v, dt / 2.0);
          for (int k = 0; k < 2; ++k) v = be->solve(v);
          react(v, dt / 2.0);
        }
      }
      if (n > start) {
        const auto cn = factor(dt, 0.5);
        const Eigen::SparseMatrix<double> explicit_part = identity(m) + (0.5 * dt * d_) * lap_;
        for (int s = start; s < n; ++s) {
          react(v, dt / 2.0);
          v = cn->solve(Eigen::VectorXd(explicit_part * v));
          react(v, dt / 2.0);
        }
      }
      for (int i = 0; i < m; ++i)
        if (!std::isfinite(v(i))) {
          std::ostringstream os;
          os << "reaction_diffusion_fd: non-finite value at cell " << i << " (dt=" << dt << ", steps=" << n << ")";
          throw NumericalFailure(os.str());
        }
    }
    for (int i = 0; i < m; ++i) res.values.push_back(ustar_[static_cast<std::size_t>(i)] + v(i));
    return res;
  }

 private:
  using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>>;

  static Eigen::SparseMatrix<double> identity(int m) {
    Eigen::SparseMatrix<double> i(m, m);
    i.setIdentity();
    return i;
  }

  // homogeneous part of the ghost-cell Laplacian
  Eigen::SparseMatrix<double> laplacian() const {
    const int m = opt_.cells;
    const double s = 1.0 / (h_ * h_);
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < m; ++i) {
      double diag = -2.0 * s;
      if (i == 0 || i == m - 1) diag -= s;
      t.emplace_back(i, i, diag);
      if (i > 0) t.emplace_back(i, i - 1, s);
      if (i + 1 < m) t.emplace_back(i, i + 1, s);
    }
    Eigen::SparseMatrix<double> l(m, m);
    l.setFromTriplets(t.begin(), t.end());
    return l;
  }

  std::unique_ptr<Solver> factor(double dt, double weight) const {
    const int m = opt_.cells;
    Eigen::SparseMatrix<double> a = identity(m) - (weight * dt * d_) * lap_;
    auto s = std::make_unique<Solver>();
    s->compute(a);
    if (s->info() != Eigen::Success) throw NumericalFailure("reaction_diffusion_fd: factorization failed");
    return s;
  }

  void react(Eigen::VectorXd& v, double dt) const {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= std::exp(-rate_[static_cast<std::size_t>(i)] * dt);
  }

  void solve_stationary() {
    const int m = opt_.cells;
    Eigen::SparseMatrix<double> a = d_ * lap_;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(0) -= d_ * 2.0 * alpha_ / (h_ * h_);
    b(m - 1) -= d_ * 2.0 * beta_ / (h_ * h_);
    for (int i = 0; i < m; ++i) {
      a.coeffRef(i, i) -= rate_[static_cast<std::size_t>(i)];
      b(i) -= rate_[static_cast<std::size_t>(i)] * reaction_equilibrium(grid_[static_cast<std::size_t>(i)], gamma_, alpha_, beta_);
    }
    Solver s;
    s.compute(a);
    if (s.info() != Eigen::Success) throw NumericalFailure("reaction_diffusion_fd: steady-state factorization failed");
    const Eigen::VectorXd u = s.solve(b);
    ustar_.assign(u.data(), u.data() + m);
  }

  double d_, kh_, gamma_, alpha_, beta_;
  ReactionDiffusionOptions opt_;
  double h_ = 0.0;
  std::vector<double> grid_, rate_, ustar_;
  Eigen::SparseMatrix<double> lap_;
};

inline ReactionDiffusionResult reaction_diffusion_fd(const Profile& g, double sigma_hat, double kappa_hat, double gamma,
                                                     double alpha, double beta, double t,
                                                     ReactionDiffusionOptions opt = {}) {
  return ReactionDiffusionFd(sigma_hat, kappa_hat, gamma, alpha, beta, opt).run(g, t);
}

}  // namespace exclab
