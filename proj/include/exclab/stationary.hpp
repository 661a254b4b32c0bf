#pragma once

// Closed-form stationary objects and the brute-force stationary oracle.

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/generator.hpp"
#include "exclab/model.hpp"

namespace exclab {

namespace detail {
inline void require_nn(const ModelParams& p, const char* what) {
  if (p.kernel.is_long_jump())
    throw Unsupported(std::string(what) + ": no closed form for the long-jump model");
}
}  // namespace detail

/// Slope of the stationary mean profile: kappa (beta - alpha) / (2 N^theta + kappa (N-2)).
inline double stationary_slope(const ModelParams& p) {
  detail::require_nn(p, "stationary_slope");
  const double nt = std::pow(static_cast<double>(p.N), p.theta);
  return p.kappa * (p.beta - p.alpha) / (2.0 * nt + p.kappa * (p.N - 2));
}

/// Intercept b_N = a_N (N^theta / kappa - 1) + alpha.
inline double stationary_intercept(const ModelParams& p) {
  const double a = stationary_slope(p);
  if (a == 0.0) return p.alpha;
  const double nt = std::pow(static_cast<double>(p.N), p.theta);
  return a * (nt / p.kappa - 1.0) + p.alpha;
}

/// rho_ss(x) = a_N x + b_N, x in {0, ..., N}.
inline double rho_ss(int x, const ModelParams& p) {
  if (x < 0 || x > p.N) throw InvalidArgument("rho_ss: x outside {0,...,N}");
  return stationary_slope(p) * x + stationary_intercept(p);
}

inline std::vector<double> rho_ss_profile(const ModelParams& p) {
  std::vector<double> out;
  for (int x = 1; x <= p.N - 1; ++x) out.push_back(rho_ss(x, p));
  return out;
}

/// Stationary two-point correlation, kappa = 1 only.
inline double phi_ss(int x, int y, const ModelParams& p) {
  detail::require_nn(p, "phi_ss");
  if (p.kappa != 1.0) throw Unsupported("phi_ss: closed form is only available for kappa = 1");
  if (!(0 < x && x < y && y < p.N)) throw InvalidArgument("phi_ss: (x,y) must satisfy 0 < x < y < N");
  const double n = p.N;
  const double nt = std::pow(n, p.theta);
  const double d = p.alpha - p.beta;
  const double den = 2.0 * nt + n - 2.0;
  return -d * d * (x + nt - 1.0) * (n - y + nt - 1.0) / (den * den * (2.0 * nt + n - 3.0));
}

/// Largest |phi_ss| over V_N (attained at the site pair adjacent to the centre).
inline double max_abs_phi_ss(const ModelParams& p) {
  double best = 0.0;
  // (x + c)(N - y + c) is maximised with y = x + 1; scan x.
  for (int x = 1; x <= p.N - 2; ++x) best = std::max(best, std::abs(phi_ss(x, x + 1, p)));
  return best;
}

/// Dirichlet stationary profile (beta - alpha) q + alpha.
inline double rho_dir(double q, double alpha, double beta) { return (beta - alpha) * q + alpha; }

/// Robin stationary profile for d rho(0) = k (rho(0) - alpha), d rho(1) = k (beta - rho(1)).
inline double rho_rob(double q, double k, double alpha, double beta) {
  const double s = k * (beta - alpha) / (k + 2.0);
  if (k == 0.0) return 0.5 * (alpha + beta);  // Neumann: no preferred level; symmetric choice
  return alpha + s / k + s * q;
}

/// Macroscopic stationary profile by theta branch (nearest neighbour).
inline double macro_profile(double q, double theta, double kappa, double alpha, double beta) {
  if (q < 0.0 || q > 1.0) throw InvalidArgument("macro_profile: q outside [0,1]");
  if (theta < 1.0) return rho_dir(q, alpha, beta);
  if (theta == 1.0) return kappa * (beta - alpha) * q / (2.0 + kappa) + alpha + (beta - alpha) / (2.0 + kappa);
  return 0.5 * (alpha + beta);
}

struct LogPartition {
  double log_abs = 0.0;
  int sign = 1;
};

/// log Z_{N-1} with Z_{N-1} = (alpha - beta)^{-(N-1)} Gamma(2N^theta + N - 1) / Gamma(2N^theta).
inline LogPartition log_partition(const ModelParams& p) {
  if (p.alpha == p.beta) throw InvalidArgument("log_partition: undefined for alpha == beta");
  const double n = p.N;
  const double nt = std::pow(n, p.theta);
  LogPartition z;
  z.log_abs = -(n - 1.0) * std::log(std::abs(p.alpha - p.beta)) + std::lgamma(2.0 * nt + n - 1.0) -
              std::lgamma(2.0 * nt);
  z.sign = (p.alpha < p.beta && (p.N - 1) % 2 == 1) ? -1 : 1;
  return z;
}

struct StationaryOracle {
  std::vector<double> distribution;  // indexed by LatticeState::encode
  std::vector<double> profile;       // index x-1
  std::vector<std::vector<double>> correlation;  // [x-1][y-1], symmetric, zero diagonal
  double residual = 0.0;             // ||pi Q||_inf
  double rcond = 0.0;
};

/// Exact stationary law of the chain from its dense generator.
inline StationaryOracle brute_force_stationary(const ModelParams& p, const JumpKernel& k) {
  const Eigen::MatrixXd q = generator_matrix(p, k);
  const int m = static_cast<int>(q.rows());
  Eigen::MatrixXd a = q.transpose();
  a.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  StationaryOracle out;
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-14)) {
    std::ostringstream os;
    os << "brute_force_stationary: singular system (rcond=" << out.rcond << ")";
    throw NumericalFailure(os.str());
  }
  const Eigen::VectorXd pi = lu.solve(rhs);
  out.residual = (pi.transpose() * q).cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-12)) {
    std::ostringstream os;
    os << "brute_force_stationary: residual " << out.residual << " exceeds 1e-12 (rcond=" << out.rcond << ")";
    throw NumericalFailure(os.str());
  }
  out.distribution.assign(pi.data(), pi.data() + m);
  const int sites = p.N - 1;
  out.profile.assign(static_cast<std::size_t>(sites), 0.0);
  std::vector<std::vector<double>> joint(static_cast<std::size_t>(sites), std::vector<double>(static_cast<std::size_t>(sites), 0.0));
  for (int c = 0; c < m; ++c)
    for (int i = 0; i < sites; ++i) {
      if (!((c >> i) & 1)) continue;
      out.profile[static_cast<std::size_t>(i)] += pi(c);
      for (int j = i + 1; j < sites; ++j)
        if ((c >> j) & 1) joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += pi(c);
    }
  out.correlation = joint;
  for (int i = 0; i < sites; ++i)
    for (int j = 0; j < sites; ++j) {
      auto& v = out.correlation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (i == j) {
        v = 0.0;
      } else if (i < j) {
        v = joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
            out.profile[static_cast<std::size_t>(i)] * out.profile[static_cast<std::size_t>(j)];
      } else {
        v = joint[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] -
            out.profile[static_cast<std::size_t>(i)] * out.profile[static_cast<std::size_t>(j)];
      }
    }
  return out;
}

}  // namespace exclab
