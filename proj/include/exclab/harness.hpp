#pragma once

// End-to-end experiments: Monte Carlo ensembles against the discrete mean
// evolution and the dispatched continuum equation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/kmc.hpp"
#include "exclab/mean_dynamics.hpp"
#include "exclab/model.hpp"
#include "exclab/observables.hpp"
#include "exclab/profiles.hpp"
#include "exclab/reaction.hpp"
#include "exclab/regimes.hpp"
#include "exclab/spectral.hpp"
#include "exclab/stationary.hpp"

namespace exclab {

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, printed as 16 hex digits. Stable across platforms.
inline std::string stable_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::string describe(const ModelParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "N=" << p.N << ";theta=" << p.theta << ";kappa=" << p.kappa << ";alpha=" << p.alpha << ";beta=" << p.beta
     << ";kernel=" << p.kernel.name();
  if (p.kernel.is_long_jump()) os << ";gamma=" << p.kernel.gamma;
  return os.str();
}

struct ReportRow {
  std::string experiment;
  std::string param_hash;
  std::string norm;
  double value = 0.0;  // |estimate - reference| (or the statistic itself)
  double tol = 0.0;    // max(abs_tol, 3 stderr)
  bool pass = false;
  // run metadata
  std::string params;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  double stderr_ = 0.0;
  double abs_tol = 0.0;
};

/// |estimate - reference| <= max(abs_tol, 3 stderr).
inline ReportRow compare(std::string experiment, std::string params, std::string norm, double estimate,
                         double reference, double stderr_, double abs_tol, std::uint64_t seed = 0,
                         std::size_t replicas = 0) {
  ReportRow r;
  r.experiment = std::move(experiment);
  r.params = std::move(params);
  r.param_hash = stable_hash(r.params);
  r.norm = std::move(norm);
  r.value = std::abs(estimate - reference);
  r.stderr_ = stderr_;
  r.abs_tol = abs_tol;
  r.tol = std::max(abs_tol, 3.0 * stderr_);
  r.pass = r.value <= r.tol;
  r.seed = seed;
  r.replicas = replicas;
  return r;
}

// ---------------------------------------------------------------------------
// Macroscopic box grid
// ---------------------------------------------------------------------------

/// Sites x in Lambda_N grouped by floor(B x / N); box b covers [b/B, (b+1)/B).
struct BoxGrid {
  int n = 0;
  int boxes = 0;
  std::vector<int> first, last;  // inclusive site ranges
  std::vector<double> center;

  int size(int b) const { return last[static_cast<std::size_t>(b)] - first[static_cast<std::size_t>(b)] + 1; }

  /// Average of site values (index x-1) over each box.
  std::vector<double> average(const std::vector<double>& sites) const {
    std::vector<double> out;
    for (int b = 0; b < boxes; ++b) {
      double s = 0.0;
      for (int x = first[static_cast<std::size_t>(b)]; x <= last[static_cast<std::size_t>(b)]; ++x)
        s += sites[static_cast<std::size_t>(x - 1)];
      out.push_back(s / size(b));
    }
    return out;
  }
};

inline BoxGrid make_box_grid(int n, int boxes) {
  if (boxes < 1 || boxes > n - 1) throw InvalidArgument("box grid: need 1 <= boxes <= N-1");
  BoxGrid g;
  g.n = n;
  g.boxes = boxes;
  g.first.assign(static_cast<std::size_t>(boxes), 0);
  g.last.assign(static_cast<std::size_t>(boxes), -1);
  for (int x = 1; x <= n - 1; ++x) {
    const int b = std::min(boxes - 1, static_cast<int>(static_cast<long long>(boxes) * x / n));
    auto& f = g.first[static_cast<std::size_t>(b)];
    if (f == 0) f = x;
    g.last[static_cast<std::size_t>(b)] = x;
  }
  for (int b = 0; b < boxes; ++b) {
    if (g.first[static_cast<std::size_t>(b)] == 0) throw InvalidArgument("box grid: empty box, use fewer boxes");
    g.center.push_back(0.5 * (g.first[static_cast<std::size_t>(b)] + g.last[static_cast<std::size_t>(b)]) / n);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Test-function panel for pairings <pi, G>
// ---------------------------------------------------------------------------

struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  bool compact = false;  // support inside (0,1)
};

inline std::vector<TestFunction> pairing_panel() {
  const double pi = std::numbers::pi;
  auto bump = [](double c, double w) {
    return [c, w](double q) {
      const double u = (q - c) / w;
      return std::abs(u) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - u * u));
    };
  };
  return {
      {"one", [](double) { return 1.0; }, false},
      {"q", [](double q) { return q; }, false},
      {"sin_pi_q", [pi](double q) { return std::sin(pi * q); }, false},
      {"cos_pi_q", [pi](double q) { return std::cos(pi * q); }, false},
      {"bump_c0.5_w0.3", bump(0.5, 0.3), true},
      {"bump_c0.3_w0.2", bump(0.3, 0.2), true},
      {"bump_c0.75_w0.15", bump(0.75, 0.15), true},
  };
}

// ---------------------------------------------------------------------------
// Accumulators
// ---------------------------------------------------------------------------

struct BoxEstimate {
  std::vector<double> mean, stderr_;
};

/// Per snapshot: site counts, per-replica box counts with their squares
/// (integers, exact merge) and per-replica pairing sums.
class SnapshotStats {
 public:
  SnapshotStats(std::size_t snapshots, const BoxGrid& grid, std::vector<TestFunction> panel = {})
      : grid_(grid), panel_(std::move(panel)), density_(snapshots, grid.n),
        box_sum_(snapshots, std::vector<std::int64_t>(static_cast<std::size_t>(grid.boxes), 0)),
        box_sq_(box_sum_), pair_sum_(snapshots, std::vector<double>(panel_.size(), 0.0)), pair_sq_(pair_sum_),
        replicas_(snapshots, 0) {
    for (const auto& g : panel_) {
      std::vector<double> v;
      for (int x = 1; x <= grid.n - 1; ++x) v.push_back(g.f(static_cast<double>(x) / grid.n));
      gx_.push_back(std::move(v));
    }
  }

  void on_snapshot(std::size_t k, const LatticeState& s) {
    density_.on_snapshot(k, s);
    for (int b = 0; b < grid_.boxes; ++b) {
      std::int64_t c = 0;
      for (int x = grid_.first[static_cast<std::size_t>(b)]; x <= grid_.last[static_cast<std::size_t>(b)]; ++x) c += s(x);
      box_sum_[k][static_cast<std::size_t>(b)] += c;
      box_sq_[k][static_cast<std::size_t>(b)] += c * c;
    }
    for (std::size_t j = 0; j < panel_.size(); ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < s.occupancy.size(); ++i)
        if (s.occupancy[i]) v += gx_[j][i];
      v /= (grid_.n - 1);
      pair_sum_[k][j] += v;
      pair_sq_[k][j] += v * v;
    }
    ++replicas_[k];
  }

  void merge(const SnapshotStats& o) {
    density_.merge(o.density_);
    for (std::size_t k = 0; k < box_sum_.size(); ++k) {
      for (std::size_t b = 0; b < box_sum_[k].size(); ++b) {
        box_sum_[k][b] += o.box_sum_[k][b];
        box_sq_[k][b] += o.box_sq_[k][b];
      }
      for (std::size_t j = 0; j < panel_.size(); ++j) {
        pair_sum_[k][j] += o.pair_sum_[k][j];
        pair_sq_[k][j] += o.pair_sq_[k][j];
      }
      replicas_[k] += o.replicas_[k];
    }
  }

  DensityEstimate density(std::size_t k, double alpha, double beta) const { return density_.estimate(k, alpha, beta); }

  BoxEstimate boxes(std::size_t k) const {
    const double r = static_cast<double>(replicas_.at(k));
    if (r < 2) throw InvalidArgument("SnapshotStats: need >= 2 replicas");
    BoxEstimate e;
    for (int b = 0; b < grid_.boxes; ++b) {
      const double m = grid_.size(b);
      const double s = static_cast<double>(box_sum_[k][static_cast<std::size_t>(b)]);
      const double s2 = static_cast<double>(box_sq_[k][static_cast<std::size_t>(b)]);
      const double mean = s / r;
      const double var = std::max(0.0, (s2 - r * mean * mean) / (r - 1.0));
      e.mean.push_back(mean / m);
      e.stderr_.push_back(std::sqrt(var / r) / m);
    }
    return e;
  }

  std::vector<MeanStderr> pairings(std::size_t k) const {
    const double r = static_cast<double>(replicas_.at(k));
    std::vector<MeanStderr> out;
    for (std::size_t j = 0; j < panel_.size(); ++j) {
      MeanStderr m;
      m.mean = pair_sum_[k][j] / r;
      m.variance = std::max(0.0, (pair_sq_[k][j] - r * m.mean * m.mean) / (r - 1.0));
      m.stderr_ = std::sqrt(m.variance / r);
      out.push_back(m);
    }
    return out;
  }

  const std::vector<TestFunction>& panel() const { return panel_; }
  const BoxGrid& grid() const { return grid_; }

 private:
  BoxGrid grid_;
  std::vector<TestFunction> panel_;
  std::vector<std::vector<double>> gx_;
  DensityAccumulator density_;
  std::vector<std::vector<std::int64_t>> box_sum_, box_sq_;
  std::vector<std::vector<double>> pair_sum_, pair_sq_;
  std::vector<std::size_t> replicas_;
};

/// Time averages over snapshot windows [from, to), one i.i.d. value per
/// replica and window. Box counts stay integral, so merges are exact.
class WindowedStats {
 public:
  struct Window {
    std::size_t from, to;
  };

  WindowedStats(std::size_t snapshots, const BoxGrid& grid, std::vector<Window> windows,
                std::vector<TestFunction> panel = {})
      : grid_(grid), windows_(std::move(windows)), panel_(std::move(panel)), total_(snapshots) {
    for (const auto& w : windows_)
      if (!(w.from < w.to && w.to <= snapshots)) throw InvalidArgument("WindowedStats: bad window");
    const std::size_t nw = windows_.size(), nb = static_cast<std::size_t>(grid.boxes), ns = static_cast<std::size_t>(grid.n - 1);
    cur_box_.assign(nw, std::vector<std::int64_t>(nb, 0));
    cur_site_.assign(nw, std::vector<std::int64_t>(ns, 0));
    cur_pair_.assign(nw, std::vector<double>(panel_.size(), 0.0));
    box_sum_.assign(nw, std::vector<std::int64_t>(nb, 0));
    box_sq_ = box_sum_;
    site_sum_.assign(nw, std::vector<double>(ns, 0.0));
    site_sq_ = site_sum_;
    pair_sum_.assign(nw, std::vector<double>(panel_.size(), 0.0));
    pair_sq_ = pair_sum_;
    for (const auto& g : panel_) {
      std::vector<double> v;
      for (int x = 1; x <= grid.n - 1; ++x) v.push_back(g.f(static_cast<double>(x) / grid.n));
      gx_.push_back(std::move(v));
    }
  }

  void on_snapshot(std::size_t k, const LatticeState& s) {
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      if (k < windows_[w].from || k >= windows_[w].to) continue;
      for (int b = 0; b < grid_.boxes; ++b)
        for (int x = grid_.first[static_cast<std::size_t>(b)]; x <= grid_.last[static_cast<std::size_t>(b)]; ++x)
          cur_box_[w][static_cast<std::size_t>(b)] += s(x);
      for (std::size_t i = 0; i < s.occupancy.size(); ++i) cur_site_[w][i] += s.occupancy[i];
      for (std::size_t j = 0; j < panel_.size(); ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < s.occupancy.size(); ++i)
          if (s.occupancy[i]) v += gx_[j][i];
        cur_pair_[w][j] += v / (grid_.n - 1);
      }
    }
    if (k + 1 != total_) return;
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      const double len = static_cast<double>(windows_[w].to - windows_[w].from);
      for (std::size_t b = 0; b < cur_box_[w].size(); ++b) {
        box_sum_[w][b] += cur_box_[w][b];
        box_sq_[w][b] += cur_box_[w][b] * cur_box_[w][b];
        cur_box_[w][b] = 0;
      }
      for (std::size_t i = 0; i < cur_site_[w].size(); ++i) {
        const double a = static_cast<double>(cur_site_[w][i]) / len;
        site_sum_[w][i] += a;
        site_sq_[w][i] += a * a;
        cur_site_[w][i] = 0;
      }
      for (std::size_t j = 0; j < panel_.size(); ++j) {
        const double a = cur_pair_[w][j] / len;
        pair_sum_[w][j] += a;
        pair_sq_[w][j] += a * a;
        cur_pair_[w][j] = 0.0;
      }
    }
    ++replicas_;
  }

  void merge(const WindowedStats& o) {
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      for (std::size_t b = 0; b < box_sum_[w].size(); ++b) {
        box_sum_[w][b] += o.box_sum_[w][b];
        box_sq_[w][b] += o.box_sq_[w][b];
      }
      for (std::size_t i = 0; i < site_sum_[w].size(); ++i) {
        site_sum_[w][i] += o.site_sum_[w][i];
        site_sq_[w][i] += o.site_sq_[w][i];
      }
      for (std::size_t j = 0; j < panel_.size(); ++j) {
        pair_sum_[w][j] += o.pair_sum_[w][j];
        pair_sq_[w][j] += o.pair_sq_[w][j];
      }
    }
    replicas_ += o.replicas_;
  }

  std::size_t replicas() const { return replicas_; }

  BoxEstimate boxes(std::size_t w) const {
    const double r = static_cast<double>(replicas_);
    if (r < 2) throw InvalidArgument("WindowedStats: need >= 2 replicas");
    const double len = static_cast<double>(windows_.at(w).to - windows_[w].from);
    BoxEstimate e;
    for (int b = 0; b < grid_.boxes; ++b) {
      const double m = grid_.size(b) * len;
      const double s = static_cast<double>(box_sum_[w][static_cast<std::size_t>(b)]);
      const double s2 = static_cast<double>(box_sq_[w][static_cast<std::size_t>(b)]);
      const double mean = s / r;
      const double var = std::max(0.0, (s2 - r * mean * mean) / (r - 1.0));
      e.mean.push_back(mean / m);
      e.stderr_.push_back(std::sqrt(var / r) / m);
    }
    return e;
  }

  DensityEstimate density(std::size_t w, double alpha, double beta) const {
    const double r = static_cast<double>(replicas_);
    if (r < 2) throw InvalidArgument("WindowedStats: need >= 2 replicas");
    DensityEstimate e;
    e.N = grid_.n;
    e.alpha = alpha;
    e.beta = beta;
    e.replicas = replicas_;
    for (std::size_t i = 0; i < site_sum_.at(w).size(); ++i) {
      const double m = site_sum_[w][i] / r;
      e.mean.push_back(m);
      e.stderr_.push_back(std::sqrt(std::max(0.0, (site_sq_[w][i] - r * m * m) / (r - 1.0)) / r));
    }
    return e;
  }

  std::vector<MeanStderr> pairings(std::size_t w) const {
    const double r = static_cast<double>(replicas_);
    std::vector<MeanStderr> out;
    for (std::size_t j = 0; j < panel_.size(); ++j) {
      MeanStderr m;
      m.mean = pair_sum_.at(w)[j] / r;
      m.variance = std::max(0.0, (pair_sq_[w][j] - r * m.mean * m.mean) / (r - 1.0));
      m.stderr_ = std::sqrt(m.variance / r);
      out.push_back(m);
    }
    return out;
  }

 private:
  BoxGrid grid_;
  std::vector<Window> windows_;
  std::vector<TestFunction> panel_;
  std::vector<std::vector<double>> gx_;
  std::size_t total_;
  std::vector<std::vector<std::int64_t>> cur_box_, cur_site_;
  std::vector<std::vector<double>> cur_pair_;
  std::vector<std::vector<std::int64_t>> box_sum_, box_sq_;
  std::vector<std::vector<double>> site_sum_, site_sq_, pair_sum_, pair_sq_;
  std::size_t replicas_ = 0;
};

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

/// Piecewise-linear interpolation of (xs, ys) with constant extension.
inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double q) {
  if (q <= xs.front()) return ys.front();
  if (q >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), q);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double w = (q - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return (1.0 - w) * ys[i - 1] + w * ys[i];
}

/// Continuum solution of the equation selected by regime_dispatch.
class ContinuumReference {
 public:
  ContinuumReference(const ModelParams& p, const Profile& g, int fd_cells = 512)
      : params_(p), g_(g), regime_(regime_dispatch(p.kernel, p.theta, p.kappa)), fd_cells_(fd_cells) {
    if (!regime_.supported()) throw Unsupported("no reference for this regime: " + regime_.note);
  }

  const Regime& regime() const { return regime_; }
  /// True when the reference is the finite-N Kolmogorov system rather than a continuum solution.
  bool discrete() const { return regime_.family == PdeFamily::FractionalReactionDiffusion; }

  std::vector<double> at(double t, const std::vector<double>& grid) const {
    const double a = params_.alpha, b = params_.beta;
    switch (regime_.family) {
      case PdeFamily::HeatDirichlet:
      case PdeFamily::HeatDirichletCompact:
        if (t == 0.0) return initial(grid);
        return heat_dirichlet_spectral(g_, a, b, t, grid, 1e-10, regime_.diffusion()).values;
      case PdeFamily::HeatRobin:
      case PdeFamily::HeatNeumann:
        if (t == 0.0) return initial(grid);
        return robin_spectral_solution(g_, *regime_.robin_coefficient(), a, b, t, grid, 1e-10, regime_.diffusion()).values;
      case PdeFamily::Reaction:
        return reaction_exact(g_, regime_.kappa_hat, params_.kernel.gamma, a, b, t, grid);
      case PdeFamily::ReactionDiffusionDirichlet: {
        ReactionDiffusionOptions opt;
        opt.cells = fd_cells_;
        const auto r = reaction_diffusion_fd(g_, regime_.sigma_hat, regime_.kappa_hat, params_.kernel.gamma, a, b, t, opt);
        std::vector<double> xs{0.0}, ys{a};
        xs.insert(xs.end(), r.grid.begin(), r.grid.end());
        ys.insert(ys.end(), r.values.begin(), r.values.end());
        xs.push_back(1.0);
        ys.push_back(b);
        std::vector<double> out;
        for (double q : grid) out.push_back(interpolate(xs, ys, q));
        return out;
      }
      case PdeFamily::FractionalReactionDiffusion: {
        const JumpKernel k = build_kernel(params_.kernel, params_.N);
        const auto rho = fractional_generator_ode(params_, k, sample_profile(g_.f, params_.N), {t}).front();
        std::vector<double> xs{0.0}, ys{a};
        for (int x = 1; x <= params_.N - 1; ++x) {
          xs.push_back(static_cast<double>(x) / params_.N);
          ys.push_back(rho[static_cast<std::size_t>(x - 1)]);
        }
        xs.push_back(1.0);
        ys.push_back(b);
        std::vector<double> out;
        for (double q : grid) out.push_back(interpolate(xs, ys, q));
        return out;
      }
      case PdeFamily::Unsupported: break;
    }
    throw Unsupported("no reference for this regime");
  }

  /// int_0^1 G rho_t by composite Gauss-Legendre respecting the breaks of g.
  std::vector<double> pairings(double t, const std::vector<TestFunction>& panel, int panels = 64) const {
    QuadratureRule rule = composite_gauss(g_.breaks, panels);
    const auto rho = at(t, rule.x);
    std::vector<double> out;
    for (const auto& G : panel) {
      double s = 0.0;
      for (std::size_t j = 0; j < rule.x.size(); ++j) s += rule.w[j] * G.f(rule.x[j]) * rho[j];
      out.push_back(s);
    }
    return out;
  }

 private:
  std::vector<double> initial(const std::vector<double>& grid) const {
    std::vector<double> out;
    for (double q : grid) out.push_back(g_(q));
    return out;
  }

  ModelParams params_;
  Profile g_;
  Regime regime_;
  int fd_cells_;
};

inline std::vector<double> site_grid(int n) {
  std::vector<double> q;
  for (int x = 1; x <= n - 1; ++x) q.push_back(static_cast<double>(x) / n);
  return q;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::string name = "hydrodynamic";
  KernelChoice kernel{};
  std::vector<int> sizes{64};
  std::vector<double> thetas{0.0};
  double kappa = 1.0, alpha = 0.2, beta = 0.8;
  std::string profile = "step";
  std::optional<double> profile_a, profile_b;  // default to alpha, beta
  std::vector<double> times{0.05};
  std::size_t replicas = 200;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::optional<SamplerMode> mode;
  long long max_events = 4'000'000'000LL;
  int boxes = 16;
  double abs_tol = 0.05;       // against the continuum solution
  double ode_abs_tol = 0.0;    // against the exact discrete mean (statistical only)
  bool pairings = true;
  bool exploratory = false;    // run unsupported regimes without a reference

  Profile initial_profile() const {
    return profile_preset(profile, profile_a.value_or(alpha), profile_b.value_or(beta));
  }
  ModelParams params(int n, double theta) const {
    ModelParams p;
    p.N = n;
    p.theta = theta;
    p.kappa = kappa;
    p.alpha = alpha;
    p.beta = beta;
    p.kernel = kernel;
    return p;
  }
};

struct ProfileRecord {
  int N;
  double theta, kappa, alpha, beta, gamma;
  std::string kernel;
  double t;
  int x;
  double rho_mc, rho_stderr, rho_ode, rho_pde;  // rho_pde is NaN without a reference
};

struct ConvergencePoint {
  int N = 0;
  double theta = 0.0, t = 0.0;
  double d_sup = NAN, d_sup_stderr = NAN, d_l2 = NAN;  // MC vs continuum, box grid
  double d_ode = NAN, d_ode_stderr = NAN;              // MC vs discrete mean, box grid
  double discretization = NAN;                          // discrete mean vs continuum, box grid
};

struct TrendFit {
  double theta = 0.0, t = 0.0;
  double slope = NAN;  // d log d_N / d log N
  bool non_increasing_within_noise = true;
};

struct ConvergenceReport {
  std::vector<ReportRow> rows;
  std::vector<ConvergencePoint> points;
  std::vector<TrendFit> trends;
  std::vector<ProfileRecord> profiles;
  std::vector<std::string> notices;

  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
  }
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return NAN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Sup over boxes of |est - ref|; returns (value, stderr of the maximizing box).
inline std::pair<double, double> box_sup(const BoxEstimate& est, const std::vector<double>& ref) {
  double best = -1.0, se = 0.0;
  for (std::size_t b = 0; b < ref.size(); ++b) {
    const double d = std::abs(est.mean[b] - ref[b]);
    if (d > best) {
      best = d;
      se = est.stderr_[b];
    }
  }
  return {best, se};
}

inline double box_l2(const BoxEstimate& est, const std::vector<double>& ref) {
  double s = 0.0;
  for (std::size_t b = 0; b < ref.size(); ++b) s += (est.mean[b] - ref[b]) * (est.mean[b] - ref[b]);
  return std::sqrt(s / static_cast<double>(ref.size()));
}

/// Monte Carlo profiles and pairings against the discrete mean evolution and the dispatched PDE.
inline ConvergenceReport hydrodynamic_experiment(const ExperimentSpec& spec) {
  ConvergenceReport rep;
  const Profile g = spec.initial_profile();
  const auto panel = spec.pairings ? pairing_panel() : std::vector<TestFunction>{};
  for (double theta : spec.thetas) {
    const Regime regime = regime_dispatch(spec.kernel, theta, spec.kappa);
    if (!regime.supported() && !spec.exploratory) {
      rep.notices.push_back("skipped theta=" + std::to_string(theta) + ": " + regime.note);
      continue;
    }
    for (int n : spec.sizes) {
      ModelParams p = spec.params(n, theta);
      if (!regime.supported()) p.time_scale_override = std::pow(static_cast<double>(n), 2.0);
      const std::string desc = describe(p) + ";profile=" + g.name;
      const JumpKernel k = build_kernel(p.kernel, n);
      const BoxGrid grid = make_box_grid(n, std::min(spec.boxes, n - 1));
      EnsembleOptions opt;
      opt.replicas = spec.replicas;
      opt.seed = spec.seed;
      opt.threads = spec.threads;
      opt.mode = spec.mode.value_or(default_mode(p));
      opt.max_events = spec.max_events;
      const SnapshotStats stats =
          run_ensemble(p, k, g.measure(), SnapshotSchedule{spec.times}, opt, SnapshotStats(spec.times.size(), grid, panel));
      const auto ode = mean_profile_ode(p, k, sample_profile(g.f, n), spec.times);
      std::optional<ContinuumReference> cont;
      if (regime.supported()) cont.emplace(p, g);
      const auto sites = site_grid(n);
      for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
        const double t = spec.times[ti];
        const std::string tag = desc + ";t=" + std::to_string(t);
        const DensityEstimate dens = stats.density(ti, p.alpha, p.beta);
        const BoxEstimate bx = stats.boxes(ti);
        std::vector<double> pde(static_cast<std::size_t>(n - 1), NAN);
        if (cont) pde = cont->at(t, sites);
        for (int x = 1; x <= n - 1; ++x) {
          const std::size_t i = static_cast<std::size_t>(x - 1);
          rep.profiles.push_back({n, theta, p.kappa, p.alpha, p.beta, p.kernel.is_long_jump() ? p.kernel.gamma : 0.0,
                                  p.kernel.name(), t, x, dens.mean[i], dens.stderr_[i], ode[ti][i], pde[i]});
        }
        ConvergencePoint pt;
        pt.N = n;
        pt.theta = theta;
        pt.t = t;
        const auto ode_box = grid.average(ode[ti]);
        std::tie(pt.d_ode, pt.d_ode_stderr) = box_sup(bx, ode_box);
        for (int b = 0; b < grid.boxes; ++b) {
          const std::size_t bi = static_cast<std::size_t>(b);
          rep.rows.push_back(compare(spec.name, tag + ";box=" + std::to_string(b), "box-ode", bx.mean[bi], ode_box[bi],
                                     bx.stderr_[bi], spec.ode_abs_tol, spec.seed, spec.replicas));
        }
        if (cont) {
          const auto pde_box = grid.average(pde);
          std::tie(pt.d_sup, pt.d_sup_stderr) = box_sup(bx, pde_box);
          pt.d_l2 = box_l2(bx, pde_box);
          double disc = 0.0;
          for (std::size_t b = 0; b < pde_box.size(); ++b) disc = std::max(disc, std::abs(ode_box[b] - pde_box[b]));
          pt.discretization = disc;
          ReportRow r = compare(spec.name, tag, "sup-grid", pt.d_sup, 0.0, pt.d_sup_stderr, spec.abs_tol, spec.seed,
                                spec.replicas);
          rep.rows.push_back(r);
          ReportRow l2 = compare(spec.name, tag, "l2-grid", pt.d_l2, 0.0, pt.d_sup_stderr, spec.abs_tol, spec.seed,
                                 spec.replicas);
          rep.rows.push_back(l2);
          if (!panel.empty()) {
            const auto mc = stats.pairings(ti);
            const auto ref = cont->pairings(t, panel);
            for (std::size_t j = 0; j < panel.size(); ++j) {
              if (regime.family == PdeFamily::HeatDirichletCompact && !panel[j].compact) continue;
              // (N-1)^{-1} sum vs int: O(1/N) quadrature gap on top of abs_tol
              rep.rows.push_back(compare(spec.name, tag, "pairing:" + panel[j].name, mc[j].mean, ref[j], mc[j].stderr_,
                                         spec.abs_tol, spec.seed, spec.replicas));
            }
          }
        }
        rep.points.push_back(pt);
      }
    }
  }
  // trends over N for each (theta, t)
  for (double theta : spec.thetas)
    for (double t : spec.times) {
      std::vector<const ConvergencePoint*> pts;
      for (const auto& pt : rep.points)
        if (pt.theta == theta && pt.t == t && std::isfinite(pt.d_sup)) pts.push_back(&pt);
      if (pts.empty()) continue;
      TrendFit f;
      f.theta = theta;
      f.t = t;
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        xs.push_back(pts[i]->N);
        ys.push_back(std::max(pts[i]->d_sup, 1e-300));
        if (i > 0) {
          const double noise = 3.0 * std::hypot(pts[i]->d_sup_stderr, pts[i - 1]->d_sup_stderr);
          if (pts[i]->d_sup > pts[i - 1]->d_sup + noise) f.non_increasing_within_noise = false;
        }
      }
      f.slope = loglog_slope(xs, ys);
      rep.trends.push_back(f);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Hydrostatics
// ---------------------------------------------------------------------------

struct HydrostaticSpec {
  std::string name = "hydrostatic";
  std::vector<int> sizes{128};
  std::vector<double> thetas{0.0, 1.0, 2.0};
  double kappa = 1.0, alpha = 0.2, beta = 0.8;
  std::string start = "step";  // initial profile for the burn-in
  std::size_t replicas = 64;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int boxes = 16;
  double abs_tol = 0.03;
  double burn_factor = 10.0;
  std::optional<double> burn_in;  // macroscopic; overrides the spectral estimate
  double window = 1.0;            // macroscopic averaging window
  std::size_t snapshots = 40;
  int exact_max_n = 6;
};

struct HydrostaticPoint {
  int N = 0;
  double theta = 0.0;
  double burn_in = 0.0;
  double relaxation = 0.0;
  double d_sup = NAN, d_sup_stderr = NAN;
  double closed_form_gap = NAN;  // max_x |rho_ss^N(x) - rho_bar(x/N)|
  bool exact = false;
  bool inconclusive = false;
};

struct HydrostaticReport {
  std::vector<ReportRow> rows;
  std::vector<HydrostaticPoint> points;
  std::vector<ProfileRecord> profiles;
  std::vector<std::string> notices;
};

inline double pairing_of_profile(const std::vector<double>& rho_sites, const TestFunction& G) {
  const int n = static_cast<int>(rho_sites.size()) + 1;
  double s = 0.0;
  for (int x = 1; x <= n - 1; ++x) s += G.f(static_cast<double>(x) / n) * rho_sites[static_cast<std::size_t>(x - 1)];
  return s / (n - 1);
}

inline double integral_against(const std::function<double(double)>& rho, const TestFunction& G) {
  const QuadratureRule rule = composite_gauss({}, 64);
  double s = 0.0;
  for (std::size_t j = 0; j < rule.x.size(); ++j) s += rule.w[j] * G.f(rule.x[j]) * rho(rule.x[j]);
  return s;
}

inline HydrostaticReport hydrostatic_experiment(const HydrostaticSpec& spec) {
  HydrostaticReport rep;
  const auto panel = pairing_panel();
  for (double theta : spec.thetas) {
    for (int n : spec.sizes) {
      ModelParams p;
      p.N = n;
      p.theta = theta;
      p.kappa = spec.kappa;
      p.alpha = spec.alpha;
      p.beta = spec.beta;
      const std::string desc = describe(p);
      auto bar = [&](double q) { return macro_profile(q, theta, spec.kappa, spec.alpha, spec.beta); };
      HydrostaticPoint pt;
      pt.N = n;
      pt.theta = theta;
      const auto closed = rho_ss_profile(p);
      pt.closed_form_gap = 0.0;
      for (int x = 1; x <= n - 1; ++x)
        pt.closed_form_gap =
            std::max(pt.closed_form_gap, std::abs(closed[static_cast<std::size_t>(x - 1)] - bar(static_cast<double>(x) / n)));
      const JumpKernel k = build_kernel(p.kernel, n);
      if (n <= spec.exact_max_n) {
        pt.exact = true;
        const StationaryOracle o = brute_force_stationary(p, k);
        for (const auto& G : panel) {
          const double est = pairing_of_profile(o.profile, G);
          const double gap = std::abs(pairing_of_profile(closed, G) - integral_against(bar, G));
          rep.rows.push_back(compare(spec.name, desc, "oracle-pairing:" + G.name, est, integral_against(bar, G), 0.0,
                                     gap + 1e-10));
        }
        rep.points.push_back(pt);
        continue;
      }
      const Profile g0 = profile_preset(spec.start, spec.alpha, spec.beta);
      const auto rho0 = sample_profile(g0.f, n);
      double burn = 0.0;
      if (spec.burn_in) {
        burn = *spec.burn_in;
      } else {
        if (n > kDenseEvolutionMaxN) throw Unsupported("hydrostatic_experiment: give burn_in explicitly for N > 256");
        const MeanProfileSystem sys(p, k);
        const ProfileEvolution ev(sys);
        pt.relaxation = ev.excited_relaxation_time(rho0, sys.stationary());
        burn = spec.burn_factor * pt.relaxation;
      }
      pt.burn_in = burn;
      std::vector<double> times;
      const std::size_t m = std::max<std::size_t>(spec.snapshots, 4);
      for (std::size_t i = 0; i < m; ++i) times.push_back(burn + spec.window * static_cast<double>(i) / (m - 1));
      if (times.front() == 0.0) times.front() = 1e-12;
      const BoxGrid grid = make_box_grid(n, std::min(spec.boxes, n - 1));
      const std::vector<WindowedStats::Window> windows{{0, m}, {0, m / 2}, {m / 2, m}};
      EnsembleOptions opt;
      opt.replicas = spec.replicas;
      opt.seed = spec.seed;
      opt.threads = spec.threads;
      opt.mode = default_mode(p);
      const WindowedStats stats =
          run_ensemble(p, k, g0.measure(), SnapshotSchedule{times}, opt, WindowedStats(m, grid, windows, panel));
      const BoxEstimate all = stats.boxes(0), first = stats.boxes(1), second = stats.boxes(2);
      std::vector<double> bar_sites;
      for (int x = 1; x <= n - 1; ++x) bar_sites.push_back(bar(static_cast<double>(x) / n));
      const auto ref = grid.average(bar_sites);
      std::tie(pt.d_sup, pt.d_sup_stderr) = box_sup(all, ref);
      for (std::size_t b = 0; b < ref.size(); ++b)
        if (std::abs(first.mean[b] - second.mean[b]) > 4.0 * std::hypot(first.stderr_[b], second.stderr_[b]))
          pt.inconclusive = true;
      if (pt.inconclusive) rep.notices.push_back("burn-in drift detected for " + desc + " (inconclusive)");
      rep.rows.push_back(compare(spec.name, desc, "sup-grid", pt.d_sup, 0.0, pt.d_sup_stderr, spec.abs_tol, spec.seed,
                                 spec.replicas));
      const auto mc = stats.pairings(0);
      for (std::size_t j = 0; j < panel.size(); ++j)
        rep.rows.push_back(compare(spec.name, desc, "pairing:" + panel[j].name, mc[j].mean, integral_against(bar, panel[j]),
                                   mc[j].stderr_, spec.abs_tol, spec.seed, spec.replicas));
      const DensityEstimate dens = stats.density(0, p.alpha, p.beta);
      for (int x = 1; x <= n - 1; ++x) {
        const std::size_t i = static_cast<std::size_t>(x - 1);
        rep.profiles.push_back({n, theta, p.kappa, p.alpha, p.beta, 0.0, p.kernel.name(), INFINITY, x, dens.mean[i],
                                dens.stderr_[i], closed[i], bar_sites[i]});
      }
      rep.points.push_back(pt);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Correlation scaling
// ---------------------------------------------------------------------------

struct CorrelationScanRow {
  double theta;
  int N;
  double max_abs_phi;
};

struct CorrelationScan {
  std::vector<CorrelationScanRow> table;
  std::vector<std::pair<double, double>> exponents;  // (theta, fitted slope)
  std::vector<ReportRow> rows;
};

/// Exponent claimed for max|phi_ss|: theta - 2 below 1, -theta from 1 on.
inline double claimed_correlation_exponent(double theta) { return theta < 1.0 ? theta - 2.0 : -theta; }

struct CorrelationSpotCheck {
  int N = 6;
  double theta = 0.0;
  double t = 0.1;
  std::size_t replicas = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline CorrelationScan correlation_scan(const std::vector<double>& thetas, const std::vector<int>& sizes,
                                        double exponent_tol = 0.1, std::optional<CorrelationSpotCheck> spot = {}) {
  CorrelationScan out;
  for (double theta : thetas) {
    std::vector<double> xs, ys;
    for (int n : sizes) {
      ModelParams p;
      p.N = n;
      p.theta = theta;
      p.kappa = 1.0;
      p.alpha = 0.0;
      p.beta = 1.0;
      const double m = max_abs_phi_ss(p);
      out.table.push_back({theta, n, m});
      xs.push_back(n);
      ys.push_back(m);
    }
    const double slope = loglog_slope(xs, ys);
    out.exponents.emplace_back(theta, slope);
    std::ostringstream d;
    d << "theta=" << theta << ";N=" << sizes.front() << ".." << sizes.back();
    out.rows.push_back(compare("correlation_scan", d.str(), "fitted-exponent", slope,
                               claimed_correlation_exponent(theta), 0.0, exponent_tol));
  }
  if (spot) {
    ModelParams p;
    p.N = spot->N;
    p.theta = spot->theta;
    p.kappa = 1.0;
    p.alpha = 0.0;
    p.beta = 1.0;
    const JumpKernel k = build_kernel(p.kernel, p.N);
    const StationaryOracle o = brute_force_stationary(p, k);
    EnsembleOptions opt;
    opt.replicas = spot->replicas;
    opt.seed = spot->seed;
    opt.threads = spot->threads;
    const auto acc = run_ensemble(p, k, StationarySample{o.distribution}, SnapshotSchedule{{spot->t}}, opt,
                                  CorrelationAccumulator(1, p.N));
    const CorrelationEstimate e = acc.estimate(0);
    const int x = p.N / 2, y = x + 1;
    out.rows.push_back(compare("correlation_scan", describe(p) + ";x=" + std::to_string(x), "mc-phi", e.at(x, y),
                               phi_ss(x, y, p), e.stderr_[CorrelationEstimate::index(p.N, x, y)], 0.0, spot->seed,
                               spot->replicas));
  }
  return out;
}

}  // namespace exclab
