// exclab: simulate, solve and verify the boundary-driven exclusion process.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "exclab/harness.hpp"
#include "run_config.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace exclab;
using namespace exclab::cli;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Flags that map onto config keys, in the order they are applied.
const std::vector<std::pair<std::string, std::string>> kModelFlags{
    {"--N", "model.N"},           {"--theta", "model.theta"},     {"--kappa", "model.kappa"},
    {"--alpha", "model.alpha"},   {"--beta", "model.beta"},       {"--profile", "model.profile"},
    {"--kernel", "kernel.type"},  {"--gamma", "kernel.gamma"},    {"--times", "schedule.times"},
    {"--replicas", "ensemble.replicas"}, {"--seed", "ensemble.master_seed"}, {"--threads", "ensemble.threads"},
    {"--mode", "ensemble.mode"},  {"--out", "output.dir"},
};

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> flags;  // flag -> raw value
};

void add_common(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config_path, "key=value configuration file");
  for (const auto& [flag, key] : kModelFlags) sub->add_option(flag, inv.flags[flag], key);
}

RunConfig resolve(const Invocation& inv) {
  RunConfig c;
  if (!inv.config_path.empty()) {
    std::ifstream in(inv.config_path);
    if (!in) throw ConfigError(0, inv.config_path + ": cannot open");
    parse_config(in, c, inv.config_path);
  }
  for (const auto& [flag, key] : kModelFlags) {
    const auto it = inv.flags.find(flag);
    if (it != inv.flags.end() && !it->second.empty()) set_key(c, key, it->second, 0, flag);
  }
  if (c.threads == 0) {
    const char* env = std::getenv("EXH_THREADS");
    if (env && *env) set_key(c, "ensemble.threads", env, 0, "EXH_THREADS");
  }
  if (c.threads == 0) c.threads = 1;
  return c;
}

KernelChoice kernel_of(const RunConfig& c) {
  return c.kernel == "nn" ? KernelChoice::nearest_neighbor() : KernelChoice::long_jump(c.gamma);
}

ModelParams params_of(const RunConfig& c, int n, double theta) {
  ModelParams p;
  p.N = n;
  p.theta = theta;
  p.kappa = c.kappa;
  p.alpha = c.alpha;
  p.beta = c.beta;
  p.kernel = kernel_of(c);
  p.validate();
  return p;
}

Profile initial_of(const RunConfig& c) { return profile_preset(c.profile, c.profile_a.value_or(c.alpha), c.profile_b.value_or(c.beta)); }

SamplerMode mode_of(const RunConfig& c, const ModelParams& p) {
  if (c.mode == "exact") return SamplerMode::ExactTable;
  if (c.mode == "thinning") return SamplerMode::Thinning;
  if (c.mode == "lazy") return SamplerMode::LazyReservoir;
  return default_mode(p);
}

void prepare_out(const RunConfig& c) {
  fs::create_directories(c.out);
  std::ofstream(fs::path(c.out) / "resolved.cfg") << format_config(c);
}

std::ofstream csv(const RunConfig& c, const std::string& name, const std::string& header) {
  std::ofstream f(fs::path(c.out) / name);
  f << std::setprecision(17) << header << "\n";
  return f;
}

std::string tag(int n, double theta) {
  std::ostringstream os;
  os << "N" << n << "_theta" << theta;
  return os.str();
}

// ---------------------------------------------------------------------------

struct DensityAndCorrelation {
  DensityAccumulator d;
  std::optional<CorrelationAccumulator> c;
  void on_snapshot(std::size_t k, const LatticeState& s) {
    d.on_snapshot(k, s);
    if (c) c->on_snapshot(k, s);
  }
  void merge(const DensityAndCorrelation& o) {
    d.merge(o.d);
    if (c) c->merge(*o.c);
  }
};

constexpr int kCorrelationMaxN = 256;

int cmd_simulate(const RunConfig& c) {
  prepare_out(c);
  const Profile g = initial_of(c);
  auto prof = csv(c, "profiles.csv", "N,theta,kappa,alpha,beta,gamma,kernel,t,x,rho_mc,rho_stderr,rho_ode,rho_pde");
  const bool single = c.N.size() * c.theta.size() == 1;
  for (int n : c.N)
    for (double theta : c.theta) {
      const ModelParams p = params_of(c, n, theta);
      const JumpKernel k = build_kernel(p.kernel, n);
      const Regime regime = regime_dispatch(p.kernel, theta, p.kappa);
      ModelParams run = p;
      if (!regime.supported()) {
        run.time_scale_override = std::pow(static_cast<double>(n), 2.0);
        std::cerr << "note: " << family_name(regime.family) << " (" << regime.note
                  << "); exploratory run with Theta(N) = N^2 and no reference\n";
      }
      const bool corr = !p.kernel.is_long_jump() && n <= kCorrelationMaxN;
      EnsembleOptions opt;
      opt.replicas = c.replicas;
      opt.seed = c.master_seed;
      opt.threads = c.threads;
      opt.mode = mode_of(c, run);
      opt.max_events = c.max_events;
      DensityAndCorrelation acc{DensityAccumulator(c.times.size(), n), std::nullopt};
      if (corr) acc.c.emplace(c.times.size(), n);
      const auto res = run_ensemble(run, k, g.measure(), SnapshotSchedule{c.times}, opt, std::move(acc));
      const auto rho0 = sample_profile(g.f, n);
      const auto ode = mean_profile_ode(run, k, rho0, c.times);
      std::optional<ContinuumReference> cont;
      if (regime.supported()) cont.emplace(p, g);
      const auto sites = site_grid(n);
      for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
        const auto est = res.d.estimate(ti, p.alpha, p.beta);
        std::vector<double> pde(static_cast<std::size_t>(n - 1), NAN);
        if (cont) pde = cont->at(c.times[ti], sites);
        for (int x = 1; x < n; ++x) {
          const std::size_t i = static_cast<std::size_t>(x - 1);
          prof << n << "," << theta << "," << p.kappa << "," << p.alpha << "," << p.beta << ","
               << (p.kernel.is_long_jump() ? p.kernel.gamma : 0.0) << "," << p.kernel.name() << "," << c.times[ti] << ","
               << x << "," << est.mean[i] << "," << est.stderr_[i] << "," << ode[ti][i] << "," << pde[i] << "\n";
        }
      }
      if (corr) {
        const CorrelationSystem sys(run);
        const auto phi = sys.evolve(k, rho0, std::vector<double>(sys.dim(), 0.0), c.times);
        auto f = csv(c, single ? "correlations.csv" : "correlations_" + tag(n, theta) + ".csv",
                     "t,x,y,phi_mc,phi_stderr,phi_ode");
        for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
          const auto e = res.c->estimate(ti);
          for (int x = 1; x < n; ++x)
            for (int y = x + 1; y < n; ++y) {
              const std::size_t j = CorrelationEstimate::index(n, x, y);
              f << c.times[ti] << "," << x << "," << y << "," << e.value[j] << "," << e.stderr_[j] << "," << phi[ti][j]
                << "\n";
            }
        }
      }
      std::cout << "simulated N=" << n << " theta=" << theta << " (" << family_name(regime.family) << ", "
                << c.replicas << " replicas)\n";
    }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_stationary(const RunConfig& c) {
  prepare_out(c);
  auto table = csv(c, "stationary.csv", "N,theta,x,rho_ss,rho_bar,rho_oracle");
  auto corr = csv(c, "stationary_correlations.csv", "N,theta,x,y,phi_ss,phi_oracle");
  std::cout << std::setprecision(17);
  for (int n : c.N)
    for (double theta : c.theta) {
      const ModelParams p = params_of(c, n, theta);
      if (p.kernel.is_long_jump()) throw Unsupported("stationary: closed forms exist for the nearest-neighbour model only");
      std::optional<StationaryOracle> o;
      if (n <= 6) o = brute_force_stationary(p, build_kernel(p.kernel, n));
      std::cout << "# N=" << n << " theta=" << theta << " kappa=" << p.kappa << " alpha=" << p.alpha << " beta=" << p.beta;
      if (p.alpha != p.beta) {
        const auto z = log_partition(p);
        std::cout << " log|Z|=" << z.log_abs << " sign=" << z.sign;
      }
      std::cout << "\n# x rho_ss rho_bar" << (o ? " rho_oracle" : "") << "\n";
      for (int x = 1; x < n; ++x) {
        const double r = rho_ss(x, p);
        const double bar = macro_profile(static_cast<double>(x) / n, theta, p.kappa, p.alpha, p.beta);
        const double orc = o ? o->profile[static_cast<std::size_t>(x - 1)] : NAN;
        std::cout << x << " " << r << " " << bar;
        if (o) std::cout << " " << orc;
        std::cout << "\n";
        table << n << "," << theta << "," << x << "," << r << "," << bar << "," << orc << "\n";
      }
      if (p.kappa == 1.0)
        for (int x = 1; x < n; ++x)
          for (int y = x + 1; y < n; ++y)
            corr << n << "," << theta << "," << x << "," << y << "," << phi_ss(x, y, p) << ","
                 << (o ? o->correlation[static_cast<std::size_t>(x - 1)][static_cast<std::size_t>(y - 1)] : NAN) << "\n";
    }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_pde(const RunConfig& c, int points) {
  prepare_out(c);
  const Profile g = initial_of(c);
  auto f = csv(c, "pde.csv", "family,theta,t,q,rho");
  std::vector<double> grid;
  for (int i = 1; i < points; ++i) grid.push_back(static_cast<double>(i) / points);
  for (int n : c.N)
    for (double theta : c.theta) {
      const ModelParams p = params_of(c, n, theta);
      const ContinuumReference ref(p, g);
      const std::string fam = family_name(ref.regime().family);
      if (!ref.regime().supported()) {
        std::cerr << "skip theta=" << theta << ": " << ref.regime().note << "\n";
        continue;
      }
      for (double t : c.times) {
        const auto v = ref.at(t, ref.discrete() ? site_grid(n) : grid);
        const auto& q = ref.discrete() ? site_grid(n) : grid;
        for (std::size_t i = 0; i < q.size(); ++i) f << fam << "," << theta << "," << t << "," << q[i] << "," << v[i] << "\n";
      }
      std::cout << "theta=" << theta << ": " << fam << (ref.discrete() ? " (Kolmogorov system at N=" + std::to_string(n) + ")" : "")
                << "\n";
      if (!ref.discrete()) break;  // continuum solution does not depend on N
    }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const RunConfig& c, int modes) {
  prepare_out(c);
  auto f = csv(c, "spectrum.csv", "n,lambda,residual");
  std::cout << std::setprecision(17) << "n lambda residual\n";
  for (const auto& r : robin_eigenvalues(c.kappa, modes)) {
    f << r.n << "," << r.lambda << "," << r.residual << "\n";
    std::cout << r.n << " " << r.lambda << " " << r.residual << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

std::string theta_range(double lo, double hi, bool lo_open, bool hi_open) {
  std::ostringstream os;
  if (std::isinf(lo)) os << "theta " << (hi_open ? "< " : "<= ") << hi;
  else if (std::isinf(hi)) os << "theta " << (lo_open ? "> " : ">= ") << lo;
  else if (lo == hi) os << "theta = " << lo;
  else os << lo << (lo_open ? " < " : " <= ") << "theta" << (hi_open ? " < " : " <= ") << hi;
  return os.str();
}

int cmd_regimes(const RunConfig& c) {
  const KernelChoice k = kernel_of(c);
  struct Row {
    std::string range;
    double probe;
  };
  std::vector<Row> rows;
  if (!k.is_long_jump()) {
    rows = {{theta_range(-INFINITY, 1, true, true), 0.5}, {"theta = 1", 1.0}, {theta_range(1, INFINITY, true, true), 2.0}};
  } else if (k.gamma > 2.0) {
    const double e = 1.0 - k.gamma;
    rows = {{theta_range(-INFINITY, e, true, true), e - 1.0},
            {theta_range(e, e, false, false), e},
            {theta_range(e, 1, true, true), 0.5 * (e + 1.0)},
            {"theta = 1", 1.0},
            {theta_range(1, INFINITY, true, true), 2.0}};
  } else {
    rows = {{theta_range(-INFINITY, -1, true, true), -2.0}, {"theta = -1", -1.0}, {theta_range(-1, INFINITY, true, true), 0.0}};
  }
  std::cout << "kernel=" << k.name();
  if (k.is_long_jump()) std::cout << " gamma=" << k.gamma;
  std::cout << " kappa=" << c.kappa << "\n";
  std::cout << std::left << std::setw(22) << "theta" << std::setw(34) << "family" << std::setw(20) << "Theta(N)"
            << "boundary / coefficients\n";
  for (const auto& r : rows) {
    const Regime g = regime_dispatch(k, r.probe, c.kappa);
    std::ostringstream ts, info;
    ts << std::setprecision(6);
    info << std::setprecision(6);
    if (!g.supported()) ts << "-";
    else if (g.family == PdeFamily::Reaction) ts << "N^(gamma+theta+1)";
    else ts << "N^" << g.time_exponent;
    switch (g.family) {
      case PdeFamily::HeatDirichletCompact:
      case PdeFamily::HeatDirichlet:
        info << "Dirichlet, D=" << g.diffusion();
        if (!k.is_long_jump()) info << " (theta < 0: compactly supported test functions)";
        break;
      case PdeFamily::HeatRobin: info << "Robin, D=" << g.diffusion() << " k=" << *g.robin_coefficient(); break;
      case PdeFamily::HeatNeumann: info << "Neumann, D=" << g.diffusion(); break;
      case PdeFamily::Reaction: info << "kappa_hat=" << g.kappa_hat; break;
      case PdeFamily::ReactionDiffusionDirichlet:
        info << "Dirichlet, sigma_hat^2=" << g.sigma_hat * g.sigma_hat << " kappa_hat=" << g.kappa_hat;
        break;
      case PdeFamily::FractionalReactionDiffusion: info << "Dirichlet, regional fractional Laplacian"; break;
      case PdeFamily::Unsupported: info << g.note; break;
    }
    const std::string fam = (!k.is_long_jump() && g.family == PdeFamily::HeatDirichlet) ? "heat-dirichlet" : family_name(g.family);
    std::cout << std::setw(22) << r.range << std::setw(34) << fam << std::setw(20) << ts.str() << info.str() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

void write_report(const RunConfig& c, const std::vector<ReportRow>& rows) {
  auto f = csv(c, "report.csv", "experiment,param-hash,norm,value,tol,pass");
  auto d = csv(c, "report_detail.csv", "param-hash,params,seed,replicas,stderr,abs_tol");
  for (const auto& r : rows) {
    f << r.experiment << "," << r.param_hash << "," << r.norm << "," << r.value << "," << r.tol << ","
      << (r.pass ? "true" : "false") << "\n";
    d << r.param_hash << ",\"" << r.params << "\"," << r.seed << "," << r.replicas << "," << r.stderr_ << ","
      << r.abs_tol << "\n";
  }
}

void write_profiles(const RunConfig& c, const std::vector<ProfileRecord>& recs) {
  auto f = csv(c, "profiles.csv", "N,theta,kappa,alpha,beta,gamma,kernel,t,x,rho_mc,rho_stderr,rho_ode,rho_pde");
  for (const auto& r : recs)
    f << r.N << "," << r.theta << "," << r.kappa << "," << r.alpha << "," << r.beta << "," << r.gamma << "," << r.kernel
      << "," << r.t << "," << r.x << "," << r.rho_mc << "," << r.rho_stderr << "," << r.rho_ode << "," << r.rho_pde << "\n";
}

void profile_plots(const RunConfig& c, const std::vector<ProfileRecord>& recs, const std::string& prefix) {
  std::map<std::pair<int, double>, std::vector<const ProfileRecord*>> groups;
  for (const auto& r : recs) groups[{r.N, r.theta}].push_back(&r);
  for (const auto& [key, rs] : groups) {
    const double t = rs.back()->t;  // last snapshot
    Series mc{"Monte Carlo", {}, {}, {}, true}, ode{"Kolmogorov ODE"}, pde{"limit PDE"};
    pde.dashed = true;
    for (const auto* r : rs) {
      if (r->t != t) continue;
      const double q = static_cast<double>(r->x) / r->N;
      mc.x.push_back(q);
      mc.y.push_back(r->rho_mc);
      mc.err.push_back(r->rho_stderr);
      ode.x.push_back(q);
      ode.y.push_back(r->rho_ode);
      pde.x.push_back(q);
      pde.y.push_back(r->rho_pde);
    }
    std::ostringstream title;
    title << "N=" << key.first << ", theta=" << key.second << ", t=" << (std::isinf(t) ? std::string("stationary") : std::to_string(t));
    std::vector<Series> s{mc, ode};
    if (std::any_of(pde.y.begin(), pde.y.end(), [](double v) { return std::isfinite(v); })) s.push_back(pde);
    write_file((fs::path(c.out) / (prefix + tag(key.first, key.second) + ".svg")).string(),
               line_chart(title.str(), "q = x/N", "density", s));
  }
}

void stationary_figure(const RunConfig& c) {
  // rho_bar on [0,1] for alpha = 0.2, beta = 0.8 in the three boundary regimes
  std::vector<Series> s;
  for (auto [theta, label] : {std::pair{0.5, "theta < 1 (Dirichlet)"}, std::pair{1.0, "theta = 1 (Robin, kappa=1)"},
                              std::pair{2.0, "theta > 1 (Neumann)"}}) {
    Series r{label};
    for (int i = 0; i <= 200; ++i) {
      r.x.push_back(i / 200.0);
      r.y.push_back(macro_profile(i / 200.0, theta, 1.0, 0.2, 0.8));
    }
    s.push_back(r);
  }
  write_file((fs::path(c.out) / "stationary_profiles.svg").string(),
             line_chart("stationary profiles, alpha=0.2, beta=0.8", "q", "rho_bar(q)", s));
}

void correlation_figure(const RunConfig& c) {
  if (c.kernel != "nn" || c.kappa != 1.0) return;
  ModelParams p = params_of(c, std::min(c.N.front(), 64), c.theta.front());
  const int n = p.N;
  std::vector<std::vector<double>> m(static_cast<std::size_t>(n - 1), std::vector<double>(static_cast<std::size_t>(n - 1), 0.0));
  for (int x = 1; x < n; ++x)
    for (int y = 1; y < n; ++y)
      if (x != y) m[static_cast<std::size_t>(x - 1)][static_cast<std::size_t>(y - 1)] = phi_ss(std::min(x, y), std::max(x, y), p);
  std::ostringstream title;
  title << "phi_ss(x,y), N=" << n << ", theta=" << p.theta;
  write_file((fs::path(c.out) / "correlation_heatmap.svg").string(), heatmap(title.str(), m, "x, y = 1..N-1"));
}

struct VerifyFlags {
  bool hydrostatic = false;
  bool no_scan = false;
  double abs_tol = 0.05;
};

int cmd_verify(const RunConfig& c, const VerifyFlags& vf) {
  prepare_out(c);
  ExperimentSpec s;
  s.kernel = kernel_of(c);
  s.sizes = c.N;
  s.thetas = c.theta;
  s.kappa = c.kappa;
  s.alpha = c.alpha;
  s.beta = c.beta;
  s.profile = c.profile;
  s.profile_a = c.profile_a;
  s.profile_b = c.profile_b;
  s.times = c.times;
  s.replicas = c.replicas;
  s.seed = c.master_seed;
  s.threads = c.threads;
  if (c.mode != "auto") s.mode = mode_of(c, params_of(c, c.N.front(), c.theta.front()));
  s.max_events = c.max_events;
  s.abs_tol = vf.abs_tol;
  const ConvergenceReport rep = hydrodynamic_experiment(s);
  std::vector<ReportRow> rows = rep.rows;
  std::vector<ProfileRecord> recs = rep.profiles;
  for (const auto& n : rep.notices) std::cerr << "note: " << n << "\n";
  for (const auto& pt : rep.points)
    std::cout << std::setprecision(6) << "N=" << pt.N << " theta=" << pt.theta << " t=" << pt.t << "  d_sup=" << pt.d_sup
              << " +- " << pt.d_sup_stderr << "  d_ode=" << pt.d_ode << "  discretization=" << pt.discretization << "\n";
  for (const auto& tr : rep.trends)
    std::cout << "trend theta=" << tr.theta << " t=" << tr.t << ": slope " << tr.slope
              << (tr.non_increasing_within_noise ? " (non-increasing within noise)" : " (INCREASES beyond noise)") << "\n";
  if (vf.hydrostatic && !s.kernel.is_long_jump()) {
    HydrostaticSpec h;
    h.sizes = c.N;
    h.thetas = c.theta;
    h.kappa = c.kappa;
    h.alpha = c.alpha;
    h.beta = c.beta;
    h.replicas = c.replicas;
    h.seed = c.master_seed;
    h.threads = c.threads;
    const auto hr = hydrostatic_experiment(h);
    rows.insert(rows.end(), hr.rows.begin(), hr.rows.end());
    for (const auto& n : hr.notices) std::cerr << "note: " << n << "\n";
    if (c.plots) profile_plots(c, hr.profiles, "stationary_");
    recs.insert(recs.end(), hr.profiles.begin(), hr.profiles.end());
  }
  if (!vf.no_scan && !s.kernel.is_long_jump()) {
    const auto scan = correlation_scan({0.0, 1.0, 2.0}, {32, 64, 128, 256, 512, 1024});
    rows.insert(rows.end(), scan.rows.begin(), scan.rows.end());
    for (const auto& [theta, slope] : scan.exponents)
      std::cout << "max|phi_ss| exponent theta=" << theta << ": " << slope << " (claimed "
                << claimed_correlation_exponent(theta) << ")\n";
  }
  write_report(c, rows);
  write_profiles(c, recs);
  if (c.plots) {
    profile_plots(c, rep.profiles, "profiles_");
    stationary_figure(c);
    correlation_figure(c);
  }
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.pass; });
  std::cout << rows.size() - static_cast<std::size_t>(failed) << "/" << rows.size() << " comparisons pass\n";
  return failed ? kExitFail : 0;
}

void write_diagnostics(const std::string& out, const std::string& what, const Invocation& inv, const RunConfig* c) {
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream f(fs::path(out) / "diagnostics.txt");
  f << "numerical failure: " << what << "\n";
  if (!inv.config_path.empty()) f << "config file: " << inv.config_path << "\n";
  for (const auto& [flag, v] : inv.flags)
    if (!v.empty()) f << flag << " " << v << "\n";
  if (c) f << "\n# resolved configuration\n" << format_config(*c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exclab: boundary-driven exclusion process toolkit"};
  app.require_subcommand(1);
  Invocation inv;
  int modes = 10, points = 200;
  VerifyFlags vf;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo profiles and correlations");
  auto* sta = app.add_subcommand("stationary", "closed-form and exact stationary tables");
  auto* pde = app.add_subcommand("pde", "limit PDE solution on a grid");
  auto* spe = app.add_subcommand("spectrum", "Robin eigenvalues (n, lambda, residual)");
  auto* ver = app.add_subcommand("verify", "convergence report with plots");
  auto* reg = app.add_subcommand("regimes", "regime dispatch table");
  for (auto* s : {sim, sta, pde, spe, ver, reg}) add_common(s, inv);
  spe->add_option("--n", modes, "number of eigenvalues")->check(CLI::PositiveNumber);
  pde->add_option("--points", points, "grid intervals on [0,1]")->check(CLI::Range(2, 1000000));
  ver->add_flag("--hydrostatic", vf.hydrostatic, "also run the stationary comparison (nearest neighbour)");
  ver->add_flag("--no-scan", vf.no_scan, "skip the correlation scaling scan");
  ver->add_option("--abs-tol", vf.abs_tol, "deterministic tolerance of the sup-grid comparisons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  std::optional<RunConfig> cfg;
  std::string out = "out";
  try {
    cfg = resolve(inv);
    out = cfg->out;
    if (*sim) return cmd_simulate(*cfg);
    if (*sta) return cmd_stationary(*cfg);
    if (*pde) return cmd_pde(*cfg, points);
    if (*spe) return cmd_spectrum(*cfg, modes);
    if (*ver) return cmd_verify(*cfg, vf);
    if (*reg) return cmd_regimes(*cfg);
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Unsupported& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    // NumericalFailure, ResourceCapExceeded, AbsorbedState and anything else from the numerics
    std::cerr << "numerical failure: " << e.what() << " (see " << (fs::path(out) / "diagnostics.txt").string() << ")\n";
    write_diagnostics(out, e.what(), inv, cfg ? &*cfg : nullptr);
    return kExitNumerical;
  }
  return 0;
}
