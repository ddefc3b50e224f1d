#include "zakai/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "zakai/diagnostics.hpp"
#include "zakai/errors.hpp"
#include "zakai/estimators.hpp"
#include "zakai/spectral.hpp"

namespace zakai {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

struct Options {
  std::string command;
  ModelParams params = ModelParams::reference();
  double x_min = -8.0, x_max = 12.0, y_min = -8.0, y_max = 12.0;
  double h0 = 0.0, k = 0.0, k0 = 0.0, lambda = 0.0, h = 0.0;
  int levels = -1;
  std::vector<long long> samples;
  std::vector<double> eps;
  double alpha = 0.0;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int lstar = 2;
  std::string index_set = "balanced";
  long long pilot = 100, pilot_min = 10;
  int max_level = 6;
  double p = 0.25;
  int freqs = 100;
  std::string method = "sparse-mlmc";
  std::vector<int> dump_index{0, 0};
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = ".";
  bool full = false;
  std::string dump_paths, dump_field;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << std::setprecision(17) << v[i];
  return os.str();
}

/// Canonical text of every setting that affects results (not threads or output paths).
std::string canonical(const Options& o) {
  std::ostringstream os;
  os << std::setprecision(17) << "command=" << o.command << "\nmu_x=" << o.params.mu_x << "\nmu_y=" << o.params.mu_y
     << "\nrho_x=" << o.params.rho_x << "\nrho_y=" << o.params.rho_y << "\nrho_xy=" << o.params.rho_xy
     << "\nT=" << o.params.T << "\nx0=" << o.params.x0 << "\ny0=" << o.params.y0 << "\nx_min=" << o.x_min
     << "\nx_max=" << o.x_max << "\ny_min=" << o.y_min << "\ny_max=" << o.y_max << "\nh0=" << o.h0 << "\nk=" << o.k
     << "\nk0=" << o.k0 << "\nlambda=" << o.lambda << "\nh=" << o.h << "\nlevels=" << o.levels
     << "\nsamples=" << join(o.samples) << "\neps=" << join(o.eps) << "\nalpha=" << o.alpha
     << "\nalpha_grid=" << join(o.alpha_grid) << "\nlstar=" << o.lstar << "\nindex_set=" << o.index_set
     << "\npilot=" << o.pilot << "\npilot_min=" << o.pilot_min << "\nmax_level=" << o.max_level << "\np=" << o.p
     << "\nfreqs=" << o.freqs << "\nmethod=" << o.method << "\nseed=" << o.seed << "\nfull=" << o.full << "\n";
  return os.str();
}

class Csv {
 public:
  Csv(const Options& o, const std::string& name, const std::string& header) {
    std::filesystem::create_directories(o.out);
    path_ = std::filesystem::path(o.out) / name;
    os_.open(path_);
    if (!os_) throw ConfigError("cannot open " + path_.string() + " for writing");
    os_ << "# command=" << o.command << " seed=" << o.seed << " config_hash=" << std::hex << std::setw(16)
        << std::setfill('0') << fnv1a(canonical(o)) << std::dec << std::setfill(' ') << "\n"
        << header << "\n";
  }
  template <class... Ts>
  void row(const Ts&... cols) {
    std::size_t i = 0;
    ((os_ << (i++ ? "," : "") << cell(cols)), ...);
    os_ << "\n";
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) { return std::to_string(v); }

  std::filesystem::path path_;
  std::ofstream os_;
};

GridConfig grid_config(const Options& o) {
  GridConfig g;
  g.x_min = o.x_min;
  g.x_max = o.x_max;
  g.y_min = o.y_min;
  g.y_max = o.y_max;
  g.h0 = o.h0;
  g.lambda = o.lambda;
  return g;
}

SamplingOptions sampling(const Options& o) { return {.seed = o.seed, .threads = o.threads, .dump_paths = o.dump_paths}; }

PilotOptions pilot_options(const Options& o) {
  if (o.pilot < 2 || o.pilot_min < 2) throw ConfigError("pilot counts must be >= 2");
  return {.base = static_cast<std::size_t>(o.pilot), .min = static_cast<std::size_t>(o.pilot_min),
          .max_level = o.max_level};
}

IndexSetKind index_kind(const Options& o) {
  if (o.index_set == "standard") return IndexSetKind::standard;
  if (o.index_set == "balanced") return IndexSetKind::balanced;
  throw ConfigError("index_set must be standard or balanced");
}

EstimatorKind parse_kind(const std::string& s) {
  for (auto k : {EstimatorKind::full_mc, EstimatorKind::sparse_mc, EstimatorKind::full_mlmc, EstimatorKind::sparse_mlmc})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown method " + s);
}

bool multilevel(EstimatorKind k) { return k == EstimatorKind::full_mlmc || k == EstimatorKind::sparse_mlmc; }

std::unique_ptr<LevelFamily> make_family(const Options& o, EstimatorKind kind) {
  const GridConfig g = grid_config(o);
  switch (kind) {
    case EstimatorKind::full_mc: return std::make_unique<FullGridFamily>(o.params, g, o.k0, false);
    case EstimatorKind::full_mlmc: return std::make_unique<FullGridFamily>(o.params, g, o.k0, true);
    case EstimatorKind::sparse_mc:
      return std::make_unique<SparseFamily>(o.params, g, o.k0, index_kind(o), o.lstar, false);
    case EstimatorKind::sparse_mlmc:
      return std::make_unique<SparseFamily>(o.params, g, o.k0, index_kind(o), o.lstar, true);
  }
  throw ConfigError("unknown estimator");
}

std::size_t single_sample_count(const Options& o) {
  if (o.samples.size() != 1 || o.samples[0] < 1) throw ConfigError("--samples needs one positive count here");
  return static_cast<std::size_t>(o.samples[0]);
}

// Per-command defaults; only settings left unset by the user or config file change.
void resolve(Options& o, const CLI::App& app) {
  auto given = [&](const char* name) { return app.count(name) > 0; };
  const std::string& c = o.command;
  if (!given("--h0")) o.h0 = c == "table1" ? 1.0 : 0.5;
  if (!given("--k0")) o.k0 = 0.125;
  if (!given("--k") && (c == "table1" || c == "oracle-check")) o.k = 1.0 / 64.0;
  if (!given("--lambda") && c == "oracle-check") o.lambda = 4.0;
  if (!given("--mesh-width") && c == "oracle-check") o.h = 0.25;
  if (!given("--levels")) {
    if (c == "table1") o.levels = 4;
    if (c == "table2") o.levels = 5;
  }
  if (!given("--samples")) {
    const long long f = o.full ? 10 : 1;
    if (c == "table1") o.samples = {2000 * f};
    if (c == "table2") {
      o.samples.clear();
      const long long base[] = {2000, 1000, 400, 160, 64, 32};
      for (int l = 0; l <= o.levels; ++l) o.samples.push_back(f * (l < 6 ? base[l] : 16));
    }
  }
  if (!given("--eps") && c == "compare-cost") o.eps = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  if (o.full && !given("--pilot")) o.pilot *= 10;
  if (o.full && !given("--pilot-min")) o.pilot_min *= 5;
  if (o.threads < 1) throw ConfigError("--threads must be >= 1");
  validate(o.params);
}

void write_levels(const Options& o, const EstimatorReport& r) {
  Csv csv(o, r.method + "_levels.csv", "level,mean,variance,M,cost_per_sample,cost");
  for (const auto& s : r.levels) csv.row(s.level, s.mean, s.variance, s.M, s.cost_per_sample, s.cost);
  Csv sum(o, r.method + "_summary.csv", "method,epsilon,alpha,estimate,std_error,total_cost,pilot_cost,max_level");
  sum.row(r.method, r.epsilon, r.alpha, r.estimate, r.std_error, r.total_cost, r.pilot_cost,
          r.levels.empty() ? 0 : r.levels.back().level);
}

void print_report(std::ostream& out, const EstimatorReport& r) {
  out << r.method << ": estimate=" << num(r.estimate) << " std_error=" << num(r.std_error)
      << " eps=" << num(r.epsilon) << " alpha=" << num(r.alpha) << " cost=" << num(r.total_cost)
      << " pilot_cost=" << num(r.pilot_cost) << " levels=" << r.levels.size() << " wall=" << num(r.wall_seconds)
      << "s\n";
}

// ---------------------------------------------------------------------------

int cmd_table1(const Options& o, std::ostream& out) {
  if (o.levels < 0) throw ConfigError("--levels must be >= 0");
  const auto stats = mixed_difference_table(o.params, grid_config(o), o.k, o.levels, single_sample_count(o), sampling(o));
  Csv csv(o, "table1.csv", "l1,l2,log2_abs_mean,log2_var,M");
  for (const auto& s : stats) csv.row(s.index.l1, s.index.l2, std::log2(std::abs(s.mean)), std::log2(s.variance), s.M);
  out << "wrote " << csv.path().string() << " (" << stats.size() << " rows)\n";
  if (o.levels >= 2) {
    out << "interior slopes vs l1+l2: mean=" << num(fit_interior_slope(stats, StatField::mean))
        << " variance=" << num(fit_interior_slope(stats, StatField::variance)) << "\n";
    out << "estimated l*=" << estimate_lstar(stats) << "\n";
  }
  return exit_ok;
}

int cmd_table2(const Options& o, std::ostream& out) {
  if (o.levels < 0) throw ConfigError("--levels must be >= 0");
  std::vector<std::size_t> M;
  for (auto m : o.samples) {
    if (m < 2) throw ConfigError("--samples entries must be >= 2");
    M.push_back(static_cast<std::size_t>(m));
  }
  if (M.size() == 1) M.assign(static_cast<std::size_t>(o.levels) + 1, M[0]);
  if (M.size() != static_cast<std::size_t>(o.levels) + 1) throw ConfigError("--samples needs one count or one per level");
  auto fam = make_family(o, EstimatorKind::sparse_mlmc);
  LevelSampler sampler(*fam, sampling(o));
  const auto stats = level_table(sampler, M);
  Csv csv(o, "table2.csv", "l,log2_abs_mean,log2_var,log2_cost,M");
  for (const auto& s : stats)
    csv.row(s.level, std::log2(std::abs(s.mean)), std::log2(s.variance), std::log2(s.cost_per_sample), s.M);
  out << "wrote " << csv.path().string() << "\n";
  if (o.levels >= 3) {
    out << "slopes over l>=1: mean=" << num(fit_slopes(stats, StatField::mean))
        << " variance=" << num(fit_slopes(stats, StatField::variance))
        << " cost=" << num(fit_slopes(stats, StatField::cost)) << "\n";
  }
  return exit_ok;
}

int cmd_estimator(const Options& o, EstimatorKind kind, std::ostream& out) {
  auto fam = make_family(o, kind);
  EstimatorReport r;
  if (!o.eps.empty()) {
    if (o.eps.size() != 1) throw ConfigError("--eps takes one value for this command");
    const double eps = o.eps[0];
    const PilotOptions pilot = pilot_options(o);
    LevelSampler sampler(*fam, sampling(o));
    int level = 0;
    if (!multilevel(kind))
      level = o.levels >= 0 ? o.levels
                            : (kind == EstimatorKind::sparse_mc ? sparse_mc_level(eps) : full_grid_mc_level(eps));
    if (o.alpha > 0.0) {
      r = multilevel(kind) ? mlmc_run(sampler, eps, o.alpha, pilot) : mc_run(sampler, level, eps, o.alpha, pilot);
    } else {
      r = alpha_search(sampler, kind, eps, o.alpha_grid, pilot, level).report;
    }
  } else {
    if (multilevel(kind)) throw ConfigError("--eps is required for " + to_string(kind));
    if (o.levels < 0) throw ConfigError("give --eps, or --levels with --samples");
    const std::size_t M = single_sample_count(o);
    if (kind == EstimatorKind::sparse_mc) {
      const double k = o.k > 0.0 ? o.k : std::ldexp(o.k0, -2 * o.levels);
      SparseFamily fixed(o.params, grid_config(o), k, index_kind(o), o.lstar, false, false);
      LevelSampler sampler(fixed, sampling(o));
      r = mc_fixed(sampler, o.levels, M);
    } else {
      LevelSampler sampler(*fam, sampling(o));
      r = mc_fixed(sampler, o.levels, M);
    }
  }
  write_levels(o, r);
  print_report(out, r);
  return exit_ok;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.eps.empty()) throw ConfigError("--eps list is empty");
  for (std::size_t i = 1; i < o.eps.size(); ++i)
    if (!(o.eps[i] < o.eps[i - 1])) throw ConfigError("--eps list must be strictly decreasing");
  const PilotOptions pilot = pilot_options(o);
  const EstimatorKind kinds[] = {EstimatorKind::full_mc, EstimatorKind::sparse_mc, EstimatorKind::full_mlmc,
                                 EstimatorKind::sparse_mlmc};
  std::vector<std::unique_ptr<LevelFamily>> fams;
  std::vector<std::unique_ptr<LevelSampler>> samplers;
  for (auto k : kinds) {
    fams.push_back(make_family(o, k));
    samplers.push_back(std::make_unique<LevelSampler>(*fams.back(), sampling(o)));
  }
  Csv csv(o, "cost.csv", "method,epsilon,alpha,max_level,estimate,std_error,total_cost,eps2_cost,status");
  for (double eps : o.eps) {
    for (std::size_t m = 0; m < 4; ++m) {
      const EstimatorKind kind = kinds[m];
      try {
        int level = 0;
        if (kind == EstimatorKind::full_mc) level = full_grid_mc_level(eps);
        if (kind == EstimatorKind::sparse_mc) level = sparse_mc_level(eps);
        const auto res = alpha_search(*samplers[m], kind, eps, o.alpha_grid, pilot, level);
        const auto& r = res.report;
        csv.row(to_string(kind), eps, r.alpha, r.levels.back().level, r.estimate, r.std_error, r.total_cost,
                eps * eps * r.total_cost, "ok");
        print_report(out, r);
      } catch (const StabilityError&) {
        throw;
      } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& ch : msg)
          if (ch == ',' || ch == '\n') ch = ';';
        csv.row(to_string(kind), eps, 0.0, -1, 0.0, 0.0, 0.0, 0.0, "failed: " + msg);
        out << to_string(kind) << ": eps=" << num(eps) << " failed: " << e.what() << "\n";
      }
    }
  }
  out << "wrote " << csv.path().string() << "\n";
  return exit_ok;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  const auto sweep = decay_sweep(o.params, o.k, o.h, o.lambda, o.p, o.freqs);
  Csv csv(o, "oracle.csv", "xi,eta,abs_mean,second_moment,bound_ratio");
  double worst = 0.0;
  for (const auto& d : sweep) {
    csv.row(d.xi, d.eta, d.abs_mean, d.second_moment, d.bound_ratio);
    worst = std::max(worst, d.bound_ratio);
  }
  out << "beta=" << num(stability_margin(o.params)) << " kappa=" << num(decay_constant(o.params, o.lambda))
      << " worst_ratio=" << num(worst) << (worst < 1.0 ? " (bound holds)" : " (bound violated)") << "\n";
  out << "wrote " << csv.path().string() << "\n";
  return exit_ok;
}

int cmd_alpha(const Options& o, std::ostream& out) {
  if (o.eps.size() != 1) throw ConfigError("--eps takes one value for alpha-search");
  const EstimatorKind kind = parse_kind(o.method);
  auto fam = make_family(o, kind);
  LevelSampler sampler(*fam, sampling(o));
  const double eps = o.eps[0];
  int level = 0;
  if (!multilevel(kind))
    level = o.levels >= 0 ? o.levels : (kind == EstimatorKind::sparse_mc ? sparse_mc_level(eps) : full_grid_mc_level(eps));
  const auto res = alpha_search(sampler, kind, eps, o.alpha_grid, pilot_options(o), level);
  Csv csv(o, "alpha.csv", "alpha,feasible,max_level,predicted_cost");
  for (const auto& c : res.candidates)
    csv.row(c.alpha, c.plan.feasible ? 1 : 0, c.plan.feasible ? c.plan.max_level : -1, c.plan.cost);
  write_levels(o, res.report);
  out << "best alpha=" << num(res.best_alpha) << "\n";
  print_report(out, res.report);
  return exit_ok;
}

void dump_field(const Options& o, std::ostream& out) {
  if (o.dump_field.empty()) return;
  if (o.dump_index.size() != 2 || o.dump_index[0] < 0 || o.dump_index[1] < 0)
    throw ConfigError("--dump-index needs two non-negative levels");
  const double k = o.k > 0.0 ? o.k : o.k0;
  const std::size_t N = static_cast<std::size_t>(std::llround(o.params.T / k));
  const BrownianPath path = sample_path({o.seed, 0, StreamTag::path, 0}, N, k);
  write_field_layers_csv(o.dump_field, {o.dump_index[0], o.dump_index[1]}, path, o.params, grid_config(o));
  out << "wrote " << o.dump_field << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Sparse-grid and multilevel Monte Carlo experiments for a 2-d Zakai SPDE", "zakai"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value settings file; command-line flags override it");

  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--threads", o.threads, "worker threads");
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--full", o.full, "larger sample counts");
  app.add_option("--dump-paths,--dump_paths", o.dump_paths, "write every sampled path to this directory");
  app.add_option("--dump-field,--dump_field", o.dump_field, "write all time layers of sample 0 to this CSV");
  app.add_option("--dump-index,--dump_index", o.dump_index, "mesh index l1,l2 for --dump-field")->delimiter(',');

  app.add_option("--mu-x,--mu_x", o.params.mu_x);
  app.add_option("--mu-y,--mu_y", o.params.mu_y);
  app.add_option("--rho-x,--rho_x", o.params.rho_x);
  app.add_option("--rho-y,--rho_y", o.params.rho_y);
  app.add_option("--rho-xy,--rho_xy", o.params.rho_xy);
  app.add_option("--T", o.params.T, "horizon");
  app.add_option("--x0", o.params.x0);
  app.add_option("--y0", o.params.y0);
  app.add_option("--x-min,--x_min", o.x_min);
  app.add_option("--x-max,--x_max", o.x_max);
  app.add_option("--y-min,--y_min", o.y_min);
  app.add_option("--y-max,--y_max", o.y_max);
  app.add_option("--h0", o.h0, "coarsest mesh width");
  app.add_option("--k", o.k, "fixed timestep");
  app.add_option("--k0", o.k0, "level-0 timestep (k_l = k0 4^-l)");
  app.add_option("--lambda", o.lambda, "k/h^2 bound (warning threshold; decay constant in oracle-check)");
  app.add_option("--mesh-width,--mesh_width", o.h, "mesh width for oracle-check");
  app.add_option("--levels", o.levels, "finest level");
  app.add_option("--samples", o.samples, "sample count, or one per level")->delimiter(',');
  app.add_option("--eps", o.eps, "target RMSE (list for compare-cost)")->delimiter(',');
  app.add_option("--alpha", o.alpha, "bias share of eps; searched over --alpha-grid when omitted");
  app.add_option("--alpha-grid,--alpha_grid", o.alpha_grid)->delimiter(',');
  app.add_option("--lstar", o.lstar, "interior offset of the balanced index sets");
  app.add_option("--index-set,--index_set", o.index_set, "standard or balanced");
  app.add_option("--pilot", o.pilot, "pilot samples at level 0 (decays 4^-l)");
  app.add_option("--pilot-min,--pilot_min", o.pilot_min, "minimum pilot samples per level");
  app.add_option("--max-level,--max_level", o.max_level);
  app.add_option("--p", o.p, "high-wave exponent for oracle-check");
  app.add_option("--freqs", o.freqs, "frequencies per axis for oracle-check");
  app.add_option("--method", o.method, "estimator for alpha-search");

  const char* commands[][2] = {
      {"table1", "mixed-difference statistics per (l1,l2)"},
      {"table2", "sparse MLMC level statistics and fitted slopes"},
      {"sparse-mc", "Monte Carlo on the sparse combination"},
      {"mlmc", "multilevel Monte Carlo on sparse combinations"},
      {"full-mc", "Monte Carlo on a regular grid"},
      {"full-mlmc", "multilevel Monte Carlo on regular grids"},
      {"compare-cost", "cost of all four estimators over an eps list"},
      {"oracle-check", "Fourier moments and the high-wave decay bound"},
      {"alpha-search", "predicted cost per alpha, then the best run"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  o.command = app.get_subcommands().front()->get_name();

  auto handler = set_warning_handler([&err](const std::string& msg) { err << "warning: " << msg << "\n"; });
  struct Restore {
    WarningHandler h;
    ~Restore() { set_warning_handler(std::move(h)); }
  } restore{std::move(handler)};

  try {
    resolve(o, app);
    int code = exit_ok;
    const std::string& c = o.command;
    if (c == "table1") code = cmd_table1(o, out);
    else if (c == "table2") code = cmd_table2(o, out);
    else if (c == "sparse-mc") code = cmd_estimator(o, EstimatorKind::sparse_mc, out);
    else if (c == "mlmc") code = cmd_estimator(o, EstimatorKind::sparse_mlmc, out);
    else if (c == "full-mc") code = cmd_estimator(o, EstimatorKind::full_mc, out);
    else if (c == "full-mlmc") code = cmd_estimator(o, EstimatorKind::full_mlmc, out);
    else if (c == "compare-cost") code = cmd_compare(o, out);
    else if (c == "oracle-check") code = cmd_oracle(o, out);
    else if (c == "alpha-search") code = cmd_alpha(o, out);
    dump_field(o, out);
    return code;
  } catch (const StabilityError& e) {
    err << "refused: " << e.what() << "\n";
    return exit_stability;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace zakai
