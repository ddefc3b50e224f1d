// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "zakai/cli.hpp"
#include "zakai/estimators.hpp"
#include "zakai/spectral.hpp"

using namespace zakai;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::string elapsed() const {
    return fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1) + "s";
  }
};

const LevelStats& at(const std::vector<LevelStats>& t, int a, int b) {
  for (const auto& s : t)
    if (s.index == LevelIndex{a, b}) return s;
  throw std::out_of_range("missing table entry");
}

// ---------------------------------------------------------------------------

void table1(int threads) {
  Timer tm;
  GridConfig cfg;
  cfg.h0 = 1.0;
  // indices 0..4 in each direction
  const auto t = mixed_difference_table(ModelParams::reference(), cfg, 1.0 / 64, 4, 2000, {.seed = 1, .threads = threads});
  const double m11 = std::log2(std::abs(at(t, 1, 1).mean));
  const double m22 = std::log2(std::abs(at(t, 2, 2).mean));
  const double m12 = std::log2(std::abs(at(t, 1, 2).mean));
  const double v11 = std::log2(at(t, 1, 1).variance);
  const bool ok = std::abs(m11 + 13.73) <= 0.5 && std::abs(m22 + 17.24) <= 0.5 && std::abs(m12 + 15.49) <= 0.5 &&
                  std::abs(v11 + 25.29) <= 0.7;
  report(1, ok,
         "mixed differences, M=2000, k=1/64: log2|mean| (1,1)=" + fmt(m11, 2) + " [-13.73+-0.5], (2,2)=" +
             fmt(m22, 2) + " [-17.24+-0.5], (1,2)=" + fmt(m12, 2) + " [-15.49+-0.5]; log2 var (1,1)=" + fmt(v11, 2) +
             " [-25.29+-0.7] (" + tm.elapsed() + ")");

  const double sm = fit_interior_slope(t, StatField::mean);
  const double sv = fit_interior_slope(t, StatField::variance);
  std::vector<LevelStats> upto3;
  for (const auto& s : t)
    if (s.index.l1 <= 3 && s.index.l2 <= 3) upto3.push_back(s);
  report(2, sm >= -2.3 && sm <= -1.7 && sv >= -4.4 && sv <= -3.6,
         "interior slopes vs l1+l2 (1<=l1,l2<=4): mean=" + fmt(sm) + " [-2.3,-1.7], variance=" + fmt(sv) +
             " [-4.4,-3.6]; for reference 1<=l1,l2<=3 gives mean=" + fmt(fit_interior_slope(upto3, StatField::mean)) +
             ", variance=" + fmt(fit_interior_slope(upto3, StatField::variance)));
}

void table2(int threads) {
  Timer tm;
  GridConfig cfg;
  cfg.h0 = 0.5;
  SparseFamily fam(ModelParams::reference(), cfg, 0.125, IndexSetKind::balanced, 2, true);
  LevelSampler sampler(fam, {.seed = 1, .threads = threads});
  const std::vector<std::size_t> M{2000, 1000, 400, 160, 64, 32};
  const auto stats = level_table(sampler, M);
  const double sm = fit_slopes(stats, StatField::mean);
  const double sv = fit_slopes(stats, StatField::variance);
  const double sc = fit_slopes(stats, StatField::cost);
  const bool ok = std::abs(sm + 1.91) <= 0.3 && std::abs(sv + 3.73) <= 0.3 && std::abs(sc - 3.27) <= 0.3;
  std::string cols;
  for (const auto& s : stats) cols += " " + fmt(std::log2(std::abs(s.mean)), 2) + "/" + fmt(std::log2(s.variance), 2);
  report(3, ok,
         "sparse MLMC levels 0..5, h0=1/2, k0=1/8: slopes mean=" + fmt(sm, 2) + " [-1.91+-0.3], variance=" + fmt(sv, 2) +
             " [-3.73+-0.3], cost=" + fmt(sc, 2) + " [3.27+-0.3]; log2 mean/var:" + cols + " (" + tm.elapsed() + ")");
}

void complexity(int threads) {
  Timer tm;
  const ModelParams p = ModelParams::reference();
  GridConfig cfg;
  cfg.h0 = 0.5;
  const double k0 = 0.125;
  const std::vector<double> eps{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> alphas;
  for (int j = 1; j <= 9; ++j) alphas.push_back(0.1 * j);
  const PilotOptions pilot{.base = 100, .min = 10, .max_level = 6};

  FullGridFamily full_mc(p, cfg, k0, false), full_mlmc(p, cfg, k0, true);
  SparseFamily sparse_mc(p, cfg, k0, IndexSetKind::balanced, 2, false);
  SparseFamily sparse_mlmc(p, cfg, k0, IndexSetKind::balanced, 2, true);
  const SamplingOptions so{.seed = 1, .threads = threads};
  LevelSampler s_fmc(full_mc, so), s_smc(sparse_mc, so), s_fml(full_mlmc, so), s_sml(sparse_mlmc, so);

  std::vector<double> x, w_fmc, w_smc, e2_fml, e2_sml;
  std::string detail;
  for (double e : eps) {
    x.push_back(std::log2(e));
    const auto a = alpha_search(s_fmc, EstimatorKind::full_mc, e, alphas, pilot, full_grid_mc_level(e)).report;
    const auto b = alpha_search(s_smc, EstimatorKind::sparse_mc, e, alphas, pilot, sparse_mc_level(e)).report;
    const auto c = alpha_search(s_fml, EstimatorKind::full_mlmc, e, alphas, pilot).report;
    const auto d = alpha_search(s_sml, EstimatorKind::sparse_mlmc, e, alphas, pilot).report;
    w_fmc.push_back(std::log2(a.total_cost));
    w_smc.push_back(std::log2(b.total_cost));
    e2_fml.push_back(std::log2(e * e * c.total_cost));
    e2_sml.push_back(std::log2(e * e * d.total_cost));
    detail += " eps=2^" + fmt(std::log2(e), 0) + ":[" + fmt(w_fmc.back(), 2) + "," + fmt(w_smc.back(), 2) + "," +
              fmt(e2_fml.back(), 2) + "(L=" + std::to_string(c.levels.back().level) + ")," + fmt(e2_sml.back(), 2) +
              "(L=" + std::to_string(d.levels.back().level) + ")]";
  }
  const double s_fmc_slope = ols_slope(x, w_fmc);
  const double s_smc_slope = ols_slope(x, w_smc);
  const auto [lo, hi] = std::minmax_element(e2_sml.begin(), e2_sml.end());
  const double flat_ratio = std::exp2(*hi - *lo);
  std::vector<double> neg_x;
  for (double v : x) neg_x.push_back(-v);
  const double grow_slope = ols_slope(neg_x, e2_fml);
  const double grow_ratio = std::exp2(e2_fml.back() - e2_fml.front());
  const bool ok_fmc = std::abs(s_fmc_slope + 4.0) <= 0.4;
  const bool ok_smc = std::abs(s_smc_slope + 3.5) <= 0.4;
  const bool ok_flat = flat_ratio <= 2.0;
  const bool ok_grow = grow_slope > 0.0 && grow_ratio >= 1.2;
  report(4, ok_fmc && ok_smc && ok_flat && ok_grow,
         "cost sweep eps=2^-4..2^-7: full MC slope=" + fmt(s_fmc_slope, 2) + (ok_fmc ? "" : "(!)") +
             " [-4+-0.4], sparse MC slope=" + fmt(s_smc_slope, 2) + (ok_smc ? "" : "(!)") +
             " [-3.5+-0.4], sparse MLMC eps^2 W max/min=" + fmt(flat_ratio, 2) + (ok_flat ? "" : "(!)") +
             " [<=2], full MLMC eps^2 W slope=" + fmt(grow_slope, 2) + " last/first=" + fmt(grow_ratio, 2) +
             (ok_grow ? "" : "(!)") + " [>0 and >=1.2]; log2 [W_fullmc,W_sparsemc,eps2W_fullmlmc,eps2W_sparsemlmc]:" +
             detail + " (" + tm.elapsed() + ")");
}

void spectral_vs_adi() {
  Timer tm;
  const ModelParams p = ModelParams::reference();
  GridConfig cfg;
  cfg.x_min = cfg.y_min = -8.0;
  cfg.x_max = cfg.y_max = 8.0;
  cfg.h0 = 0.25;
  cfg.boundary = Boundary::periodic;
  const Grid2D g = Grid2D::make({0, 0}, p, cfg);
  const SpectralOptions opts{.variant = ImplicitVariant::adi, .include_drift = true};
  double worst_path = 0.0, worst_step = 0.0, worst_functional = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const BrownianPath path = sample_path({.master_seed = 7, .sample_index = i, .tag = StreamTag::test}, 16, 1.0 / 16);
    const FieldGrid fd = solve_path_field({0, 0}, path, p, cfg);
    const FieldGrid sp = spectral_solve_periodic(g, path, p, opts);
    for (std::size_t q = 0; q < fd.values.size(); ++q) worst_path = std::max(worst_path, std::abs(fd.values[q] - sp.values[q]));
    worst_functional = std::max(worst_functional, std::abs(quadrant_functional(fd) - quadrant_functional(sp)));
    const BrownianPath one{.k = path.k, .steps = {path.steps[0]}};
    const FieldGrid fd1 = step(dirac_init(g), p, one.k, one.steps[0]);
    const FieldGrid sp1 = spectral_solve_periodic(g, one, p, opts);
    for (std::size_t q = 0; q < fd1.values.size(); ++q) worst_step = std::max(worst_step, std::abs(fd1.values[q] - sp1.values[q]));
  }
  report(5, worst_path <= 1e-8 && worst_step <= 1e-10,
         "periodic 64x64, 20 paths: max field diff N=16 " + sci(worst_path) + " [<=1e-8], single step " +
             sci(worst_step) + " [<=1e-10], functional diff " + sci(worst_functional) + " (" + tm.elapsed() + ")");
}

void exact_oracle(int threads) {
  Timer tm;
  // deterministic limit, k = h^2/4
  ModelParams det = ModelParams::reference();
  det.rho_x = det.rho_y = 0.0;
  GridConfig cfg;
  cfg.h0 = 0.5;
  const double exact = exact_functional(det, 0.0, 0.0);
  std::vector<double> lh, le;
  std::string errs;
  bool decreasing = true;
  for (int l = 0; l < 4; ++l) {
    const double h = std::ldexp(0.5, -l);
    const std::size_t n = static_cast<std::size_t>(std::lround(4.0 / (h * h)));
    const BrownianPath zero{.k = 1.0 / static_cast<double>(n), .steps = std::vector<NormalPair>(n)};
    const double e = std::abs(solve_path({l, l}, zero, det, cfg) - exact);
    if (!le.empty() && !(std::log2(e) < le.back())) decreasing = false;
    lh.push_back(std::log2(h));
    le.push_back(std::log2(e));
    errs += " " + sci(e);
  }
  const double order = ols_slope(lh, le);
  double worst_pair = 1e300;
  for (std::size_t j = 1; j < le.size(); ++j) worst_pair = std::min(worst_pair, le[j - 1] - le[j]);

  // stochastic, level (3,3) on [-8,12] with h0 = 1
  const ModelParams p = ModelParams::reference();
  GridConfig c1;
  c1.h0 = 1.0;
  const std::size_t M = 2000;
  const double k = 1.0 / 64;
  struct Pair {
    double fd = 0.0, ex = 0.0;
  };
  const auto v = parallel_map<Pair>(M, threads, [&](std::size_t i) {
    const BrownianPath path = sample_path({.master_seed = 11, .sample_index = i}, 64, k);
    const NormalPair w = terminal_values(path, p.rho_xy);
    return Pair{solve_path({3, 3}, path, p, c1), exact_functional(p, w.z_x, w.z_y)};
  });
  std::vector<double> a, b;
  for (const auto& q : v) {
    a.push_back(q.fd);
    b.push_back(q.ex);
  }
  const auto ma = sample_moments(a), mb = sample_moments(b);
  const double se = std::sqrt(ma.variance / M + mb.variance / M);
  const double gap = std::abs(ma.mean - mb.mean);
  report(6, order >= 1.8 && decreasing && gap <= 3 * se,
         "rho=0, h=1/2..1/16, k=h^2/4: errors" + errs + ", fitted order=" + fmt(order, 2) + " (worst pair " +
             fmt(worst_pair, 2) + ") [>=1.8]; level (3,3) M=2000: E[P^N]=" + fmt(ma.mean, 5) + " E[exact]=" +
             fmt(mb.mean, 5) + " gap=" + sci(gap) + " [<=3 se=" + sci(3 * se) + "] (" + tm.elapsed() + ")");
}

void moments_and_decay() {
  Timer tm;
  const ModelParams p = ModelParams::reference();
  const double k = 1.0 / 64, h = 0.25;
  const SpectralOptions opts{.variant = ImplicitVariant::adi, .include_drift = true};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-std::numbers::pi / h, std::numbers::pi / h);
  const int draws = 1000000;
  double worst_z = 0.0;
  for (int f = 0; f < 20; ++f) {
    const double xi = u(rng), eta = u(rng);
    double s_re = 0, s_im = 0, s_n = 0, q_re = 0, q_im = 0, q_n = 0;
    for (int d = 0; d < draws; ++d) {
      const auto c = amplification(xi, eta, p, k, h, h, {n(rng), n(rng)}, opts);
      const double nn = std::norm(c);
      s_re += c.real();
      s_im += c.imag();
      s_n += nn;
      q_re += c.real() * c.real();
      q_im += c.imag() * c.imag();
      q_n += nn * nn;
    }
    auto z = [&](double s, double q, double want) {
      const double m = s / draws;
      const double sd = std::sqrt(std::max(q / draws - m * m, 0.0) / draws);
      const double diff = std::abs(m - want);
      return sd > 0 ? diff / sd : (diff < 1e-15 ? 0.0 : 1e9);
    };
    const auto e = moment_E(xi, eta, p, k, h, h, opts);
    worst_z = std::max({worst_z, z(s_re, q_re, e.real()), z(s_im, q_im, e.imag()),
                        z(s_n, q_n, moment_E2(xi, eta, p, k, h, h, opts))});
  }
  const double ratio = decay_check(p, k, h, 4.0, 0.25, 100);
  report(7, worst_z <= 4.0 && ratio < 1.0,
         "20 frequencies x 1e6 draws: worst |MC - closed form| = " + fmt(worst_z, 2) +
             " sigma [<=4]; decay bound 100x100 sweep (k=1/64, h=1/4, lambda=4, p=1/4) worst ratio " + sci(ratio) +
             " [<1] (" + tm.elapsed() + ")");
}

std::string slurp(const fs::path& f) {
  std::ifstream is(f, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void coupling_and_determinism(const fs::path& work) {
  Timer tm;
  // residual relative to the magnitude of the summed increments
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const BrownianPath fine = sample_path({.master_seed = 3, .sample_index = i, .tag = StreamTag::test}, 256, 1.0 / 256);
    const BrownianPath coarse = coarsen(fine);
    const double sk = std::sqrt(fine.k), skc = std::sqrt(coarse.k);
    for (std::size_t b = 0; b < coarse.size(); ++b) {
      double sx = 0, sy = 0, ax = 0, ay = 0;
      for (int j = 0; j < 4; ++j) {
        const auto& z = fine.steps[4 * b + j];
        sx += sk * z.z_x;
        sy += sk * z.z_y;
        ax += std::abs(sk * z.z_x);
        ay += std::abs(sk * z.z_y);
      }
      worst = std::max(worst, std::abs(skc * coarse.steps[b].z_x - sx) / ax);
      worst = std::max(worst, std::abs(skc * coarse.steps[b].z_y - sy) / ay);
    }
  }

  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"table1", {"table1", "--levels", "2", "--samples", "40"}, {"table1.csv"}},
      {"table2", {"table2", "--levels", "2", "--samples", "40,20,10"}, {"table2.csv"}},
      {"mlmc", {"mlmc", "--eps", "0.03", "--max-level", "3"}, {"sparse-mlmc_levels.csv", "sparse-mlmc_summary.csv"}},
      {"sparse-mc", {"sparse-mc", "--eps", "0.1", "--max-level", "3"}, {"sparse-mc_levels.csv", "sparse-mc_summary.csv"}},
  };
  bool identical = true;
  std::string which;
  for (const auto& c : cases) {
    std::string outs[2];
    for (int t = 0; t < 2; ++t) {
      const std::string threads = t == 0 ? "1" : "4";
      const fs::path dir = work / (c.name + "_t" + threads);
      std::vector<std::string> args{"zakai"};
      args.insert(args.end(), c.args.begin(), c.args.end());
      args.insert(args.end(), {"--seed", "5", "--threads", threads, "--out", dir.string()});
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
      if (code != exit_ok) {
        identical = false;
        which += " " + c.name + "(exit " + std::to_string(code) + ")";
        continue;
      }
      for (const auto& f : c.files) outs[t] += slurp(dir / f);
    }
    if (outs[0].empty() || outs[0] != outs[1]) {
      identical = false;
      which += " " + c.name;
    }
  }
  report(8, worst <= 1e-15 && identical,
         "coarsening residual (relative to sum |increments|, 1000 paths) " + sci(worst) +
             " [<=1e-15]; CSVs byte-identical for threads 1 vs 4 over table1, table2, mlmc, sparse-mc: " +
             (identical ? "yes" : "no:" + which) + " (" + tm.elapsed() + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string workdir = (fs::temp_directory_path() / "zakai_acceptance").string();
  std::vector<int> only;
  app.add_option("--threads", threads);
  app.add_option("--workdir", workdir, "scratch directory for CLI outputs");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  Timer total;
  try {
    if (want(1) || want(2)) table1(threads);
    if (want(3)) table2(threads);
    if (want(4)) complexity(threads);
    if (want(5)) spectral_vs_adi();
    if (want(6)) exact_oracle(threads);
    if (want(7)) moments_and_decay();
    if (want(8)) coupling_and_determinism(workdir);
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d failing criteria (%s)\n", g_failures ? "FAILED" : "ALL PASSED", g_failures, total.elapsed().c_str());
  return g_failures ? 1 : 0;
}
