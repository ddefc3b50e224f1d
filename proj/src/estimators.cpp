#include "zakai/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "zakai/errors.hpp"

namespace zakai {

double delta_P(LevelIndex level, const BrownianPath& path, const ModelParams& params, const GridConfig& cfg) {
  const auto [a, b] = level;
  double v = solve_path({a, b}, path, params, cfg);
  if (a > 0) v -= solve_path({a - 1, b}, path, params, cfg);
  if (b > 0) v -= solve_path({a, b - 1}, path, params, cfg);
  if (a > 0 && b > 0) v += solve_path({a - 1, b - 1}, path, params, cfg);
  return v;
}

double sparse_value(const IndexSet& set, const BrownianPath& path, const ModelParams& params,
                    const GridConfig& cfg) {
  double v = 0.0;
  for (const auto& [idx, c] : combination_coefficients(set)) v += c * solve_path(idx, path, params, cfg);
  return v;
}

double delta_cost(LevelIndex level, const GridConfig& cfg, std::size_t n_steps) {
  const auto [a, b] = level;
  double c = path_cost({a, b}, cfg, n_steps);
  if (a > 0) c += path_cost({a - 1, b}, cfg, n_steps);
  if (b > 0) c += path_cost({a, b - 1}, cfg, n_steps);
  if (a > 0 && b > 0) c += path_cost({a - 1, b - 1}, cfg, n_steps);
  return c;
}

double sparse_cost(const IndexSet& set, const GridConfig& cfg, std::size_t n_steps) {
  double c = 0.0;
  for (const auto& idx : set.indices) c += delta_cost(idx, cfg, n_steps);
  return c;
}

// ---------------------------------------------------------------------------
// level families

LevelFamily::LevelFamily(const ModelParams& params, const GridConfig& cfg, double k0, bool refine_time,
                         bool coupled)
    : params_(params), cfg_(cfg), k0_(k0), refine_time_(refine_time), coupled_(coupled) {
  if (!(k0 > 0.0)) throw ConfigError("timestep must be positive");
  require_stability(params_);
}

double LevelFamily::time_step(int level) const { return refine_time_ ? std::ldexp(k0_, -2 * level) : k0_; }

namespace {

std::size_t step_count(double T, double k) {
  const double n = T / k;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream os;
    os << "T/k = " << n << " is not a positive integer";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(r);
}

// Coarse path for the l-1 term: refined timesteps coarsen by 4, fixed ones are shared.
BrownianPath coarse_path(const BrownianPath& fine, bool refine_time) {
  return refine_time ? coarsen(fine, 4) : fine;
}

}  // namespace

SparseFamily::SparseFamily(const ModelParams& params, const GridConfig& cfg, double k0, IndexSetKind kind,
                           int l_star, bool coupled, bool refine_time)
    : LevelFamily(params, cfg, k0, refine_time, coupled), kind_(kind), l_star_(l_star) {}

std::string SparseFamily::name() const { return coupled_ ? "sparse-mlmc" : "sparse-mc"; }

std::size_t SparseFamily::steps(int level) const { return step_count(params_.T, time_step(level)); }

double SparseFamily::cost(int level) const {
  double c = sparse_cost(index_set(level), cfg_, steps(level));
  if (coupled_ && level > 0) c += sparse_cost(index_set(level - 1), cfg_, steps(level - 1));
  return c;
}

double SparseFamily::evaluate(int level, const BrownianPath& path) const {
  double v = sparse_value(index_set(level), path, params_, cfg_);
  if (coupled_ && level > 0)
    v -= sparse_value(index_set(level - 1), coarse_path(path, refine_time_), params_, cfg_);
  return v;
}

FullGridFamily::FullGridFamily(const ModelParams& params, const GridConfig& cfg, double k0, bool coupled)
    : LevelFamily(params, cfg, k0, true, coupled) {}

std::string FullGridFamily::name() const { return coupled_ ? "full-mlmc" : "full-mc"; }

std::size_t FullGridFamily::steps(int level) const { return step_count(params_.T, time_step(level)); }

double FullGridFamily::cost(int level) const {
  double c = path_cost({level, level}, cfg_, steps(level));
  if (coupled_ && level > 0) c += path_cost({level - 1, level - 1}, cfg_, steps(level - 1));
  return c;
}

double FullGridFamily::evaluate(int level, const BrownianPath& path) const {
  double v = solve_path({level, level}, path, params_, cfg_);
  if (coupled_ && level > 0) v -= solve_path({level - 1, level - 1}, coarsen(path, 4), params_, cfg_);
  return v;
}

// ---------------------------------------------------------------------------
// sampler

LevelSampler::LevelSampler(const LevelFamily& family, SamplingOptions opts)
    : family_(family), opts_(std::move(opts)) {
  if (!opts_.dump_paths.empty()) std::filesystem::create_directories(opts_.dump_paths);
}

std::span<const double> LevelSampler::samples(int level, std::size_t n) {
  auto& have = cache_[level];
  if (have.size() < n) {
    const std::size_t first = have.size();
    const std::size_t steps = family_.steps(level);
    const double k = family_.time_step(level);
    auto more = parallel_map<double>(n - first, opts_.threads, [&](std::size_t j) {
      const SeedSpec seed{opts_.seed, first + j, StreamTag::path, static_cast<std::uint32_t>(level)};
      const BrownianPath path = sample_path(seed, steps, k);
      if (!opts_.dump_paths.empty()) {
        std::ostringstream name;
        name << "path_l" << level << "_" << (first + j) << ".bin";
        write_path(opts_.dump_paths / name.str(), path);
      }
      const double v = family_.evaluate(level, path);
      if (!std::isfinite(v)) throw NumericalError("non-finite sample at level " + std::to_string(level));
      return v;
    });
    have.insert(have.end(), more.begin(), more.end());
  }
  return std::span<const double>(have).first(n);
}

SampleMoments LevelSampler::moments(int level, std::size_t n) { return sample_moments(samples(level, n)); }

std::size_t LevelSampler::computed(int level) const {
  auto it = cache_.find(level);
  return it == cache_.end() ? 0 : it->second.size();
}

// ---------------------------------------------------------------------------
// MLMC and MC

std::size_t PilotOptions::count(int level) const {
  const double decayed = std::ceil(static_cast<double>(base) * std::ldexp(1.0, -2 * level));
  return std::max<std::size_t>(std::max<std::size_t>(min, 2), static_cast<std::size_t>(decayed));
}

double mlmc_bias(std::span<const double> abs_means, int L) {
  if (L == 0) return 4.0 * abs_means[1] / 3.0;
  if (L == 1) return abs_means[1] / 3.0;
  return std::max(abs_means[L], abs_means[L - 1] / 4.0) / 3.0;
}

namespace {

void check_target(double epsilon, double alpha) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

double pilot_cost(const LevelSampler& sampler, const PilotOptions& pilot) {
  double c = 0.0;
  for (int l = 0; l <= pilot.max_level; ++l)
    if (sampler.computed(l) > 0)
      c += static_cast<double>(std::min(sampler.computed(l), pilot.count(l))) * sampler.family().cost(l);
  return c;
}

std::size_t samples_for(double target) {
  if (!std::isfinite(target)) throw NumericalError("sample count overflow");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(target)));
}

}  // namespace

MlmcPlan mlmc_plan(LevelSampler& sampler, double epsilon, double alpha, const PilotOptions& pilot) {
  check_target(epsilon, alpha);
  const LevelFamily& fam = sampler.family();
  MlmcPlan plan;
  std::vector<double> abs_means;
  auto extend = [&](int l) {
    while (static_cast<int>(abs_means.size()) <= l) {
      const int j = static_cast<int>(abs_means.size());
      abs_means.push_back(std::abs(sampler.moments(j, pilot.count(j)).mean));
    }
  };
  int L = -1;
  for (int cand = 0; cand <= pilot.max_level; ++cand) {
    if (cand == 0 && pilot.max_level < 1) {
      extend(0);
      L = 0;  // nothing to compare against; plain MC on level 0
      plan.bias = 0.0;
      break;
    }
    extend(std::max(cand, 1));
    const double bias = mlmc_bias(abs_means, cand);
    if (bias <= alpha * epsilon) {
      L = cand;
      plan.bias = bias;
      break;
    }
  }
  if (L < 0) return plan;

  std::vector<double> V(L + 1), C(L + 1);
  double s = 0.0;
  bool any = false;
  for (int l = 0; l <= L; ++l) {
    V[l] = sampler.moments(l, pilot.count(l)).variance;
    C[l] = fam.cost(l);
    s += std::sqrt(V[l] * C[l]);
    any = any || V[l] > 0.0;
  }
  if (!any) throw NumericalError("pilot variance zero at all levels");
  const double scale = s / ((1.0 - alpha * alpha) * epsilon * epsilon);
  plan.feasible = true;
  plan.max_level = L;
  plan.M.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    plan.M[l] = samples_for(scale * std::sqrt(V[l] / C[l]));
    plan.cost += static_cast<double>(plan.M[l]) * C[l];
  }
  return plan;
}

namespace {

using Clock = std::chrono::steady_clock;

EstimatorReport execute(LevelSampler& sampler, const MlmcPlan& plan, int first_level, double epsilon,
                        double alpha, const PilotOptions& pilot, Clock::time_point t0) {
  EstimatorReport r;
  r.method = sampler.family().name();
  r.epsilon = epsilon;
  r.alpha = alpha;
  double var = 0.0;
  for (std::size_t j = 0; j < plan.M.size(); ++j) {
    const int l = first_level + static_cast<int>(j);
    const SampleMoments m = sampler.moments(l, plan.M[j]);
    LevelStats s{.level = l, .mean = m.mean, .variance = m.variance, .cost_per_sample = sampler.family().cost(l)};
    s.M = plan.M[j];
    s.cost = static_cast<double>(s.M) * s.cost_per_sample;
    r.estimate += m.mean;
    var += m.variance / static_cast<double>(s.M);
    r.total_cost += s.cost;
    r.levels.push_back(s);
  }
  r.std_error = std::sqrt(var);
  r.pilot_cost = pilot_cost(sampler, pilot);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::string unreachable(double epsilon, int max_level) {
  std::ostringstream os;
  os << "epsilon " << epsilon << " not reachable with max level " << max_level << "; increase max level";
  return os.str();
}

}  // namespace

EstimatorReport mlmc_run(LevelSampler& sampler, double epsilon, double alpha, const PilotOptions& pilot) {
  const auto t0 = Clock::now();
  const MlmcPlan plan = mlmc_plan(sampler, epsilon, alpha, pilot);
  if (!plan.feasible) throw ConfigError(unreachable(epsilon, pilot.max_level));
  return execute(sampler, plan, 0, epsilon, alpha, pilot, t0);
}

MlmcPlan mc_plan(LevelSampler& sampler, int level, double epsilon, double alpha, const PilotOptions& pilot) {
  check_target(epsilon, alpha);
  if (level < 0) throw ConfigError("level must be >= 0");
  if (level > pilot.max_level) return {};
  const double V = sampler.moments(level, pilot.count(level)).variance;
  if (!(V > 0.0)) throw NumericalError("pilot variance zero at all levels");
  MlmcPlan plan;
  plan.feasible = true;
  plan.max_level = level;
  plan.M = {samples_for(V / ((1.0 - alpha * alpha) * epsilon * epsilon))};
  plan.cost = static_cast<double>(plan.M[0]) * sampler.family().cost(level);
  return plan;
}

EstimatorReport mc_run(LevelSampler& sampler, int level, double epsilon, double alpha, const PilotOptions& pilot) {
  const auto t0 = Clock::now();
  const MlmcPlan plan = mc_plan(sampler, level, epsilon, alpha, pilot);
  if (!plan.feasible) throw ConfigError(unreachable(epsilon, pilot.max_level));
  return execute(sampler, plan, level, epsilon, alpha, pilot, t0);
}

EstimatorReport mc_fixed(LevelSampler& sampler, int level, std::size_t M) {
  if (M == 0) throw ConfigError("sample count must be >= 1");
  MlmcPlan plan{.feasible = true, .max_level = level, .M = {M}};
  PilotOptions none{.base = 0, .min = 0, .max_level = -1};
  return execute(sampler, plan, level, 0.0, 0.0, none, Clock::now());
}

int sparse_mc_level(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const double l = 0.5 * (-std::log2(epsilon) + std::log2(std::abs(std::log(epsilon))));
  return std::max(0, static_cast<int>(std::lround(l)));
}

int full_grid_mc_level(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  return std::max(0, static_cast<int>(std::lround(-0.5 * std::log2(epsilon))));
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::full_mc: return "full-mc";
    case EstimatorKind::sparse_mc: return "sparse-mc";
    case EstimatorKind::full_mlmc: return "full-mlmc";
    case EstimatorKind::sparse_mlmc: return "sparse-mlmc";
  }
  return "unknown";
}

AlphaSearchResult alpha_search(LevelSampler& sampler, EstimatorKind kind, double epsilon,
                               std::span<const double> alphas, const PilotOptions& pilot, int level) {
  if (alphas.empty()) throw ConfigError("alpha grid is empty");
  const bool multilevel = kind == EstimatorKind::full_mlmc || kind == EstimatorKind::sparse_mlmc;
  std::vector<double> grid(alphas.begin(), alphas.end());
  std::sort(grid.begin(), grid.end());
  const auto t0 = Clock::now();
  AlphaSearchResult res;
  const AlphaCandidate* best = nullptr;
  for (double a : grid) {
    AlphaCandidate c{.alpha = a};
    c.plan = multilevel ? mlmc_plan(sampler, epsilon, a, pilot) : mc_plan(sampler, level, epsilon, a, pilot);
    res.candidates.push_back(c);
  }
  for (const auto& c : res.candidates)
    if (c.plan.feasible && (!best || c.plan.cost < best->plan.cost)) best = &c;
  if (!best) throw ConfigError(unreachable(epsilon, pilot.max_level));
  res.best_alpha = best->alpha;
  res.report = execute(sampler, best->plan, multilevel ? 0 : level, epsilon, best->alpha, pilot, t0);
  return res;
}

// ---------------------------------------------------------------------------
// tables

std::vector<LevelStats> mixed_difference_table(const ModelParams& params, const GridConfig& cfg, double k,
                                               int max_level, std::size_t M, const SamplingOptions& opts) {
  require_stability(params);
  if (max_level < 0 || M < 2) throw ConfigError("mixed-difference table needs max level >= 0 and M >= 2");
  const std::size_t N = step_count(params.T, k);
  const int n = max_level + 1;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  auto rows = parallel_map<std::vector<double>>(M, opts.threads, [&](std::size_t i) {
    const BrownianPath path = sample_path({opts.seed, i, StreamTag::path, 0}, N, k);
    std::vector<double> P(cells), D(cells);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) P[a * n + b] = solve_path({a, b}, path, params, cfg);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        double v = P[a * n + b];
        if (a > 0) v -= P[(a - 1) * n + b];
        if (b > 0) v -= P[a * n + b - 1];
        if (a > 0 && b > 0) v += P[(a - 1) * n + b - 1];
        D[a * n + b] = v;
      }
    }
    return D;
  });
  std::vector<LevelStats> out;
  std::vector<double> col(M);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < M; ++i) col[i] = rows[i][a * n + b];
      const SampleMoments m = sample_moments(col);
      LevelStats s{.level = a + b, .index = {a, b}, .mean = m.mean, .variance = m.variance};
      s.cost_per_sample = delta_cost({a, b}, cfg, N);
      s.M = M;
      s.cost = static_cast<double>(M) * s.cost_per_sample;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<LevelStats> level_table(LevelSampler& sampler, std::span<const std::size_t> M) {
  std::vector<LevelStats> out;
  for (std::size_t j = 0; j < M.size(); ++j) {
    const int l = static_cast<int>(j);
    const SampleMoments m = sampler.moments(l, M[j]);
    LevelStats s{.level = l, .mean = m.mean, .variance = m.variance, .cost_per_sample = sampler.family().cost(l)};
    s.M = M[j];
    s.cost = static_cast<double>(s.M) * s.cost_per_sample;
    out.push_back(s);
  }
  return out;
}

double fit_slopes(std::span<const LevelStats> stats, StatField field) {
  std::vector<double> x, y;
  for (const auto& s : stats) {
    if (s.level < 1) continue;
    const double v = field == StatField::mean ? std::abs(s.mean)
                     : field == StatField::variance ? s.variance
                                                    : s.cost_per_sample;
    if (!(v > 0.0)) throw NumericalError("cannot take log2 of a non-positive value at level " + std::to_string(s.level));
    x.push_back(s.level);
    y.push_back(std::log2(v));
  }
  if (x.size() < 3) throw ConfigError("slope fit needs at least three levels >= 1");
  return ols_slope(x, y);
}

double fit_interior_slope(std::span<const LevelStats> table, StatField field) {
  std::vector<double> x, y;
  for (const auto& s : table) {
    if (s.index.l1 < 1 || s.index.l2 < 1) continue;
    const double v = field == StatField::mean ? std::abs(s.mean) : field == StatField::variance ? s.variance : s.cost_per_sample;
    if (!(v > 0.0)) throw NumericalError("cannot take log2 of a non-positive value");
    x.push_back(s.index.l1 + s.index.l2);
    y.push_back(std::log2(v));
  }
  if (x.size() < 3) throw ConfigError("interior slope fit needs at least three interior entries");
  return ols_slope(x, y);
}

int estimate_lstar(std::span<const LevelStats> table) {
  auto find = [&](LevelIndex idx) -> const LevelStats* {
    for (const auto& s : table)
      if (s.index == idx) return &s;
    return nullptr;
  };
  LstarPilot p;
  const LevelStats* c = find({1, 1});
  if (!c) throw ConfigError("l* estimation needs the (1,1) entry");
  p.at_11 = std::abs(c->mean);
  for (int j = 0; const LevelStats* s = find({2 + j, 0}); ++j) p.x_axis.push_back(std::abs(s->mean));
  for (int j = 0; const LevelStats* s = find({0, 2 + j}); ++j) p.y_axis.push_back(std::abs(s->mean));
  return estimate_lstar(p);
}

}  // namespace zakai
