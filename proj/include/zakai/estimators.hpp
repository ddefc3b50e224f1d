#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zakai/fd_solver.hpp"
#include "zakai/index_set.hpp"
#include "zakai/model.hpp"
#include "zakai/noise.hpp"
#include "zakai/statistics.hpp"

namespace zakai {

struct SamplingOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path dump_paths;  ///< write every sampled path here when non-empty
};

struct LevelStats {
  int level = 0;
  LevelIndex index{};
  double mean = 0.0;
  double variance = 0.0;
  double cost_per_sample = 0.0;  ///< node updates
  double cost = 0.0;             ///< M * cost_per_sample
  std::size_t M = 0;
};

struct EstimatorReport {
  std::string method;
  double estimate = 0.0;
  double std_error = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::vector<LevelStats> levels;
  double total_cost = 0.0;  ///< sum of level costs
  double pilot_cost = 0.0;  ///< cost of the pilot samples (already included when reused)
  double wall_seconds = 0.0;
};

/// Mixed difference of P over the four neighbouring meshes, all on one path.
double delta_P(LevelIndex level, const BrownianPath& path, const ModelParams& params, const GridConfig& cfg);

/// Sparse combination value sum_{l in set} delta_P(l), evaluated through the
/// nonzero combination coefficients. Every term uses the same path.
double sparse_value(const IndexSet& set, const BrownianPath& path, const ModelParams& params,
                    const GridConfig& cfg);

/// Cost of delta_P at one index: all constituent solves.
double delta_cost(LevelIndex level, const GridConfig& cfg, std::size_t n_steps);
/// Cost of one sparse sample: sum over the set of delta_cost (shared solves counted per term).
double sparse_cost(const IndexSet& set, const GridConfig& cfg, std::size_t n_steps);

/// A hierarchy of per-level sample quantities driven by one Brownian path at the
/// level's timestep. Coupled families return P_l - P_{l-1} with the coarse term on the
/// coarsened path; uncoupled families return P_l.
class LevelFamily {
 public:
  virtual ~LevelFamily() = default;
  virtual std::string name() const = 0;
  virtual std::size_t steps(int level) const = 0;
  virtual double cost(int level) const = 0;
  virtual double evaluate(int level, const BrownianPath& path) const = 0;
  double time_step(int level) const;
  const ModelParams& params() const { return params_; }

 protected:
  LevelFamily(const ModelParams& params, const GridConfig& cfg, double k0, bool refine_time, bool coupled);
  ModelParams params_;
  GridConfig cfg_;
  double k0_;
  bool refine_time_;
  bool coupled_;
};

/// Sparse combination P_l over standard or balanced index sets.
class SparseFamily final : public LevelFamily {
 public:
  /// refine_time: k_l = k0 4^-l, otherwise k = k0 at every level.
  SparseFamily(const ModelParams& params, const GridConfig& cfg, double k0, IndexSetKind kind, int l_star,
               bool coupled, bool refine_time = true);
  std::string name() const override;
  std::size_t steps(int level) const override;
  double cost(int level) const override;
  double evaluate(int level, const BrownianPath& path) const override;
  IndexSet index_set(int level) const { return make_index_set(kind_, level, l_star_); }

 private:
  IndexSetKind kind_;
  int l_star_;
};

/// Regular grids h = h0 2^-l in both directions, k_l = k0 4^-l.
class FullGridFamily final : public LevelFamily {
 public:
  FullGridFamily(const ModelParams& params, const GridConfig& cfg, double k0, bool coupled);
  std::string name() const override;
  std::size_t steps(int level) const override;
  double cost(int level) const override;
  double evaluate(int level, const BrownianPath& path) const override;
};

/// Lazily computed, index-addressed samples of a family. Sample i of level l is a
/// pure function of (seed, i, l), so results do not depend on the thread count or
/// the order in which sample counts are requested.
class LevelSampler {
 public:
  LevelSampler(const LevelFamily& family, SamplingOptions opts);
  const LevelFamily& family() const { return family_; }
  std::span<const double> samples(int level, std::size_t n);
  SampleMoments moments(int level, std::size_t n);
  std::size_t computed(int level) const;

 private:
  const LevelFamily& family_;
  SamplingOptions opts_;
  std::map<int, std::vector<double>> cache_;
};

struct PilotOptions {
  std::size_t base = 100;  ///< pilot samples at level 0
  std::size_t min = 10;    ///< floor for the 4^-l decay with level
  int max_level = 8;
  std::size_t count(int level) const;
};

/// Level choice and sample allocation derived from pilot statistics.
struct MlmcPlan {
  bool feasible = false;
  int max_level = 0;
  double bias = 0.0;
  std::vector<std::size_t> M;
  double cost = 0.0;
};

/// Bias estimate after truncating at level L, from pilot means of a coupled family.
/// L = 0: 4|Y_1|/3; L = 1: |Y_1|/3; L >= 2: max(|Y_L|, |Y_{L-1}|/4)/3.
double mlmc_bias(std::span<const double> abs_means, int L);

/// Plans an MLMC run: smallest L with bias <= alpha eps, then
/// M_l = ceil((1-alpha^2)^-1 eps^-2 sqrt(V_l/C_l) sum_j sqrt(V_j C_j)).
MlmcPlan mlmc_plan(LevelSampler& sampler, double epsilon, double alpha, const PilotOptions& pilot);

EstimatorReport mlmc_run(LevelSampler& sampler, double epsilon, double alpha, const PilotOptions& pilot);

/// Plain MC at one level of an uncoupled family: M = ceil(V/((1-alpha^2) eps^2)) from a pilot.
MlmcPlan mc_plan(LevelSampler& sampler, int level, double epsilon, double alpha, const PilotOptions& pilot);
EstimatorReport mc_run(LevelSampler& sampler, int level, double epsilon, double alpha, const PilotOptions& pilot);

/// Fixed level and sample count.
EstimatorReport mc_fixed(LevelSampler& sampler, int level, std::size_t M);

/// Levels used by the epsilon-targeted single-level estimators.
int sparse_mc_level(double epsilon);
int full_grid_mc_level(double epsilon);

struct AlphaCandidate {
  double alpha = 0.0;
  MlmcPlan plan;
};

struct AlphaSearchResult {
  double best_alpha = 0.0;
  std::vector<AlphaCandidate> candidates;
  EstimatorReport report;
};

enum class EstimatorKind { full_mc, sparse_mc, full_mlmc, sparse_mlmc };
std::string to_string(EstimatorKind kind);

/// Predicted cost for every alpha, argmin (ties to the smaller alpha), then the run.
/// `level` is used by the single-level kinds only.
AlphaSearchResult alpha_search(LevelSampler& sampler, EstimatorKind kind, double epsilon,
                               std::span<const double> alphas, const PilotOptions& pilot, int level = 0);

/// Per-index statistics of delta_P for 0 <= l1, l2 <= max_level at a fixed timestep,
/// with all indices sharing each sample's path.
std::vector<LevelStats> mixed_difference_table(const ModelParams& params, const GridConfig& cfg, double k,
                                               int max_level, std::size_t M, const SamplingOptions& opts);

/// Statistics of levels 0..max_level with M[l] samples each.
std::vector<LevelStats> level_table(LevelSampler& sampler, std::span<const std::size_t> M);

enum class StatField { mean, variance, cost };

/// Least-squares slope of log2 |field| against level over levels >= 1.
/// Throws ConfigError when fewer than three levels qualify.
double fit_slopes(std::span<const LevelStats> stats, StatField field);

/// Least-squares slope of log2 |field| against l1 + l2 over the interior entries
/// (l1, l2 >= 1) of a mixed-difference table.
double fit_interior_slope(std::span<const LevelStats> table, StatField field);

/// l* from a mixed-difference table (needs (1,1) and axis indices from 2 upwards).
int estimate_lstar(std::span<const LevelStats> table);

}  // namespace zakai
