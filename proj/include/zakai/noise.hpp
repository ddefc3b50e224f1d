#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "zakai/model.hpp"

namespace zakai {

enum class StreamTag : std::uint32_t { path = 1, pilot = 2, test = 3 };

/// Key of an independent random stream. Distinct keys give statistically
/// independent streams; identical keys give bit-identical streams.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;
  StreamTag tag = StreamTag::path;
  std::uint32_t level = 0;
};

/// Raw (uncorrelated) standard normal pairs at a uniform timestep k.
/// The correlated y-increment is formed at consumption time via correlate().
struct BrownianPath {
  double k = 0.0;
  std::vector<NormalPair> steps;

  std::size_t size() const { return steps.size(); }
  double horizon() const { return k * static_cast<double>(steps.size()); }
};

BrownianPath sample_path(const SeedSpec& seed, std::size_t n_steps, double k);

/// Exact coarsening: groups `factor` consecutive normals into one with k' = factor*k,
/// z' = sum(z) / sqrt(factor), so sqrt(k') z' equals the sum of the fine increments.
/// Throws ConfigError("incompatible refinement") when the length is not divisible.
BrownianPath coarsen(const BrownianPath& path, std::size_t factor = 4);

/// Terminal Brownian values (W^x_T, W^y_T) after correlation.
NormalPair terminal_values(const BrownianPath& path, double rho_xy);

/// Little-endian binary dump: int64 N, float64 k, then N (z_x, z_y) float64 pairs.
void write_path(const std::filesystem::path& file, const BrownianPath& path);
BrownianPath read_path(const std::filesystem::path& file);

}  // namespace zakai
