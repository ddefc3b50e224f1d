#include "zakai/noise.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "zakai/errors.hpp"

namespace zakai {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
}

void put_u64(std::ostream& os, std::uint64_t v) {
  const std::uint64_t le = to_little_endian(v);
  os.write(reinterpret_cast<const char*>(&le), sizeof le);
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t le = 0;
  is.read(reinterpret_cast<char*>(&le), sizeof le);
  if (!is) throw ConfigError("truncated path file");
  return to_little_endian(le);
}

}  // namespace

BrownianPath sample_path(const SeedSpec& seed, std::size_t n_steps, double k) {
  if (n_steps == 0 || !(k > 0.0)) throw ConfigError("sample_path needs n_steps >= 1 and k > 0");
  std::seed_seq seq{static_cast<std::uint32_t>(seed.master_seed),
                    static_cast<std::uint32_t>(seed.master_seed >> 32),
                    static_cast<std::uint32_t>(seed.sample_index),
                    static_cast<std::uint32_t>(seed.sample_index >> 32),
                    static_cast<std::uint32_t>(seed.tag), seed.level};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal;

  BrownianPath path;
  path.k = k;
  path.steps.resize(n_steps);
  for (auto& s : path.steps) {
    s.z_x = normal(engine);
    s.z_y = normal(engine);
  }
  return path;
}

BrownianPath coarsen(const BrownianPath& path, std::size_t factor) {
  if (factor == 0 || path.size() % factor != 0) throw ConfigError("incompatible refinement");
  const double scale = std::sqrt(static_cast<double>(factor));
  BrownianPath coarse;
  coarse.k = path.k * static_cast<double>(factor);
  coarse.steps.resize(path.size() / factor);
  for (std::size_t n = 0; n < coarse.size(); ++n) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < factor; ++j) {
      sx += path.steps[n * factor + j].z_x;
      sy += path.steps[n * factor + j].z_y;
    }
    coarse.steps[n] = {sx / scale, sy / scale};
  }
  return coarse;
}

NormalPair terminal_values(const BrownianPath& path, double rho_xy) {
  double sx = 0.0, sy = 0.0;
  for (const auto& s : path.steps) {
    sx += s.z_x;
    sy += correlate(s, rho_xy);
  }
  const double sk = std::sqrt(path.k);
  return {sk * sx, sk * sy};
}

void write_path(const std::filesystem::path& file, const BrownianPath& path) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + file.string() + " for writing");
  put_u64(os, static_cast<std::uint64_t>(path.size()));
  put_u64(os, std::bit_cast<std::uint64_t>(path.k));
  for (const auto& s : path.steps) {
    put_u64(os, std::bit_cast<std::uint64_t>(s.z_x));
    put_u64(os, std::bit_cast<std::uint64_t>(s.z_y));
  }
}

BrownianPath read_path(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + file.string());
  BrownianPath path;
  const auto n = get_u64(is);
  path.k = std::bit_cast<double>(get_u64(is));
  path.steps.resize(n);
  for (auto& s : path.steps) {
    s.z_x = std::bit_cast<double>(get_u64(is));
    s.z_y = std::bit_cast<double>(get_u64(is));
  }
  return path;
}

}  // namespace zakai
