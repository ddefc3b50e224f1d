#include "zakai/index_set.hpp"

#include <algorithm>
#include <cmath>

#include "zakai/errors.hpp"

namespace zakai {

bool IndexSet::contains(LevelIndex idx) const {
  return std::binary_search(indices.begin(), indices.end(), idx);
}

IndexSet standard_index_set(int l) {
  if (l < 0) throw ConfigError("index set level must be >= 0");
  IndexSet s{.kind = IndexSetKind::standard, .level = l};
  for (int a = 0; a <= l + 1; ++a)
    for (int b = 0; a + b <= l + 1; ++b) s.indices.push_back({a, b});
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

IndexSet balanced_index_set(int l, int l_star) {
  if (l < 0 || l_star < 0) throw ConfigError("index set level and l* must be >= 0");
  IndexSet s{.kind = IndexSetKind::balanced, .level = l, .l_star = l_star};
  s.indices.push_back({0, 0});
  for (int a = 1; a <= l; ++a) {
    s.indices.push_back({a, 0});
    s.indices.push_back({0, a});
  }
  if (l >= 2 + l_star) {
    const int m = l - l_star;
    for (int a = 1; a < m; ++a)
      for (int b = 1; a + b <= m; ++b) s.indices.push_back({a, b});
  }
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

IndexSet make_index_set(IndexSetKind kind, int l, int l_star) {
  return kind == IndexSetKind::standard ? standard_index_set(l) : balanced_index_set(l, l_star);
}

std::map<LevelIndex, int> combination_coefficients(const IndexSet& set) {
  std::map<LevelIndex, int> c;
  for (const auto& [a, b] : set.indices) {
    c[{a, b}] += 1;
    if (a > 0) c[{a - 1, b}] -= 1;
    if (b > 0) c[{a, b - 1}] -= 1;
    if (a > 0 && b > 0) c[{a - 1, b - 1}] += 1;
  }
  std::erase_if(c, [](const auto& kv) { return kv.second == 0; });
  return c;
}

namespace {

int closest_offset(double at_11, const std::vector<double>& axis) {
  int best = 0;
  double best_gap = INFINITY;
  for (std::size_t j = 0; j < axis.size(); ++j) {
    const double gap = std::abs(std::log(at_11 / axis[j]));
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace

int estimate_lstar(const LstarPilot& pilot) {
  if (pilot.x_axis.empty() || pilot.y_axis.empty() || !(pilot.at_11 > 0.0))
    throw ConfigError("l* estimation needs a nonempty pilot table");
  return std::max(closest_offset(pilot.at_11, pilot.x_axis), closest_offset(pilot.at_11, pilot.y_axis));
}

}  // namespace zakai
