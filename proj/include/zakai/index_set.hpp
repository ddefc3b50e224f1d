#pragma once

#include <map>
#include <vector>

#include "zakai/fd_solver.hpp"

namespace zakai {

enum class IndexSetKind { standard, balanced };

struct IndexSet {
  IndexSetKind kind = IndexSetKind::standard;
  int level = 0;
  int l_star = 0;                   ///< balanced sets only
  std::vector<LevelIndex> indices;  ///< sorted, unique

  bool contains(LevelIndex idx) const;
  std::size_t size() const { return indices.size(); }
};

/// {(l1, l2) : l1 + l2 <= l + 1}.
IndexSet standard_index_set(int l);

/// Axis indices up to l, plus the interior triangle {l1, l2 > 0, l1 + l2 <= l - l_star}
/// once l >= 2 + l_star.
IndexSet balanced_index_set(int l, int l_star);

IndexSet make_index_set(IndexSetKind kind, int l, int l_star);

/// Nonzero coefficients c such that sum over the set of the mixed differences
/// equals sum_l c_l P_l.
std::map<LevelIndex, int> combination_coefficients(const IndexSet& set);

/// Pilot magnitudes |E dP| used to balance the interior against the axes.
/// x_axis[j] is at (2 + j, 0), y_axis[j] at (0, 2 + j).
struct LstarPilot {
  double at_11 = 0.0;
  std::vector<double> x_axis;
  std::vector<double> y_axis;
};

/// Per axis, the offset whose axis magnitude is closest to |E dP_(1,1)| in log scale;
/// the larger of the two. Throws ConfigError on an empty pilot.
int estimate_lstar(const LstarPilot& pilot);

}  // namespace zakai
