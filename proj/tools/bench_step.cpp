#include <chrono>
#include <iostream>

#include "zakai/fd_solver.hpp"

int main() {
  using namespace zakai;
  const auto p = ModelParams::reference();
  GridConfig cfg;
  for (LevelIndex l : {LevelIndex{2, 2}, LevelIndex{4, 4}, LevelIndex{5, 0}, LevelIndex{0, 5}}) {
    const std::size_t n = 256;
    auto path = sample_path({1, 0}, n, p.T / n);
    auto t0 = std::chrono::steady_clock::now();
    double v = solve_path(l, path, p, cfg);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double c = path_cost(l, cfg, n);
    std::cout << l.l1 << "," << l.l2 << " P=" << v << " ns/node=" << s / c * 1e9 << "\n";
  }
}
