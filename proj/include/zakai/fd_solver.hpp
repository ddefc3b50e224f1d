#pragma once

#include <compare>
#include <filesystem>
#include <vector>

#include "zakai/model.hpp"
#include "zakai/noise.hpp"
#include "zakai/tridiagonal.hpp"

namespace zakai {

enum class Boundary { dirichlet, periodic };

/// Spatial refinement multi-index: h_x = h0 2^-l1, h_y = h0 2^-l2.
struct LevelIndex {
  int l1 = 0;
  int l2 = 0;
  friend auto operator<=>(const LevelIndex&, const LevelIndex&) = default;
};

/// Truncated computational domain and coarsest mesh width.
struct GridConfig {
  double x_min = -8.0;
  double x_max = 12.0;
  double y_min = -8.0;
  double y_max = 12.0;
  double h0 = 1.0;
  Boundary boundary = Boundary::dirichlet;
  /// Warn when k > lambda min(h_x^2, h_y^2); 0 disables the check.
  double lambda = 0.0;
};

/// Uniform 2-d mesh. Dirichlet grids include both boundary nodes
/// (n_x = cells + 1); periodic grids store one period (n_x = cells).
struct Grid2D {
  double h_x = 1.0;
  double h_y = 1.0;
  double x_min = -8.0;
  double x_max = 12.0;
  double y_min = -8.0;
  double y_max = 12.0;
  int n_x = 0;
  int n_y = 0;
  int i0 = 0;  ///< Dirac node
  int j0 = 0;
  Boundary boundary = Boundary::dirichlet;

  static Grid2D make(double h_x, double h_y, double x0, double y0, const GridConfig& cfg);
  static Grid2D make(LevelIndex level, const ModelParams& params, const GridConfig& cfg);

  double x(int i) const { return x_min + i * h_x; }
  double y(int j) const { return y_min + j * h_y; }
  std::size_t size() const { return static_cast<std::size_t>(n_x) * static_cast<std::size_t>(n_y); }
  int cells_x() const { return boundary == Boundary::periodic ? n_x : n_x - 1; }
  int cells_y() const { return boundary == Boundary::periodic ? n_y : n_y - 1; }
};

/// Node values V_{i,j} at one time layer, x-index major (j contiguous).
struct FieldGrid {
  Grid2D grid;
  std::vector<double> values;
  int layer = 0;

  explicit FieldGrid(const Grid2D& g) : grid(g), values(g.size(), 0.0) {}

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * grid.n_y + j]; }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.n_y + j]; }

  /// Discrete mass h_x h_y sum V.
  double mass() const;
};

/// Explicit Milstein operator M_n followed by the two ADI line solves, with
/// padded in-place buffers. One instance per thread; not shareable.
class AdiStepper {
 public:
  AdiStepper(const Grid2D& grid, const ModelParams& params, double k);

  const Grid2D& grid() const { return grid_; }
  double k() const { return k_; }

  void load(const FieldGrid& field);
  void load_dirac();
  FieldGrid field() const;

  /// Replaces the state by M_n V (no implicit solve).
  void apply_rhs(double z_x, double z_tilde_y);
  /// Replaces the state by the ADI solution with the state as right-hand side.
  void apply_implicit();
  /// One full time step driven by a raw pair; correlation applied internally.
  void step(const NormalPair& pair);

  /// Trapezoidal quadrature over x >= 0, y >= 0.
  double quadrant_functional() const;

 private:
  std::size_t at(int i, int j) const {
    return static_cast<std::size_t>(i + kPad) * stride_ + static_cast<std::size_t>(j + kPad);
  }
  struct StencilCoefficients {
    double c0, cx1, cy1, cx2, cy2, cxy;
  };
  StencilCoefficients coefficients(double z_x, double z_tilde_y) const;
  void rhs_rows(const StencilCoefficients& sc, int i_begin, int i_end);
  void rhs_row(const StencilCoefficients& sc, int i, std::ptrdiff_t s);
  void step_fused(const StencilCoefficients& sc);
  void fill_periodic_halo();
  void sweep_x();
  void sweep_y();

  static constexpr int kPad = 2;

  Grid2D grid_;
  ModelParams params_;
  double k_;
  std::size_t stride_;
  int ib_x_, ie_x_, ib_y_, ie_y_;  // unknown ranges [ib, ie)
  std::vector<double> u_;
  std::vector<double> w_;
  TridiagonalFactor fx_;
  TridiagonalFactor fy_;
};

FieldGrid dirac_init(const Grid2D& grid);
FieldGrid milstein_rhs(const FieldGrid& field, const ModelParams& params, double k, double z_x,
                       double z_tilde_y);
/// Accepts k = 0 (identity). Throws NumericalError on tridiagonal breakdown.
FieldGrid adi_solve(const FieldGrid& rhs, const ModelParams& params, double k);
FieldGrid step(const FieldGrid& field, const ModelParams& params, double k, const NormalPair& pair);
double quadrant_functional(const FieldGrid& field);

/// Node-update count ((x_max-x_min)/h_x)((y_max-y_min)/h_y)(T/k).
double path_cost(const Grid2D& grid, std::size_t n_steps);
double path_cost(LevelIndex level, const GridConfig& cfg, std::size_t n_steps);

/// Runs the path from the Dirac initial datum and returns the quadrant functional.
/// Refuses (StabilityError) when the stability conditions fail.
double solve_path(LevelIndex level, const BrownianPath& path, const ModelParams& params,
                  const GridConfig& cfg);

/// Terminal field of solve_path (for inspection and dumps).
FieldGrid solve_path_field(LevelIndex level, const BrownianPath& path, const ModelParams& params,
                           const GridConfig& cfg);

/// CSV rows "x,y,value" for every node.
void write_field_csv(const std::filesystem::path& file, const FieldGrid& field);

/// Runs the path like solve_path_field and writes every time layer as rows
/// "layer,x,y,value" (layer 0 is the Dirac datum).
void write_field_layers_csv(const std::filesystem::path& file, LevelIndex level, const BrownianPath& path,
                            const ModelParams& params, const GridConfig& cfg);

}  // namespace zakai
