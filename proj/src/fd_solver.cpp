#include "zakai/fd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "zakai/diagnostics.hpp"
#include "zakai/errors.hpp"

namespace zakai {
namespace {

/// Returns round(v), throwing when v is not within a relative 1e-9 of an integer.
int integral(double v, const char* what) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
    std::ostringstream os;
    os << what << " is not an integer (" << v << ")";
    throw ConfigError(os.str());
  }
  return static_cast<int>(r);
}

int dirac_node(double pos, double lo, double h, const char* axis) {
  const double v = (pos - lo) / h;
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
    std::ostringstream os;
    os << "initial point " << axis << "0=" << pos << " is not a grid node at h=" << h
       << "; using the nearest node";
    warn_once(os.str());
  }
  return static_cast<int>(r);
}

}  // namespace

Grid2D Grid2D::make(double h_x, double h_y, double x0, double y0, const GridConfig& cfg) {
  if (!(h_x > 0.0) || !(h_y > 0.0)) throw ConfigError("mesh widths must be positive");
  if (!(cfg.x_max > cfg.x_min) || !(cfg.y_max > cfg.y_min)) throw ConfigError("empty domain");
  Grid2D g;
  g.h_x = h_x;
  g.h_y = h_y;
  g.x_min = cfg.x_min;
  g.x_max = cfg.x_max;
  g.y_min = cfg.y_min;
  g.y_max = cfg.y_max;
  g.boundary = cfg.boundary;
  const int cx = integral((cfg.x_max - cfg.x_min) / h_x, "(x_max - x_min)/h_x");
  const int cy = integral((cfg.y_max - cfg.y_min) / h_y, "(y_max - y_min)/h_y");
  const int extra = cfg.boundary == Boundary::dirichlet ? 1 : 0;
  g.n_x = cx + extra;
  g.n_y = cy + extra;
  if (cfg.boundary == Boundary::periodic && (g.n_x < 3 || g.n_y < 3))
    throw ConfigError("periodic grids need at least 3 nodes per direction");
  if (cfg.boundary == Boundary::dirichlet && (g.n_x < 3 || g.n_y < 3))
    throw ConfigError("grid needs at least one interior node per direction");
  g.i0 = dirac_node(x0, cfg.x_min, h_x, "x");
  g.j0 = dirac_node(y0, cfg.y_min, h_y, "y");
  const int lo = cfg.boundary == Boundary::dirichlet ? 1 : 0;
  const int off = cfg.boundary == Boundary::dirichlet ? 1 : 0;
  if (g.i0 < lo || g.i0 >= g.n_x - off || g.j0 < lo || g.j0 >= g.n_y - off)
    throw ConfigError("initial point must lie strictly inside the computational domain");
  return g;
}

Grid2D Grid2D::make(LevelIndex level, const ModelParams& params, const GridConfig& cfg) {
  if (level.l1 < 0 || level.l2 < 0) throw ConfigError("levels must be non-negative");
  return make(std::ldexp(cfg.h0, -level.l1), std::ldexp(cfg.h0, -level.l2), params.x0, params.y0, cfg);
}

double FieldGrid::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.h_x * grid.h_y;
}

AdiStepper::AdiStepper(const Grid2D& grid, const ModelParams& params, double k)
    : grid_(grid), params_(params), k_(k), stride_(static_cast<std::size_t>(grid.n_y + 2 * kPad)) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("timestep must be finite and non-negative");
  const bool periodic = grid.boundary == Boundary::periodic;
  ib_x_ = periodic ? 0 : 1;
  ie_x_ = periodic ? grid.n_x : grid.n_x - 1;
  ib_y_ = periodic ? 0 : 1;
  ie_y_ = periodic ? grid.n_y : grid.n_y - 1;
  const std::size_t total = static_cast<std::size_t>(grid.n_x + 2 * kPad) * stride_;
  u_.assign(total, 0.0);
  w_.assign(total, 0.0);

  const double hx = grid.h_x, hy = grid.h_y;
  const double dx = params.mu_x * k / (2.0 * hx), ex = k / (2.0 * hx * hx);
  const double dy = params.mu_y * k / (2.0 * hy), ey = k / (2.0 * hy * hy);
  fx_ = TridiagonalFactor(static_cast<std::size_t>(ie_x_ - ib_x_), -dx - ex, 1.0 + 2.0 * ex, dx - ex, periodic,
                          "x-line");
  fy_ = TridiagonalFactor(static_cast<std::size_t>(ie_y_ - ib_y_), -dy - ey, 1.0 + 2.0 * ey, dy - ey, periodic,
                          "y-line");
}

void AdiStepper::load(const FieldGrid& field) {
  if (field.grid.n_x != grid_.n_x || field.grid.n_y != grid_.n_y) throw ConfigError("field/grid shape mismatch");
  std::fill(u_.begin(), u_.end(), 0.0);
  for (int i = 0; i < grid_.n_x; ++i)
    std::copy_n(&field.values[static_cast<std::size_t>(i) * grid_.n_y], grid_.n_y, &u_[at(i, 0)]);
  if (grid_.boundary == Boundary::dirichlet) {
    // Boundary nodes carry the homogeneous Dirichlet value.
    for (int j = 0; j < grid_.n_y; ++j) u_[at(0, j)] = u_[at(grid_.n_x - 1, j)] = 0.0;
    for (int i = 0; i < grid_.n_x; ++i) u_[at(i, 0)] = u_[at(i, grid_.n_y - 1)] = 0.0;
  }
}

void AdiStepper::load_dirac() {
  std::fill(u_.begin(), u_.end(), 0.0);
  u_[at(grid_.i0, grid_.j0)] = 1.0 / (grid_.h_x * grid_.h_y);
}

FieldGrid AdiStepper::field() const {
  FieldGrid f(grid_);
  for (int i = 0; i < grid_.n_x; ++i)
    std::copy_n(&u_[at(i, 0)], grid_.n_y, &f.values[static_cast<std::size_t>(i) * grid_.n_y]);
  return f;
}

void AdiStepper::fill_periodic_halo() {
  const int nx = grid_.n_x, ny = grid_.n_y;
  for (int i = 0; i < nx; ++i) {
    double* row = &u_[at(i, 0)];
    row[-1] = row[ny - 1];
    row[-2] = row[ny - 2];
    row[ny] = row[0];
    row[ny + 1] = row[1];
  }
  auto copy_row = [&](int dst, int src) { std::copy_n(&u_[at(src, -kPad)], stride_, &u_[at(dst, -kPad)]); };
  copy_row(-1, nx - 1);
  copy_row(-2, nx - 2);
  copy_row(nx, 0);
  copy_row(nx + 1, 1);
}

void AdiStepper::rhs_rows(const StencilCoefficients& sc, int i_begin, int i_end) {
  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(stride_);
  for (int i = i_begin; i < i_end; ++i) rhs_row(sc, i, s);
}

void AdiStepper::rhs_row(const StencilCoefficients& sc, int i, std::ptrdiff_t s) {
  const double* __restrict c = &u_[at(i, 0)];
  const double* __restrict xm1 = c - s;
  const double* __restrict xp1 = c + s;
  const double* __restrict xm2 = c - 2 * s;
  const double* __restrict xp2 = c + 2 * s;
  double* __restrict out = &w_[at(i, 0)];
  const double c0 = sc.c0, cx1 = sc.cx1, cy1 = sc.cy1, cx2 = sc.cx2, cy2 = sc.cy2, cxy = sc.cxy;
  for (int j = ib_y_; j < ie_y_; ++j) {
    out[j] = c0 * c[j] - cx1 * (xp1[j] - xm1[j]) - cy1 * (c[j + 1] - c[j - 1]) + cx2 * (xp2[j] + xm2[j]) +
             cy2 * (c[j + 2] + c[j - 2]) + cxy * ((xp1[j + 1] - xm1[j + 1]) - (xp1[j - 1] - xm1[j - 1]));
  }
}

AdiStepper::StencilCoefficients AdiStepper::coefficients(double z_x, double z_tilde_y) const {
  const double hx = grid_.h_x, hy = grid_.h_y, k = k_;
  const double rx = params_.rho_x, ry = params_.rho_y;
  StencilCoefficients sc;
  sc.cx1 = std::sqrt(rx * k) * z_x / (2.0 * hx);
  sc.cy1 = std::sqrt(ry * k) * z_tilde_y / (2.0 * hy);
  sc.cx2 = rx * k * (z_x * z_x - 1.0) / (8.0 * hx * hx);
  sc.cy2 = ry * k * (z_tilde_y * z_tilde_y - 1.0) / (8.0 * hy * hy);
  sc.cxy = std::sqrt(rx * ry) * k * z_x * z_tilde_y / (4.0 * hx * hy);
  sc.c0 = 1.0 - 2.0 * sc.cx2 - 2.0 * sc.cy2;
  return sc;
}

void AdiStepper::apply_rhs(double z_x, double z_tilde_y) {
  if (grid_.boundary == Boundary::periodic) fill_periodic_halo();
  rhs_rows(coefficients(z_x, z_tilde_y), ib_x_, ie_x_);
  std::swap(u_, w_);
}

// Dirichlet fast path: the right-hand side of row i is formed and immediately
// forward-eliminated in x; the descending pass back-substitutes in x and runs the
// y-line solves on rows whose x-solution is final.
void AdiStepper::step_fused(const StencilCoefficients& sc) {
  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(stride_);
  const std::size_t width = static_cast<std::size_t>(ie_y_ - ib_y_);
  for (int i = ib_x_; i < ie_x_; ++i) {
    rhs_row(sc, i, s);
    fx_.forward_row(static_cast<std::size_t>(i - ib_x_), &w_[at(i, ib_y_)], &w_[at(i - 1, ib_y_)], width);
  }
  constexpr int kBlock = 8;
  int hi = ie_x_ - 1;  // highest row whose y-solve is pending
  for (int i = ie_x_ - 2; i >= ib_x_; --i) {
    fx_.backward_row(static_cast<std::size_t>(i - ib_x_), &w_[at(i, ib_y_)], &w_[at(i + 1, ib_y_)], width);
    if (hi - i >= kBlock) {
      fy_.solve_lines(&w_[at(hi - kBlock + 1, ib_y_)], stride_, kBlock);
      hi -= kBlock;
    }
  }
  fy_.solve_lines(&w_[at(ib_x_, ib_y_)], stride_, static_cast<std::size_t>(hi - ib_x_ + 1));
  std::swap(u_, w_);
}

void AdiStepper::sweep_x() {
  fx_.solve_rows(&u_[at(ib_x_, ib_y_)], stride_, static_cast<std::size_t>(ie_y_ - ib_y_));
}

void AdiStepper::sweep_y() { fy_.solve_lines(&u_[at(ib_x_, ib_y_)], stride_, static_cast<std::size_t>(ie_x_ - ib_x_)); }

void AdiStepper::apply_implicit() {
  sweep_x();
  sweep_y();
}

void AdiStepper::step(const NormalPair& pair) {
  const double zt = correlate(pair, params_.rho_xy);
  if (grid_.boundary == Boundary::dirichlet) {
    step_fused(coefficients(pair.z_x, zt));
  } else {
    apply_rhs(pair.z_x, zt);
    apply_implicit();
  }
}

double AdiStepper::quadrant_functional() const {
  const int ix = integral(-grid_.x_min / grid_.h_x, "quadrant origin index -x_min/h_x");
  const int jy = integral(-grid_.y_min / grid_.h_y, "quadrant origin index -y_min/h_y");
  if (ix < 0 || ix >= grid_.n_x || jy < 0 || jy >= grid_.n_y) throw ConfigError("quadrant origin outside domain");
  double total = 0.0;
  for (int i = ix; i < grid_.n_x; ++i) {
    const double* row = &u_[at(i, 0)];
    double r = 0.5 * row[jy];
    for (int j = jy + 1; j < grid_.n_y; ++j) r += row[j];
    total += (i == ix ? 0.5 : 1.0) * r;
  }
  return total * grid_.h_x * grid_.h_y;
}

FieldGrid dirac_init(const Grid2D& grid) {
  FieldGrid f(grid);
  f(grid.i0, grid.j0) = 1.0 / (grid.h_x * grid.h_y);
  return f;
}

FieldGrid milstein_rhs(const FieldGrid& field, const ModelParams& params, double k, double z_x, double z_tilde_y) {
  AdiStepper st(field.grid, params, k);
  st.load(field);
  st.apply_rhs(z_x, z_tilde_y);
  FieldGrid out = st.field();
  out.layer = field.layer;
  return out;
}

FieldGrid adi_solve(const FieldGrid& rhs, const ModelParams& params, double k) {
  AdiStepper st(rhs.grid, params, k);
  st.load(rhs);
  st.apply_implicit();
  FieldGrid out = st.field();
  out.layer = rhs.layer;
  return out;
}

FieldGrid step(const FieldGrid& field, const ModelParams& params, double k, const NormalPair& pair) {
  AdiStepper st(field.grid, params, k);
  st.load(field);
  st.step(pair);
  FieldGrid out = st.field();
  out.layer = field.layer + 1;
  return out;
}

double quadrant_functional(const FieldGrid& field) {
  AdiStepper st(field.grid, ModelParams{}, 0.0);
  st.load(field);
  return st.quadrant_functional();
}

double path_cost(const Grid2D& grid, std::size_t n_steps) {
  return ((grid.x_max - grid.x_min) / grid.h_x) * ((grid.y_max - grid.y_min) / grid.h_y) *
         static_cast<double>(n_steps);
}

double path_cost(LevelIndex level, const GridConfig& cfg, std::size_t n_steps) {
  return ((cfg.x_max - cfg.x_min) / std::ldexp(cfg.h0, -level.l1)) *
         ((cfg.y_max - cfg.y_min) / std::ldexp(cfg.h0, -level.l2)) * static_cast<double>(n_steps);
}

namespace {

AdiStepper run_path(LevelIndex level, const BrownianPath& path, const ModelParams& params, const GridConfig& cfg) {
  require_stability(params);
  if (path.size() == 0 || !(path.k > 0.0)) throw ConfigError("empty Brownian path");
  if (std::abs(path.horizon() - params.T) > 1e-12 * std::max(1.0, params.T))
    throw ConfigError("N k does not match the horizon T");
  const Grid2D grid = Grid2D::make(level, params, cfg);
  if (cfg.lambda > 0.0 && path.k > cfg.lambda * std::min(grid.h_x * grid.h_x, grid.h_y * grid.h_y)) {
    std::ostringstream os;
    os << "k=" << path.k << " exceeds lambda min(h^2) at level (" << level.l1 << "," << level.l2 << ")";
    warn_once(os.str());
  }
  AdiStepper st(grid, params, path.k);
  st.load_dirac();
  for (const auto& z : path.steps) st.step(z);
  return st;
}

}  // namespace

double solve_path(LevelIndex level, const BrownianPath& path, const ModelParams& params, const GridConfig& cfg) {
  return run_path(level, path, params, cfg).quadrant_functional();
}

FieldGrid solve_path_field(LevelIndex level, const BrownianPath& path, const ModelParams& params,
                           const GridConfig& cfg) {
  FieldGrid f = run_path(level, path, params, cfg).field();
  f.layer = static_cast<int>(path.size());
  return f;
}

void write_field_csv(const std::filesystem::path& file, const FieldGrid& field) {
  std::ofstream os(file);
  if (!os) throw ConfigError("cannot open " + file.string() + " for writing");
  os << "x,y,value\n" << std::setprecision(17);
  for (int i = 0; i < field.grid.n_x; ++i)
    for (int j = 0; j < field.grid.n_y; ++j) os << field.grid.x(i) << ',' << field.grid.y(j) << ',' << field(i, j) << '\n';
}

void write_field_layers_csv(const std::filesystem::path& file, LevelIndex level, const BrownianPath& path,
                            const ModelParams& params, const GridConfig& cfg) {
  require_stability(params);
  std::ofstream os(file);
  if (!os) throw ConfigError("cannot open " + file.string() + " for writing");
  os << "layer,x,y,value\n" << std::setprecision(17);
  const Grid2D grid = Grid2D::make(level, params, cfg);
  AdiStepper st(grid, params, path.k);
  st.load_dirac();
  auto dump = [&](int n) {
    const FieldGrid f = st.field();
    for (int i = 0; i < grid.n_x; ++i)
      for (int j = 0; j < grid.n_y; ++j) os << n << ',' << grid.x(i) << ',' << grid.y(j) << ',' << f(i, j) << '\n';
  };
  dump(0);
  for (std::size_t n = 0; n < path.size(); ++n) {
    st.step(path.steps[n]);
    dump(static_cast<int>(n + 1));
  }
}

}  // namespace zakai
