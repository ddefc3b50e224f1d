#include "zakai/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "zakai/diagnostics.hpp"
#include "zakai/errors.hpp"

namespace zakai {

ModelParams ModelParams::reference() {
  return ModelParams{.mu_x = 0.0809,
                     .mu_y = 0.0809,
                     .rho_x = 0.2,
                     .rho_y = 0.2,
                     .rho_xy = 0.45,
                     .T = 1.0,
                     .x0 = 2.0,
                     .y0 = 2.0};
}

bool check_stability(const ModelParams& p) {
  // Non-strict, with room for rounding so that exact boundary cases such as
  // rho = 1/sqrt(2) are accepted.
  constexpr double one = 1.0 + 1e-14;
  const double a = std::abs(p.rho_xy);
  return 2.0 * p.rho_x * p.rho_x * (1.0 + 2.0 * a) <= one &&
         2.0 * p.rho_y * p.rho_y * (1.0 + 2.0 * a) <= one &&
         2.0 * p.rho_x * p.rho_y * (3.0 * p.rho_xy * p.rho_xy + 2.0 * a + 1.0) <= one;
}

double stability_margin(const ModelParams& p) {
  const double a = std::abs(p.rho_xy);
  return std::min({1.0 - p.rho_x, 1.0 - p.rho_y, 1.0 - 2.0 * p.rho_x * p.rho_x * (1.0 + 2.0 * a),
                   1.0 - 2.0 * p.rho_y * p.rho_y * (1.0 + 2.0 * a),
                   1.0 - 2.0 * p.rho_x * p.rho_y * (1.0 + 2.0 * a + 3.0 * p.rho_xy * p.rho_xy)});
}

bool validate(const ModelParams& p) {
  for (double v : {p.mu_x, p.mu_y, p.rho_x, p.rho_y, p.rho_xy, p.T, p.x0, p.y0}) {
    if (!std::isfinite(v)) throw ConfigError("model parameters must be finite");
  }
  if (p.rho_x < 0.0 || p.rho_x >= 1.0 || p.rho_y < 0.0 || p.rho_y >= 1.0)
    throw ConfigError("rho_x and rho_y must lie in [0, 1)");
  if (p.rho_xy < -1.0 || p.rho_xy > 1.0) throw ConfigError("rho_xy must lie in [-1, 1]");
  if (p.T <= 0.0) throw ConfigError("horizon T must be positive");

  const bool stable = check_stability(p);
  if (!stable) {
    std::ostringstream os;
    os << "stability conditions violated for rho_x=" << p.rho_x << ", rho_y=" << p.rho_y
       << ", rho_xy=" << p.rho_xy << "; estimators will refuse to run";
    warn(os.str());
  }
  return stable;
}

void require_stability(const ModelParams& p) {
  if (!check_stability(p)) throw StabilityError("stability conditions violated; refusing to run estimator");
}

double correlate(const NormalPair& pair, double rho_xy) {
  return rho_xy * pair.z_x + std::sqrt(1.0 - rho_xy * rho_xy) * pair.z_y;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double exact_density(const ModelParams& p, double w_x_T, double w_y_T, double x, double y) {
  const double mx = p.x0 + p.mu_x * p.T + std::sqrt(p.rho_x) * w_x_T;
  const double my = p.y0 + p.mu_y * p.T + std::sqrt(p.rho_y) * w_y_T;
  const double vx = (1.0 - p.rho_x) * p.T;
  const double vy = (1.0 - p.rho_y) * p.T;
  const double e = (x - mx) * (x - mx) / (2.0 * vx) + (y - my) * (y - my) / (2.0 * vy);
  return std::exp(-e) / (2.0 * std::numbers::pi * std::sqrt((1.0 - p.rho_x) * (1.0 - p.rho_y)) * p.T);
}

double exact_functional(const ModelParams& p, double w_x_T, double w_y_T) {
  const double mx = p.x0 + p.mu_x * p.T + std::sqrt(p.rho_x) * w_x_T;
  const double my = p.y0 + p.mu_y * p.T + std::sqrt(p.rho_y) * w_y_T;
  return normal_cdf(mx / std::sqrt((1.0 - p.rho_x) * p.T)) *
         normal_cdf(my / std::sqrt((1.0 - p.rho_y) * p.T));
}

}  // namespace zakai
