#pragma once

namespace zakai {

/// Coefficients of the constant-coefficient Zakai SPDE
///   dv = Lv dt - sqrt(rho_x) v_x dW^x - sqrt(rho_y) v_y dW^y,
/// with Dirac initial datum at (x0, y0) and correlation rho_xy between W^x and W^y.
struct ModelParams {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  double rho_xy = 0.0;
  double T = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;

  /// Parameter set used throughout the numerical experiments.
  static ModelParams reference();
};

/// Throws ConfigError when a field is non-finite or out of range
/// (rho_x, rho_y in [0,1), rho_xy in [-1,1], T > 0). Emits a warning, but does not
/// throw, when the values are admissible and the stability conditions fail.
/// Returns the result of check_stability.
bool validate(const ModelParams& params);

/// The three sufficient conditions for mean-square stability of the semi-implicit
/// Milstein scheme (non-strict inequalities).
bool check_stability(const ModelParams& params);

/// Throws StabilityError when check_stability fails.
void require_stability(const ModelParams& params);

/// Stability margin beta (minimum slack over the stability conditions and 1 - rho).
double stability_margin(const ModelParams& params);

/// Independent standard normal pair driving one time step.
struct NormalPair {
  double z_x = 0.0;
  double z_y = 0.0;
};

/// Correlated y-normal: rho_xy z_x + sqrt(1 - rho_xy^2) z_y.
double correlate(const NormalPair& pair, double rho_xy);

/// Standard normal CDF, computed from erfc (relative error near machine precision).
double normal_cdf(double x);

/// Closed-form solution density v(T, x, y) given terminal Brownian values.
double exact_density(const ModelParams& params, double w_x_T, double w_y_T, double x, double y);

/// Closed-form mass of the solution on the positive quadrant x > 0, y > 0.
double exact_functional(const ModelParams& params, double w_x_T, double w_y_T);

}  // namespace zakai
