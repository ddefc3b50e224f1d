#pragma once

#include <complex>
#include <vector>

#include "zakai/fd_solver.hpp"
#include "zakai/model.hpp"
#include "zakai/noise.hpp"

namespace zakai {

/// Fourier symbols of the difference operators at wave numbers (xi, eta).
struct SymbolSet {
  double a_x = 0.0, a_y = 0.0;  ///< -2 sin^2(xi h/2) / h^2
  double b_x = 0.0, b_y = 0.0;  ///< -sin^2(xi h) / (2 h^2)
  double c_x = 0.0, c_y = 0.0;  ///< sin(xi h) / h
  double d = 0.0;               ///< -sin(xi h_x) sin(eta h_y) / (h_x h_y)
  double u = 1.0, v = 1.0;      ///< sinc^2(xi h/2), sinc^2(eta h/2)
};

SymbolSet symbols(double xi, double eta, double h_x, double h_y);

enum class ImplicitVariant { full, adi };

struct SpectralOptions {
  ImplicitVariant variant = ImplicitVariant::adi;
  /// Adds the central-difference drift symbols to the implicit factors. Without it,
  /// nonzero drift is rejected.
  bool include_drift = false;
};

/// Per-step amplification factor C_n of a Fourier mode.
std::complex<double> amplification(double xi, double eta, const ModelParams& params, double k, double h_x,
                                   double h_y, const NormalPair& pair, const SpectralOptions& opts = {});

/// E[C_n] in closed form.
std::complex<double> moment_E(double xi, double eta, const ModelParams& params, double k, double h_x,
                              double h_y, const SpectralOptions& opts = {});

/// E[|C_n|^2] in closed form from the Gaussian moments of (z_x, z~_y).
double moment_E2(double xi, double eta, const ModelParams& params, double k, double h_x, double h_y,
                 const SpectralOptions& opts = {});

/// Decay constant kappa = 8 beta T / (pi^2 (1 + lambda pi^2 / 4)^2).
double decay_constant(const ModelParams& params, double lambda);

struct DecayPoint {
  double xi = 0.0;
  double eta = 0.0;
  double abs_mean = 0.0;      ///< |E[C_n]|
  double second_moment = 0.0; ///< E[|C_n|^2]
  double bound_ratio = 0.0;   ///< E[|C_n|^2]^N exp(kappa (xi^2 + eta^2))
};

/// Evaluates the high-wave decay bound on an n x n frequency grid covering
/// h^-p < |xi|, |eta| <= pi / (2h) (both signs). Uses the fully implicit
/// denominators. Throws NumericalError("stability margin violated") if beta <= 0.
std::vector<DecayPoint> decay_sweep(const ModelParams& params, double k, double h, double lambda, double p,
                                    int n = 100);

/// Worst-case bound ratio of decay_sweep; the bound holds iff the result is < 1.
double decay_check(const ModelParams& params, double k, double h, double lambda, double p, int n = 100);

/// Evolves the discrete Fourier coefficients of the Dirac datum on a periodic grid by
/// the per-step amplification factors and transforms back.
FieldGrid spectral_solve_periodic(const Grid2D& grid, const BrownianPath& path, const ModelParams& params,
                                  const SpectralOptions& opts = {});

}  // namespace zakai
