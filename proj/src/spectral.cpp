#include "zakai/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "zakai/errors.hpp"

namespace zakai {
namespace {

using cplx = std::complex<double>;

double sinc2(double half) {
  if (half == 0.0) return 1.0;
  const double s = std::sin(half) / half;
  return s * s;
}

cplx denominator(const SymbolSet& s, double xi, double eta, const ModelParams& p, double k, double h_x, double h_y,
                 const SpectralOptions& opts) {
  if (!opts.include_drift && (p.mu_x != 0.0 || p.mu_y != 0.0))
    throw ConfigError("nonzero drift requires SpectralOptions::include_drift");
  const double dx = opts.include_drift ? p.mu_x * k * std::sin(xi * h_x) / h_x : 0.0;
  const double dy = opts.include_drift ? p.mu_y * k * std::sin(eta * h_y) / h_y : 0.0;
  if (opts.variant == ImplicitVariant::full) return {1.0 - (s.a_x + s.a_y) * k, dx + dy};
  return cplx(1.0 - s.a_x * k, dx) * cplx(1.0 - s.a_y * k, dy);
}

// FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

SymbolSet symbols(double xi, double eta, double h_x, double h_y) {
  SymbolSet s;
  const double tx = xi * h_x, ty = eta * h_y;
  const double shx = std::sin(0.5 * tx), shy = std::sin(0.5 * ty);
  const double sx = std::sin(tx), sy = std::sin(ty);
  s.a_x = -2.0 * shx * shx / (h_x * h_x);
  s.a_y = -2.0 * shy * shy / (h_y * h_y);
  s.b_x = -sx * sx / (2.0 * h_x * h_x);
  s.b_y = -sy * sy / (2.0 * h_y * h_y);
  s.c_x = sx / h_x;
  s.c_y = sy / h_y;
  s.d = -sx * sy / (h_x * h_y);
  s.u = sinc2(0.5 * tx);
  s.v = sinc2(0.5 * ty);
  return s;
}

cplx amplification(double xi, double eta, const ModelParams& p, double k, double h_x, double h_y,
                   const NormalPair& pair, const SpectralOptions& opts) {
  const SymbolSet s = symbols(xi, eta, h_x, h_y);
  const double zx = pair.z_x;
  const double zy = correlate(pair, p.rho_xy);
  const double sk = std::sqrt(k);
  const double im = -sk * (s.c_x * std::sqrt(p.rho_x) * zx + s.c_y * std::sqrt(p.rho_y) * zy);
  const double re = 1.0 + k * (s.b_x * p.rho_x * (zx * zx - 1.0) + s.b_y * p.rho_y * (zy * zy - 1.0) +
                               s.d * std::sqrt(p.rho_x * p.rho_y) * zx * zy);
  return cplx(re, im) / denominator(s, xi, eta, p, k, h_x, h_y, opts);
}

cplx moment_E(double xi, double eta, const ModelParams& p, double k, double h_x, double h_y,
              const SpectralOptions& opts) {
  const SymbolSet s = symbols(xi, eta, h_x, h_y);
  const double num = 1.0 + s.d * std::sqrt(p.rho_x * p.rho_y) * p.rho_xy * k;
  return num / denominator(s, xi, eta, p, k, h_x, h_y, opts);
}

double moment_E2(double xi, double eta, const ModelParams& p, double k, double h_x, double h_y,
                 const SpectralOptions& opts) {
  const SymbolSet s = symbols(xi, eta, h_x, h_y);
  const double r = p.rho_xy;
  // C_n numerator = 1 + k S - i sqrt(k) (A z + B z~), with
  // S = P (z^2 - 1) + Q (z~^2 - 1) + R z z~.
  const double A = s.c_x * std::sqrt(p.rho_x);
  const double B = s.c_y * std::sqrt(p.rho_y);
  const double P = s.b_x * p.rho_x;
  const double Q = s.b_y * p.rho_y;
  const double R = s.d * std::sqrt(p.rho_x * p.rho_y);
  // E[S] = R r;  E[S^2] from E[(z^2-1)^2] = 2, E[z^2 z~^2] = 1 + 2r^2,
  // E[(z^2-1)(z~^2-1)] = 2r^2, E[(z^2-1) z z~] = E[(z~^2-1) z z~] = 2r.
  const double ES = R * r;
  const double ES2 = 2.0 * P * P + 2.0 * Q * Q + R * R * (1.0 + 2.0 * r * r) + 4.0 * P * Q * r * r +
                     4.0 * P * R * r + 4.0 * Q * R * r;
  const double Eim2 = A * A + 2.0 * A * B * r + B * B;
  const double num = 1.0 + 2.0 * k * ES + k * k * ES2 + k * Eim2;
  return num / std::norm(denominator(s, xi, eta, p, k, h_x, h_y, opts));
}

double decay_constant(const ModelParams& p, double lambda) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double f = 1.0 + 0.25 * lambda * pi2;
  return 8.0 * stability_margin(p) * p.T / (pi2 * f * f);
}

std::vector<DecayPoint> decay_sweep(const ModelParams& p, double k, double h, double lambda, double pexp, int n) {
  if (stability_margin(p) <= 0.0) throw NumericalError("stability margin violated");
  if (!(k > 0.0) || !(h > 0.0) || n < 2) throw ConfigError("decay_sweep needs k, h > 0 and n >= 2");
  const double lo = std::pow(h, -pexp);
  const double hi = std::numbers::pi / (2.0 * h);
  if (!(lo < hi)) throw ConfigError("empty high-wave region for this h and p");
  const double kappa = decay_constant(p, lambda);
  const double steps = std::round(p.T / k);

  const int half = n / 2;
  std::vector<double> freqs;
  freqs.reserve(static_cast<std::size_t>(n));
  for (int m = 0; m < half; ++m) freqs.push_back(-(lo + (hi - lo) * (m + 1) / half));
  for (int m = 0; m < n - half; ++m) freqs.push_back(lo + (hi - lo) * (m + 1) / (n - half));

  SpectralOptions opts{.variant = ImplicitVariant::full, .include_drift = false};
  ModelParams q = p;
  q.mu_x = q.mu_y = 0.0;
  std::vector<DecayPoint> out;
  out.reserve(freqs.size() * freqs.size());
  for (double xi : freqs) {
    for (double eta : freqs) {
      DecayPoint d{.xi = xi, .eta = eta};
      d.abs_mean = std::abs(moment_E(xi, eta, q, k, h, h, opts));
      d.second_moment = moment_E2(xi, eta, q, k, h, h, opts);
      d.bound_ratio = std::exp(steps * std::log(d.second_moment) + kappa * (xi * xi + eta * eta));
      out.push_back(d);
    }
  }
  return out;
}

double decay_check(const ModelParams& p, double k, double h, double lambda, double pexp, int n) {
  double worst = 0.0;
  for (const auto& d : decay_sweep(p, k, h, lambda, pexp, n)) worst = std::max(worst, d.bound_ratio);
  return worst;
}

FieldGrid spectral_solve_periodic(const Grid2D& grid, const BrownianPath& path, const ModelParams& p,
                                  const SpectralOptions& opts) {
  if (grid.boundary != Boundary::periodic) throw ConfigError("spectral solve requires a periodic grid");
  const int nx = grid.n_x, ny = grid.n_y;
  const std::size_t total = grid.size();

  fftw_complex* buf = fftw_alloc_complex(total);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(plan_mutex());
    fwd = fftw_plan_dft_2d(nx, ny, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(nx, ny, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  const FieldGrid init = dirac_init(grid);
  for (std::size_t q = 0; q < total; ++q) {
    buf[q][0] = init.values[q];
    buf[q][1] = 0.0;
  }
  fftw_execute(fwd);

  std::vector<double> xi(static_cast<std::size_t>(nx)), eta(static_cast<std::size_t>(ny));
  for (int a = 0; a < nx; ++a) xi[a] = 2.0 * std::numbers::pi * a / (nx * grid.h_x);
  for (int b = 0; b < ny; ++b) eta[b] = 2.0 * std::numbers::pi * b / (ny * grid.h_y);

  for (const auto& z : path.steps) {
    for (int a = 0; a < nx; ++a) {
      for (int b = 0; b < ny; ++b) {
        const std::size_t q = static_cast<std::size_t>(a) * ny + b;
        const cplx c = amplification(xi[a], eta[b], p, path.k, grid.h_x, grid.h_y, z, opts);
        const cplx v = cplx(buf[q][0], buf[q][1]) * c;
        buf[q][0] = v.real();
        buf[q][1] = v.imag();
      }
    }
  }
  fftw_execute(bwd);

  FieldGrid out(grid);
  const double scale = 1.0 / static_cast<double>(total);
  for (std::size_t q = 0; q < total; ++q) out.values[q] = buf[q][0] * scale;
  out.layer = static_cast<int>(path.size());
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(buf);
  return out;
}

}  // namespace zakai
