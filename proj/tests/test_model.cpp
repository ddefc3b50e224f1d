#include <gsl/gsl_integration.h>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "zakai/diagnostics.hpp"
#include "zakai/errors.hpp"
#include "zakai/model.hpp"

using namespace zakai;

namespace {

ModelParams with_rho(double rx, double ry, double rxy) {
  ModelParams p;
  p.rho_x = rx;
  p.rho_y = ry;
  p.rho_xy = rxy;
  return p;
}

// Nested adaptive quadrature of the density over [x_lo, 40] x [y_lo, 40]; the mass beyond 40 is far below 1e-100.
struct Quad {
  const ModelParams* p;
  double wx, wy, x;
  double y_lo;
};

double inner(double y, void* data) {
  auto* q = static_cast<Quad*>(data);
  return exact_density(*q->p, q->wx, q->wy, q->x, y);
}

double outer(double x, void* data) {
  auto* q = static_cast<Quad*>(data);
  Quad in = *q;
  in.x = x;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
  gsl_function f{&inner, &in};
  double r = 0.0, e = 0.0;
  gsl_integration_qags(&f, q->y_lo, 40.0, 1e-13, 1e-12, 1000, ws, &r, &e);
  gsl_integration_workspace_free(ws);
  return r;
}

double integrate(const ModelParams& p, double wx, double wy, double x_lo, double y_lo) {
  Quad q{&p, wx, wy, 0.0, y_lo};
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
  gsl_function f{&outer, &q};
  double r = 0.0, e = 0.0;
  gsl_integration_qags(&f, x_lo, 40.0, 1e-13, 1e-12, 1000, ws, &r, &e);
  gsl_integration_workspace_free(ws);
  return r;
}

}  // namespace

TEST(Stability, ReferenceParametersAreStable) { EXPECT_TRUE(check_stability(ModelParams::reference())); }

TEST(Stability, BoundaryCaseIsAccepted) {
  const double r = 1.0 / std::numbers::sqrt2;
  EXPECT_TRUE(check_stability(with_rho(r, r, 0.0)));
}

TEST(Stability, StrongNoiseIsRejected) { EXPECT_FALSE(check_stability(with_rho(0.9, 0.9, 1.0))); }

TEST(Stability, FlipsAtTheAnalyticRoot) {
  // with rho_y = 0.2, rho_xy = 0.45 the first condition binds: 2 rho_x^2 1.9 = 1
  const double ry = 0.2, rxy = 0.45;
  const double root = std::sqrt(1.0 / 3.8);
  EXPECT_TRUE(check_stability(with_rho(root - 1e-12, ry, rxy)));
  EXPECT_TRUE(check_stability(with_rho(root, ry, rxy)));
  EXPECT_FALSE(check_stability(with_rho(root + 1e-12, ry, rxy)));
}

TEST(Stability, MarginForReferenceParameters) {
  // slacks 1 - 0.152, 1 - 0.152, 1 - 0.2006 and 1 - rho = 0.8
  EXPECT_NEAR(stability_margin(ModelParams::reference()), 1.0 - 0.2006, 1e-12);
  EXPECT_LT(stability_margin(with_rho(0.9, 0.9, 1.0)), 0.0);
}

TEST(Stability, RequireThrows) {
  EXPECT_THROW(require_stability(with_rho(0.9, 0.9, 1.0)), StabilityError);
  EXPECT_NO_THROW(require_stability(ModelParams::reference()));
}

TEST(Correlate, Examples) {
  EXPECT_DOUBLE_EQ(correlate({0.3, -1.7}, 0.0), -1.7);
  EXPECT_DOUBLE_EQ(correlate({0.3, -1.7}, 1.0), 0.3);
  EXPECT_NEAR(correlate({1.0, 1.0}, 0.45), 0.45 + std::sqrt(1.0 - 0.2025), 1e-15);
  EXPECT_NEAR(correlate({1.0, 1.0}, 0.45), 1.3430, 5e-5);
}

TEST(NormalCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-1.96), 0.024997895148220435, 1e-16);
  // deep tail keeps relative accuracy
  EXPECT_NEAR(normal_cdf(-10.0) / 7.619853024160527e-24, 1.0, 1e-12);
}

TEST(ExactDensity, PeakValue) {
  ModelParams p = ModelParams::reference();
  const double wx = 0.37, wy = -1.2;
  const double mx = p.x0 + p.mu_x * p.T + std::sqrt(p.rho_x) * wx;
  const double my = p.y0 + p.mu_y * p.T + std::sqrt(p.rho_y) * wy;
  const double peak = 1.0 / (2.0 * std::numbers::pi * std::sqrt((1.0 - p.rho_x) * (1.0 - p.rho_y)) * p.T);
  EXPECT_NEAR(exact_density(p, wx, wy, mx, my), peak, 1e-15);
  EXPECT_LT(exact_density(p, wx, wy, mx + 0.1, my), peak);
}

TEST(ExactDensity, StandardNormalPeak) {
  ModelParams p;
  p.x0 = 0.7;
  p.y0 = -0.4;
  EXPECT_NEAR(exact_density(p, 3.0, -2.0, 0.7, -0.4), 1.0 / (2.0 * std::numbers::pi), 1e-15);
}

TEST(ExactDensity, SymmetricAboutTheMode) {
  ModelParams p = ModelParams::reference();
  const double mx = p.x0 + p.mu_x * p.T, my = p.y0 + p.mu_y * p.T;
  EXPECT_NEAR(exact_density(p, 0, 0, mx + 0.5, my - 0.3), exact_density(p, 0, 0, mx - 0.5, my + 0.3), 1e-15);
}

TEST(ExactDensity, UnitMass) {
  ModelParams p = ModelParams::reference();
  EXPECT_NEAR(integrate(p, 0.4, -0.3, -30.0, -30.0), 1.0, 1e-9);
}

TEST(ExactFunctional, CentredStart) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(exact_functional(p, 0.0, 0.0), 0.25);
}

TEST(ExactFunctional, FarStartHasFullMass) {
  ModelParams p;
  p.x0 = p.y0 = 40.0;
  EXPECT_DOUBLE_EQ(exact_functional(p, 0.0, 0.0), 1.0);
}

TEST(ExactFunctional, ReferenceAgreesWithQuadrature) {
  ModelParams p = ModelParams::reference();
  const double c = normal_cdf(2.0809 / std::sqrt(0.8));
  EXPECT_NEAR(exact_functional(p, 0.0, 0.0), c * c, 1e-15);
  EXPECT_NEAR(integrate(p, 0.0, 0.0, 0.0, 0.0), exact_functional(p, 0.0, 0.0), 1e-8);
  EXPECT_NEAR(integrate(p, -1.3, 0.6, 0.0, 0.0), exact_functional(p, -1.3, 0.6), 1e-8);
}

TEST(ExactFunctional, IncreasesWithTerminalNoise) {
  ModelParams p = ModelParams::reference();
  double prev = 0.0;
  for (double w = -4.0; w <= 4.0; w += 0.5) {
    const double v = exact_functional(p, w, 0.0);
    EXPECT_GT(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Validate, RejectsInadmissibleValues) {
  EXPECT_THROW(validate(with_rho(1.0, 0.2, 0.0)), ConfigError);
  EXPECT_THROW(validate(with_rho(-0.1, 0.2, 0.0)), ConfigError);
  EXPECT_THROW(validate(with_rho(0.2, 0.2, 1.5)), ConfigError);
  ModelParams p;
  p.T = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
  p.T = std::nan("");
  EXPECT_THROW(validate(p), ConfigError);
}

TEST(Validate, WarnsButAcceptsUnstableParameters) {
  std::vector<std::string> seen;
  auto old = set_warning_handler([&](const std::string& m) { seen.push_back(m); });
  const bool stable = validate(with_rho(0.9, 0.9, 1.0));
  set_warning_handler(old);
  EXPECT_FALSE(stable);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NE(seen[0].find("stability"), std::string::npos);
}

TEST(Validate, QuietForReferenceParameters) {
  std::vector<std::string> seen;
  auto old = set_warning_handler([&](const std::string& m) { seen.push_back(m); });
  EXPECT_TRUE(validate(ModelParams::reference()));
  set_warning_handler(old);
  EXPECT_TRUE(seen.empty());
}
