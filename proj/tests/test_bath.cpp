#include <gtest/gtest.h>

#include "ttipt/bath.hpp"

using namespace ttipt;

namespace {
// Zero-temperature ohmic correlation in closed form.
cplx ohmic_c_exact(double eta, double wc, double t) {
  cplx d = 1.0 + I * wc * t;
  return 2 * eta * wc * wc / (d * d);
}
}  // namespace

TEST(SpectralDensity, OhmicValues) {
  auto s = ohmic(0.01, 3);
  EXPECT_EQ(spectral_density(s, 0), 0.0);
  EXPECT_NEAR(spectral_density(s, 3), 0.06 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(spectral_density(s, 3), 0.022073, 1e-6);
  EXPECT_THROW(spectral_density(s, -1), DomainError);
}

TEST(SpectralDensity, NotchDepthAtCentre) {
  const double wq = 0.7072;
  for (double p : {0.0, 0.5, 0.9}) {
    auto n = ohmic_notch(0.001, 3, p, wq, 150);
    EXPECT_NEAR(spectral_density(n, wq),
                (1 - p) * spectral_density(ohmic(0.001, 3), wq), 1e-18);
  }
  auto n0 = ohmic_notch(0.001, 3, 0.0, wq);
  auto o = ohmic(0.001, 3);
  for (double w = 0; w < 20; w += 0.137)
    EXPECT_EQ(spectral_density(n0, w), spectral_density(o, w));
}

TEST(SpectralDensity, FlatBand) {
  auto f = flat(1e-4, 1.0);
  EXPECT_EQ(spectral_density(f, 1.0), 1e-4);
  EXPECT_EQ(spectral_density(f, 2.0001), 0.0);
  EXPECT_EQ(spectral_density(f, 5.0), 0.0);
  const double jq = spectral_density(f, 0.7072);
  EXPECT_LT(std::abs(jq - 1e-4) / 1e-4, 1e-4);
}

TEST(SpectralDensity, NonNegativeEverywhere) {
  std::vector<SpectralDensity> all = {ohmic(0.01, 3),
                                      ohmic_notch(0.01, 3, 0.9, 0.7, 150),
                                      ohmic_notch(0.01, 3, 1.0, 0.7, 150),
                                      flat(1e-4, 1.0)};
  for (const auto& s : all)
    for (double w = 0; w < 40; w += 0.0123)
      EXPECT_GE(spectral_density(s, w), 0.0);
}

TEST(Correlation, ZeroBath) {
  EXPECT_EQ(correlation_function(ohmic(0, 3), 0.3), cplx(0));
}

TEST(Correlation, OhmicClosedForm) {
  auto s = ohmic(0.01, 3);
  cplx c0 = correlation_function(s, 0);
  EXPECT_NEAR(c0.real(), 0.18, 1e-10);
  EXPECT_NEAR(c0.imag(), 0.0, 1e-14);
  for (double t : {0.05, 0.5, 1.3, 7.0, 40.0}) {
    cplx ex = ohmic_c_exact(0.01, 3, t);
    EXPECT_LT(std::abs(correlation_function(s, t) - ex), 1e-10 * 0.18) << t;
  }
}

TEST(Correlation, TimeReversalSymmetry) {
  for (double beta : {std::numeric_limits<double>::infinity(), 2.0, 0.3}) {
    auto s = ohmic(0.01, 3);
    s.beta = beta;
    cplx a = correlation_function(s, 0.5), b = correlation_function(s, -0.5);
    EXPECT_NEAR(a.real(), b.real(), 1e-12);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-12);
  }
}

TEST(Correlation, FiniteTemperatureRaisesRealPart) {
  auto cold = ohmic(0.01, 3);
  auto hot = cold;
  hot.beta = 1.0;
  EXPECT_GT(correlation_function(hot, 0).real(),
            correlation_function(cold, 0).real());
  EXPECT_NEAR(correlation_function(hot, 0.4).imag(),
              correlation_function(cold, 0.4).imag(), 1e-12);
}

TEST(EtaTable, ConstantKernel) {
  const double c = 0.37, dt = 0.2;
  auto t = eta_table_from_correlation([&](double) { return cplx(c); }, dt, 4);
  EXPECT_NEAR(t.eta[0].real(), c * dt * dt / 2, 1e-15);
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(t.eta[k].real(), c * dt * dt, 1e-15);
}

TEST(EtaTable, ZeroBath) {
  auto t = eta_table(ohmic(0, 3), 0.1, 5);
  ASSERT_EQ(t.eta.size(), 6u);
  for (auto e : t.eta) EXPECT_EQ(e, cplx(0));
}

// Trapezoid on an n x n grid of the square (k >= 1) or triangular (k = 0) cell.
cplx brute_cell(const std::function<cplx(double)>& C, double dt, int k, int n) {
  const double h = dt / n;
  std::vector<cplx> cd(2 * n + 1);
  for (int m = -n; m <= n; ++m) cd[m + n] = C(k * dt + m * h);
  cplx s = 0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      double w = (i == 0 || i == n ? 0.5 : 1.0) * (j == 0 || j == n ? 0.5 : 1.0);
      if (k == 0) {
        if (j > i) continue;
        if (j == i) w *= 0.5;
      }
      s += w * cd[i - j + n];
    }
  return s * h * h;
}

TEST(EtaTable, OhmicMatchesBruteForce2D) {
  auto s = ohmic(0.01, 3);
  auto t = eta_table(s, 0.1, 6);
  auto C = [&](double x) { return correlation_function(s, x); };
  for (int k : {0, 1, 2, 6}) {
    cplx b = brute_cell(C, 0.1, k, 200);
    EXPECT_LT(std::abs(t.eta[k] - b) / std::abs(b), 1e-4) << "k=" << k;
  }
}

TEST(EtaTable, FrequencyAndTimeRoutesAgree) {
  auto s = ohmic(0.01, 3);
  auto a = eta_table(s, 0.1, 40);
  auto b = eta_table_from_correlation(
      [](double x) { return ohmic_c_exact(0.01, 3, x); }, 0.1, 40);
  for (int k = 0; k <= 40; ++k)
    EXPECT_LT(std::abs(a.eta[k] - b.eta[k]), 1e-9 * std::abs(a.eta[0])) << k;
}

TEST(EtaTable, NotchAndFlatRoutesAgree) {
  for (auto s : {ohmic_notch(0.001, 3, 0.9, 0.7072, 150), flat(1e-4, 1.0)}) {
    auto a = eta_table(s, 0.1013, 30);
    auto b = eta_table_from_correlation(
        [&](double x) { return correlation_function(s, x); }, 0.1013, 30);
    for (int k = 0; k <= 30; ++k)
      EXPECT_LT(std::abs(a.eta[k] - b.eta[k]), 1e-8 * std::abs(a.eta[0])) << k;
  }
}

TEST(EtaTable, DecaysOnOhmicBath) {
  auto t = eta_table(ohmic(0.01, 3), 0.1, 200);
  EXPECT_LT(std::abs(t.eta[200]), 1e-3 * std::abs(t.eta[0]));
}

TEST(EtaTable, TighterToleranceWithinErrorEstimate) {
  auto s = ohmic_notch(0.01, 3, 0.5, 0.7, 150);
  auto a = eta_table(s, 0.1, 50, 1e-8);
  auto b = eta_table(s, 0.1, 50, 1e-9);
  for (int k = 0; k <= 50; ++k)
    EXPECT_LE(std::abs(a.eta[k] - b.eta[k]), a.err[k] + 1e-17) << k;
}

TEST(EtaTable, RejectsBadInput) {
  EXPECT_THROW(eta_table(ohmic(0.01, 3), 0, 3), DomainError);
  EXPECT_THROW(eta_table(ohmic(0.01, 3), 0.1, -1), DomainError);
}
