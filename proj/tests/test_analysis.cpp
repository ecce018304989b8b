#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ttipt/analysis.hpp"

using namespace ttipt;

namespace {

struct Series {
  std::vector<double> t, y;
};

Series exp_series(double a, double g, double c, double dt, double T, double ripple = 0) {
  Series s;
  for (int i = 0; i * dt <= T + 1e-12; ++i) {
    const double t = i * dt;
    s.t.push_back(t);
    s.y.push_back(a * std::exp(-g * t) + c + ripple * std::sin(2.3 * t));
  }
  return s;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

cmat coherent(int N, cplx alpha) {
  cvec v(N);
  double f = 1;
  for (int n = 0; n < N; ++n) {
    if (n > 0) f *= std::sqrt(double(n));
    v(n) = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, n) / f;
  }
  v.normalize();
  return v * v.adjoint();
}

}  // namespace

TEST(FitDecay, RecoversSyntheticRate) {
  auto s = exp_series(1, 0.01, 0, 1, 1000);
  auto f = fit_decay(s.t, s.y);
  EXPECT_NEAR(f.gamma, 0.01, 1e-6);
  EXPECT_NEAR(f.amplitude, 1, 1e-6);
  EXPECT_NEAR(f.offset, 0, 1e-8);
  EXPECT_LT(f.residual_rms, 1e-10);
  EXPECT_NEAR(f.window[1], 1000, 1e-12);
  EXPECT_NEAR(f.window[0], 667, 1e-12);
}

TEST(FitDecay, RecoversOffsetAndSign) {
  auto s = exp_series(-1.5, 0.004, 0.3, 0.5, 2000);
  auto f = fit_decay(s.t, s.y, 0.5);
  EXPECT_NEAR(f.gamma, 0.004, 1e-9);
  EXPECT_NEAR(f.amplitude, -1.5, 1e-6);
  EXPECT_NEAR(f.offset, 0.3, 1e-9);
}

TEST(FitDecay, ConstantSeries) {
  Series s;
  for (int i = 0; i < 60; ++i) s.t.push_back(i), s.y.push_back(0.25);
  auto f = fit_decay(s.t, s.y);
  EXPECT_EQ(f.gamma, 0);
  EXPECT_NEAR(f.amplitude, 0, 1e-12);
  EXPECT_NEAR(f.offset, 0.25, 1e-14);
  EXPECT_GE(f.residual_rms, 0);
}

TEST(FitDecay, InvariantUnderRescaling) {
  auto s = exp_series(0.8, 0.02, -0.1, 0.25, 300, 1e-3);
  const double g0 = fit_decay(s.t, s.y).gamma;
  EXPECT_GT(g0, 0);
  for (double k : {3.7, -2.0, 1e-3}) {
    auto y = s.y;
    for (auto& v : y) v *= k;
    EXPECT_NEAR(fit_decay(s.t, y).gamma, g0, 1e-10) << "scale " << k;
  }
}

TEST(FitDecay, RippleLeavesRateClose) {
  auto s = exp_series(1, 0.01, 0.2, 0.1, 300, 0.01);
  auto f = fit_decay(s.t, s.y);
  EXPECT_NEAR(f.gamma, 0.01, 2e-4);
  EXPECT_GT(f.residual_rms, 1e-3);
}

TEST(FitDecay, RejectsShortWindow) {
  auto s = exp_series(1, 0.1, 0, 1, 20);
  EXPECT_THROW(fit_decay(s.t, s.y), DomainError);
  EXPECT_THROW(fit_decay(s.t, std::vector<double>(3)), DomainError);
  EXPECT_THROW(fit_decay(s.t, s.y, 0), DomainError);
}

TEST(Purcell, ZeroDensityGivesZeroRate) {
  EXPECT_EQ(purcell_rate_jc(0.2, -1, 0), 0);
  EXPECT_EQ(purcell_rate_rabi(0.2, 5, 7, 0), 0);
}

TEST(Purcell, RabiOverJcRatio) {
  for (auto [g, wq, wr, J] : std::vector<std::array<double, 4>>{
           {0.211, 5.304, 7.5, 0.01}, {0.03, 0.7, 1.0, 2e-3}, {0.1, 1.4, 1.0, 0.3}}) {
    const double ratio = purcell_rate_rabi(g, wq, wr, J) / purcell_rate_jc(g, wq - wr, J);
    const double expect = std::pow(2 * wr / (wr + wq), 2);
    EXPECT_NEAR(ratio, expect, 1e-13 * expect);
  }
}

TEST(Purcell, PaperParameters) {
  const double g = 0.211, wq = 5.304, wr = 7.5;
  const auto sd = ohmic(1e-3, 3 * wr);
  const double J = spectral_density(sd, wq);
  // independent evaluation: 4 g^2 wr^2 / (wq^2 - wr^2)^2 * 2 eta wq e^{-wq/wc}
  const double direct = 4 * g * g * wr * wr / std::pow(wq * wq - wr * wr, 2) * 2e-3 * wq *
                        std::exp(-wq / (3 * wr));
  const double rabi = purcell_rate_rabi(g, wq, wr, J);
  EXPECT_NEAR(rabi / (2 * PI), direct, 1e-12 * direct);
  EXPECT_NEAR(direct, 1.06e-4, 0.01e-4);
  EXPECT_GT(rabi, purcell_rate_jc(g, wq - wr, J));
}

TEST(Purcell, RejectsZeroDetuning) {
  EXPECT_THROW(purcell_rate_jc(0.1, 0, 1), DomainError);
  EXPECT_THROW(purcell_rate_rabi(0.1, 1, 1, 1), DomainError);
  EXPECT_THROW(purcell_rate_jc(0.1, 1, -1), DomainError);
}

TEST(Stark, ZeroPhotonsIsUnity) {
  const auto sd = ohmic_notch(1e-3, 3, 0.5, 0.7072);
  EXPECT_NEAR(stark_shift_ratio(0.7072, 1, 0.028133, 0, sd), 1, 1e-14);
}

TEST(Stark, GeometricFactorWhenDensityCancels) {
  const double wq = 0.7072, wr = 1, g = 0.028133, nbar = 0.3;
  const auto sd = ohmic(1e-3, 3);
  const double chi = g * g / (wq - wr);
  const double w0 = wq + chi, wt = wq + chi * (2 * nbar + 1);
  const double geom = std::pow(w0 * w0 - wr * wr, 2) / std::pow(wt * wt - wr * wr, 2);
  const double jr = spectral_density(sd, wt) / spectral_density(sd, w0);
  EXPECT_NEAR(stark_shift_ratio(wq, wr, g, nbar, sd) / jr, geom, 1e-13);
}

TEST(Stark, UnfilteredRateFallsWithPhotons) {
  const auto sd = ohmic(1e-3, 3);
  double prev = 1;
  for (double nbar = 0.25; nbar <= 5; nbar += 0.25) {
    const double r = stark_shift_ratio(0.7072, 1, 0.028133, nbar, sd);
    EXPECT_LT(r, prev) << nbar;
    prev = r;
  }
}

TEST(Stark, RejectsBadInput) {
  const auto sd = ohmic(1e-3, 3);
  EXPECT_THROW(stark_shift_ratio(0.7, 1, 0.03, -1, sd), DomainError);
  EXPECT_THROW(stark_shift_ratio(1, 1, 0.03, 0, sd), DomainError);
}

TEST(Quadrature, VacuumIsStandardGaussian) {
  cmat rho = cmat::Zero(20, 20);
  rho(0, 0) = 1;
  auto grid = linspace(-8, 8, 801);
  auto P = quadrature_distribution(rho, grid);
  double dev = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    dev = std::max(dev, std::abs(P[i] - std::exp(-0.5 * grid[i] * grid[i]) / std::sqrt(2 * PI)));
  EXPECT_LT(dev, 1e-2);
  EXPECT_LT(dev, 1e-14);
  EXPECT_NEAR(trapezoid(grid, P), 1, 1e-3);
}

TEST(Quadrature, TwoLevelMixtureMatchesHermiteSum) {
  cmat rho = cmat::Zero(2, 2);
  rho(0, 0) = rho(1, 1) = 0.5;
  auto grid = linspace(-9, 9, 1201);
  auto P = quadrature_distribution(rho, grid);
  for (std::size_t i = 0; i < grid.size(); i += 37) {
    const double x = grid[i] / std::sqrt(2.0);
    const double h0 = std::pow(PI, -0.25) * std::exp(-0.5 * x * x);
    const double h1 = std::sqrt(2.0) * x * h0;
    EXPECT_NEAR(P[i], 0.5 * (h0 * h0 + h1 * h1) / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(P[i], P[grid.size() - 1 - i], 1e-14);
  }
  EXPECT_NEAR(trapezoid(grid, P), 1, 1e-3);
}

TEST(Quadrature, MomentsMatchOperatorTraces) {
  const int N = 40;
  cmat rho = 0.7 * coherent(N, cplx(0.6, 1.3)) + 0.3 * coherent(N, cplx(-1.1, -0.4));
  const cmat p = quadrature_p(N);
  const double mean = (rho * p).trace().real(), second = (rho * p * p).trace().real();
  auto grid = linspace(-14, 14, 4001);
  auto P = quadrature_distribution(rho, grid);
  std::vector<double> m1(grid.size()), m2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_GE(P[i], 0);
    m1[i] = grid[i] * P[i];
    m2[i] = grid[i] * grid[i] * P[i];
  }
  EXPECT_NEAR(trapezoid(grid, P), 1, 1e-8);
  EXPECT_NEAR(trapezoid(grid, m1), mean, 1e-6);
  EXPECT_NEAR(trapezoid(grid, m2), second, 1e-6);
}

TEST(Quadrature, MatchesTruncatedOperatorEigenvectors) {
  const int N = 48;
  cmat rho = coherent(N, cplx(0.9, -1.7));
  rho = 0.5 * rho + 0.5 * coherent(N, cplx(0, 1.2));
  Eigen::SelfAdjointEigenSolver<cmat> es(quadrature_p(N));
  std::vector<double> nodes;
  for (int j = 0; j < N; ++j)
    if (std::abs(es.eigenvalues()(j)) < 6) nodes.push_back(es.eigenvalues()(j));
  auto P = quadrature_distribution(rho, nodes);
  int k = 0;
  for (int j = 0; j < N; ++j) {
    const double pj = es.eigenvalues()(j);
    if (std::abs(pj) >= 6) continue;
    const cvec v = es.eigenvectors().col(j);
    const double w = std::norm(v(0));
    const double vac = std::exp(-0.5 * pj * pj) / std::sqrt(2 * PI);
    const double oracle = (v.adjoint() * rho * v).value().real() * vac / w;
    EXPECT_NEAR(P[k], oracle, 1e-9) << "p = " << pj;
    ++k;
  }
}

TEST(Quadrature, RejectsBadInput) {
  cmat rho = cmat::Zero(3, 3);
  EXPECT_THROW(quadrature_distribution(rho, {0, 1}), DomainError);
  rho(0, 0) = 1;
  EXPECT_THROW(quadrature_distribution(rho, {1, 0}), DomainError);
  EXPECT_THROW(quadrature_distribution(cmat::Identity(2, 3), {0}), DomainError);
}

TEST(Readout, IdenticalVacuaGiveUnitError) {
  cmat rho = cmat::Zero(10, 10);
  rho(0, 0) = 1;
  auto grid = linspace(-10, 10, 2001);
  auto P = quadrature_distribution(rho, grid);
  EXPECT_NEAR(readout_error(grid, P, P), 1, 1e-3);
}

TEST(Readout, SeparatedStatesGiveSmallError) {
  const int N = 60;
  auto grid = linspace(-20, 20, 4001);
  auto up = quadrature_distribution(coherent(N, cplx(0, 3)), grid);
  auto down = quadrature_distribution(coherent(N, cplx(0, -3)), grid);
  // overlap of N(-6,1) and N(6,1): erfc(6 / sqrt 2)
  EXPECT_NEAR(readout_error(grid, up, down), std::erfc(6 / std::sqrt(2.0)), 1e-8);
}

TEST(Analysis, ResonatorStateTracesQubit) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = 3;
  cmat rho = basis_state(m, 0, 2) * 0.25 + basis_state(m, 1, 1) * 0.75;
  cmat r = resonator_state(m, rho);
  EXPECT_NEAR(r(2, 2).real(), 0.25, 1e-15);
  EXPECT_NEAR(r(1, 1).real(), 0.75, 1e-15);
  EXPECT_NEAR(r.trace().real(), 1, 1e-15);
  EXPECT_THROW(resonator_state(m, cmat::Identity(3, 3)), DomainError);
}
