#include <gtest/gtest.h>

#include <random>

#include "ttipt/oracle.hpp"
#include "ttipt/propagate.hpp"

using namespace ttipt;

namespace {

SystemModel oscillator(double eps = 0, double wd = 1) {
  SystemModel m;
  m.N = 2;
  m.drive = {eps, wd};
  return m;
}

// Direct RK4 integration of first and second moments of the same quadratic
// problem, in the (q_0..q_M, p_0..p_M) basis.
struct Moments {
  std::vector<double> n, x;
};

Moments moments_rk4(const ChainMap& cm, const SystemModel& m, double T, double dt_out,
                    cplx alpha0, int sub) {
  const int n = cm.M + 1, N2 = 2 * n;
  rmat Kq = rmat::Zero(n, n), Kp = rmat::Zero(n, n);
  Kp(0, 0) = m.omega_r;
  for (int i = 0; i < cm.M; ++i) Kp(i + 1, i + 1) = cm.freqs(i);
  for (int i = 0; i + 1 < cm.M; ++i) Kp(i + 1, i + 2) = Kp(i + 2, i + 1) = cm.hops(i);
  Kq = Kp;
  Kq(0, 1) = Kq(1, 0) = 2 * cm.sys_coupling;
  // xi' = A xi + f,  A = [[0, Kp], [-Kq, 0]]
  rmat A = rmat::Zero(N2, N2);
  A.topRightCorner(n, n) = Kp;
  A.bottomLeftCorner(n, n) = -Kq;
  rvec mu = rvec::Zero(N2);
  mu(0) = std::sqrt(2.0) * alpha0.real();
  mu(n) = std::sqrt(2.0) * alpha0.imag();
  rmat S = 0.5 * rmat::Identity(N2, N2);
  auto force = [&](double t) {
    rvec f = rvec::Zero(N2);
    f(n) = -std::sqrt(2.0) * m.drive.epsilon * std::sin(m.drive.omega_d * t);
    return f;
  };
  Moments out;
  const double h = dt_out / sub;
  const int nt = static_cast<int>(std::floor(T / dt_out + 1e-9)) + 1;
  double t = 0;
  for (int i = 0; i < nt; ++i) {
    if (i > 0)
      for (int s = 0; s < sub; ++s) {
        auto fm = [&](double tt, const rvec& x) -> rvec { return A * x + force(tt); };
        rvec k1 = fm(t, mu), k2 = fm(t + h / 2, mu + h / 2 * k1),
             k3 = fm(t + h / 2, mu + h / 2 * k2), k4 = fm(t + h, mu + h * k3);
        mu += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        auto fs = [&](const rmat& X) -> rmat { return A * X + X * A.transpose(); };
        rmat l1 = fs(S), l2 = fs(S + h / 2 * l1), l3 = fs(S + h / 2 * l2), l4 = fs(S + h * l3);
        S += h / 6 * (l1 + 2 * l2 + 2 * l3 + l4);
        t += h;
      }
    const double q2 = S(0, 0) + mu(0) * mu(0), p2 = S(n, n) + mu(n) * mu(n);
    out.n.push_back(0.5 * (q2 + p2 - 1));
    out.x.push_back(std::sqrt(2.0) * mu(0));
  }
  return out;
}

cmat coherent_rho(const SystemModel& m, cplx alpha) {
  cvec v = cvec::Zero(m.N);
  double f = 1;
  for (int k = 0; k < m.N; ++k) {
    if (k) f *= std::sqrt(double(k));
    v(k) = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, k) / f;
  }
  v /= v.norm();
  cvec full = v;
  if (m.qubit_dim() == 2) {  // qubit in the ground state, index 1
    full = cvec::Zero(2 * m.N);
    full.tail(m.N) = v;
  }
  return full * full.adjoint();
}

}  // namespace

// ---- brute-force influence ----

TEST(Brute, ZeroEtaGivesOnes) {
  EtaTable e;
  e.dt = 0.1;
  e.k_max = 2;
  e.eta.assign(3, 0.0);
  auto F = finite_influence_brute(e, coupling_spectrum(2), 2);
  ASSERT_EQ(F.size(), 64u);
  for (auto f : F) EXPECT_EQ(f, cplx(1));
}

TEST(Brute, SingleTimeIsDiagonalB0) {
  EtaTable e;
  e.dt = 0.1;
  e.k_max = 1;
  e.eta = {cplx(0.05, -0.02), cplx(0.03, 0.01)};
  auto cs = coupling_spectrum(3);
  auto F = finite_influence_brute(e, cs, 0);
  cmat b0 = b_matrix(cs, e.eta[0]);
  for (int mu = 0; mu < 9; ++mu) EXPECT_EQ(F[mu], b0(mu, mu));
}

TEST(Brute, SizeGuard) {
  EtaTable e;
  e.dt = 0.1;
  e.k_max = 0;
  e.eta = {0.0};
  EXPECT_THROW(finite_influence_brute(e, coupling_spectrum(4), 6), ResourceError);
}

// ---- chain map ----

TEST(Chain, OhmicMatchesLaguerreRecurrence) {
  const double wc = 3;
  auto cm = chain_map(ohmic(0.01, wc), 60);
  for (int n = 0; n < 60; ++n) EXPECT_NEAR(cm.freqs(n), wc * (2 * n + 2), 1e-8 * wc * n + 1e-8);
  for (int n = 0; n < 59; ++n)
    EXPECT_NEAR(cm.hops(n), wc * std::sqrt((n + 1.0) * (n + 2.0)), 1e-8 * wc * n + 1e-8);
  EXPECT_NEAR(cm.sys_coupling, std::sqrt(2 * 0.01) * wc, 1e-12);
}

TEST(Chain, HardCutoffIsBandLimited) {
  auto cm = chain_map(ohmic(0.001, 3), 400, {24.0, 0});
  EXPECT_GT(cm.hops.minCoeff(), 0);
  EXPECT_GE(cm.freqs.minCoeff(), 0);
  EXPECT_LE(cm.freqs.maxCoeff(), 24.0);
  // interior of the chain approaches the uniform band [0, 24]
  EXPECT_NEAR(cm.freqs(300), 12.0, 0.2);
  EXPECT_NEAR(cm.hops(300), 6.0, 0.2);
  // total weight: 2 eta wc^2 (1 - e^{-8}(1 + 8))
  EXPECT_NEAR(cm.sys_coupling * cm.sys_coupling, 2 * 0.001 * 9 * (1 - 9 * std::exp(-8.0)), 1e-10);
}

TEST(Chain, FlatAndErrors) {
  auto cm = chain_map(flat(1e-4, 1.0), 20);
  EXPECT_LE(cm.freqs.maxCoeff(), 2.0);
  EXPECT_NEAR(cm.freqs(19), 1.0, 0.05);
  EXPECT_THROW(chain_map(ohmic(0.0, 3), 10), DomainError);
  auto hot = ohmic(0.01, 3);
  hot.beta = 5;
  EXPECT_THROW(chain_map(hot, 10), DomainError);
  EXPECT_THROW(chain_map(ohmic(0.01, 3), 0), DomainError);
}

// ---- Gaussian dynamics ----

TEST(Gaussian, VacuumStaysVacuumWithoutDrive) {
  ChainMap cm = chain_map(ohmic(0.01, 3), 20);
  auto tr = exact_gaussian_dynamics(cm, oscillator(), 5, 0.5);
  // x stays zero; n grows only by the bath-dressing of the vacuum
  for (double x : tr.x) EXPECT_LT(std::abs(x), 1e-12);
  EXPECT_LT(std::abs(tr.n[0]), 1e-12);
}

TEST(Gaussian, UncoupledCoherentStateRotates) {
  ChainMap cm = chain_map(ohmic(0.01, 3), 10);
  cm.sys_coupling = 0;
  GaussianOptions go;
  go.alpha0 = 1.3;
  auto tr = exact_gaussian_dynamics(cm, oscillator(), 10, 0.25, go);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    EXPECT_NEAR(tr.n[i], 1.69, 1e-10);
    EXPECT_NEAR(tr.x[i], 2 * 1.3 * std::cos(tr.t[i]), 1e-10);
  }
}

TEST(Gaussian, MatchesDirectMomentIntegration) {
  ChainMap cm = chain_map(ohmic(0.02, 3), 30, {24.0, 0});
  for (auto [eps, a0] : {std::pair{0.0, cplx(0.8, 0.3)}, std::pair{0.2, cplx(0)}}) {
    SystemModel m = oscillator(eps, 0.97);
    GaussianOptions go;
    go.alpha0 = a0;
    go.batch = 7;
    auto a = exact_gaussian_dynamics(cm, m, 6, 0.5, go);
    auto b = moments_rk4(cm, m, 6, 0.5, a0, 400);
    ASSERT_EQ(a.n.size(), b.n.size());
    for (std::size_t i = 0; i < a.n.size(); ++i) {
      EXPECT_NEAR(a.n[i], b.n[i], 1e-8);
      EXPECT_NEAR(a.x[i], b.x[i], 1e-8);
    }
  }
}

TEST(Gaussian, ResonantDriveHasNoCancellation) {
  double z, zd;
  detail::forced(1.0, 1.0, 2.0, z, zd);
  // limit (sin t - t cos t) / 2 at nu = wd = 1
  EXPECT_NEAR(z, (std::sin(2.0) - 2 * std::cos(2.0)) / 2, 1e-12);
  EXPECT_NEAR(zd, std::sin(2.0), 1e-12);
  double z2, zd2;
  detail::forced(1.0 + 1e-7, 1.0, 2.0, z2, zd2);
  EXPECT_NEAR(z2, z, 1e-6);
}

TEST(Gaussian, WeakCouplingDecayRate) {
  const double eta = 0.002;
  auto sd = ohmic(eta, 3);
  ChainMap cm = chain_map(sd, 800, {24.0, 0});
  GaussianOptions go;
  go.alpha0 = 1.0;
  const double kappa = 2 * PI * spectral_density(sd, 1.0);
  auto tr = exact_gaussian_dynamics(cm, oscillator(), 80, 0.05, go);
  ASSERT_LT(80, tr.horizon);
  // least-squares slope of log n over t in [10, 80]; averages the 2 w_r ripple
  double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.t[i] < 10) continue;
    const double y = std::log(tr.n[i]);
    sx += tr.t[i];
    sy += y;
    sxx += tr.t[i] * tr.t[i];
    sxy += tr.t[i] * y;
    ++k;
  }
  const double rate = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
  EXPECT_NEAR(rate / kappa, 1.0, 0.05);
}

// ---- Lindblad ----

TEST(Lindblad, UnitaryKeepsPurity) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = 4;
  m.omega_q = 0.7;
  m.g = 0.05;
  cmat rho0 = basis_state(m, 0, 0);
  for (auto meth : {LindbladMethod::RungeKutta, LindbladMethod::Exponential}) {
    LindbladOptions lo;
    lo.method = meth;
    auto r = lindblad_solve(m, 0, rho0, 20, 1, lo);
    for (const auto& x : r.rho) EXPECT_NEAR((x * x).trace().real(), 1.0, 1e-9);
  }
}

TEST(Lindblad, DampedCavityClosedForm) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = 12;
  m.omega_q = 0.7;
  m.g = 0;
  const double kappa = 0.05;
  cmat rho0 = coherent_rho(m, 1.2);
  const double n0 = (observable(m, "n") * rho0).trace().real();
  for (auto meth : {LindbladMethod::RungeKutta, LindbladMethod::Exponential}) {
    LindbladOptions lo;
    lo.method = meth;
    auto r = lindblad_solve(m, kappa, rho0, 40, 2, lo);
    for (std::size_t i = 0; i < r.t.size(); ++i) {
      const double n = (observable(m, "n") * r.rho[i]).trace().real();
      EXPECT_NEAR(n, n0 * std::exp(-kappa * r.t[i]), 1e-7);
    }
    EXPECT_LT(r.max_trace_error, 1e-10);
    EXPECT_GT(r.min_eigenvalue, -1e-8);
  }
}

TEST(Lindblad, DrivenMethodsAgree) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = 5;
  m.omega_q = 0.7;
  m.g = 0.05;
  cmat rho0 = basis_state(m, 0, 0);
  auto a = lindblad_solve(m, 0.02, rho0, 20, 1);
  LindbladOptions lo;
  lo.method = LindbladMethod::RungeKutta;
  auto b = lindblad_solve(m, 0.02, rho0, 20, 1, lo);
  for (std::size_t i = 0; i < a.t.size(); ++i) EXPECT_LT(max_abs(a.rho[i] - b.rho[i]), 1e-8);
  m.drive = {0.05, 1.0};
  EXPECT_THROW(lindblad_solve(m, 0.02, rho0, 20, 1, {LindbladMethod::Exponential}), DomainError);
  auto c = lindblad_solve(m, 0.02, rho0, 20, 1);
  EXPECT_LT(c.max_trace_error, 1e-10);
  EXPECT_GT(c.min_eigenvalue, -1e-8);
}

TEST(Lindblad, RejectsBadInput) {
  SystemModel m;
  m.N = 3;
  EXPECT_THROW(lindblad_solve(m, -1, basis_state(m, 0, 0), 1, 0.1), DomainError);
  EXPECT_THROW(lindblad_solve(m, 0.1, cmat::Identity(2, 2), 1, 0.1), DomainError);
}
