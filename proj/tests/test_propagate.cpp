#include <gtest/gtest.h>

#include <random>

#include "ttipt/itebd.hpp"
#include "ttipt/models.hpp"
#include "ttipt/oracle.hpp"
#include "ttipt/propagate.hpp"

using namespace ttipt;

namespace {

EtaTable zero_eta(double dt, int k_max = 3) {
  EtaTable e;
  e.dt = dt;
  e.k_max = k_max;
  e.eta.assign(k_max + 1, 0.0);
  return e;
}

EtaTable toy_eta(int k_max, double dt = 0.3) {
  EtaTable e;
  e.dt = dt;
  e.k_max = k_max;
  for (int k = 0; k <= k_max; ++k)
    e.eta.push_back(cplx(0.06 / (1 + k), -0.04 / (1 + k * k)) * (k == 0 ? 0.5 : 1.0));
  return e;
}

cmat random_rho(int D, unsigned seed) {
  std::mt19937 g(seed);
  std::normal_distribution<double> n;
  cmat a(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = cplx(n(g), n(g));
  cmat r = a * a.adjoint();
  return r / r.trace();
}

SystemModel driven(int N) {
  SystemModel m;
  m.N = N;
  m.drive = {0.2, 1.1};
  return m;
}

SystemModel jc(int N) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = N;
  m.omega_q = 0.8;
  m.g = 0.1;
  m.drive = {0.1, 0.95};
  return m;
}

// midpoint-rule closed evolution, model basis
cmat closed(const SystemModel& m, const cmat& rho0, double dt, int n) {
  cmat r = rho0;
  for (int i = 0; i < n; ++i) {
    cmat u = unitary_step(hamiltonian(m, (i + 0.5) * dt), dt);
    r = u * r * u.adjoint();
  }
  return r;
}

ProcessTensor trivial_pt(int N, double dt) {
  return build_tti_pt(zero_eta(dt), coupling_spectrum(N), BuildOptions{});
}

}  // namespace

TEST(Propagator, MatchesConjugation) {
  SystemModel m = jc(3);
  const double t = 0.7, dt = 0.2;
  cmat L = system_propagator(m, t, dt);
  cmat W = full_basis(m, coupling_spectrum(m));
  cmat rho = to_basis(random_rho(m.dim(), 1), W);
  const int D = m.dim();
  cvec v(D * D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) v(a * D + b) = rho(a, b);
  cvec w = L * v;
  cmat u = unitary_step(to_basis(hamiltonian(m, t + 0.5 * dt), W), dt);
  cmat ex = u * rho * u.adjoint();
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) EXPECT_LT(std::abs(w(a * D + b) - ex(a, b)), 1e-13);
  EXPECT_THROW(system_propagator(m, t, 0.0), DomainError);
}

TEST(Propagator, UnitaryStepOfDiagonal) {
  cmat h = cmat::Zero(2, 2);
  h(0, 0) = 1.5;
  h(1, 1) = -0.5;
  cmat u = unitary_step(h, 0.4);
  EXPECT_LT(std::abs(u(0, 0) - std::exp(-I * 0.6)), 1e-15);
  EXPECT_LT(std::abs(u(1, 1) - std::exp(I * 0.2)), 1e-15);
  EXPECT_LT(std::abs(u(0, 1)), 1e-15);
}

TEST(Evolve, ZeroBathIsClosedTrotter) {
  for (SystemModel m : {driven(4), jc(3)}) {
    const double dt = 0.1;
    auto pt = trivial_pt(m.N, dt);
    cmat rho0 = random_rho(m.dim(), 2);
    for (bool sym : {false, true}) {
      EvolveOptions eo;
      eo.symmetric = sym;
      auto tr = evolve(pt, m, rho0, 40, observables(m, {"n", "x"}), eo);
      cmat ex = closed(m, rho0, dt, 40);
      EXPECT_LT(max_abs(tr.final_rho - ex), 1e-11);
      EXPECT_NEAR(tr.real("n").back(), (observable(m, "n") * ex).trace().real(), 1e-11);
      ASSERT_EQ(tr.t.size(), 41u);
      EXPECT_DOUBLE_EQ(tr.t.back(), 40 * dt);
    }
  }
}

TEST(Evolve, QubitResonatorMatchesBruteForce) {
  SystemModel m = jc(2);
  for (int kmax : {1, 3}) {
    auto e = toy_eta(kmax);
    BuildOptions o;
    o.eps_rel = 1e-12;
    o.tol_inner = 1e-12;
    auto pt = build_tti_pt(e, coupling_spectrum(m), o);
    cmat rho0 = random_rho(m.dim(), 3);
    auto cs = coupling_spectrum(m);
    cmat W = full_basis(m, cs);
    std::vector<cmat> U;
    const int n = 5;
    auto tr = evolve(pt, m, rho0, n, {});
    for (int i = 1; i <= n; ++i) {
      cmat u = unitary_step(to_basis(hamiltonian(m, (i - 0.5) * e.dt), W), e.dt);
      U.push_back(kron(u, u.conjugate()));
    }
    auto F = finite_influence_brute(e, cs, n - 1);
    cmat ex = from_basis(brute_force_evolve(F, U, to_basis(rho0, W), 2, m.N), W);
    EXPECT_LT(max_abs(tr.final_rho - ex), 1e-8) << "kmax " << kmax;
  }
}

TEST(Evolve, TracePreservedWithBath) {
  SystemModel m = jc(3);
  auto e = eta_table(ohmic(0.02, 3), 0.1, 20);
  auto pt = build_tti_pt(e, coupling_spectrum(m), BuildOptions{});
  auto tr = evolve(pt, m, basis_state(m, 0, 1), 300, observables(m, {"n", "sigma_z"}));
  // truncation breaks causality at the eps_rel level per step
  for (std::size_t i = 0; i < tr.trace_drift.size(); ++i)
    EXPECT_LT(std::abs(tr.trace_drift[i]), 1e-6 * (i + 1));
  for (auto v : tr["sigma_z"]) EXPECT_LT(std::abs(v.imag()), 1e-10);
  EXPECT_LT(max_abs(tr.final_rho - tr.final_rho.adjoint()), 1e-10);
}

TEST(Evolve, TrotterErrorIsSecondOrder) {
  SystemModel m = driven(5);
  cmat rho0 = basis_state(m, 0, 1);
  const double T = 3.0;
  cmat ref = closed(m, rho0, T / 3200, 3200);
  double err[2];
  for (int j = 0; j < 2; ++j) {
    const int n = 30 << j;
    auto tr = evolve(trivial_pt(m.N, T / n), m, rho0, n, {});
    err[j] = max_abs(tr.final_rho - ref);
  }
  EXPECT_GT(err[0] / err[1], 3.5);
  EXPECT_LT(err[0] / err[1], 4.5);
}

TEST(Evolve, SymmetricSplittingStaysClose) {
  SystemModel m = driven(3);
  auto e = eta_table(ohmic(0.02, 3), 0.05, 30);
  auto pt = build_tti_pt(e, coupling_spectrum(m), BuildOptions{});
  cmat rho0 = basis_state(m, 0, 1);
  EvolveOptions eo;
  auto a = evolve(pt, m, rho0, 200, observables(m, {"n"}), eo);
  eo.symmetric = true;
  auto b = evolve(pt, m, rho0, 200, observables(m, {"n"}), eo);
  const double d = std::abs(a.real("n").back() - b.real("n").back());
  EXPECT_LT(d, 0.02);
}

TEST(Evolve, StridesAndSnapshots) {
  SystemModel m = driven(3);
  auto pt = trivial_pt(3, 0.1);
  EvolveOptions eo;
  eo.record_stride = 5;
  eo.snapshot_stride = 10;
  int calls = 0;
  eo.on_sample = [&](int s, double, const cmat& r) {
    EXPECT_EQ(s % 5, 0);
    EXPECT_NEAR(r.trace().real(), 1.0, 1e-12);
    ++calls;
  };
  auto tr = evolve(pt, m, basis_state(m, 0, 0), 20, observables(m, {"n"}), eo);
  EXPECT_EQ(tr.t.size(), 5u);
  EXPECT_EQ(calls, 5);
  EXPECT_EQ(tr.snapshots.size(), 3u);
  EXPECT_EQ(tr.final_rho.rows(), 3);
  auto z = evolve(pt, m, basis_state(m, 0, 2), 0, {});
  EXPECT_LT(max_abs(z.final_rho - basis_state(m, 0, 2)), 1e-14);
}

TEST(Evolve, RejectsBadInput) {
  SystemModel m = driven(3);
  auto pt = trivial_pt(3, 0.1);
  EXPECT_THROW(evolve(pt, m, cmat::Identity(4, 4) / 4.0, 5, {}), DomainError);
  EXPECT_THROW(evolve(pt, driven(4), basis_state(driven(4), 0, 0), 5, {}), DomainError);
  EXPECT_THROW(evolve(pt, m, basis_state(m, 0, 0), -1, {}), DomainError);
  cmat bad = basis_state(m, 0, 0);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(evolve(pt, m, bad, 3, {}), NumericalError);
  EXPECT_THROW(evolve(pt, m, basis_state(m, 0, 0), 3, {{"n", cmat::Identity(2, 2)}}),
               DomainError);
}

TEST(Evolve, TopLevelPopulationTracked) {
  SystemModel m = driven(4);
  m.drive = {1.0, 1.0};
  auto pt = trivial_pt(4, 0.1);
  auto tr = evolve(pt, m, basis_state(m, 0, 0), 100, {});
  EXPECT_GT(tr.max_top_population, 0.01);
  EXPECT_LE(tr.max_top_population, 1.0 + 1e-12);
}

TEST(Evolve, SubsystemMatchesFullSystemPt) {
  SystemModel m = jc(2);
  auto e = toy_eta(2);
  BuildOptions o;
  o.eps_rel = 1e-12;
  o.tol_inner = 1e-12;
  auto small = build_tti_pt(e, coupling_spectrum(m), o);
  // coupling 1 (x) x on the whole qubit-resonator space: degenerate spectrum
  auto cs = coupling_spectrum(m);
  CouplingSpectrum full;
  full.lambdas.resize(2 * m.N);
  full.basis = cmat::Zero(2 * m.N, 2 * m.N);
  for (int n = 0; n < m.N; ++n)
    for (int q = 0; q < 2; ++q) {
      full.lambdas(2 * n + q) = cs.lambdas(n);
      full.basis.block(q * m.N, 2 * n + q, m.N, 1) = cs.basis.col(n);
    }
  auto big = build_tti_pt(e, full, o);
  cmat rho0 = random_rho(m.dim(), 4);
  auto a = evolve(small, m, rho0, 5, observables(m, {"sigma_z", "n"}));
  auto H = [&](double t) { return hamiltonian(m, t); };
  auto b = evolve_core(big, H, true, 1, rho0, 5, observables(m, {"sigma_z", "n"}));
  EXPECT_LT(max_abs(a.final_rho - b.final_rho), 1e-8);
  for (std::size_t i = 0; i < a.t.size(); ++i)
    EXPECT_LT(std::abs(a["sigma_z"][i] - b["sigma_z"][i]), 1e-8);
}

TEST(Evolve, TrotterRefinementConverges) {
  SystemModel m = driven(4);
  cmat rho0 = basis_state(m, 0, 1);
  const double T = 4.0, mem = 0.8;
  double n_end[3];
  for (int j = 0; j < 3; ++j) {
    const int n = 40 << j;
    const double dt = T / n;
    auto e = eta_table(ohmic(0.02, 3), dt, int(std::lround(mem / dt)));
    BuildOptions o;
    o.eps_rel = 1e-7;
    o.tol_inner = 1e-7;
    auto pt = build_tti_pt(e, coupling_spectrum(m), o);
    n_end[j] = evolve(pt, m, rho0, n, observables(m, {"n"})).real("n").back();
  }
  const double d1 = std::abs(n_end[0] - n_end[1]), d2 = std::abs(n_end[1] - n_end[2]);
  EXPECT_LT(d2, d1);
  EXPECT_GT(d1 / d2, 1.6);
}
