// experiments.hpp: validation and benchmark drivers shared by the CLI and tests
#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ttipt/analysis.hpp"
#include "ttipt/bath.hpp"
#include "ttipt/config.hpp"
#include "ttipt/itebd.hpp"
#include "ttipt/models.hpp"
#include "ttipt/oracle.hpp"
#include "ttipt/propagate.hpp"

namespace ttipt {

// Memory kernel with no physical bath behind it; exercises every b(k).
inline EtaTable toy_eta(int k_max, double dt = 0.3) {
  EtaTable e;
  e.dt = dt;
  e.k_max = k_max;
  for (int k = 0; k <= k_max; ++k)
    e.eta.push_back(cplx(0.08 / (1 + k), -0.05 / (1 + k * k)) * (k == 0 ? 0.5 : 1.0));
  return e;
}

inline cmat random_density(int D, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n;
  cmat a(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = cplx(n(g), n(g));
  cmat r = a * a.adjoint();
  return r / r.trace();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// rho after each of n steps from the explicit triangular network, model basis.
inline std::vector<cmat> brute_force_path(const EtaTable& eta, const SystemModel& m,
                                          const cmat& rho0, int n) {
  auto cs = coupling_spectrum(m);
  cmat W = full_basis(m, cs);
  std::vector<cmat> U, out;
  for (int i = 1; i <= n; ++i) {
    cmat u = unitary_step(to_basis(hamiltonian(m, (i - 0.5) * eta.dt), W), eta.dt);
    U.push_back(kron(u, u.conjugate()));
    auto F = finite_influence_brute(eta, cs, i - 1);
    out.push_back(from_basis(brute_force_evolve(F, U, to_basis(rho0, W), m.qubit_dim(), m.N), W));
  }
  return out;
}

// rho after each of n steps from the process tensor, model basis.
inline std::vector<cmat> pt_path(const ProcessTensor& pt, const SystemModel& m,
                                 const cmat& rho0, int n) {
  std::vector<cmat> out;
  EvolveOptions eo;
  eo.keep_final = false;
  eo.on_sample = [&](int s, double, const cmat& r) {
    if (s > 0) out.push_back(r);
  };
  evolve(pt, m, rho0, n, {}, eo);
  return out;
}

struct BruteForceReport {
  int d = 0, k_max = 0, steps = 0, chi = 0;
  Variant variant = Variant::Enhanced;
  double max_dev = 0;
};

// Driven oscillator with N = d levels against the toy kernel, exact build.
inline BruteForceReport brute_force_check(int d, int k_max, Variant v, int steps,
                                          std::uint64_t seed = 11) {
  SystemModel m;
  m.N = d;
  m.drive = {0.3, 0.9};
  auto e = toy_eta(k_max);
  BuildOptions o;
  o.variant = v;
  o.eps_rel = 1e-12;
  o.tol_inner = 1e-12;
  auto pt = build_tti_pt(e, coupling_spectrum(m), o);
  cmat rho0 = random_density(d, seed);
  auto a = pt_path(pt, m, rho0, steps);
  auto b = brute_force_path(e, m, rho0, steps);
  BruteForceReport r{d, k_max, steps, pt.chi, v, 0};
  for (int i = 0; i < steps; ++i) r.max_dev = std::max(r.max_dev, max_abs(a[i] - b[i]));
  return r;
}

// Same comparison for a stored tensor: its kernel is rebuilt from the recorded bath.
inline BruteForceReport brute_force_check(const ProcessTensor& pt, int steps,
                                          std::uint64_t seed = 11) {
  if (!pt.meta.has_bath) throw DomainError("process tensor carries no bath description");
  SystemModel m;
  m.N = pt.d;
  m.drive = {0.3, 0.9};
  auto e = eta_table(pt.meta.bath, pt.meta.dt, pt.meta.k_max);
  cmat rho0 = random_density(pt.d, seed);
  auto a = pt_path(pt, m, rho0, steps);
  auto b = brute_force_path(e, m, rho0, steps);
  BruteForceReport r{pt.d, pt.meta.k_max, steps, pt.chi, pt.meta.variant, 0};
  for (int i = 0; i < steps; ++i) r.max_dev = std::max(r.max_dev, max_abs(a[i] - b[i]));
  return r;
}

struct BuildReport {
  int d = 0;
  Variant variant = Variant::Enhanced;
  double seconds = 0;  // best of the repetitions
  std::size_t peak = 0;
  int chi = 0;
  StepInfo last;
  std::vector<StepInfo> steps;
  bool peak_within_bound = true;  // per-step peak vs chi^2 d^2 alpha (enh) / chi^2 d^4 or d^6 gate (base)
};

inline BuildReport timed_build(const EtaTable& eta, int d, const BuildOptions& base,
                               int repetitions = 1, ProcessTensor* out = nullptr) {
  BuildReport r;
  r.d = d;
  r.variant = base.variant;
  r.seconds = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < std::max(1, repetitions); ++rep) {
    BuildOptions o = base;
    std::vector<StepInfo> steps;
    o.on_step = [&](const StepInfo& s) { steps.push_back(s); };
    const auto t0 = std::chrono::steady_clock::now();
    ProcessTensor pt = build_tti_pt(eta, coupling_spectrum(d), o);
    r.seconds = std::min(r.seconds, seconds_since(t0));
    r.peak = pt.meta.peak_elements;
    r.chi = pt.chi;
    r.steps = std::move(steps);
    if (out && rep == 0) *out = std::move(pt);
  }
  if (!r.steps.empty()) r.last = r.steps.back();
  const std::size_t d2 = std::size_t(d) * d;
  std::size_t chi_in = 1;
  for (const auto& s : r.steps) {
    const std::size_t c2 = chi_in * chi_in;
    const std::size_t cm = std::max(chi_in, std::size_t(s.chi));
    const std::size_t bound =
        r.variant == Variant::Enhanced
            ? c2 * d2 * std::max<std::size_t>(1, s.alpha)
            : std::max(cm * cm * d2 * d2, base.dense_gate ? d2 * d2 * d2 : 0);
    if (s.peak > bound) r.peak_within_bound = false;
    chi_in = std::size_t(s.chi);
  }
  return r;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs >= 2 points");
  double mx = 0, my = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]) / n, my += std::log(y[i]) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

struct VariantComparison {
  int d = 0;
  BuildReport base, enh;
  double max_diff = 0;  // max over steps and elements of |rho_base - rho_enh|
  int steps = 0;
};

// Both variants on one kernel, undriven oscillator from a random state.
inline VariantComparison compare_variants(int d, const EtaTable& eta, double eps_rel,
                                          int steps, std::uint64_t seed = 7,
                                          double tol_inner = 0) {
  VariantComparison c;
  c.d = d;
  c.steps = steps;
  BuildOptions o;
  o.eps_rel = eps_rel;
  o.tol_inner = tol_inner > 0 ? tol_inner : eps_rel;
  ProcessTensor pb, pe;
  o.variant = Variant::Baseline;
  c.base = timed_build(eta, d, o, 1, &pb);
  o.variant = Variant::Enhanced;
  c.enh = timed_build(eta, d, o, 1, &pe);
  SystemModel m;
  m.N = d;
  const cmat rho0 = random_density(d, seed);
  auto a = pt_path(pb, m, rho0, steps);
  auto b = pt_path(pe, m, rho0, steps);
  for (int i = 0; i < steps; ++i) c.max_diff = std::max(c.max_diff, max_abs(a[i] - b[i]));
  return c;
}

// PT for the resonator of m (d = N) under bath sd.
inline ProcessTensor build_for(const SpectralDensity& sd, const SystemModel& m, const PtConfig& p) {
  auto e = eta_table(sd, p.dt, p.k_max);
  return build_tti_pt(e, coupling_spectrum(m), build_options(p), &sd);
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 of two density matrices.
inline double fidelity(const cmat& a, const cmat& b) {
  Eigen::SelfAdjointEigenSolver<cmat> ea(0.5 * (a + a.adjoint()));
  const rvec w = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const cmat sa = ea.eigenvectors() * w.asDiagonal() * ea.eigenvectors().adjoint();
  const cmat m = sa * (0.5 * (b + b.adjoint())) * sa;
  Eigen::SelfAdjointEigenSolver<cmat> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double f = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return f * f;
}

struct GaussianComparison {
  std::vector<double> t, n_pt, n_exact, x_pt, x_exact;
  double max_rel_err = 0;  // over samples with n_exact >= rel_floor * max n_exact
  double rel_floor = 0;
  double horizon = 0;
  int chi = 0, modes = 0;
  double pt_seconds = 0, evolve_seconds = 0, oracle_seconds = 0;
};

// Driven oscillator from vacuum: PT dynamics against the chain-mapped exact solution.
inline GaussianComparison gaussian_compare(const SpectralDensity& sd, const SystemModel& m,
                                           const PtConfig& p, double T, int modes,
                                           const ChainOptions& co, double rel_floor = 0.01) {
  if (m.kind != ModelKind::Oscillator) throw DomainError("Gaussian comparison needs the oscillator model");
  GaussianComparison g;
  g.modes = modes;
  g.rel_floor = rel_floor;
  auto t0 = std::chrono::steady_clock::now();
  ProcessTensor pt = build_for(sd, m, p);
  g.pt_seconds = seconds_since(t0);
  g.chi = pt.chi;
  const int steps = static_cast<int>(std::floor(T / p.dt + 1e-9));
  t0 = std::chrono::steady_clock::now();
  auto tr = evolve(pt, m, basis_state(m, 0, 0), steps, observables(m, {"n", "x"}));
  g.evolve_seconds = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto ex = exact_gaussian_dynamics(chain_map(sd, modes, co), m, steps * p.dt, p.dt);
  g.oracle_seconds = seconds_since(t0);
  g.horizon = ex.horizon;
  g.t = tr.t;
  g.n_pt = tr.real("n");
  g.x_pt = tr.real("x");
  const std::size_t n = std::min(g.t.size(), ex.n.size());
  g.t.resize(n), g.n_pt.resize(n), g.x_pt.resize(n);
  g.n_exact.assign(ex.n.begin(), ex.n.begin() + n);
  g.x_exact.assign(ex.x.begin(), ex.x.begin() + n);
  double nmax = 0;
  for (double v : g.n_exact) nmax = std::max(nmax, v);
  for (std::size_t i = 0; i < n; ++i)
    if (g.n_exact[i] >= rel_floor * nmax && g.n_exact[i] > 0)
      g.max_rel_err = std::max(g.max_rel_err, std::abs(g.n_pt[i] - g.n_exact[i]) / g.n_exact[i]);
  return g;
}

struct LindbladComparison {
  std::vector<double> t, sz_pt, sz_lindblad;
  double max_infidelity = 0;
  RateFit fit_pt, fit_lindblad;
  double kappa = 0;
  int chi = 0;
  double pt_seconds = 0, evolve_seconds = 0, lindblad_seconds = 0;
};

// Qubit-resonator model from |up, 0>: PT against the Lindblad equation with
// kappa = 2 pi J(omega_r). Fidelity checked every `stride` steps.
inline LindbladComparison lindblad_compare(const SpectralDensity& sd, const SystemModel& m,
                                           const PtConfig& p, double T, int stride,
                                           double window_fraction = 1.0 / 3.0) {
  LindbladComparison c;
  c.kappa = 2 * PI * spectral_density(sd, m.omega_r);
  auto t0 = std::chrono::steady_clock::now();
  ProcessTensor pt = build_for(sd, m, p);
  c.pt_seconds = seconds_since(t0);
  c.chi = pt.chi;
  const int steps = static_cast<int>(std::floor(T / p.dt + 1e-9));
  const cmat rho0 = basis_state(m, 0, 0);
  const cmat sz = observable(m, "sigma_z");
  std::vector<cmat> ref;
  t0 = std::chrono::steady_clock::now();
  LindbladOptions lo;
  lo.keep_stride = 0;
  lo.on_sample = [&](double, const cmat& r) {
    c.sz_lindblad.push_back((sz * r).trace().real());
    if (c.sz_lindblad.size() % stride == 1 || stride == 1) ref.push_back(r);
  };
  lindblad_solve(m, c.kappa, rho0, steps * p.dt, p.dt, lo);
  c.lindblad_seconds = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  EvolveOptions eo;
  eo.keep_final = false;
  eo.on_sample = [&](int s, double t, const cmat& r) {
    c.t.push_back(t);
    c.sz_pt.push_back((sz * r).trace().real());
    if (s % stride == 0 && std::size_t(s / stride) < ref.size()) {
      const cmat rn = r / r.trace();
      c.max_infidelity = std::max(c.max_infidelity, 1 - fidelity(rn, ref[s / stride]));
    }
  };
  evolve(pt, m, rho0, steps, {}, eo);
  c.evolve_seconds = seconds_since(t0);
  c.fit_pt = fit_decay(c.t, c.sz_pt, window_fraction);
  c.fit_lindblad = fit_decay(c.t, c.sz_lindblad, window_fraction);
  return c;
}

struct DecayRun {
  std::vector<double> t, sz, n;
  RateFit fit;
  double nbar = 0;  // mean resonator population over the fit window
  int chi = 0;
  double pt_seconds = 0, evolve_seconds = 0;
};

// Qubit decay from |up, 0> with a prebuilt PT; sampled every `stride` steps.
inline DecayRun decay_run(const ProcessTensor& pt, const SystemModel& m, double T, int stride,
                          double window_fraction = 1.0 / 3.0) {
  DecayRun r;
  r.chi = pt.chi;
  const int steps = static_cast<int>(std::floor(T / pt.meta.dt + 1e-9));
  EvolveOptions eo;
  eo.record_stride = stride;
  eo.keep_final = false;
  auto t0 = std::chrono::steady_clock::now();
  auto tr = evolve(pt, m, basis_state(m, 0, 0), steps, observables(m, {"sigma_z", "n"}), eo);
  r.evolve_seconds = seconds_since(t0);
  r.t = tr.t;
  r.sz = tr.real("sigma_z");
  r.n = tr.real("n");
  r.fit = fit_decay(r.t, r.sz, window_fraction);
  double s = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < r.t.size(); ++i)
    if (r.t[i] >= r.fit.window[0]) s += r.n[i], ++cnt;
  r.nbar = cnt ? s / cnt : 0;
  return r;
}

}  // namespace ttipt
