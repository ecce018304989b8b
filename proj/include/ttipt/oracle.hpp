// oracle.hpp: independent reference solvers: brute-force influence
// contraction, exact Gaussian chain dynamics and a Lindblad integrator
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <chrono>
#include <limits>

#include "ttipt/linalg.hpp"

#include "ttipt/bath.hpp"
#include "ttipt/core.hpp"
#include "ttipt/influence.hpp"
#include "ttipt/models.hpp"
#include "ttipt/quadrature.hpp"

namespace ttipt {

// ---- brute-force influence functional ----

// F over indices (mu_0, ..., mu_n), mu_0 most significant, built as the
// explicit product of b(i-j)[mu_i, mu_j] over 0 <= j <= i <= n, i-j <= k_max.
inline std::vector<cplx> finite_influence_brute(const EtaTable& eta,
                                                const CouplingSpectrum& cs, int n) {
  const int d2 = cs.d() * cs.d();
  double size = std::pow(double(d2), n + 1);
  if (n < 0 || size > 1e7)
    throw ResourceError("brute-force influence tensor of " + std::to_string(size) +
                        " entries exceeds the 1e7 guard");
  std::vector<cmat> b;
  for (int k = 0; k <= std::min(n, eta.k_max); ++k) b.push_back(b_matrix(cs, eta.eta[k]));
  const std::size_t N = static_cast<std::size_t>(size);
  std::vector<cplx> F(N);
  std::vector<int> mu(n + 1);
  for (std::size_t idx = 0; idx < N; ++idx) {
    std::size_t r = idx;
    for (int i = n; i >= 0; --i) {
      mu[i] = static_cast<int>(r % d2);
      r /= d2;
    }
    cplx f = 1;
    for (int i = 0; i <= n; ++i)
      for (int j = std::max(0, i - eta.k_max); j <= i; ++j) f *= b[i - j](mu[i], mu[j]);
    F[idx] = f;
  }
  return F;
}

// Contract F (over n time indices) with per-step superoperators U_i
// (row-major Liouville index of a Q x d system in the coupling eigenbasis).
// Returns rho_n as a D x D matrix in the same basis.
inline cmat brute_force_evolve(const std::vector<cplx>& F, const std::vector<cmat>& U,
                               const cmat& rho0, int Q, int d) {
  const int n = static_cast<int>(U.size());
  const int D = Q * d, D2 = D * D, d2 = d * d;
  auto res = [&](int a) {
    const int al = a / D, ar = a % D;
    return (al % d) * d + (ar % d);
  };
  cvec r0(D2);
  for (int al = 0; al < D; ++al)
    for (int ar = 0; ar < D; ++ar) r0(al * D + ar) = rho0(al, ar);
  // phi[h][a]: history h of resonator indices before the current step
  std::vector<cvec> phi{U[0] * r0};
  for (int i = 1; i < n; ++i) {
    std::vector<cvec> next(phi.size() * d2, cvec::Zero(D2));
    for (std::size_t h = 0; h < phi.size(); ++h) {
      for (int p = 0; p < d2; ++p) {
        cvec masked = cvec::Zero(D2);
        for (int a = 0; a < D2; ++a)
          if (res(a) == p) masked(a) = phi[h](a);
        next[h * d2 + p] = U[i] * masked;
      }
    }
    phi.swap(next);
  }
  const std::size_t nh = phi.size();
  if (F.size() != nh * d2) throw DomainError("influence tensor size does not match step count");
  cvec out = cvec::Zero(D2);
  for (std::size_t h = 0; h < nh; ++h)
    for (int a = 0; a < D2; ++a) out(a) += F[h * d2 + res(a)] * phi[h](a);
  cmat rho(D, D);
  for (int al = 0; al < D; ++al)
    for (int ar = 0; ar < D; ++ar) rho(al, ar) = out(al * D + ar);
  return rho;
}

// ---- chain mapping ----

struct ChainMap {
  int M = 0;
  rvec freqs;          // omega_n, n = 0..M-1
  rvec hops;           // t_n between modes n and n+1, n = 0..M-2
  double sys_coupling = 0;
  double omega_max = 0;  // hard cutoff of the discretized measure, 0 = none
};

struct ChainOptions {
  // Hard cutoff of the measure. 0: exponential-cutoff densities use a
  // Gauss-Laguerre discretization on [0, inf), the flat density [0, 2 omega_r].
  double omega_max = 0;
  int nodes = 0;  // discretization size, 0: automatic
};

namespace detail {

// Recurrence coefficients (alpha_n, beta_n) of a discrete measure by the
// Givens-rotation Lanczos (RKPW) update; beta_0 is the total mass. O(N^2).
inline void rkpw(const rvec& x, const rvec& w, int M, rvec& alpha, rvec& beta) {
  const Eigen::Index N = x.size();
  rvec p0 = x, p1 = rvec::Zero(N);
  p1(0) = w(0);
  for (Eigen::Index n = 0; n + 1 < N; ++n) {
    double pn = w(n + 1), gam = 1, sig = 0, t = 0;
    const double lam = x(n + 1);
    for (Eigen::Index k = 0; k <= n + 1; ++k) {
      const double rho = p1(k) + pn, tmp = gam * rho;
      double tsig = sig;
      if (rho <= 0) {
        gam = 1;
        sig = 0;
      } else {
        gam = p1(k) / rho;
        sig = pn / rho;
      }
      const double tk = sig * (p0(k) - lam) - gam * t;
      p0(k) -= tk - t;
      t = tk;
      pn = sig <= 0 ? tsig * p1(k) : t * t / sig;
      p1(k) = tmp;
    }
  }
  alpha = p0.head(M);
  beta = p1.head(M);
}

// J(w) e^{w/wc} for the exponential-cutoff families.
inline double exp_cutoff_envelope(const SpectralDensity& s, double w) {
  if (s.kind == BathKind::Flat) throw DomainError("flat density has no exponential cutoff");
  double v = 2 * s.eta * w;
  if (s.kind == BathKind::OhmicNotch) {
    const double x = w - s.omega_q;
    v *= 1 - s.p * std::exp(-x * x * s.inv_w2);
  }
  return v;
}

// log of the n-point Gauss-Laguerre weight at node x:
// w = x / ((n+1)^2 L_{n+1}(x)^2), with L evaluated under running rescaling.
inline double laguerre_log_weight(double x, int n) {
  double l0 = 1, l1 = 1 - x, logscale = 0;
  for (int k = 1; k <= n; ++k) {
    const double l2 = ((2 * k + 1 - x) * l1 - k * l0) / (k + 1);
    l0 = l1;
    l1 = l2;
    const double a = std::abs(l1);
    if (a > 1e100 || (a < 1e-100 && a > 0)) {
      logscale += std::log(a);
      l0 /= a;
      l1 /= a;
    }
  }
  return std::log(x) - 2 * std::log(n + 1.0) - 2 * (std::log(std::abs(l1)) + logscale);
}

}  // namespace detail

inline ChainMap chain_map(const SpectralDensity& sd, int M, const ChainOptions& co = {}) {
  validate(sd);
  if (M < 1) throw DomainError("chain_map needs M >= 1");
  if (!std::isinf(sd.beta)) throw DomainError("chain mapping is implemented for beta = inf only");
  rvec x, w;
  double wmax = co.omega_max;
  if (wmax <= 0 && sd.kind == BathKind::Flat) wmax = 2 * sd.omega_r;
  if (wmax > 0) {
    // composite Gauss-Legendre, panels aligned with the density's features
    const int N = co.nodes > 0 ? co.nodes : std::max(400, 4 * M);
    std::vector<double> cuts{0.0};
    for (double f : detail::features(sd))
      if (f > 0 && f < wmax) cuts.push_back(f);
    cuts.push_back(wmax);
    std::sort(cuts.begin(), cuts.end());
    const int q = 20;
    const int panels = std::max<int>(static_cast<int>(cuts.size()) - 1, (N + q - 1) / q);
    std::vector<double> edges;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const int np = std::max(1, int(std::lround(panels * (cuts[i + 1] - cuts[i]) / wmax)));
      for (int j = 0; j < np; ++j) edges.push_back(cuts[i] + (cuts[i + 1] - cuts[i]) * j / np);
    }
    edges.push_back(wmax);
    auto gl = quad::gauss_legendre(q);
    std::vector<double> xs, ws;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double h = 0.5 * (edges[i + 1] - edges[i]), c = 0.5 * (edges[i + 1] + edges[i]);
      for (int j = 0; j < q; ++j) {
        const double om = c + h * gl.x(j);
        const double jw = spectral_density(sd, om) * gl.w(j) * h;
        if (jw > 0) {
          xs.push_back(om);
          ws.push_back(jw);
        }
      }
    }
    x = Eigen::Map<rvec>(xs.data(), xs.size());
    w = Eigen::Map<rvec>(ws.data(), ws.size());
  } else {
    // J(w) = e^{-w/wc} * envelope(w): Gauss-Laguerre in w/wc
    const int N = co.nodes > 0 ? co.nodes : std::max(2 * M + 20, 100);
    if (N > 1500) throw DomainError("Gauss-Laguerre chain discretization limited to 1500 nodes; set omega_max");
    auto gl = quad::gauss_laguerre(N);
    std::vector<double> xs, ws;
    for (int j = 0; j < N; ++j) {
      const double om = sd.omega_c * gl.x(j);
      const double env = detail::exp_cutoff_envelope(sd, om);
      if (!(env > 0)) continue;
      const double jw = std::exp(detail::laguerre_log_weight(gl.x(j), N) + std::log(env * sd.omega_c));
      if (jw > 0 && std::isfinite(jw)) {
        xs.push_back(om);
        ws.push_back(jw);
      }
    }
    x = Eigen::Map<rvec>(xs.data(), xs.size());
    w = Eigen::Map<rvec>(ws.data(), ws.size());
  }
  if (x.size() == 0 || w.sum() <= 0) throw DomainError("degenerate measure: J vanishes");
  if (x.size() < M + 1) throw DomainError("chain discretization has fewer nodes than M");
  rvec alpha, beta;
  detail::rkpw(x, w, M, alpha, beta);
  ChainMap cm;
  cm.M = M;
  cm.omega_max = wmax;
  cm.freqs = alpha;
  cm.sys_coupling = std::sqrt(beta(0));
  cm.hops.resize(M - 1);
  for (int n = 0; n + 1 < M; ++n) {
    if (!(beta(n + 1) > 0)) throw NumericalError("chain mapping lost positivity at n=" + std::to_string(n));
    cm.hops(n) = std::sqrt(beta(n + 1));
  }
  return cm;
}

// ---- exact Gaussian dynamics of the driven oscillator + chain ----

struct GaussianOptions {
  cplx alpha0 = 0;  // initial coherent amplitude of the resonator
  int batch = 256;  // output times per matrix product
};

struct GaussianTrajectory {
  std::vector<double> t, n, x;
  rvec normal_freqs;
  double horizon = 0;  // reflections from the chain end arrive after this time
  double wall_seconds = 0;
};

namespace detail {

// Symmetric eigensolve through LAPACK dsyevd; a is overwritten by vectors.
inline rvec sym_eig(rmat& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  rvec w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data());
  if (info != 0)
    throw NumericalError("symmetric eigensolver failed (info=" + std::to_string(info) + ")");
  return w;
}

// Response of z'' + nu^2 z = sin(wd t) from rest, and its derivative,
// written without cancellation near resonance.
inline void forced(double nu, double wd, double t, double& z, double& zd) {
  const double dl = nu - wd, sm = nu + wd;
  const double h = 0.5 * dl * t;
  const double sinc_half = std::abs(h) < 1e-8 ? 0.5 * t : std::sin(h) / dl;
  z = (-2 * std::cos(0.5 * sm * t) * sinc_half + std::sin(nu * t) / nu) / sm;
  zd = wd * 2 * std::sin(0.5 * sm * t) * sinc_half / sm;
}

}  // namespace detail

// Resonator x and n for H = w_r a^+a + eps sin(wd t)(a + a^+)
//   + (a + a^+) c0 (b_0 + b_0^+) + sum_n w_n b_n^+b_n + t_n (b_n^+ b_{n+1} + h.c.),
// bath chain in vacuum. Quadratures q = (a + a^+)/sqrt2, p = i(a^+ - a)/sqrt2.
inline GaussianTrajectory exact_gaussian_dynamics(const ChainMap& cm, const SystemModel& m,
                                                  double T, double dt_out,
                                                  const GaussianOptions& go = {}) {
  auto t0 = std::chrono::steady_clock::now();
  if (m.kind != ModelKind::Oscillator) throw DomainError("Gaussian oracle needs the oscillator model");
  if (!(T >= 0) || !(dt_out > 0)) throw DomainError("Gaussian oracle needs T >= 0, dt_out > 0");
  if (!(m.omega_r > 0)) throw DomainError("Gaussian oracle needs omega_r > 0");
  const int n = cm.M + 1;
  // K_p: tridiagonal, resonator isolated; Cholesky is lower bidiagonal
  rvec dg(n), od = rvec::Zero(n - 1);
  dg(0) = m.omega_r;
  dg.tail(cm.M) = cm.freqs;
  for (int i = 0; i + 1 < cm.M; ++i) od(i + 1) = cm.hops(i);
  rvec Ld(n), Ls = rvec::Zero(n - 1);  // L(i,i), L(i+1,i)
  for (int i = 0; i < n; ++i) {
    double v = dg(i);
    if (i > 0) {
      Ls(i - 1) = od(i - 1) / Ld(i - 1);
      v -= Ls(i - 1) * Ls(i - 1);
    }
    if (!(v > 0)) throw NumericalError("chain kinetic matrix is not positive definite");
    Ld(i) = std::sqrt(v);
  }
  // Omega^2 = L^T K_q L, K_q = K_p + 2 c0 (e0 e1^T + e1 e0^T)
  rmat L = rmat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    L(i, i) = Ld(i);
    if (i + 1 < n) L(i + 1, i) = Ls(i);
  }
  rmat Kq = rmat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Kq(i, i) = dg(i);
    if (i + 1 < n) Kq(i, i + 1) = Kq(i + 1, i) = od(i);
  }
  if (n > 1) Kq(0, 1) = Kq(1, 0) = 2 * cm.sys_coupling;
  rmat W = L.transpose() * Kq * L;
  Kq.resize(0, 0);
  rvec nu2 = detail::sym_eig(W);  // W now holds V
  if (nu2.minCoeff() <= 0)
    throw NumericalError("Bogoliubov problem is unstable (negative normal-mode frequency^2)");
  rvec nu = nu2.cwiseSqrt();
  const rvec g0 = Ld(0) * W.row(0).transpose();

  auto apply_L = [&](const rmat& X) {  // L * X
    rmat Y(X.rows(), X.cols());
    Y.row(0) = Ld(0) * X.row(0);
    for (int i = 1; i < n; ++i) Y.row(i) = Ld(i) * X.row(i) + Ls(i - 1) * X.row(i - 1);
    return Y;
  };
  auto solve_Lt = [&](rmat X) {  // L^{-T} X, upper bidiagonal back substitution
    X.row(n - 1) /= Ld(n - 1);
    for (int i = n - 2; i >= 0; --i) X.row(i) = (X.row(i) - Ls(i) * X.row(i + 1)) / Ld(i);
    return X;
  };

  GaussianTrajectory out;
  out.normal_freqs = nu;
  out.horizon = cm.M > 1 ? cm.M / cm.hops.maxCoeff() : std::numeric_limits<double>::infinity();
  const int nt = static_cast<int>(std::floor(T / dt_out + 1e-9)) + 1;
  const double qbar = std::sqrt(2.0) * go.alpha0.real(), pbar = std::sqrt(2.0) * go.alpha0.imag();
  const double amp = -std::sqrt(2.0) * m.drive.epsilon, wd = m.drive.omega_d;
  for (int b0 = 0; b0 < nt; b0 += go.batch) {
    const int nb = std::min(go.batch, nt - b0);
    rmat C(n, nb), S(n, nb), Cp(n, nb), Sp(n, nb);
    std::vector<double> qm(nb, 0.0), pm(nb, 0.0);
    for (int c = 0; c < nb; ++c) {
      const double t = (b0 + c) * dt_out;
      for (int j = 0; j < n; ++j) {
        const double cs = std::cos(nu(j) * t), sn = std::sin(nu(j) * t);
        C(j, c) = g0(j) * cs;
        S(j, c) = g0(j) * sn / nu(j);
        Cp(j, c) = -g0(j) * nu(j) * sn;
        Sp(j, c) = g0(j) * cs;
        // means: homogeneous part from the coherent start, particular from the drive
        const double v0 = W(0, j);
        double q = v0 * v0 * (cs * qbar + m.omega_r * sn / nu(j) * pbar);
        double pd = v0 * v0 * (-nu(j) * sn * qbar + m.omega_r * cs * pbar);
        if (amp != 0) {
          double z, zd;
          detail::forced(nu(j), wd, t, z, zd);
          q += g0(j) * amp * g0(j) * z;
          pd += g0(j) * amp * g0(j) * zd;
        }
        qm[c] += q;
        pm[c] += pd / m.omega_r;
      }
    }
    rmat VC = W * C, VS = W * S, VCp = W * Cp, VSp = W * Sp;
    rmat A = solve_Lt(VC), B = apply_L(VS), Ap = solve_Lt(VCp), Bp = apply_L(VSp);
    for (int c = 0; c < nb; ++c) {
      const double vq = 0.5 * (A.col(c).squaredNorm() + B.col(c).squaredNorm());
      const double vp = 0.5 * (Ap.col(c).squaredNorm() + Bp.col(c).squaredNorm()) /
                        (m.omega_r * m.omega_r);
      out.t.push_back((b0 + c) * dt_out);
      out.n.push_back(0.5 * (vq + qm[c] * qm[c] + vp + pm[c] * pm[c] - 1));
      out.x.push_back(std::sqrt(2.0) * qm[c]);
    }
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---- Lindblad master equation with resonator loss ----

enum class LindbladMethod { Auto, RungeKutta, Exponential };

struct LindbladOptions {
  LindbladMethod method = LindbladMethod::Auto;  // Auto: exponential when undriven
  double rtol = 1e-9;
  double atol = 1e-12;
  int max_steps = 50000000;
  int keep_stride = 1;  // store every keep_stride-th sample (and the last); 0: last only
  std::function<void(double, const cmat&)> on_sample;
};

struct LindbladResult {
  std::vector<double> t;
  std::vector<cmat> rho;  // model basis
  double max_trace_error = 0;
  double min_eigenvalue = 1;
  long steps = 0;
};

namespace detail {

inline cmat lindblad_rhs(const cmat& H, const cmat& a, const cmat& ad, const cmat& nop,
                         double kappa, const cmat& r) {
  cmat out = -I * (H * r - r * H);
  if (kappa != 0) out += kappa * (a * r * ad - 0.5 * (nop * r + r * nop));
  return out;
}

inline void lindblad_health(LindbladResult& res, const cmat& r) {
  res.max_trace_error = std::max(res.max_trace_error, std::abs(r.trace() - 1.0));
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
  res.min_eigenvalue = std::min(res.min_eigenvalue, es.eigenvalues()(0));
}

}  // namespace detail

// rho' = -i[H(t), rho] + kappa (a rho a^+ - {a^+a, rho}/2), a on the resonator.
inline LindbladResult lindblad_solve(const SystemModel& m, double kappa, const cmat& rho0,
                                     double T, double dt_out, const LindbladOptions& lo = {}) {
  if (!(kappa >= 0)) throw DomainError("kappa must be >= 0");
  if (!(T >= 0) || !(dt_out > 0)) throw DomainError("Lindblad solve needs T >= 0, dt_out > 0");
  const int D = m.dim();
  if (rho0.rows() != D || rho0.cols() != D) throw DomainError("initial state has wrong dimension");
  const cmat a = on_resonator(m, annihilation(m.N)), ad = a.adjoint(), nop = ad * a;
  const int nt = static_cast<int>(std::floor(T / dt_out + 1e-9)) + 1;
  LindbladResult res;
  bool expo = lo.method == LindbladMethod::Exponential ||
              (lo.method == LindbladMethod::Auto && m.drive.epsilon == 0);
  if (expo && m.drive.epsilon != 0)
    throw DomainError("exponential Lindblad propagation needs a time-independent generator");
  cmat r = rho0;
  auto emit = [&](int i, const cmat& x) {
    const double ti = i * dt_out;
    if (lo.on_sample) lo.on_sample(ti, x);
    detail::lindblad_health(res, x);
    if (i == nt - 1 || (lo.keep_stride > 0 && i % lo.keep_stride == 0)) {
      res.t.push_back(ti);
      res.rho.push_back(x);
    }
  };
  emit(0, r);
  if (expo) {
    // column-major vec: vec(A X B) = (B^T (x) A) vec X
    const cmat H = hamiltonian(m, 0), Id = cmat::Identity(D, D);
    cmat Lv = -I * (kron(Id, H) - kron(H.transpose(), Id));
    if (kappa != 0)
      Lv += kappa * (kron(a.conjugate(), a) - 0.5 * kron(Id, nop) - 0.5 * kron(nop.transpose(), Id));
    const cmat P = (Lv * dt_out).exp();
    cvec v = Eigen::Map<const cvec>(r.data(), D * D);
    for (int i = 1; i < nt; ++i) {
      v = P * v;
      r = Eigen::Map<const cmat>(v.data(), D, D);
      emit(i, r);
      ++res.steps;
    }
    return res;
  }
  // Dormand-Prince 5(4), dense output by landing on the sample times
  static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
  static constexpr double a21 = 1. / 5, a31 = 3. / 40, a32 = 9. / 40, a41 = 44. / 45,
                          a42 = -56. / 15, a43 = 32. / 9, a51 = 19372. / 6561,
                          a52 = -25360. / 2187, a53 = 64448. / 6561, a54 = -212. / 729,
                          a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                          a64 = 49. / 176, a65 = -5103. / 18656, b1 = 35. / 384,
                          b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                          b6 = 11. / 84, e1 = 71. / 57600, e3 = -71. / 16695,
                          e4 = 71. / 1920, e5 = -17253. / 339200, e6 = 22. / 525,
                          e7 = -1. / 40;
  auto f = [&](double t, const cmat& x) {
    return detail::lindblad_rhs(hamiltonian(m, t), a, ad, nop, kappa, x);
  };
  double t = 0, h = std::min(dt_out, 0.01);
  cmat k1 = f(t, r);
  for (int i = 1; i < nt; ++i) {
    const double target = i * dt_out;
    while (t < target - 1e-14 * std::max(1.0, target)) {
      if (++res.steps > lo.max_steps) throw NumericalError("Lindblad integrator exceeded max_steps");
      const double hh = std::min(h, target - t);
      cmat k2 = f(t + c2 * hh, r + hh * a21 * k1);
      cmat k3 = f(t + c3 * hh, r + hh * (a31 * k1 + a32 * k2));
      cmat k4 = f(t + c4 * hh, r + hh * (a41 * k1 + a42 * k2 + a43 * k3));
      cmat k5 = f(t + c5 * hh, r + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      cmat k6 = f(t + hh, r + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      cmat y = r + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      cmat k7 = f(t + hh, y);
      cmat err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double scale = lo.atol + lo.rtol * std::max(max_abs(r), max_abs(y));
      const double en = max_abs(err) / scale;
      if (!std::isfinite(en)) throw NumericalError("Lindblad integrator produced NaN");
      if (en <= 1) {
        t += hh;
        r = std::move(y);
        k1 = std::move(k7);
      }
      const double fac = en == 0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      // do not let the landing step shrink the next regular step
      h = (hh < h && en <= 1) ? std::max(h, hh * fac) : hh * fac;
      if (h < 1e-14 * std::max(1.0, t)) throw NumericalError("Lindblad step size underflow");
    }
    t = target;
    emit(i, r);
  }
  return res;
}

}  // namespace ttipt
