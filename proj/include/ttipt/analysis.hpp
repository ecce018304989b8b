// analysis.hpp: rate fits, Purcell/Stark formulas, quadrature histograms
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ttipt/bath.hpp"
#include "ttipt/core.hpp"
#include "ttipt/models.hpp"

namespace ttipt {

// y(t) = amplitude * exp(-gamma t) + offset on [window[0], window[1]].
struct RateFit {
  double gamma = 0;
  double amplitude = 0;
  double offset = 0;
  double residual_rms = 0;
  double window[2] = {0, 0};
  int iterations = 0;
};

namespace detail {

struct ProjectedFit {
  double a = 0, c = 0, ss = 0;
};

// Best (a, c) for fixed gamma, times measured from the window start.
inline ProjectedFit project(const std::vector<double>& t, const std::vector<double>& y,
                            double g) {
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-g * t[i]);
    s11 += e * e;
    s12 += e;
    b1 += e * y[i];
    b2 += y[i];
  }
  s22 = double(n);
  ProjectedFit f;
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 1e-14 * s11 * s22)) {
    f.c = b2 / s22;
  } else {
    f.a = (s22 * b1 - s12 * b2) / det;
    f.c = (s11 * b2 - s12 * b1) / det;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.a * std::exp(-g * t[i]) - f.c;
    f.ss += r * r;
  }
  return f;
}

}  // namespace detail

// Least-squares fit over the trailing window_fraction of the series.
// Variable projection on a log grid of rates, then damped Gauss-Newton.
inline RateFit fit_decay(const std::vector<double>& t, const std::vector<double>& y,
                         double window_fraction = 1.0 / 3.0) {
  if (t.size() != y.size()) throw DomainError("fit_decay: t and y differ in length");
  if (!(window_fraction > 0 && window_fraction <= 1))
    throw DomainError("fit_decay: window fraction must be in (0, 1]");
  const std::size_t n = t.size();
  const std::size_t first =
      n - std::min<std::size_t>(n, std::size_t(std::ceil(window_fraction * double(n))));
  if (n - first < 10) throw DomainError("fit_decay: fewer than 10 samples in window");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(t[i]) || !std::isfinite(y[i]))
      throw DomainError("fit_decay: non-finite sample");
  const double t0 = t[first];
  std::vector<double> tw, yw;
  for (std::size_t i = first; i < n; ++i) {
    tw.push_back(t[i] - t0);
    yw.push_back(y[i]);
  }
  const double span = tw.back();
  if (!(span > 0)) throw DomainError("fit_decay: window has zero length");

  RateFit out;
  out.window[0] = t0;
  out.window[1] = t.back();

  double mean = 0, ymax = 0;
  for (double v : yw) mean += v, ymax = std::max(ymax, std::abs(v));
  mean /= double(yw.size());
  double var = 0;
  for (double v : yw) var += (v - mean) * (v - mean);
  if (var <= 1e-28 * std::max(1.0, ymax * ymax) * double(yw.size())) {
    out.offset = mean;
    out.residual_rms = std::sqrt(var / double(yw.size()));
    return out;
  }

  double best_g = 0, best_ss = std::numeric_limits<double>::infinity();
  for (double lg = std::log(1e-4 / span); lg <= std::log(200.0 / span); lg += 0.05) {
    const double g = std::exp(lg);
    const auto f = detail::project(tw, yw, g);
    if (f.ss < best_ss) best_ss = f.ss, best_g = g;
  }

  auto pf = detail::project(tw, yw, best_g);
  double a = pf.a, g = best_g, c = pf.c, ss = pf.ss;
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < 200; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < tw.size(); ++i) {
      const double e = std::exp(-g * tw[i]);
      const Eigen::Vector3d row(e, -a * tw[i] * e, 1.0);
      const double r = yw[i] - a * e - c;
      jtj += row * row.transpose();
      jtr += row * r;
    }
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::Matrix3d m = jtj;
      m.diagonal() *= 1 + lambda;
      const Eigen::Vector3d dp = m.ldlt().solve(jtr);
      const double na = a + dp(0), ng = g + dp(1), nc = c + dp(2);
      double nss = 0;
      for (std::size_t i = 0; i < tw.size(); ++i) {
        const double r = yw[i] - na * std::exp(-ng * tw[i]) - nc;
        nss += r * r;
      }
      if (std::isfinite(nss) && nss <= ss) {
        const double rel = std::abs(dp(1)) / std::max(std::abs(ng), 1e-300);
        a = na, g = ng, c = nc;
        const double drop = ss - nss;
        ss = nss;
        lambda = std::max(lambda / 10, 1e-12);
        stepped = true;
        if (rel < 1e-13 || drop <= 1e-30 * std::max(1.0, ss)) converged = true;
        break;
      }
      lambda *= 10;
    }
    if (!stepped) {
      converged = true;  // stalled at roundoff
      break;
    }
    if (converged) break;
  }
  out.iterations = it + 1;
  out.residual_rms = std::sqrt(ss / double(tw.size()));
  if (!converged || !std::isfinite(g))
    throw NumericalError("fit_decay did not converge (residual rms " +
                         std::to_string(out.residual_rms) + ", gamma " +
                         std::to_string(g) + ")");
  out.gamma = g;
  out.offset = c;
  out.amplitude = a * std::exp(g * t0);
  return out;
}

// Golden-rule rates. J_at_wq is the spectral density at the qubit frequency;
// the 2*pi turns it into an emission rate (the resonator then decays at
// 2*pi*J(omega_r)).
inline double purcell_rate_jc(double g, double delta, double J_at_wq) {
  if (delta == 0) throw DomainError("Purcell rate needs nonzero detuning");
  if (J_at_wq < 0) throw DomainError("spectral density must be nonnegative");
  return 2 * PI * g * g / (delta * delta) * J_at_wq;
}

inline double purcell_rate_rabi(double g, double omega_q, double omega_r, double J_at_wq) {
  if (omega_q == omega_r) throw DomainError("Purcell rate needs nonzero detuning");
  if (J_at_wq < 0) throw DomainError("spectral density must be nonnegative");
  const double den = omega_q * omega_q - omega_r * omega_r;
  return 2 * PI * 4 * g * g * omega_r * omega_r / (den * den) * J_at_wq;
}

// Dispersive shift g^2 / Delta.
inline double dispersive_shift(double g, double omega_q, double omega_r) {
  if (omega_q == omega_r) throw DomainError("dispersive shift needs nonzero detuning");
  return g * g / (omega_q - omega_r);
}

// gamma / gamma_0 with the qubit moved to omega_q + chi (2 nbar + 1).
inline double stark_shift_ratio(double omega_q, double omega_r, double g, double nbar,
                                const SpectralDensity& sd) {
  if (!(nbar >= 0)) throw DomainError("nbar must be >= 0");
  const double chi = dispersive_shift(g, omega_q, omega_r);
  const double w0 = omega_q + chi;
  const double wt = omega_q + chi * (2 * nbar + 1);
  if (wt == omega_r || w0 == omega_r)
    throw DomainError("Stark-shifted qubit is resonant with the resonator");
  if (wt < 0) throw DomainError("Stark-shifted qubit frequency is negative");
  const double j0 = spectral_density(sd, w0);
  if (!(j0 > 0)) throw DomainError("spectral density vanishes at the qubit frequency");
  const double a = w0 * w0 - omega_r * omega_r;
  const double b = wt * wt - omega_r * omega_r;
  return a * a * spectral_density(sd, wt) / (b * b * j0);
}

// Resonator block of a model-basis density matrix (qubit traced out).
inline cmat resonator_state(const SystemModel& m, const cmat& rho) {
  if (rho.rows() != m.dim() || rho.cols() != m.dim())
    throw DomainError("density matrix does not match the model dimension");
  if (m.qubit_dim() == 1) return rho;
  return rho.topLeftCorner(m.N, m.N) + rho.bottomRightCorner(m.N, m.N);
}

// <p|rho|p> for p = i(a - a^dagger) (vacuum variance 1), from the Fock
// expansion with Hermite functions.
inline std::vector<double> quadrature_distribution(const cmat& rho,
                                                   const std::vector<double>& grid) {
  if (rho.rows() != rho.cols() || rho.rows() < 1)
    throw DomainError("density matrix must be square");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw DomainError("quadrature grid must be sorted");
  const double tr = rho.trace().real();
  if (!(tr > 0)) throw DomainError("density matrix has non-positive trace");
  const int N = int(rho.rows());
  const cmat r = 0.5 * (rho + rho.adjoint()) / tr;
  std::vector<double> out(grid.size());
  cvec c(N);
  const double norm0 = std::pow(PI, -0.25);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid[k] / std::sqrt(2.0);
    double hm1 = 0, h = norm0 * std::exp(-0.5 * x * x);
    cplx ph = 1;
    for (int n = 0; n < N; ++n) {
      c(n) = ph * h;
      const double hn = std::sqrt(2.0 / (n + 1)) * x * h - std::sqrt(double(n) / (n + 1)) * hm1;
      hm1 = h;
      h = hn;
      ph *= I;
    }
    out[k] = std::max(0.0, (c.transpose() * r * c.conjugate()).value().real() / std::sqrt(2.0));
  }
  return out;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("trapezoid: size mismatch");
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Histogram overlap: integral of min(P_up, P_down) on the grid.
inline double readout_error(const std::vector<double>& grid, const std::vector<double>& up,
                            const std::vector<double>& down) {
  if (up.size() != grid.size() || down.size() != grid.size())
    throw DomainError("readout_error: histogram sizes differ from grid");
  std::vector<double> m(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m[i] = std::min(up[i], down[i]);
  return trapezoid(grid, m);
}

}  // namespace ttipt
