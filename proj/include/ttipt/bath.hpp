// bath.hpp: spectral densities, correlation function and η memory kernel
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "ttipt/core.hpp"
#include "ttipt/quadrature.hpp"

namespace ttipt {

enum class BathKind { Ohmic, OhmicNotch, Flat };

inline const char* to_string(BathKind k) {
  switch (k) {
    case BathKind::Ohmic: return "ohmic";
    case BathKind::OhmicNotch: return "ohmic_notch";
    case BathKind::Flat: return "flat";
  }
  return "?";
}

inline BathKind bath_kind_from(const std::string& s) {
  if (s == "ohmic") return BathKind::Ohmic;
  if (s == "ohmic_notch" || s == "notch") return BathKind::OhmicNotch;
  if (s == "flat") return BathKind::Flat;
  throw DomainError("unknown bath kind '" + s + "'");
}

struct SpectralDensity {
  BathKind kind = BathKind::Ohmic;
  double eta = 0;
  double omega_c = 1;
  double p = 0;          // notch depth
  double inv_w2 = 150;   // 1/w^2 of the notch
  double omega_q = 0;    // notch centre
  double omega_r = 1;    // flat-band centre
  double beta = std::numeric_limits<double>::infinity();

  bool zero_temperature() const { return std::isinf(beta); }
};

inline SpectralDensity ohmic(double eta, double omega_c) {
  SpectralDensity s;
  s.eta = eta;
  s.omega_c = omega_c;
  return s;
}

inline SpectralDensity ohmic_notch(double eta, double omega_c, double p,
                                   double omega_q, double inv_w2 = 150) {
  SpectralDensity s = ohmic(eta, omega_c);
  s.kind = BathKind::OhmicNotch;
  s.p = p;
  s.omega_q = omega_q;
  s.inv_w2 = inv_w2;
  return s;
}

inline SpectralDensity flat(double eta, double omega_r) {
  SpectralDensity s;
  s.kind = BathKind::Flat;
  s.eta = eta;
  s.omega_r = omega_r;
  return s;
}

inline void validate(const SpectralDensity& s) {
  if (!(s.eta >= 0)) throw DomainError("bath eta must be >= 0");
  if (s.kind != BathKind::Flat && !(s.omega_c > 0))
    throw DomainError("bath omega_c must be > 0");
  if (s.kind == BathKind::OhmicNotch && !(s.p >= 0 && s.p <= 1))
    throw DomainError("notch depth p must lie in [0, 1]");
  if (s.kind == BathKind::OhmicNotch && !(s.inv_w2 > 0))
    throw DomainError("notch inv_w2 must be > 0");
  if (s.kind == BathKind::Flat && !(s.omega_r > 0))
    throw DomainError("flat bath omega_r must be > 0");
  if (!(s.beta > 0)) throw DomainError("beta must be > 0 (inf allowed)");
}

inline double spectral_density(const SpectralDensity& s, double w) {
  if (w < 0 || std::isnan(w))
    throw DomainError("spectral density requested at negative frequency");
  switch (s.kind) {
    case BathKind::Ohmic:
      return 2 * s.eta * w * std::exp(-w / s.omega_c);
    case BathKind::OhmicNotch: {
      const double x = w - s.omega_q;
      return 2 * s.eta * w * std::exp(-w / s.omega_c) *
             (1 - s.p * std::exp(-x * x * s.inv_w2));
    }
    case BathKind::Flat: {
      if (w > 2 * s.omega_r) return 0;
      const double x = w - s.omega_r;
      if (x == 0) return s.eta * s.omega_r;
      const double e = 1 - s.omega_r * s.omega_r / (x * x);
      return s.eta * s.omega_r * (1 - std::exp(e));
    }
  }
  return 0;
}

// Frequency beyond which J is below machine precision relative to its scale.
inline double upper_cutoff(const SpectralDensity& s) {
  if (s.kind == BathKind::Flat) return 2 * s.omega_r;
  return s.omega_c * std::log(1 / std::numeric_limits<double>::epsilon());
}

// coth(beta w / 2), 1 at zero temperature.
inline double coth_half(double beta, double w) {
  if (std::isinf(beta)) return 1;
  const double x = 0.5 * beta * w;
  if (x < 1e-4) return 1 / x + x / 3;
  return 1 / std::tanh(x);
}

namespace detail {
inline std::vector<double> features(const SpectralDensity& s) {
  std::vector<double> f;
  if (s.kind == BathKind::OhmicNotch && s.p > 0) {
    const double w = 1 / std::sqrt(s.inv_w2);
    for (double m : {-8., -4., -2., -1., 0., 1., 2., 4., 8.})
      f.push_back(s.omega_q + m * w);
  }
  if (s.kind == BathKind::Flat)
    for (double m : {0.5, 0.8, 1.0, 1.2, 1.5}) f.push_back(m * s.omega_r);
  return f;
}

inline std::vector<double> grid(const SpectralDensity& s, double period_t) {
  const double wmax = upper_cutoff(s);
  double h = wmax / 16;
  if (period_t > 0) h = std::min(h, 2 * PI / period_t);
  return quad::breakpoints(0, wmax, h, features(s));
}

// Integral of J(w) * |weight(w)| used as an absolute error scale.
template <class Wt>
double scale(const SpectralDensity& s, Wt&& weight) {
  auto r = quad::integrate<double>(
      [&](double w) { return spectral_density(s, w) * std::abs(weight(w)); },
      grid(s, 0), 1e-8);
  return r.value;
}

template <class F>
cplx integrate_checked(F&& f, const std::vector<double>& pts, double rel_tol,
                       double abs_tol, const char* what,
                       double* err = nullptr) {
  auto r = quad::integrate<cplx>(f, pts, rel_tol, abs_tol);
  if (!r.converged)
    throw NumericalError(std::string(what) +
                         ": quadrature did not converge, error bound " +
                         std::to_string(r.error));
  if (err) *err = r.error;
  return r.value;
}
}  // namespace detail

// C(t) = int_0^inf J(w) [coth(beta w/2) cos(wt) - i sin(wt)] dw.
inline cplx correlation_function(const SpectralDensity& s, double t,
                                 double rel_tol = 1e-10) {
  if (!std::isfinite(t)) throw DomainError("correlation time must be finite");
  if (s.eta == 0) return 0;
  const double b = s.beta;
  const double sc =
      detail::scale(s, [&](double w) { return coth_half(b, w); });
  auto f = [&](double w) {
    const double j = spectral_density(s, w);
    return cplx(j * coth_half(b, w) * std::cos(w * t), -j * std::sin(w * t));
  };
  return detail::integrate_checked(f, detail::grid(s, std::abs(t)), rel_tol,
                                   rel_tol * sc, "correlation function");
}

struct EtaTable {
  double dt = 0;
  int k_max = 0;
  std::vector<cplx> eta;
  std::vector<double> err;  // quadrature error estimates
  double rel_tol = 1e-10;
};

// (1 - cos x)/w^2 and (x - sin x)/w^2 with x = w dt, stable near w = 0.
namespace detail {
inline double one_minus_cos_over(double w, double dt) {
  const double s = std::sin(0.5 * w * dt);
  if (w * dt < 1e-8) return 0.5 * dt * dt;
  return 2 * s * s / (w * w);
}
inline double x_minus_sin_over(double w, double dt) {
  const double x = w * dt;
  if (x < 1e-2) {
    const double x2 = x * x;
    return dt * dt * x / 6 * (1 - x2 / 20 * (1 - x2 / 42));
  }
  return (x - std::sin(x)) / (w * w);
}
}  // namespace detail

// η_k as single frequency integrals; the time-cell integrals of e^{-iwt} are
// done in closed form.
inline EtaTable eta_table(const SpectralDensity& s, double dt, int k_max,
                          double rel_tol = 1e-10) {
  if (!(dt > 0)) throw DomainError("eta table needs dt > 0");
  if (k_max < 0) throw DomainError("eta table needs k_max >= 0");
  validate(s);
  EtaTable t;
  t.dt = dt;
  t.k_max = k_max;
  t.rel_tol = rel_tol;
  t.eta.assign(k_max + 1, cplx(0));
  t.err.assign(k_max + 1, 0.0);
  if (s.eta == 0) return t;
  const double b = s.beta;
  const double sc = detail::scale(s, [&](double w) {
    return 2 * detail::one_minus_cos_over(w, dt) * coth_half(b, w);
  });
  {
    auto f = [&](double w) {
      const double j = spectral_density(s, w);
      return cplx(j * coth_half(b, w) * detail::one_minus_cos_over(w, dt),
                  -j * detail::x_minus_sin_over(w, dt));
    };
    t.eta[0] = detail::integrate_checked(f, detail::grid(s, dt), rel_tol,
                                         rel_tol * sc, "eta_0", &t.err[0]);
  }
  for (int k = 1; k <= k_max; ++k) {
    const double tk = k * dt;
    auto f = [&](double w) {
      const double j = 2 * spectral_density(s, w) *
                       detail::one_minus_cos_over(w, dt);
      return cplx(j * coth_half(b, w) * std::cos(w * tk),
                  -j * std::sin(w * tk));
    };
    t.eta[k] = detail::integrate_checked(f, detail::grid(s, tk + dt), rel_tol,
                                         rel_tol * sc, "eta_k", &t.err[k]);
  }
  return t;
}

// η_k from a correlation function: hat-weighted integrals of C in time.
inline EtaTable eta_table_from_correlation(
    const std::function<cplx(double)>& C, double dt, int k_max,
    double rel_tol = 1e-10) {
  if (!(dt > 0)) throw DomainError("eta table needs dt > 0");
  if (k_max < 0) throw DomainError("eta table needs k_max >= 0");
  EtaTable t;
  t.dt = dt;
  t.k_max = k_max;
  t.rel_tol = rel_tol;
  t.eta.resize(k_max + 1);
  t.err.resize(k_max + 1);
  const double sc = std::abs(C(0)) * dt * dt;
  auto r0 = quad::integrate<cplx>(
      [&](double u) { return (dt - u) * C(u); }, 0, dt, rel_tol, rel_tol * sc);
  t.eta[0] = r0.value;
  t.err[0] = r0.error;
  for (int k = 1; k <= k_max; ++k) {
    auto f = [&](double u) { return (dt - std::abs(u)) * C(k * dt + u); };
    auto r = quad::integrate<cplx>(f, std::vector<double>{-dt, 0, dt},
                                   rel_tol, rel_tol * sc);
    if (!r.converged)
      throw NumericalError("eta_k: quadrature did not converge, error bound " +
                           std::to_string(r.error));
    t.eta[k] = r.value;
    t.err[k] = r.error;
  }
  return t;
}

}  // namespace ttipt
