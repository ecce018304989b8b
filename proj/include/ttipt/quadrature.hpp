// quadrature.hpp: adaptive Gauss–Kronrod and Gauss rules via Golub–Welsch
#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "ttipt/core.hpp"

namespace ttipt::quad {

namespace detail {
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T, class F>
std::pair<T, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fc = f(c);
  T k = fc * wgk[7], g = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    T s = f(c - h * xgk[j]) + f(c + h * xgk[j]);
    k += s * wgk[j];
    if (j % 2 == 1) g += s * wg[j / 2];
  }
  return {k * h, std::abs((k - g) * h)};
}
}  // namespace detail

template <class T>
struct Result {
  T value{};
  double error = 0;
  bool converged = true;
};

// Globally adaptive G7K15 on each listed segment [pts[i], pts[i+1]].
template <class T, class F>
Result<T> integrate(F&& f, const std::vector<double>& pts, double rel_tol,
                    double abs_tol = 0, int max_segments = 200000) {
  struct Seg {
    double a, b;
    T v;
    double e;
    bool operator<(const Seg& o) const { return e < o.e; }
  };
  std::priority_queue<Seg> q;
  Result<T> r;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto [v, e] = detail::gk15<T>(f, pts[i], pts[i + 1]);
    q.push({pts[i], pts[i + 1], v, e});
    r.value += v;
    r.error += e;
  }
  int n = static_cast<int>(q.size());
  while (!q.empty() && r.error > std::max(abs_tol, rel_tol * std::abs(r.value))) {
    if (n >= max_segments) {
      r.converged = false;
      break;
    }
    Seg s = q.top();
    q.pop();
    const double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b)) {
      r.converged = false;
      break;
    }
    auto [v1, e1] = detail::gk15<T>(f, s.a, m);
    auto [v2, e2] = detail::gk15<T>(f, m, s.b);
    r.value += v1 + v2 - s.v;
    r.error += e1 + e2 - s.e;
    q.push({s.a, m, v1, e1});
    q.push({m, s.b, v2, e2});
    ++n;
  }
  r.error = 0;
  T total{};
  while (!q.empty()) {
    total += q.top().v;
    r.error += q.top().e;
    q.pop();
  }
  r.value = total;
  return r;
}

template <class T, class F>
Result<T> integrate(F&& f, double a, double b, double rel_tol,
                    double abs_tol = 0) {
  return integrate<T>(std::forward<F>(f), std::vector<double>{a, b}, rel_tol,
                      abs_tol);
}

// Breakpoints splitting [a, b] into pieces no longer than h, plus extras.
inline std::vector<double> breakpoints(double a, double b, double h,
                                       std::vector<double> extra = {}) {
  std::vector<double> p;
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
  for (int i = 0; i <= n; ++i) p.push_back(a + (b - a) * i / n);
  for (double x : extra)
    if (x > a && x < b) p.push_back(x);
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

struct Rule {
  rvec x, w;
};

// Gauss rule from a Jacobi matrix (diag a, off-diag b) and total mass mu0.
inline Rule golub_welsch(const rvec& a, const rvec& b, double mu0) {
  const Eigen::Index n = a.size();
  rmat J = rmat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    J(i, i) = a(i);
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = b(i);
  }
  Eigen::SelfAdjointEigenSolver<rmat> es(J);
  if (es.info() != Eigen::Success)
    throw NumericalError("Golub-Welsch eigensolver failed");
  Rule r;
  r.x = es.eigenvalues();
  r.w = mu0 * es.eigenvectors().row(0).array().square().transpose();
  return r;
}

// n-point Gauss–Legendre on [lo, hi].
inline Rule gauss_legendre(int n, double lo = -1, double hi = 1) {
  rvec a = rvec::Zero(n), b(std::max(0, n - 1));
  for (int k = 1; k < n; ++k) b(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Rule r = golub_welsch(a, b, 2.0);
  r.x = (0.5 * (hi - lo)) * (r.x.array() + 1.0) + lo;
  r.w *= 0.5 * (hi - lo);
  return r;
}

// n-point generalized Gauss–Laguerre for weight x^alpha e^{-x} on [0, inf).
inline Rule gauss_laguerre(int n, double alpha = 0) {
  rvec a(n), b(std::max(0, n - 1));
  for (int k = 0; k < n; ++k) a(k) = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) b(k - 1) = std::sqrt(k * (k + alpha));
  return golub_welsch(a, b, std::tgamma(alpha + 1.0));
}

}  // namespace ttipt::quad
