// influence.hpp: influence blocks b(k), their SVD compression and the gate
#pragma once

#include <cmath>
#include <string>

#include "ttipt/core.hpp"
#include "ttipt/linalg.hpp"

namespace ttipt {

// Eigen-decomposition of the coupling operator on the coupled factor.
struct CouplingSpectrum {
  rvec lambdas;  // ascending
  cmat basis;    // columns are eigenvectors in the model basis

  int d() const { return static_cast<int>(lambdas.size()); }
};

inline void validate(const CouplingSpectrum& cs) {
  const int d = cs.d();
  if (d < 1) throw DomainError("coupling spectrum is empty");
  if (cs.basis.rows() != d || cs.basis.cols() != d)
    throw DomainError("coupling basis must be d x d");
  for (int i = 1; i < d; ++i)
    if (cs.lambdas(i) < cs.lambdas(i - 1))
      throw DomainError("coupling eigenvalues must be sorted ascending");
}

// b[(ml,mr),(nl,nr)] = exp[-(l_ml - l_mr)(eta l_nl - conj(eta) l_nr)].
// Row index is the later time, column the earlier one; mu = ml*d + mr.
inline cmat b_matrix(const rvec& lam, cplx eta) {
  const int d = static_cast<int>(lam.size()), d2 = d * d;
  cmat b(d2, d2);
  for (int ml = 0; ml < d; ++ml)
    for (int mr = 0; mr < d; ++mr) {
      const double dl = lam(ml) - lam(mr);
      for (int nl = 0; nl < d; ++nl)
        for (int nr = 0; nr < d; ++nr)
          b(ml * d + mr, nl * d + nr) =
              std::exp(-dl * (eta * lam(nl) - std::conj(eta) * lam(nr)));
    }
  return b;
}

inline cmat b_matrix(const CouplingSpectrum& cs, cplx eta, bool /*is_k0*/ = false) {
  return b_matrix(cs.lambdas, eta);
}

struct CompressedGate {
  int k = 0;
  cmat U;       // d2 x alpha, vertical (later-time) leg
  rvec lambda;  // alpha
  cmat V;       // alpha x d2, horizontal (earlier-time) leg
  int alpha = 0;
};

inline CompressedGate compress_b(const cmat& b, double tol_inner, int k = 0) {
  if (!(tol_inner >= 0 && tol_inner < 1))
    throw DomainError("tol_inner must lie in [0, 1)");
  Svd f = svd(b);
  const Eigen::Index r = std::max<Eigen::Index>(1, keep_count(f.S, tol_inner));
  truncate(f, r);
  CompressedGate g;
  g.k = k;
  g.U = std::move(f.U);
  g.lambda = std::move(f.S);
  g.V = std::move(f.Vh);
  g.alpha = static_cast<int>(r);
  return g;
}

// ---- the four-leg gate ----
// Legs (a, b, mu, nu): a/b horizontal in/out, mu/nu vertical in/out.
// k > 0: delta_ab delta_mu,nu b[mu, b]; k = 0 adds delta_a,mu.
inline cplx tilde_b_element(const cmat& b, bool k0, int a, int bo, int mu,
                            int nu) {
  if (a != bo || mu != nu) return 0;
  if (k0 && a != mu) return 0;
  return b(mu, bo);
}

// Apply the gate to a two-leg input x(a, mu) (a slow), giving y(b, nu).
inline cmat apply_tilde_b(const cmat& b, bool k0, const cmat& x) {
  const Eigen::Index d2 = b.rows();
  cmat y = cmat::Zero(d2, d2);
  for (Eigen::Index h = 0; h < d2; ++h)
    for (Eigen::Index v = 0; v < d2; ++v)
      if (!k0 || h == v) y(h, v) = x(h, v) * b(v, h);
  return y;
}

// Dense materialization; element ((a*d2 + b)*d2 + mu)*d2 + nu.
inline std::vector<cplx> tilde_b_dense(const cmat& b, bool k0) {
  const Eigen::Index d2 = b.rows();
  const int d = static_cast<int>(std::lround(std::sqrt(double(d2))));
  if (d > 8)
    throw ResourceError("dense four-leg gate refused for d = " +
                        std::to_string(d) + " > 8");
  std::vector<cplx> g(static_cast<std::size_t>(d2 * d2 * d2 * d2));
  std::size_t n = 0;
  for (int a = 0; a < d2; ++a)
    for (int bo = 0; bo < d2; ++bo)
      for (int mu = 0; mu < d2; ++mu)
        for (int nu = 0; nu < d2; ++nu)
          g[n++] = tilde_b_element(b, k0, a, bo, mu, nu);
  return g;
}

}  // namespace ttipt
