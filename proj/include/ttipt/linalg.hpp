// linalg.hpp: thin LAPACK SVD wrapper and truncation helpers
#pragma once

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <string>

#include "ttipt/core.hpp"

namespace ttipt {

struct Svd {
  cmat U;   // m x r
  rvec S;   // r, descending
  cmat Vh;  // r x n
};

// Thin SVD of a column-major matrix. The input is consumed.
inline Svd svd(cmat a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int r = std::min(m, n);
  Svd out;
  out.U.resize(m, r);
  out.S.resize(r);
  out.Vh.resize(r, n);
  if (r == 0) return out;
  cmat keep;
  bool fallback_ready = m * static_cast<long>(n) <= (1L << 26);
  if (fallback_ready) keep = a;
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', m, n, a.data(), m,
                                   out.S.data(), out.U.data(), m,
                                   out.Vh.data(), r);
  if (info > 0 && fallback_ready) {
    std::vector<double> superb(std::max<lapack_int>(1, r - 1));
    info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, keep.data(), m,
                          out.S.data(), out.U.data(), m, out.Vh.data(), r,
                          superb.data());
  }
  if (info != 0)
    throw NumericalError("SVD failed (LAPACK info=" + std::to_string(info) +
                         ") on a " + std::to_string(m) + "x" +
                         std::to_string(n) + " matrix");
  for (lapack_int i = 0; i < r; ++i)
    if (!std::isfinite(out.S(i)))
      throw NumericalError("SVD produced non-finite singular values");
  return out;
}

// Number of singular values kept: s_i >= tol * s_0 and s_i > 0.
inline Eigen::Index keep_count(const rvec& s, double tol) {
  if (s.size() == 0 || !(s(0) > 0)) return 0;
  const double thr = tol * s(0);
  Eigen::Index n = 0;
  while (n < s.size() && s(n) >= thr && s(n) > 0) ++n;
  return n;
}

inline void truncate(Svd& f, Eigen::Index r) {
  f.U.conservativeResize(Eigen::NoChange, r);
  f.S.conservativeResize(r);
  f.Vh.conservativeResize(r, Eigen::NoChange);
}

inline double max_abs(const cmat& a) {
  return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace ttipt
