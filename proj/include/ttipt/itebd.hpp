// itebd.hpp: two-site infinite MPS, baseline and enhanced gate steps,
// and the TTI process-tensor build
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "ttipt/bath.hpp"
#include "ttipt/core.hpp"
#include "ttipt/influence.hpp"
#include "ttipt/linalg.hpp"

namespace ttipt {

enum class Variant { Baseline, Enhanced };

inline const char* to_string(Variant v) {
  return v == Variant::Baseline ? "baseline" : "enhanced";
}
inline Variant variant_from(const std::string& s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "enhanced") return Variant::Enhanced;
  throw DomainError("unknown variant '" + s + "'");
}

// Three-leg tensor (l, p, r), element l + dl*(p + dp*r). The physical leg p
// is a reduced index mapped to the d^2 Liouville leg by the carried map C
// (d^2 x dp); an empty C means p is already the Liouville index.
struct Site {
  int dl = 1, dp = 1, dr = 1;
  cvec data;
  cmat C;

  cplx& at(int l, int p, int r) { return data[l + dl * (p + dp * r)]; }
  cplx at(int l, int p, int r) const { return data[l + dl * (p + dp * r)]; }
};

struct CanonicalPair {
  Site A;              // (chi_l, ., chi_m): vertical leg
  Site B;              // (chi_m, ., chi_r): horizontal leg
  rvec lambda_left;    // weights on A's left bond
  rvec lambda_mid;     // weights between A and B
  int d2 = 1;

  int chi() const { return A.dl; }
};

struct StepInfo {
  int k = 0;
  int chi = 1;
  int alpha = 0, beta1 = 0, beta2 = 0;
  double seconds = 0;
  std::size_t peak = 0;
  double log_sigma1 = 0;
  rvec sigma;  // normalized kept singular values
};

struct StepOptions {
  double eps_rel = 1e-7;
  double tol_inner = 1e-7;
  int max_chi = 4096;
  bool keep_sigma = false;
  bool dense_gate = false;  // baseline: contract the full four-leg gate
};

// Product state with all-ones physical entries.
inline CanonicalPair product_pair(int d) {
  CanonicalPair p;
  p.d2 = d * d;
  for (Site* s : {&p.A, &p.B}) {
    s->dl = s->dp = s->dr = 1;
    s->data = cvec::Constant(1, cplx(d));
    s->C = cmat::Constant(p.d2, 1, cplx(1.0 / d));
  }
  p.lambda_left = rvec::Ones(1);
  p.lambda_mid = rvec::Ones(1);
  return p;
}

namespace detail {

// Site with the carried map applied: physical leg is the Liouville index.
inline Site expand(const Site& s, int d2, PeakCounter& pc) {
  if (s.C.size() == 0) return s;
  Site o;
  o.dl = s.dl;
  o.dp = d2;
  o.dr = s.dr;
  o.data.resize(std::size_t(s.dl) * d2 * s.dr);
  pc.record(o.data.size(), "expanded site");
  for (int r = 0; r < s.dr; ++r) {
    Eigen::Map<const cmat> in(s.data.data() + std::size_t(s.dl) * s.dp * r,
                              s.dl, s.dp);
    Eigen::Map<cmat> out(o.data.data() + std::size_t(s.dl) * d2 * r, s.dl, d2);
    out.noalias() = in * s.C.transpose();
  }
  return o;
}

// Physical-leg-major view: M[p, l + dl*r].
inline cmat phys_major(const Site& s) {
  cmat m(s.dp, std::size_t(s.dl) * s.dr);
  for (int r = 0; r < s.dr; ++r)
    for (int p = 0; p < s.dp; ++p)
      for (int l = 0; l < s.dl; ++l) m(p, l + s.dl * r) = s.at(l, p, r);
  return m;
}

inline void check_chi(Eigen::Index chi, const StepOptions& o, int k) {
  if (chi > o.max_chi)
    throw ResourceError("bond dimension " + std::to_string(chi) +
                        " exceeds cap " + std::to_string(o.max_chi) +
                        " at gate k=" + std::to_string(k));
}

// Truncate the central SVD and assemble the next pair.
// M = row-scaled Mraw; rows (l, h'), cols (v', r); h' has dimension ph,
// v' has dimension pv.
inline CanonicalPair finish_step(const CanonicalPair& in, const cmat& Mraw,
                                 cmat M, int ph, int pv, cmat CA, cmat CB,
                                 const StepOptions& o, int k, StepInfo& info) {
  const int chil = in.A.dl, chir = in.B.dr;
  Svd f = svd(std::move(M));
  Eigen::Index n = std::max<Eigen::Index>(1, keep_count(f.S, o.eps_rel));
  check_chi(n, o, k);
  truncate(f, n);
  const double s1 = f.S(0);
  if (!(s1 > 0)) throw NumericalError("vanishing two-site block at k=" + std::to_string(k));
  CanonicalPair out;
  out.d2 = in.d2;
  out.lambda_left = f.S / s1;
  out.lambda_mid = in.lambda_left;
  out.A.dl = static_cast<int>(n);
  out.A.dp = pv;
  out.A.dr = chir;
  out.A.data = Eigen::Map<const cvec>(f.Vh.data(), f.Vh.size());
  out.A.C = std::move(CA);
  cmat Bm = Mraw * f.Vh.adjoint() / s1;
  out.B.dl = chil;
  out.B.dp = ph;
  out.B.dr = static_cast<int>(n);
  out.B.data = Eigen::Map<const cvec>(Bm.data(), Bm.size());
  out.B.C = std::move(CB);
  info.chi = static_cast<int>(n);
  info.log_sigma1 = std::log(s1);
  if (o.keep_sigma) info.sigma = out.lambda_left;
  return out;
}

// Mraw[l, x; y, r] = sum_{p,q} G[(x, y), (p, q)] P[l, p; q, r] with the
// four-leg gate G generated in row blocks (one y per block): chi^2 d^8 work.
inline void dense_gate_contract(const cmat& b, const cmat& P, int chil, int chir, int d2,
                                cmat& Mraw, PeakCounter& pc) {
  const std::size_t D4 = std::size_t(d2) * d2, cc = std::size_t(chil) * chir;
  cmat Pm(D4, cc);
  pc.record(Pm.size(), "baseline reshaped block");
  for (int r = 0; r < chir; ++r)
    for (int q = 0; q < d2; ++q)
      for (int p = 0; p < d2; ++p)
        for (int l = 0; l < chil; ++l)
          Pm(p + std::size_t(d2) * q, l + std::size_t(chil) * r) =
              P(l + std::size_t(chil) * p, q + std::size_t(d2) * r);
  cmat G(d2, D4), Y(d2, cc);
  pc.record(G.size(), "dense gate block");
  for (int y = 0; y < d2; ++y) {
    for (int q = 0; q < d2; ++q)
      for (int p = 0; p < d2; ++p)
        for (int x = 0; x < d2; ++x)
          G(x, p + std::size_t(d2) * q) = tilde_b_element(b, false, q, x, p, y);
    Y.noalias() = G * Pm;
    for (int r = 0; r < chir; ++r)
      for (int x = 0; x < d2; ++x)
        for (int l = 0; l < chil; ++l)
          Mraw(l + std::size_t(chil) * x, y + std::size_t(d2) * r) = Y(x, l + std::size_t(chil) * r);
  }
}

}  // namespace detail

// Standard iTEBD step: contract, apply the diagonal gate, swap, one SVD of
// the (chi d^2) x (d^2 chi) block.
inline CanonicalPair itebd_step_baseline(const CanonicalPair& in, const cmat& b,
                                         const StepOptions& o, int k,
                                         PeakCounter& pc, StepInfo* info_out = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  const int d2 = in.d2;
  if (b.rows() != d2 || b.cols() != d2)
    throw DomainError("gate physical dimension mismatch");
  StepInfo info;
  info.k = k;
  info.alpha = d2;
  info.beta1 = info.beta2 = d2;
  PeakCounter local = pc;
  local.peak = 0;
  Site A = detail::expand(in.A, d2, local);
  Site B = detail::expand(in.B, d2, local);
  const int chil = A.dl, chim = A.dr, chir = B.dr;
  const std::size_t big = std::size_t(chil) * d2 * d2 * chir;
  local.record(big, "baseline two-site block");
  cmat P = Eigen::Map<const cmat>(A.data.data(), std::size_t(chil) * d2, chim) *
           Eigen::Map<const cmat>(B.data.data(), chim, std::size_t(d2) * chir);
  cmat Mraw(std::size_t(chil) * d2, std::size_t(d2) * chir);
  if (o.dense_gate) {
    detail::dense_gate_contract(b, P, chil, chir, d2, Mraw, local);
  } else {
    for (int r = 0; r < chir; ++r)
      for (int h = 0; h < d2; ++h)
        for (int v = 0; v < d2; ++v) {
          const cplx g = b(v, h);
          const cplx* src = P.data() + (std::size_t(h) + std::size_t(d2) * r) * P.rows() +
                            std::size_t(chil) * v;
          cplx* dst = Mraw.data() + (std::size_t(v) + std::size_t(d2) * r) * Mraw.rows() +
                      std::size_t(chil) * h;
          for (int l = 0; l < chil; ++l) dst[l] = src[l] * g;
        }
  }
  P.resize(0, 0);
  cmat M = Mraw;
  for (Eigen::Index c = 0; c < M.cols(); ++c)
    for (int h = 0; h < d2; ++h)
      M.col(c).segment(std::size_t(chil) * h, chil).array() *= in.lambda_left.array();
  CanonicalPair out = detail::finish_step(in, Mraw, std::move(M), d2, d2, cmat(),
                                          cmat(), o, k, info);
  info.peak = local.peak;
  pc.peak = std::max(pc.peak, local.peak);
  info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (info_out) *info_out = info;
  return out;
}

// Enhanced step: compressed gate, partial SVDs on both d^2 legs, central SVD
// of the (chi beta_h) x (beta_v chi) block.
inline CanonicalPair itebd_step_enhanced(const CanonicalPair& in,
                                         const CompressedGate& cg,
                                         const StepOptions& o, PeakCounter& pc,
                                         StepInfo* info_out = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  const int d2 = in.d2;
  if (cg.U.rows() != d2 || cg.V.cols() != d2)
    throw DomainError("compressed gate physical dimension mismatch");
  const int k = cg.k, al = cg.alpha;
  StepInfo info;
  info.k = k;
  info.alpha = al;
  PeakCounter local = pc;
  local.peak = 0;
  const int chil = in.A.dl, chim = in.A.dr, chir = in.B.dr;

  // vertical side: theta_v[v, i + al*(l + chil*m)]
  cmat Av = detail::phys_major(in.A);
  if (in.A.C.size()) Av = in.A.C * Av;
  const std::size_t ncv = std::size_t(al) * chil * chim;
  local.record(std::size_t(d2) * ncv, "theta_v");
  cmat thv(d2, ncv);
  for (int m = 0; m < chim; ++m)
    for (int l = 0; l < chil; ++l)
      for (int i = 0; i < al; ++i)
        thv.col(i + std::size_t(al) * (l + std::size_t(chil) * m)) =
            cg.U.col(i).cwiseProduct(Av.col(l + std::size_t(chil) * m));
  Av.resize(0, 0);
  cmat Uv, Vv, Vv_raw;
  {
    cmat w = thv;
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      w.col(c) *= in.lambda_left((c / al) % chil);
    Svd f = svd(std::move(w));
    Eigen::Index n = std::max<Eigen::Index>(1, keep_count(f.S, o.tol_inner));
    truncate(f, n);
    Uv = std::move(f.U);
    Vv_raw = Uv.adjoint() * thv;
    Vv = Vv_raw;
    for (Eigen::Index c = 0; c < Vv.cols(); ++c)
      Vv.col(c) *= in.lambda_left((c / al) % chil);
  }
  thv.resize(0, 0);
  const int b1 = static_cast<int>(Uv.cols());

  // horizontal side: theta_h[h, i + al*(m + chim*r)]
  cmat Bh = detail::phys_major(in.B);
  if (in.B.C.size()) Bh = in.B.C * Bh;
  const std::size_t nch = std::size_t(al) * chim * chir;
  local.record(std::size_t(d2) * nch, "theta_h");
  cmat thh(d2, nch);
  for (int r = 0; r < chir; ++r)
    for (int m = 0; m < chim; ++m)
      for (int i = 0; i < al; ++i)
        thh.col(i + std::size_t(al) * (m + std::size_t(chim) * r)) =
            (cg.V.row(i).transpose() * cg.lambda(i))
                .cwiseProduct(Bh.col(m + std::size_t(chim) * r));
  Bh.resize(0, 0);
  cmat Uh, Vh;
  {
    Svd f = svd(thh);
    Eigen::Index n = std::max<Eigen::Index>(1, keep_count(f.S, o.tol_inner));
    truncate(f, n);
    Uh = std::move(f.U);
    Vh = f.S.cast<cplx>().asDiagonal() * f.Vh;
  }
  thh.resize(0, 0);
  const int b2 = static_cast<int>(Uh.cols());
  info.beta1 = b2;  // horizontal side
  info.beta2 = b1;  // vertical side

  // Lm[(q + b1 l), (i + al m)], Rm[(i + al m), (r' + b2 r)]
  auto left_mat = [&](const cmat& V) {
    cmat L(std::size_t(b1) * chil, std::size_t(al) * chim);
    for (int m = 0; m < chim; ++m)
      for (int l = 0; l < chil; ++l)
        for (int i = 0; i < al; ++i)
          L.block(std::size_t(b1) * l, i + std::size_t(al) * m, b1, 1) =
              V.col(i + std::size_t(al) * (l + std::size_t(chil) * m));
    return L;
  };
  cmat Rm(std::size_t(al) * chim, std::size_t(b2) * chir);
  for (int r = 0; r < chir; ++r)
    for (int m = 0; m < chim; ++m)
      for (int i = 0; i < al; ++i)
        Rm.block(i + std::size_t(al) * m, std::size_t(b2) * r, 1, b2) =
            Vh.col(i + std::size_t(al) * (m + std::size_t(chim) * r)).transpose();
  const std::size_t small = std::size_t(b1) * chil * b2 * chir;
  local.record(small, "enhanced central block");
  // M[(l + chil r'), (q + b1 r)] from Th[(q + b1 l), (r' + b2 r)]
  auto central = [&](const cmat& Th) {
    cmat M(std::size_t(chil) * b2, std::size_t(b1) * chir);
    for (int r = 0; r < chir; ++r)
      for (int rp = 0; rp < b2; ++rp)
        for (int l = 0; l < chil; ++l)
          for (int q = 0; q < b1; ++q)
            M(l + std::size_t(chil) * rp, q + std::size_t(b1) * r) =
                Th(q + std::size_t(b1) * l, rp + std::size_t(b2) * r);
    return M;
  };
  cmat M = central(left_mat(Vv) * Rm);
  cmat Mraw = central(left_mat(Vv_raw) * Rm);
  CanonicalPair out = detail::finish_step(in, Mraw, std::move(M), b2, b1,
                                          std::move(Uv), std::move(Uh), o, k, info);
  info.peak = local.peak;
  pc.peak = std::max(pc.peak, local.peak);
  info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (info_out) *info_out = info;
  return out;
}

// k = 0: merge the two sites with the diagonal of b(0). Returns the site as
// d^2 matrices T[mu] of size chi x chi.
inline std::vector<cmat> merge_k0(const CanonicalPair& in, const cmat& b0,
                                  PeakCounter& pc) {
  const int d2 = in.d2;
  Site A = detail::expand(in.A, d2, pc);
  Site B = detail::expand(in.B, d2, pc);
  std::vector<cmat> T(d2);
  for (int mu = 0; mu < d2; ++mu) {
    cmat a(A.dl, A.dr), bb(B.dl, B.dr);
    for (int m = 0; m < A.dr; ++m)
      for (int l = 0; l < A.dl; ++l) a(l, m) = A.at(l, mu, m);
    for (int r = 0; r < B.dr; ++r)
      for (int m = 0; m < B.dl; ++m) bb(m, r) = B.at(m, mu, r);
    T[mu] = b0(mu, mu) * (a * bb);
  }
  return T;
}

// ---- process tensor ----

struct PtMeta {
  double dt = 0;
  int k_max = 0;
  double eps_rel = 0, tol_inner = 0;
  Variant variant = Variant::Enhanced;
  SpectralDensity bath;
  bool has_bath = false;
  double eta_rel_tol = 0;
  double log_norm = 0;
  double wall_seconds = 0;
  std::size_t peak_elements = 0;
  double trace_eigenvalue_abs = 1;  // |dominant eigenvalue| of the traced map
  double right_gap = 0;             // |second| / |first| eigenvalue
  double left_gap = 0;
  std::vector<StepInfo> steps;
};

struct ProcessTensor {
  int d = 1;
  int chi = 1;
  std::vector<cmat> T;  // d^2 matrices chi x chi, mu = ml*d + mr
  cvec left, right;
  rvec lambdas;         // unshifted coupling eigenvalues
  cmat basis;
  double shift = 0;     // eigenvalue subtracted during the build
  std::vector<double> phase_cum;  // S_i, i = 1..k_max+1
  PtMeta meta;

  int d2() const { return d * d; }
  // Scalar correction exp(-2 i c (l_ml - l_mr) S_i) for step i >= 1.
  cplx phase(int mu, int step) const {
    if (shift == 0 || phase_cum.empty()) return 1;
    const int i = std::min<int>(step, static_cast<int>(phase_cum.size())) - 1;
    const double dl = lambdas(mu / d) - lambdas(mu % d);
    const double a = -2 * shift * dl * phase_cum[i];
    return {std::cos(a), std::sin(a)};
  }
};

struct BuildOptions {
  Variant variant = Variant::Enhanced;
  double eps_rel = 1e-7;
  double tol_inner = 1e-7;
  int max_chi = 4096;
  bool keep_sigma = false;
  bool dense_gate = false;  // baseline only
  std::function<void(const StepInfo&)> on_step;
};

namespace detail {
inline int dominant(const cvec& ev, double* gap) {
  Eigen::Index i0 = 0;
  ev.cwiseAbs().maxCoeff(&i0);
  double second = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != i0) second = std::max(second, std::abs(ev(i)));
  if (gap) *gap = ev.size() > 1 ? second / std::abs(ev(i0)) : 0;
  return static_cast<int>(i0);
}
}  // namespace detail

inline ProcessTensor build_tti_pt(const EtaTable& eta, const CouplingSpectrum& cs,
                                  const BuildOptions& bo,
                                  const SpectralDensity* bath = nullptr,
                                  PeakCounter* pc_in = nullptr) {
  validate(cs);
  if (eta.k_max < 0 || static_cast<int>(eta.eta.size()) != eta.k_max + 1)
    throw DomainError("eta table size does not match k_max");
  if (!(bo.eps_rel >= 0 && bo.eps_rel < 1))
    throw DomainError("eps_rel must lie in [0, 1)");
  auto t0 = std::chrono::steady_clock::now();
  PeakCounter own = PeakCounter::from_env();
  PeakCounter& pc = pc_in ? *pc_in : own;
  const int d = cs.d(), d2 = d * d;

  ProcessTensor pt;
  pt.d = d;
  pt.lambdas = cs.lambdas;
  pt.basis = cs.basis;
  int ic = 0;
  cs.lambdas.cwiseAbs().minCoeff(&ic);
  pt.shift = cs.lambdas(ic);
  const rvec lam = cs.lambdas.array() - pt.shift;

  StepOptions so;
  so.eps_rel = bo.eps_rel;
  so.tol_inner = bo.tol_inner;
  so.max_chi = bo.max_chi;
  so.keep_sigma = bo.keep_sigma;
  so.dense_gate = bo.dense_gate;
  CanonicalPair pair = product_pair(d);
  double log_norm = 0;
  for (int k = eta.k_max; k >= 1; --k) {
    cmat b = b_matrix(lam, eta.eta[k]);
    StepInfo info;
    if (bo.variant == Variant::Baseline) {
      pair = itebd_step_baseline(pair, b, so, k, pc, &info);
    } else {
      CompressedGate cg = compress_b(b, bo.tol_inner, k);
      pair = itebd_step_enhanced(pair, cg, so, pc, &info);
    }
    log_norm += info.log_sigma1;
    if (bo.on_step) bo.on_step(info);
    pt.meta.steps.push_back(std::move(info));
  }
  pt.T = merge_k0(pair, b_matrix(lam, eta.eta[0]), pc);
  pt.chi = static_cast<int>(pt.T[0].rows());
  const int chi = pt.chi;

  // right cap: fixed point of the physical-trace transfer map, averaged so
  // that a single diagonal site acts with unit eigenvalue
  cmat Etr = cmat::Zero(chi, chi);
  for (int a = 0; a < d; ++a) Etr += pt.T[a * d + a];
  Etr /= double(d);
  Eigen::ComplexEigenSolver<cmat> er(Etr);
  if (er.info() != Eigen::Success) throw NumericalError("right-cap eigensolver failed");
  const int ir = detail::dominant(er.eigenvalues(), &pt.meta.right_gap);
  const cplx ltr = er.eigenvalues()(ir);
  if (!(std::abs(ltr) > 0)) throw NumericalError("traced transfer map vanishes");
  pt.meta.trace_eigenvalue_abs = std::abs(ltr);
  for (auto& t : pt.T) t /= ltr;
  pt.right = er.eigenvectors().col(ir);

  // left boundary: fixed point of the transfer map at the null index
  const int nu0 = ic * d + ic;
  Eigen::ComplexEigenSolver<cmat> el(pt.T[nu0].transpose());
  if (el.info() != Eigen::Success) throw NumericalError("left-boundary eigensolver failed");
  const int il = detail::dominant(el.eigenvalues(), &pt.meta.left_gap);
  pt.left = el.eigenvectors().col(il);
  const cplx ov = pt.left.transpose() * pt.right;
  if (!(std::abs(ov) > 1e-300))
    throw NumericalError("boundary vectors are orthogonal; cannot normalize");
  pt.left /= ov;

  pt.phase_cum.resize(eta.k_max + 1);
  double s = 0;
  for (int k = 0; k <= eta.k_max; ++k) {
    s += eta.eta[k].imag();
    pt.phase_cum[k] = s;
  }

  PtMeta& m = pt.meta;
  m.dt = eta.dt;
  m.k_max = eta.k_max;
  m.eps_rel = bo.eps_rel;
  m.tol_inner = bo.tol_inner;
  m.variant = bo.variant;
  m.eta_rel_tol = eta.rel_tol;
  if (bath) {
    m.bath = *bath;
    m.has_bath = true;
  }
  m.log_norm = log_norm;
  m.peak_elements = pc.peak;
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  (void)d2;
  return pt;
}

}  // namespace ttipt
