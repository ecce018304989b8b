// propagate.hpp: Trotterized evolution of a system against a TTI-PT
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ttipt/core.hpp"
#include "ttipt/itebd.hpp"
#include "ttipt/models.hpp"

namespace ttipt {

// exp(-i H dt) for Hermitian H.
inline cmat unitary_step(const cmat& H, double dt) {
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (H + H.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("matrix exponential failed");
  cvec ph(H.rows());
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    ph(i) = std::exp(-I * es.eigenvalues()(i) * dt);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Superoperator of rho -> U rho U^dagger, row-major Liouville index
// mu = ml*D + mr, in the coupling eigenbasis.
inline cmat system_propagator(const SystemModel& m, double t, double dt) {
  if (!(dt > 0)) throw DomainError("propagator needs dt > 0");
  cmat W = full_basis(m, coupling_spectrum(m));
  cmat U = unitary_step(to_basis(hamiltonian(m, t + 0.5 * dt), W), dt);
  return kron(U, U.conjugate());
}

struct Trajectory {
  std::vector<std::string> names;
  std::vector<double> t;
  std::vector<std::vector<cplx>> values;  // [observable][sample]
  std::vector<double> trace_drift;        // raw trace - 1
  std::vector<double> snapshot_t;
  std::vector<cmat> snapshots;            // model basis
  cmat final_rho;                         // model basis
  double max_top_population = 0;
  double wall_seconds = 0;

  const std::vector<cplx>& operator[](const std::string& n) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return values[i];
    throw DomainError("trajectory has no observable '" + n + "'");
  }
  std::vector<double> real(const std::string& n) const {
    std::vector<double> r;
    for (auto v : (*this)[n]) r.push_back(v.real());
    return r;
  }
};

struct EvolveOptions {
  bool symmetric = false;    // half steps of U around the PT contraction
  int record_stride = 1;
  int snapshot_stride = 0;   // 0: none
  bool keep_final = true;
  std::function<void(int, double, const cmat&)> on_sample;  // step, t, rho
};

struct Observable {
  std::string name;
  cmat op;  // model basis
};

// Core loop. H(t) is given in the model basis of a Q x (pt.d) system whose
// coupled factor is the slow-index-free last factor.
inline Trajectory evolve_core(const ProcessTensor& pt,
                              const std::function<cmat(double)>& H, bool time_dependent,
                              int Q, const cmat& rho0, int n_steps,
                              const std::vector<Observable>& obs,
                              const EvolveOptions& eo = {},
                              const std::function<double(const cmat&)>& probe = {}) {
  auto t0 = std::chrono::steady_clock::now();
  const int d = pt.d, D = Q * d, D2 = D * D, chi = pt.chi;
  const double dt = pt.meta.dt;
  if (rho0.rows() != D || rho0.cols() != D)
    throw DomainError("initial state dimension " + std::to_string(rho0.rows()) +
                      " does not match system dimension " + std::to_string(D));
  if (static_cast<int>(pt.T.size()) != d * d)
    throw DomainError("process tensor site has wrong physical dimension");
  if (n_steps < 0) throw DomainError("n_steps must be >= 0");
  const cmat W = Q == 1 ? pt.basis : kron(cmat::Identity(Q, Q), pt.basis);

  std::vector<cmat> ob;
  Trajectory tr;
  for (const auto& o : obs) {
    if (o.op.rows() != D) throw DomainError("observable '" + o.name + "' has wrong dimension");
    ob.push_back(to_basis(o.op, W));
    tr.names.push_back(o.name);
  }
  tr.values.resize(ob.size());

  // rows of X belonging to resonator Liouville index p = nl*d + nr
  std::vector<std::vector<int>> rows(d * d);
  for (int ql = 0; ql < Q; ++ql)
    for (int qr = 0; qr < Q; ++qr)
      for (int nl = 0; nl < d; ++nl)
        for (int nr = 0; nr < d; ++nr)
          rows[nl * d + nr].push_back((ql * d + nl) + D * (qr * d + nr));

  cmat X(D2, chi);
  {
    cmat r0 = to_basis(rho0, W);
    Eigen::Map<const cvec> v(r0.data(), D2);
    X = v * pt.left.transpose();
  }

  auto record = [&](int step, double t, bool force_snapshot) {
    cvec rv = X * pt.right;
    Eigen::Map<cmat> rho(rv.data(), D, D);
    const cplx trc = rho.trace();
    if (!std::isfinite(trc.real()) || !std::isfinite(trc.imag()))
      throw NumericalError("NaN detected in evolution at step " + std::to_string(step));
    cmat r = rho / trc;
    const bool rec = eo.record_stride > 0 && step % eo.record_stride == 0;
    if (rec || force_snapshot || probe) {
      cmat rm;
      bool have_rm = false;
      auto model_rho = [&]() -> const cmat& {
        if (!have_rm) {
          rm = from_basis(r, W);
          have_rm = true;
        }
        return rm;
      };
      if (rec) {
        tr.t.push_back(t);
        for (std::size_t i = 0; i < ob.size(); ++i)
          tr.values[i].push_back((ob[i] * r).trace());
        tr.trace_drift.push_back(trc.real() - 1);
        if (probe) tr.max_top_population = std::max(tr.max_top_population, probe(model_rho()));
        if (eo.on_sample) eo.on_sample(step, t, model_rho());
      }
      if (eo.snapshot_stride > 0 && step % eo.snapshot_stride == 0) {
        tr.snapshot_t.push_back(t);
        tr.snapshots.push_back(model_rho());
      }
      if (force_snapshot) tr.final_rho = model_rho();
    }
  };

  record(0, 0.0, n_steps == 0 && eo.keep_final);
  cmat U, Uh;
  auto make_u = [&](double t) {
    cmat h = to_basis(H(t + 0.5 * dt), W);
    if (eo.symmetric) {
      Uh = unitary_step(h, 0.5 * dt);
    } else {
      U = unitary_step(h, dt);
    }
  };
  if (!time_dependent) make_u(0);
  cmat tmp(D, D), G;
  auto conj_all = [&](const cmat& u) {
    for (int l = 0; l < chi; ++l) {
      Eigen::Map<cmat> s(X.col(l).data(), D, D);
      tmp.noalias() = u * s;
      s.noalias() = tmp * u.adjoint();
    }
  };
  for (int i = 1; i <= n_steps; ++i) {
    const double t = (i - 1) * dt;
    if (time_dependent) make_u(t);
    conj_all(eo.symmetric ? Uh : U);
    for (int p = 0; p < d * d; ++p) {
      const auto& rp = rows[p];
      G.resize(rp.size(), chi);
      for (std::size_t j = 0; j < rp.size(); ++j) G.row(j) = X.row(rp[j]);
      cmat out = G * pt.T[p];
      const cplx ph = pt.phase(p, i);
      for (std::size_t j = 0; j < rp.size(); ++j) X.row(rp[j]) = out.row(j) * ph;
    }
    if (eo.symmetric) conj_all(Uh);
    record(i, i * dt, i == n_steps && eo.keep_final);
  }
  tr.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

inline void check_compatible(const ProcessTensor& pt, const SystemModel& m) {
  if (pt.d != m.N)
    throw DomainError("process tensor d=" + std::to_string(pt.d) +
                      " does not match resonator truncation N=" + std::to_string(m.N));
  auto cs = coupling_spectrum(m);
  if ((cs.lambdas - pt.lambdas).cwiseAbs().maxCoeff() > 1e-10)
    throw DomainError("process tensor coupling spectrum differs from the model's");
}

inline Trajectory evolve(const ProcessTensor& pt, const SystemModel& m, const cmat& rho0,
                         int n_steps, const std::vector<Observable>& obs,
                         const EvolveOptions& eo = {}) {
  check_compatible(pt, m);
  auto H = [&](double t) { return hamiltonian(m, t); };
  auto probe = [&](const cmat& r) { return top_level_population(m, r); };
  return evolve_core(pt, H, m.drive.epsilon != 0, m.qubit_dim(), rho0, n_steps, obs,
                     eo, probe);
}

inline std::vector<Observable> observables(const SystemModel& m,
                                           const std::vector<std::string>& names) {
  std::vector<Observable> o;
  for (const auto& n : names) o.push_back({n, observable(m, n)});
  return o;
}

}  // namespace ttipt
