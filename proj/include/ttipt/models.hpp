// models.hpp: oscillator, Rabi and Jaynes–Cummings system models
#pragma once

#include <cmath>
#include <string>

#include "ttipt/core.hpp"
#include "ttipt/influence.hpp"

namespace ttipt {

enum class ModelKind { Oscillator, Rabi, JaynesCummings };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Oscillator: return "oscillator";
    case ModelKind::Rabi: return "rabi";
    case ModelKind::JaynesCummings: return "jc";
  }
  return "?";
}

inline ModelKind model_kind_from(const std::string& s) {
  if (s == "oscillator") return ModelKind::Oscillator;
  if (s == "rabi") return ModelKind::Rabi;
  if (s == "jc" || s == "jaynes_cummings") return ModelKind::JaynesCummings;
  throw DomainError("unknown model kind '" + s + "'");
}

struct Drive {
  double epsilon = 0;
  double omega_d = 1;
};

struct SystemModel {
  ModelKind kind = ModelKind::Oscillator;
  int N = 2;  // resonator levels
  double omega_r = 1;
  double omega_q = 0;
  double g = 0;
  Drive drive;

  int qubit_dim() const { return kind == ModelKind::Oscillator ? 1 : 2; }
  int dim() const { return qubit_dim() * N; }
};

inline void validate(const SystemModel& m) {
  if (m.N < 1) throw DomainError("model N must be >= 1");
}

// ---- single-factor operators ----
inline cmat annihilation(int N) {
  cmat a = cmat::Zero(N, N);
  for (int n = 0; n + 1 < N; ++n) a(n, n + 1) = std::sqrt(double(n + 1));
  return a;
}
inline cmat quadrature_x(int N) {
  cmat a = annihilation(N);
  return a + a.adjoint();
}
// p = i(a - a^dagger)
inline cmat quadrature_p(int N) {
  cmat a = annihilation(N);
  return I * (a - a.adjoint());
}
// Qubit basis: index 0 = excited (up), 1 = ground (down).
inline cmat sigma_z() { return (cmat(2, 2) << 1, 0, 0, -1).finished(); }
inline cmat sigma_x() { return (cmat(2, 2) << 0, 1, 1, 0).finished(); }
inline cmat sigma_y() { return (cmat(2, 2) << 0, -I, I, 0).finished(); }
inline cmat sigma_plus() { return (cmat(2, 2) << 0, 1, 0, 0).finished(); }

inline cmat kron(const cmat& a, const cmat& b) {
  cmat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

inline cmat on_resonator(const SystemModel& m, const cmat& op) {
  return m.qubit_dim() == 1 ? op : kron(cmat::Identity(2, 2), op);
}
inline cmat on_qubit(const SystemModel& m, const cmat& op) {
  if (m.qubit_dim() == 1) throw DomainError("oscillator model has no qubit");
  return kron(op, cmat::Identity(m.N, m.N));
}

inline cmat hamiltonian(const SystemModel& m, double t) {
  validate(m);
  const int N = m.N;
  cmat a = annihilation(N);
  cmat num = a.adjoint() * a;
  cmat x = a + a.adjoint();
  cmat h = m.omega_r * on_resonator(m, num);
  if (m.kind == ModelKind::Rabi) {
    h += 0.5 * m.omega_q * on_qubit(m, sigma_z());
    h += m.g * kron(sigma_x(), x);
  } else if (m.kind == ModelKind::JaynesCummings) {
    h += 0.5 * m.omega_q * on_qubit(m, sigma_z());
    cmat sp = sigma_plus();
    h += m.g * (kron(sp, a) + kron(sp.adjoint(), a.adjoint()));
  }
  if (m.drive.epsilon != 0)
    h += m.drive.epsilon * std::sin(m.drive.omega_d * t) * on_resonator(m, x);
  return h;
}

// Eigenbasis of the truncated quadrature a + a^dagger on the resonator.
inline CouplingSpectrum coupling_spectrum(int N) {
  Eigen::SelfAdjointEigenSolver<cmat> es(quadrature_x(N));
  if (es.info() != Eigen::Success)
    throw NumericalError("eigensolver failed on the coupling operator");
  CouplingSpectrum cs;
  cs.lambdas = es.eigenvalues();
  cs.basis = es.eigenvectors();
  for (int j = 0; j < N; ++j) {
    Eigen::Index i;
    cs.basis.col(j).cwiseAbs().maxCoeff(&i);
    const cplx ph = cs.basis(i, j) / std::abs(cs.basis(i, j));
    cs.basis.col(j) /= ph;
  }
  return cs;
}
inline CouplingSpectrum coupling_spectrum(const SystemModel& m) {
  return coupling_spectrum(m.N);
}

// Full-system unitary whose columns are the coupling eigenbasis.
inline cmat full_basis(const SystemModel& m, const CouplingSpectrum& cs) {
  return on_resonator(m, cs.basis);
}

inline cmat to_basis(const cmat& op, const cmat& W) {
  return W.adjoint() * op * W;
}
inline cmat from_basis(const cmat& op, const cmat& W) {
  return W * op * W.adjoint();
}

inline cmat excitation_number(const SystemModel& m) {
  cmat a = annihilation(m.N);
  cmat n = on_resonator(m, a.adjoint() * a);
  if (m.qubit_dim() == 2) {
    cmat sp = sigma_plus();
    n += on_qubit(m, sp * sp.adjoint());
  }
  return n;
}

// Named observables in the model basis.
inline cmat observable(const SystemModel& m, const std::string& name) {
  cmat a = annihilation(m.N);
  if (name == "n") return on_resonator(m, a.adjoint() * a);
  if (name == "a") return on_resonator(m, a);
  if (name == "x") return on_resonator(m, a + a.adjoint());
  if (name == "p") return on_resonator(m, quadrature_p(m.N));
  if (name == "sigma_z") return on_qubit(m, sigma_z());
  if (name == "sigma_x") return on_qubit(m, sigma_x());
  if (name == "sigma_y") return on_qubit(m, sigma_y());
  throw DomainError("unknown observable '" + name + "'");
}

// Fock/product state |q> (x) |n>, q = 0 excited, 1 ground.
inline cmat basis_state(const SystemModel& m, int q, int n) {
  const int D = m.dim();
  cmat rho = cmat::Zero(D, D);
  const int i = (m.qubit_dim() == 1 ? 0 : q) * m.N + n;
  rho(i, i) = 1;
  return rho;
}

// Largest population in the top two resonator levels.
inline double top_level_population(const SystemModel& m, const cmat& rho) {
  double p = 0;
  for (int q = 0; q < m.qubit_dim(); ++q)
    for (int n = std::max(0, m.N - 2); n < m.N; ++n)
      p += rho(q * m.N + n, q * m.N + n).real();
  return p;
}

}  // namespace ttipt
