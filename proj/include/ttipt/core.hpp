// core.hpp: shared scalar types and the error hierarchy
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttipt {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double PI = 3.14159265358979323846;

// Exit-code classes used by the command-line tool.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 2; }
};
// Bad input, config or file contents.
struct DomainError : Error {
  using Error::Error;
  int exit_code() const override { return 1; }
};
struct FormatError : Error {
  using Error::Error;
  int exit_code() const override { return 1; }
};
// Quadrature, SVD, eigen or integrator failure.
struct NumericalError : Error {
  using Error::Error;
};
// Memory cap or bond-dimension cap exceeded.
struct ResourceError : Error {
  using Error::Error;
  int exit_code() const override { return 3; }
};

// Tracks the largest dense tensor materialized during a build.
struct PeakCounter {
  std::size_t peak = 0;
  std::size_t cap_bytes = 0;  // 0: no cap

  static PeakCounter from_env() {
    PeakCounter p;
    if (const char* s = std::getenv("TTIPT_MAX_MEM_BYTES"))
      p.cap_bytes = static_cast<std::size_t>(std::strtoull(s, nullptr, 10));
    return p;
  }

  void record(std::size_t elements, const char* what = "tensor") {
    if (elements > peak) peak = elements;
    if (cap_bytes && elements * sizeof(cplx) > cap_bytes)
      throw ResourceError(std::string(what) + " needs " +
                          std::to_string(elements * sizeof(cplx)) +
                          " bytes, cap TTIPT_MAX_MEM_BYTES=" +
                          std::to_string(cap_bytes));
  }
};

}  // namespace ttipt
