// blas_guard.hpp: steer OpenBLAS away from kernels with broken complex
// LAPACK results on this hardware class
#pragma once

#include <dlfcn.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <string>

namespace ttipt {

// Name of the OpenBLAS core in use, or "" when the BLAS is not OpenBLAS.
inline std::string blas_core_name() {
  using fn = char* (*)();
  auto f = reinterpret_cast<fn>(dlsym(RTLD_DEFAULT, "openblas_get_corename"));
  return f ? std::string(f()) : std::string();
}

// OpenBLAS 0.3.20 returns non-orthogonal zgesdd factors above ~400 columns
// with its Cooperlake kernels. If that core was auto-selected, restart the
// process with the SkylakeX kernels. Returns only when no restart is needed.
inline void select_blas_kernel(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE")) return;
  const std::string core = blas_core_name();
  if (core != "Cooperlake" && core != "SapphireRapids") return;
  setenv("OPENBLAS_CORETYPE", "SkylakeX", 1);
  execv("/proc/self/exe", argv);
}

}  // namespace ttipt
