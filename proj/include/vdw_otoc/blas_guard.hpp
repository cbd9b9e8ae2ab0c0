#ifndef VDW_OTOC_BLAS_GUARD_HPP
#define VDW_OTOC_BLAS_GUARD_HPP

// OpenBLAS 0.3.20 with DYNAMIC_ARCH picks its Cooperlake kernels on AVX512-FP16
// Xeons, and those return non-orthonormal eigenvectors from dsyev/dsyevr.
// The core type is read once when the library loads, so the only fix from
// inside a process is to restart it with OPENBLAS_CORETYPE set.

#include <unistd.h>

#include <cstdlib>
#include <cstring>

extern "C" char* openblas_get_corename();

namespace vdw_otoc {

// Call first thing in main().  Returns only if no restart was needed.
inline void ensure_sound_blas_kernel(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  const char* core = openblas_get_corename();
  if (core == nullptr) return;
  if (std::strcmp(core, "Cooperlake") != 0 && std::strcmp(core, "SapphireRapids") != 0) return;
  ::setenv("OPENBLAS_CORETYPE", "SkylakeX", 1);
  ::execv("/proc/self/exe", argv);
  // execv failed; carry on and let the orthonormality check in the solver report it.
}

}  // namespace vdw_otoc

#endif  // VDW_OTOC_BLAS_GUARD_HPP
