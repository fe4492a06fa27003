#include <cstdlib>
#include <cstring>

#include "offlab/kernels.hpp"

namespace offlab::kernels {

#ifdef OFFLAB_BUILD_AVX2
const KernelTable& avx2_table_impl() noexcept;
#endif

const KernelTable* avx2_table() noexcept {
#ifdef OFFLAB_BUILD_AVX2
  return &avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("OFFLAB_SIMD");
    const bool force_scalar = env != nullptr && std::strcmp(env, "scalar") == 0;
    if (!force_scalar && avx2_table() != nullptr && cpu_has_avx2()) return avx2_table();
    return &scalar_table();
  }();
  return *chosen;
}

}  // namespace offlab::kernels
