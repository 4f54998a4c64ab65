#include <cstdlib>
#include <string_view>

#include "gravicat/kernels.hpp"

namespace gravicat::kernels {
namespace {

const KernelTable kScalar{"scalar", &scalar::dot, &scalar::sum_sq_diff, &scalar::axpy};

#if defined(GRAVICAT_HAVE_AVX2)
const KernelTable kAvx2{"avx2", &avx2::dot, &avx2::sum_sq_diff, &avx2::axpy};
#endif

bool cpu_has_avx2() {
#if defined(GRAVICAT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* forced = std::getenv("GRAVICAT_SIMD"); forced && std::string_view(forced) == "scalar") {
    return kScalar;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(GRAVICAT_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace gravicat::kernels
