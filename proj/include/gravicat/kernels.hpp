#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference and,
// on x86-64 builds, an AVX2/FMA variant. The active table is chosen once per
// process from CPUID; GRAVICAT_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace gravicat::kernels {

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
using SumSqDiffFn = double (*)(const double* a, const double* b, std::size_t n);
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);

struct KernelTable {
  std::string_view isa;
  DotFn dot;
  SumSqDiffFn sum_sq_diff;
  AxpyFn axpy;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(GRAVICAT_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

// sum_i (a_i - b_i)^2
inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace gravicat::kernels
