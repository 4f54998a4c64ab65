#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <random>
#include <vector>

#include "gravicat/kernels.hpp"
#include "gravicat/parallel.hpp"
#include "gravicat/phase_space.hpp"

using namespace gravicat;

TEST_SUITE("kernels") {

TEST_CASE("scalar reference values") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{5, 4, 3, 2, 1};
  CHECK(kernels::scalar::dot(a.data(), b.data(), a.size()) == 35.0);
  CHECK(kernels::scalar::sum_sq_diff(a.data(), b.data(), a.size()) == 40.0);
  std::vector<double> y = b;
  kernels::scalar::axpy(2.0, a.data(), y.data(), y.size());
  CHECK(y == std::vector<double>{7, 8, 9, 10, 11});
}

TEST_CASE("AVX2 variants match the scalar reference") {
  const kernels::KernelTable* simd = kernels::avx2_table();
  if (!simd) {
    MESSAGE("AVX2 not available; skipped");
    return;
  }
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const auto& ref = kernels::scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 1000u, 4097u}) {
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(simd->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-14 * (mag + 1));
    const double ss = ref.sum_sq_diff(a.data(), b.data(), n);
    CHECK(std::abs(simd->sum_sq_diff(a.data(), b.data(), n) - ss) <= 1e-14 * (ss + 1));
    std::vector<double> y1 = b, y2 = b;
    ref.axpy(0.37, a.data(), y1.data(), n);
    simd->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y1[i]) + 1));
  }
}

TEST_CASE("active table is one of the known variants") {
  const auto isa = kernels::active().isa;
  CHECK((isa == "scalar" || isa == "avx2"));
  const char* env = std::getenv("GRAVICAT_SIMD");
  if (env && std::string(env) == "scalar") CHECK(isa == "scalar");
}

}

TEST_SUITE("parallel") {

TEST_CASE("parallel_for visits each index once and propagates exceptions") {
  const int saved = num_threads();
  for (int t : {1, 2, 3, 8}) {
    set_num_threads(t);
    std::vector<int> hits(1001, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  set_num_threads(4);
  CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) { if (i == 57) throw std::runtime_error("x"); }),
                  std::runtime_error);
  set_num_threads(saved);
}

TEST_CASE("evolution is independent of the thread count") {
  const int saved = num_threads();
  const std::complex<double> alpha{std::sqrt(2.1), 0.0};
  const WignerGrid w0 = cat_wigner(alpha, GridSpec::default_for(alpha, 0.1));
  const EvolutionParams ep{1.0 / 84e-6, 5e3, 20e-6};
  set_num_threads(1);
  const WignerGrid a = evolve_wigner(w0, ep);
  set_num_threads(5);
  const WignerGrid b = evolve_wigner(w0, ep);
  set_num_threads(saved);
  CHECK(a.values == b.values);
}

}
