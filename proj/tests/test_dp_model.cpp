#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gravicat/dp_model.hpp"
#include "gravicat/error.hpp"

using namespace gravicat;

namespace {

DeviceParams sapphire() { return DeviceParams::sapphire_hbar(); }

// Independent evaluation of G / (12 sqrt(pi) omega) (a / R0)^3 rho.
double direct_gamma(double omega, double a, double rho, double r0) {
  const double G = 6.67430e-11;
  return G / (12.0 * std::sqrt(std::numbers::pi) * omega) * std::pow(a / r0, 3) * rho;
}

}  // namespace

TEST_SUITE("dp_model") {

TEST_CASE("constants and the sapphire device") {
  CHECK(kConstants.G == doctest::Approx(6.674e-11).epsilon(1e-4));
  CHECK(kConstants.hbar == doctest::Approx(1.0546e-34).epsilon(1e-4));
  const auto d = sapphire();
  CHECK(d.omega == doctest::Approx(2 * std::numbers::pi * 5.961e9));
  CHECK(d.a == 1e-9);
  CHECK(d.rho_bar == 3980.0);
  CHECK_NOTHROW(d.validate());
  auto bad = d;
  bad.s = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = d;
  bad.m_eff = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(DiffusionRate(-1.0), ValidationError);
  CHECK_THROWS_AS(CutoffLength(0.0), ValidationError);
}

TEST_CASE("gamma_dp at the reference cutoff") {
  const double g = gamma_dp(sapphire(), CutoffLength(6.2e-17)).value();
  CHECK(g == doctest::Approx(1.4e3).epsilon(0.02));
  CHECK(g == doctest::Approx(direct_gamma(2 * std::numbers::pi * 5.961e9, 1e-9, 3980, 6.2e-17)).epsilon(1e-12));
  CHECK(gamma_dp_appendix(sapphire(), CutoffLength(6.2e-17)).value() == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("gamma_dp scaling") {
  const auto d = sapphire();
  const double g = gamma_dp(d, CutoffLength(1e-16)).value();
  CHECK(gamma_dp(d, CutoffLength(8e-16)).value() == doctest::Approx(g / 512).epsilon(1e-12));
  auto d2 = d;
  d2.rho_bar *= 2;
  CHECK(gamma_dp(d2, CutoffLength(1e-16)).value() == doctest::Approx(2 * g).epsilon(1e-12));
  auto d3 = d;
  d3.m_eff *= 7.3;
  CHECK(gamma_dp_appendix(d3, CutoffLength(1e-16)).value() == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("gamma_dp overflow is a range error") {
  CHECK_THROWS_AS(gamma_dp(sapphire(), CutoffLength(1e-320)), RangeError);
}

TEST_CASE("x0 form agrees over 100 log-spaced (R0, omega) pairs") {
  auto d = sapphire();
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      d.omega = 2 * std::numbers::pi * std::pow(10.0, 6 + 0.5 * j);
      const CutoffLength r0(std::pow(10.0, -19 + 0.7 * i));
      CHECK(gamma_dp_appendix(d, r0).value() == doctest::Approx(gamma_dp(d, r0).value()).epsilon(1e-12));
    }
  }
}

TEST_CASE("random sweep: x0 form and round trip") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int worst_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    DeviceParams d{2 * std::numbers::pi * std::pow(10.0, 6 + 4 * u(rng)), 1e-6 + u(rng),
                   std::pow(10.0, -12 + 10 * u(rng)), std::pow(10.0, -11 + 3 * u(rng)), 100 + 2e4 * u(rng), 0.5 * u(rng)};
    const CutoffLength r0(std::pow(10.0, -18 + 9 * u(rng)));
    const double g = gamma_dp(d, r0).value();
    const double ga = gamma_dp_appendix(d, r0).value();
    const double back = r0_lower_bound(DiffusionRate(g), d).value();
    if (std::abs(ga - g) > 1e-12 * g || std::abs(back - r0.value()) > 1e-12 * r0.value()) ++worst_fail;
    if (!(std::isfinite(g) && g >= 0)) ++worst_fail;
  }
  CHECK(worst_fail == 0);
}

TEST_CASE("monotonicity of gamma_dp") {
  const auto d = sapphire();
  const double g = gamma_dp(d, CutoffLength(1e-16)).value();
  CHECK(gamma_dp(d, CutoffLength(1.1e-16)).value() < g);
  auto w = d;
  w.omega *= 1.1;
  CHECK(gamma_dp(w, CutoffLength(1e-16)).value() < g);
  auto r = d;
  r.rho_bar *= 1.1;
  CHECK(gamma_dp(r, CutoffLength(1e-16)).value() > g);
  auto a = d;
  a.a *= 1.1;
  CHECK(gamma_dp(a, CutoffLength(1e-16)).value() > g);
}

TEST_CASE("r0_lower_bound reference values") {
  CHECK(r0_lower_bound(DiffusionRate(1.4e3), sapphire()).value() == doctest::Approx(6.2e-17).epsilon(0.02));
  CHECK(r0_lower_bound(DiffusionRate(1.9e2), sapphire()).value() == doctest::Approx(1.2e-16).epsilon(0.02));
  CHECK_THROWS_AS(r0_lower_bound(DiffusionRate(0.0), sapphire()), ValidationError);
  const CutoffLength r0(3.3e-15);
  CHECK(r0_lower_bound(gamma_dp(sapphire(), r0), sapphire()).value() == doctest::Approx(3.3e-15).epsilon(1e-12));
}

TEST_CASE("classical_gamma") {
  CHECK(classical_gamma(0.016, 84e-6).value() == doctest::Approx(1.9e2).epsilon(0.01));
  CHECK(classical_gamma(0.0, 84e-6).value() == 0.0);
  CHECK(classical_gamma(0.032, 84e-6).value() == doctest::Approx(3.8e2).epsilon(0.01));
  CHECK_THROWS_AS(classical_gamma(-0.1, 84e-6), ValidationError);
  CHECK_THROWS_AS(classical_gamma(0.1, 0.0), ValidationError);
}

TEST_CASE("steady_state_energy") {
  const double w = 2 * std::numbers::pi * 5.961e9;
  const double hw = kConstants.hbar * w;
  CHECK(steady_state_energy(DiffusionRate(0.0), 84e-6, w) == doctest::Approx(hw / 2).epsilon(1e-14));
  CHECK(steady_state_energy(DiffusionRate(1.9e2), 84e-6, w) / hw == doctest::Approx(0.516).epsilon(1e-3));
  const double e1 = steady_state_energy(DiffusionRate(100.0), 84e-6, w);
  const double e2 = steady_state_energy(DiffusionRate(200.0), 84e-6, w);
  CHECK((e2 - e1) / 100.0 == doctest::Approx(hw * 84e-6).epsilon(1e-9));
}

TEST_CASE("heating_rate_order") {
  CHECK(heating_rate_order(1.0, CutoffLength(1e-7)) == doctest::Approx(7.0e-24).epsilon(0.01));
  CHECK(heating_rate_order(1.0, CutoffLength(0.5e-7)) == doctest::Approx(8 * 7.0385e-24).epsilon(0.01));
  CHECK(heating_rate_order(2.0, CutoffLength(1e-7)) == doctest::Approx(2 * heating_rate_order(1.0, CutoffLength(1e-7))));
}

TEST_CASE("penrose_timescale") {
  CHECK(penrose_timescale(kConstants.hbar) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(penrose_timescale(1.0546e-34) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(penrose_timescale(2e-30) == doctest::Approx(penrose_timescale(1e-30) / 2));
  CHECK_THROWS_AS(penrose_timescale(0.0), ValidationError);
}

TEST_CASE("zpf") {
  const double w = 2 * std::numbers::pi * 5.961e9;
  CHECK(zpf(1.62e-8, w) == doctest::Approx(2.95e-19).epsilon(0.01));
  CHECK(zpf(4 * 1.62e-8, w) == doctest::Approx(zpf(1.62e-8, w) / 2));
  CHECK(zpf(1.62e-8, w) * std::sqrt(2.0) == doctest::Approx(std::sqrt(kConstants.hbar / (1.62e-8 * w))));
}

}
