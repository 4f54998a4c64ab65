#include "gravicat/dp_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gravicat/error.hpp"

namespace gravicat {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be finite and > 0, got " + std::to_string(v));
  }
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw RangeError(std::string(what) + " is not finite");
  return v;
}

const double kTwelveRootPi = 12.0 * std::sqrt(std::numbers::pi);

}  // namespace

void DeviceParams::validate() const {
  require_positive(omega, "omega");
  require_positive(T1, "T1");
  require_positive(m_eff, "m_eff");
  require_positive(a, "a");
  require_positive(rho_bar, "rho_bar");
  if (!(s >= 0.0 && s < 1.0)) {
    throw ValidationError("pixel noise s must lie in [0, 1), got " + std::to_string(s));
  }
}

DeviceParams DeviceParams::sapphire_hbar() {
  return DeviceParams{
      .omega = 2.0 * std::numbers::pi * 5.961e9,
      .T1 = 84e-6,
      .m_eff = 16.2e-9,
      .a = 1e-9,
      .rho_bar = 3980.0,
      .s = 0.051,
  };
}

DiffusionRate::DiffusionRate(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("diffusion rate must be finite and >= 0, got " + std::to_string(gamma));
  }
}

CutoffLength::CutoffLength(double r0) : r0_(r0) { require_positive(r0, "R0"); }

DiffusionRate gamma_dp(const DeviceParams& dev, CutoffLength r0) {
  dev.validate();
  const double ratio = dev.a / r0.value();
  const double g = kConstants.G / (kTwelveRootPi * dev.omega) * (ratio * ratio * ratio) * dev.rho_bar;
  return DiffusionRate(checked(g, "gamma_dp"));
}

DiffusionRate gamma_dp_appendix(const DeviceParams& dev, CutoffLength r0) {
  dev.validate();
  const double x0_sq = kConstants.hbar / (dev.m_eff * dev.omega);
  const double ratio = dev.a / r0.value();
  const double g = kConstants.G * x0_sq / (kTwelveRootPi * kConstants.hbar) * (ratio * ratio * ratio) *
                   dev.rho_bar * dev.m_eff;
  return DiffusionRate(checked(g, "gamma_dp_appendix"));
}

CutoffLength r0_lower_bound(DiffusionRate gamma_star, const DeviceParams& dev) {
  dev.validate();
  if (!(gamma_star.value() > 0.0)) {
    throw ValidationError("gamma_star must be > 0: a zero diffusion rate puts no finite bound on R0");
  }
  const double inner = kConstants.G * dev.rho_bar / (kTwelveRootPi * dev.omega * gamma_star.value());
  return CutoffLength(checked(dev.a * std::cbrt(inner), "r0_lower_bound"));
}

DiffusionRate classical_gamma(double n_ss, double T1) {
  if (!(n_ss >= 0.0) || !std::isfinite(n_ss)) {
    throw ValidationError("steady-state occupation must be finite and >= 0");
  }
  require_positive(T1, "T1");
  return DiffusionRate(n_ss / T1);
}

double steady_state_energy(DiffusionRate gamma, double T1, double omega) {
  require_positive(T1, "T1");
  require_positive(omega, "omega");
  return kConstants.hbar * omega * (1.0 + 2.0 * gamma.value() * T1) / 2.0;
}

double heating_rate_order(double m, CutoffLength r0) {
  require_positive(m, "m");
  const double r = r0.value();
  return checked(m * kConstants.G * kConstants.hbar / (r * r * r), "heating_rate_order");
}

double penrose_timescale(double delta_e) {
  if (!(delta_e > 0.0)) throw ValidationError("delta_e must be > 0");
  return kConstants.hbar / delta_e;
}

double zpf(double m_eff, double omega) {
  require_positive(m_eff, "m_eff");
  require_positive(omega, "omega");
  return std::sqrt(kConstants.hbar / (2.0 * m_eff * omega));
}

}  // namespace gravicat
