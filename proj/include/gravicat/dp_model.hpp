#pragma once

// Closed-form Diosi-Penrose formulas for a bulk acoustic mode of a crystal.
// Everything here is SI; unit conversion happens at the CLI / file boundary.

namespace gravicat {

struct PhysicalConstants {
  double G = 6.67430e-11;        // m^3 kg^-1 s^-2 (CODATA 2018)
  double hbar = 1.054571817e-34; // J s (CODATA 2018)
};

inline constexpr PhysicalConstants kConstants{};

// Oscillator and material record.
struct DeviceParams {
  double omega;    // rad/s
  double T1;       // s
  double m_eff;    // kg
  double a;        // effective lattice constant, m
  double rho_bar;  // mean mass density, kg/m^3
  double s;        // Wigner pixel-noise standard deviation (dimensionless)

  // Throws ValidationError unless all physical fields are > 0 and 0 <= s < 1.
  // s = 0 is accepted so that noiseless synthetic data can be described.
  void validate() const;

  double gamma_down() const { return 1.0 / T1; }

  // Sapphire HBAR mode: 5.961 GHz, T1 = 84 us, 16.2 ug, a = 1 nm, 3.98 g/cm^3, s = 0.051.
  static DeviceParams sapphire_hbar();
};

// Momentum diffusion rate, s^-1.
class DiffusionRate {
 public:
  explicit DiffusionRate(double gamma);
  double value() const { return gamma_; }

 private:
  double gamma_;
};

// Coarse-graining cutoff R0, m.
class CutoffLength {
 public:
  explicit CutoffLength(double r0);
  double value() const { return r0_; }

 private:
  double r0_;
};

// Gamma = G / (12 sqrt(pi) omega) * (a / R0)^3 * rho_bar.
DiffusionRate gamma_dp(const DeviceParams& dev, CutoffLength r0);

// The same rate written through the zero-point length x0^2 = hbar / (m_eff omega):
// Gamma = G x0^2 / (12 sqrt(pi) hbar) * (a / R0)^3 * rho_bar * m_eff.
// The mass cancels; kept as an independent algebraic route.
DiffusionRate gamma_dp_appendix(const DeviceParams& dev, CutoffLength r0);

// Inverse of gamma_dp: the smallest R0 compatible with a diffusion rate <= gamma_star.
CutoffLength r0_lower_bound(DiffusionRate gamma_star, const DeviceParams& dev);

// Gamma = n_ss / T1, from a measured steady-state occupation.
DiffusionRate classical_gamma(double n_ss, double T1);

// E = hbar omega (1 + 2 Gamma T1) / 2, joules.
double steady_state_energy(DiffusionRate gamma, double T1, double omega);

// Order-of-magnitude heating power m G hbar / R0^3, watts. No prefactor is
// implied; only the scaling is meaningful.
double heating_rate_order(double m, CutoffLength r0);

// tau = hbar / delta_e, seconds.
double penrose_timescale(double delta_e);

// Ground-state position spread sqrt(hbar / (2 m omega)), m.
double zpf(double m_eff, double omega);

}  // namespace gravicat
