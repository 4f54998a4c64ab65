#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gravicat {

// Quadrature convention used throughout: X = sqrt(2) Re(alpha), P = sqrt(2) Im(alpha),
// vacuum W(X, P) = exp(-X^2 - P^2) / pi, variance 1/2 per quadrature.
struct QuadratureConvention {
  static double x_of(std::complex<double> alpha);
  static double p_of(std::complex<double> alpha);
  static std::complex<double> alpha_of(double x, double p);
  static double vacuum(double x, double p);
};

struct PhasePoint {
  double x;
  double p;
};

// Uniform rectangular grid. Node (i, j) sits at (x_min + i dx, p_min + j dp).
struct GridSpec {
  double x_min = -5.0;
  double x_max = 5.0;
  double p_min = -5.0;
  double p_max = 5.0;
  std::size_t nx = 201;
  std::size_t np = 201;

  void validate() const;
  double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double dp() const { return (p_max - p_min) / static_cast<double>(np - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  double p(std::size_t j) const { return p_min + static_cast<double>(j) * dp(); }
  bool contains(double x, double p) const;

  // Square grid [-extent, extent]^2 with spacing <= max_spacing.
  static GridSpec symmetric(double extent, double max_spacing);
  // Extent sqrt(2)|alpha| + 5, spacing <= 0.05.
  static GridSpec default_for(std::complex<double> alpha, double max_spacing = 0.05);

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Wigner values on a GridSpec, stored X-major: values[i * np + j].
struct WignerGrid {
  GridSpec spec;
  std::vector<double> values;
  // Set when the grid is too small to hold 5 standard deviations of a
  // constructed Gaussian component.
  bool support_warning = false;

  explicit WignerGrid(GridSpec s = {});

  double& at(std::size_t i, std::size_t j) { return values[i * spec.np + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * spec.np + j]; }
  double cell_area() const { return spec.dx() * spec.dp(); }
  // sum W dX dP
  double integral() const;
};

struct PhaseMoments {
  double norm;
  double mean_x, mean_p;
  double var_x, var_p;
  double mean_occupation;  // <(X^2 + P^2)/2> - 1/2
};

PhaseMoments moments(const WignerGrid& w);

struct EvolutionParams {
  double gamma_down;  // relaxation rate 1/T1, s^-1
  double gamma;       // diffusion rate, s^-1
  double t;           // s

  void validate() const;
  // Width parameter S(t) = (2 Gamma / gamma_down + 1)(1 - exp(-gamma_down t)).
  double spread() const;
  // Amplitude contraction exp(-gamma_down t / 2).
  double contraction() const;
};

enum class EvolutionPath { Identity, Convolution, SmallTime };

// Which evaluation path evolve_wigner takes on a grid with the given spacing.
EvolutionPath evolution_path(const GridSpec& spec, const EvolutionParams& ep);

WignerGrid coherent_wigner(std::complex<double> alpha, const GridSpec& spec);

// Even cat N(|alpha> + |-alpha>).
WignerGrid cat_wigner(std::complex<double> alpha, const GridSpec& spec);

// Closed-form even-cat Wigner value at one point.
double cat_wigner_value(std::complex<double> alpha, double x, double p);

// |alpha|^2 tanh(|alpha|^2), the mean phonon number of the even cat.
double cat_mean_occupation(std::complex<double> alpha);

// Damping + diffusion propagator on the input grid:
//   W(X,P;t) = (1 / pi S) Int du dv W0(u,v) exp(-[(X - c u)^2 + (P - c v)^2] / S),  c = e^{-gamma_down t/2}
// evaluated as a separable quadrature over the input nodes with the Gaussian
// truncated at 6 sqrt(S/2). When sqrt(S/2) < 2 grid spacings the blur is
// instead integrated per output point with Gauss-Hermite nodes over a quintic
// interpolant of W0. Mass that maps outside the input grid is dropped.
WignerGrid evolve_wigner(const WignerGrid& w0, const EvolutionParams& ep);

// Same propagator evaluated directly at arbitrary phase-space points. Cost is
// driven by the number of distinct X and P coordinates, so pixel lattices are cheap.
std::vector<double> evolve_wigner_at(const WignerGrid& w0, const EvolutionParams& ep,
                                     std::span<const PhasePoint> points);

// Bilinear interpolation. Throws ValidationError naming every point outside the grid.
std::vector<double> sample_wigner(const WignerGrid& w, std::span<const PhasePoint> points);

// sum |W| dX dP - 1; zero for states with a non-negative Wigner function.
double negativity(const WignerGrid& w);

// L-infinity distance between two grids on the same spec.
double max_abs_diff(const WignerGrid& a, const WignerGrid& b);

}  // namespace gravicat
