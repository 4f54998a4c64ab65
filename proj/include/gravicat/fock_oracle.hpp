#pragma once

// Brute-force reference for the phase-space propagator: truncated Fock-space
// density matrices, RK4 integration of the damping + diffusion master equation
//   d rho/dt = (Gamma + gamma_down) D[a] rho + Gamma D[a^dag] rho,
// and the Wigner transform via displaced parity.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "gravicat/phase_space.hpp"

namespace gravicat {

class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return m_; }

  double trace() const { return m_.trace().real(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  // Population of the two highest Fock levels.
  double top_population() const;
  // Top-level population exceeds 1e-6: the truncation is too small for this state.
  bool truncation_flag() const { return top_population() > 1e-6; }
  double mean_occupation() const;
  double population(int n) const { return m_(n, n).real(); }

  // Throws NumericalError when Hermiticity (1e-12), trace (1e-9) or
  // positivity (-1e-9) is violated.
  void check_invariants() const;

  static DensityMatrix fock(int n, int dim);

 private:
  Eigen::MatrixXcd m_;
};

struct LindbladSpec {
  double gamma_down;  // s^-1
  double gamma;       // s^-1
  void validate() const;
};

// Minimal truncation the cat constructor accepts: |alpha|^2 + 7|alpha| + 10.
int min_cat_dim(std::complex<double> alpha);

// Normalized even cat N(|alpha> + |-alpha>), renormalized after truncation.
Eigen::VectorXcd cat_state_vector(std::complex<double> alpha, int dim);
DensityMatrix cat_density_matrix(std::complex<double> alpha, int dim);

// Largest RK4 step satisfying dt <= 0.01 / (gamma_down + 2 Gamma (dim + 1)).
double max_stable_step(const LindbladSpec& spec, int dim);

// min(max_stable_step, 0.01 / spectral radius of the generator).
double default_step(const LindbladSpec& spec, int dim);

// Integrates to time t with a fixed RK4 step no larger than dt (dt <= 0 picks
// default_step). Throws ValidationError if dt exceeds the stability bound and
// NumericalError if the result drifts outside the density-matrix invariants.
DensityMatrix lindblad_evolve(const DensityMatrix& rho, const LindbladSpec& spec, double t, double dt = 0.0);

// Wigner function W = (1/pi) Tr[Pi D(beta)^dag rho D(beta)], beta = (X + iP)/sqrt(2).
// Evaluated with the closed-form matrix elements of the displaced parity
// operator (Laguerre recurrence), which is exact within the truncation.
WignerGrid wigner_from_rho(const DensityMatrix& rho, const GridSpec& spec);
std::vector<double> wigner_at(const DensityMatrix& rho, std::span<const PhasePoint> points);

// Same quantity with D(beta) = exp(beta a^dag - beta* a) built by a dense matrix
// exponential in an enlarged Fock space. Slow; used as a cross-check.
double wigner_by_displacement(const DensityMatrix& rho, PhasePoint point);

// Upper-triangular (m <= n) coefficients L such that
//   W(X, P) = sum_m rho_mm Re L_mm + 2 sum_{m<n} Re(rho_mn L_mn).
Eigen::MatrixXcd wigner_basis(PhasePoint point, int dim);

// <psi| rho |psi>
double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& psi);

}  // namespace gravicat
