#pragma once

#include <vector>

#include "gravicat/fock_oracle.hpp"
#include "gravicat/phase_space.hpp"

namespace gravicat {

// Measured Wigner pixels at one time.
struct PixelSet {
  std::vector<PhasePoint> coords;
  std::vector<double> values;
  double s = 0.0;  // noise standard deviation

  std::size_t size() const { return coords.size(); }
  void validate() const;
};

struct ReconstructionSettings {
  int dim = 20;
  int max_iter = 5000;
  double tol = 1e-10;
  double initial_step = 1.0;
};

struct ReconstructionResult {
  DensityMatrix rho;
  double objective = 0.0;  // sum_i (value_i - W_rho(X_i, P_i))^2
  int iterations = 0;
  bool converged = false;
  bool conditioning_warning = false;
  std::vector<double> objective_history;  // one entry per accepted step, starting with the initial guess
};

// Least-squares fit of a physical density matrix to Wigner pixels. Projected
// gradient descent: a Frobenius gradient step on the quadratic objective, then
// projection onto density matrices (Hermitian part, eigenvalues shifted and
// clipped at zero so the trace is one), with a
// backtracking line search halving from settings.initial_step. Stops when an
// accepted step improves the objective by less than tol, or at max_iter.
ReconstructionResult reconstruct_state(const PixelSet& pixels, const ReconstructionSettings& settings = {});

struct NoiseEstimate {
  double sigma;  // maximum-likelihood Gaussian standard deviation of the residuals
  double mean;
  std::size_t count;
};

// Residuals value_i - W_rho(X_i, P_i). Needs at least 30 pixels.
NoiseEstimate estimate_noise_sigma(const PixelSet& pixels, const DensityMatrix& rho);

}  // namespace gravicat
