#pragma once

// Equivalence matrix between the phase-space propagator and the Fock-space
// reference: cat states evolved both ways and compared on a common grid.

#include <vector>

namespace gravicat {

struct OracleCheckSettings {
  std::vector<double> alpha2{1.0, 2.1};      // |alpha|^2 of the initial cat
  std::vector<double> ratios{0.0, 0.5};      // Gamma / gamma_down
  std::vector<double> gamma_t{0.12, 0.48};   // gamma_down * t
  double T1 = 84e-6;                          // s; the comparison is scale free in gamma_down t
  double spacing = 0.05;
  int dim = 0;                                // 0 = max(40, min_cat_dim + 15)
};

struct OracleCase {
  double alpha2;
  double ratio;
  double gamma_t;
  double max_abs_diff;   // L-infinity over the grid
  double norm;           // integral of the propagated Wigner function
  bool truncation_flag;  // Fock truncation too small at the final time
};

std::vector<OracleCase> run_oracle_matrix(const OracleCheckSettings& settings = {});

// Max pointwise |W_t - W_vac| after propagating the vacuum with Gamma = 0.
double vacuum_fixed_point_error(double gamma_t, double spacing = 0.05);

}  // namespace gravicat
