#include "gravicat/oracle_check.hpp"

#include <algorithm>
#include <cmath>

#include "gravicat/fock_oracle.hpp"
#include "gravicat/phase_space.hpp"

namespace gravicat {

std::vector<OracleCase> run_oracle_matrix(const OracleCheckSettings& settings) {
  std::vector<OracleCase> cases;
  const double gd = 1.0 / settings.T1;
  for (double a2 : settings.alpha2) {
    const std::complex<double> alpha{std::sqrt(a2), 0.0};
    const int dim = settings.dim > 0 ? settings.dim : std::max(40, min_cat_dim(alpha) + 15);
    const GridSpec spec = GridSpec::default_for(alpha, settings.spacing);
    const WignerGrid w0 = cat_wigner(alpha, spec);
    const DensityMatrix rho0 = cat_density_matrix(alpha, dim);
    for (double ratio : settings.ratios) {
      const LindbladSpec ls{gd, ratio * gd};
      for (double gt : settings.gamma_t) {
        const double t = gt / gd;
        const WignerGrid wp = evolve_wigner(w0, EvolutionParams{gd, ratio * gd, t});
        const DensityMatrix rho = lindblad_evolve(rho0, ls, t);
        const WignerGrid wf = wigner_from_rho(rho, spec);
        cases.push_back({a2, ratio, gt, max_abs_diff(wp, wf), wp.integral(), rho.truncation_flag()});
      }
    }
  }
  return cases;
}

double vacuum_fixed_point_error(double gamma_t, double spacing) {
  const GridSpec spec = GridSpec::symmetric(6.0, spacing);
  WignerGrid vac(spec);
  for (std::size_t i = 0; i < spec.nx; ++i)
    for (std::size_t j = 0; j < spec.np; ++j) vac.at(i, j) = QuadratureConvention::vacuum(spec.x(i), spec.p(j));
  const double gd = 1.0 / 84e-6;
  const WignerGrid out = evolve_wigner(vac, EvolutionParams{gd, 0.0, gamma_t / gd});
  return max_abs_diff(vac, out);
}

}  // namespace gravicat
