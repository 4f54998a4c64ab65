#include "gravicat/fock_oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gravicat/error.hpp"
#include "gravicat/parallel.hpp"

namespace gravicat {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Laguerre-type recurrence for the Wigner function of |m><n| (m <= n), visiting
// each (m, n) once. visit(m, n, L_mn).
template <typename Visit>
void wigner_recurrence(double x, double p, int dim, std::vector<cd>& work, Visit&& visit) {
  const cd a(x / std::numbers::sqrt2, p / std::numbers::sqrt2);
  const cd two_a = 2.0 * a;
  const cd two_ac = 2.0 * std::conj(a);
  work.assign(static_cast<std::size_t>(dim), cd{});
  work[0] = std::exp(-2.0 * std::norm(a)) / kPi;
  visit(0, 0, work[0]);
  for (int n = 1; n < dim; ++n) {
    work[n] = two_a * work[n - 1] / std::sqrt(static_cast<double>(n));
    visit(0, n, work[n]);
  }
  for (int m = 1; m < dim; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    cd temp = work[m];
    work[m] = (two_ac * temp - sm * work[m - 1]) / sm;
    visit(m, m, work[m]);
    for (int n = m + 1; n < dim; ++n) {
      const cd next = (two_a * work[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = work[n];
      work[n] = next;
      visit(m, n, work[n]);
    }
  }
}

double wigner_point(const Eigen::MatrixXcd& rho, double x, double p, std::vector<cd>& work) {
  double w = 0.0;
  wigner_recurrence(x, p, static_cast<int>(rho.rows()), work, [&](int m, int n, cd l) {
    w += m == n ? rho(m, m).real() * l.real() : 2.0 * (rho(m, n) * l).real();
  });
  return w;
}

// d rho / dt for the damping + diffusion generator, element-wise (a is bidiagonal).
void lindblad_rhs(const Eigen::MatrixXcd& r, double k_down, double k_up, Eigen::MatrixXcd& out) {
  const int n = static_cast<int>(r.rows());
  for (int col = 0; col < n; ++col) {
    for (int row = 0; row < n; ++row) {
      cd v{};
      // k_down * (a rho a^dag - {a^dag a, rho}/2)
      if (row + 1 < n && col + 1 < n) {
        v += k_down * std::sqrt(static_cast<double>((row + 1) * (col + 1))) * r(row + 1, col + 1);
      }
      v -= k_down * 0.5 * static_cast<double>(row + col) * r(row, col);
      // k_up * (a^dag rho a - {a a^dag, rho}/2); a a^dag = diag(n+1) truncated to 0 at the top level
      if (k_up != 0.0) {
        if (row > 0 && col > 0) v += k_up * std::sqrt(static_cast<double>(row * col)) * r(row - 1, col - 1);
        const double aad_row = row + 1 < n ? row + 1.0 : 0.0;
        const double aad_col = col + 1 < n ? col + 1.0 : 0.0;
        v -= k_up * 0.5 * (aad_row + aad_col) * r(row, col);
      }
      out(row, col) = v;
    }
  }
}

}  // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) throw ValidationError("density matrix must be square and non-empty");
}

double DensityMatrix::hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double DensityMatrix::top_population() const {
  const int n = dim();
  double pop = m_(n - 1, n - 1).real();
  if (n >= 2) pop += m_(n - 2, n - 2).real();
  return pop;
}

double DensityMatrix::mean_occupation() const {
  double s = 0.0;
  for (int n = 0; n < dim(); ++n) s += n * m_(n, n).real();
  return s;
}

void DensityMatrix::check_invariants() const {
  std::ostringstream msg;
  const double herm = hermiticity_error();
  const double drift = std::abs(trace() - 1.0);
  const double lam = min_eigenvalue();
  if (herm > 1e-12) msg << " hermiticity error " << herm << ";";
  if (drift > 1e-9) msg << " trace drift " << drift << ";";
  if (lam < -1e-9) msg << " minimum eigenvalue " << lam << ";";
  if (!msg.str().empty()) throw NumericalError("density matrix invariant violated:" + msg.str());
}

DensityMatrix DensityMatrix::fock(int n, int dim) {
  if (n < 0 || n >= dim) throw ValidationError("Fock level outside truncation");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  m(n, n) = 1.0;
  return DensityMatrix(std::move(m));
}

void LindbladSpec::validate() const {
  if (!(gamma_down > 0.0) || !std::isfinite(gamma_down)) throw ValidationError("gamma_down must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be >= 0");
}

int min_cat_dim(std::complex<double> alpha) {
  const double n = std::norm(alpha);
  return static_cast<int>(std::ceil(n + 7.0 * std::sqrt(n) + 10.0));
}

Eigen::VectorXcd cat_state_vector(std::complex<double> alpha, int dim) {
  if (dim < min_cat_dim(alpha)) {
    throw ValidationError("Fock truncation " + std::to_string(dim) + " too small for this cat; need >= " +
                          std::to_string(min_cat_dim(alpha)));
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  cd coeff = 1.0;  // alpha^n / sqrt(n!)
  for (int n = 0; n < dim; ++n) {
    if (n > 0) coeff *= alpha / std::sqrt(static_cast<double>(n));
    if (n % 2 == 0) psi(n) = coeff;
  }
  psi /= psi.norm();
  return psi;
}

DensityMatrix cat_density_matrix(std::complex<double> alpha, int dim) {
  const Eigen::VectorXcd psi = cat_state_vector(alpha, dim);
  return DensityMatrix(psi * psi.adjoint());
}

double max_stable_step(const LindbladSpec& spec, int dim) {
  return 0.01 / (spec.gamma_down + 2.0 * spec.gamma * (dim + 1));
}

double default_step(const LindbladSpec& spec, int dim) {
  // 1% of the generator's spectral radius, which for Gamma = 0 is (dim - 1) gamma_down
  // rather than the gamma_down of the stability bound.
  const double radius = (spec.gamma + spec.gamma_down) * (dim - 1) + spec.gamma * dim;
  return std::min(max_stable_step(spec, dim), 0.01 / radius);
}

DensityMatrix lindblad_evolve(const DensityMatrix& rho, const LindbladSpec& spec, double t, double dt) {
  spec.validate();
  if (!(t >= 0.0)) throw ValidationError("evolution time must be >= 0");
  const double bound = max_stable_step(spec, rho.dim());
  if (dt <= 0.0) dt = default_step(spec, rho.dim());
  if (dt > bound * (1.0 + 1e-12)) {
    throw ValidationError("RK4 step " + std::to_string(dt) + " exceeds stability bound " + std::to_string(bound));
  }
  if (t == 0.0) return rho;

  const auto steps = static_cast<long>(std::ceil(t / dt));
  const double h = t / static_cast<double>(steps);
  const double k_down = spec.gamma + spec.gamma_down;
  const double k_up = spec.gamma;
  const int n = rho.dim();

  Eigen::MatrixXcd r = rho.matrix();
  Eigen::MatrixXcd k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
  for (long s = 0; s < steps; ++s) {
    lindblad_rhs(r, k_down, k_up, k1);
    tmp = r + (0.5 * h) * k1;
    lindblad_rhs(tmp, k_down, k_up, k2);
    tmp = r + (0.5 * h) * k2;
    lindblad_rhs(tmp, k_down, k_up, k3);
    tmp = r + h * k3;
    lindblad_rhs(tmp, k_down, k_up, k4);
    r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  DensityMatrix out(std::move(r));
  const double drift = std::abs(out.trace() - rho.trace());
  if (drift > 1e-9) {
    throw NumericalError("Lindblad integration failed: trace drift " + std::to_string(drift));
  }
  out.check_invariants();
  return out;
}

WignerGrid wigner_from_rho(const DensityMatrix& rho, const GridSpec& spec) {
  spec.validate();
  WignerGrid w(spec);
  parallel_for(spec.nx, [&](std::size_t i) {
    std::vector<cd> work;
    const double x = spec.x(i);
    for (std::size_t j = 0; j < spec.np; ++j) w.at(i, j) = wigner_point(rho.matrix(), x, spec.p(j), work);
  });
  return w;
}

std::vector<double> wigner_at(const DensityMatrix& rho, std::span<const PhasePoint> points) {
  std::vector<double> out(points.size());
  parallel_for(points.size(), [&](std::size_t k) {
    std::vector<cd> work;
    out[k] = wigner_point(rho.matrix(), points[k].x, points[k].p, work);
  });
  return out;
}

double wigner_by_displacement(const DensityMatrix& rho, PhasePoint point) {
  const cd beta = QuadratureConvention::alpha_of(point.x, point.p);
  const double b = std::abs(beta);
  const int work_dim = rho.dim() + static_cast<int>(std::ceil(b * b + 12.0 * b + 30.0));
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(work_dim, work_dim);
  for (int k = 0; k + 1 < work_dim; ++k) {
    const double s = std::sqrt(static_cast<double>(k + 1));
    gen(k + 1, k) += beta * s;             // beta a^dag
    gen(k, k + 1) -= std::conj(beta) * s;  // -beta* a
  }
  const Eigen::MatrixXcd disp = gen.exp();
  const int d = rho.dim();
  // (D^dag rho D)_{nn} with rho supported on the first d levels.
  const Eigen::MatrixXcd top = disp.topRows(d);
  const Eigen::MatrixXcd displaced = top.adjoint() * rho.matrix() * top;
  double w = 0.0;
  for (int n = 0; n < work_dim; ++n) w += (n % 2 == 0 ? 1.0 : -1.0) * displaced(n, n).real();
  return w / kPi;
}

Eigen::MatrixXcd wigner_basis(PhasePoint point, int dim) {
  Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<cd> work;
  wigner_recurrence(point.x, point.p, dim, work, [&](int m, int n, cd l) { basis(m, n) = l; });
  return basis;
}

double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& psi) {
  if (psi.size() != rho.dim()) throw ValidationError("state vector and density matrix dimensions differ");
  return (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
}

}  // namespace gravicat
