#include "gravicat/reconstruction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

#include "gravicat/error.hpp"
#include "gravicat/parallel.hpp"

namespace gravicat {
namespace {

// Real parameterization of a Hermitian dim x dim matrix: the diagonal first,
// then (Re, Im) of each upper-triangular element in row order.
struct HermitianLayout {
  int dim;
  int size() const { return dim * dim; }

  Eigen::MatrixXcd to_matrix(const Eigen::VectorXd& x) const {
    Eigen::MatrixXcd m(dim, dim);
    int k = dim;
    for (int i = 0; i < dim; ++i) m(i, i) = x(i);
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j, k += 2) {
        m(i, j) = {x(k), x(k + 1)};
        m(j, i) = std::conj(m(i, j));
      }
    }
    return m;
  }

  Eigen::VectorXd to_params(const Eigen::MatrixXcd& m) const {
    Eigen::VectorXd x(size());
    int k = dim;
    for (int i = 0; i < dim; ++i) x(i) = m(i, i).real();
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j, k += 2) {
        const std::complex<double> v = 0.5 * (m(i, j) + std::conj(m(j, i)));
        x(k) = v.real();
        x(k + 1) = v.imag();
      }
    }
    return x;
  }
};

// Row i maps the parameters to W_rho(X_i, P_i).
Eigen::MatrixXd design_matrix(const PixelSet& pixels, const HermitianLayout& layout) {
  const int dim = layout.dim;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pixels.size()), layout.size());
  parallel_for(pixels.size(), [&](std::size_t i) {
    const Eigen::MatrixXcd basis = wigner_basis(pixels.coords[i], dim);
    const auto row = static_cast<Eigen::Index>(i);
    int k = dim;
    for (int m = 0; m < dim; ++m) a(row, m) = basis(m, m).real();
    for (int m = 0; m < dim; ++m) {
      for (int n = m + 1; n < dim; ++n, k += 2) {
        a(row, k) = 2.0 * basis(m, n).real();
        a(row, k + 1) = -2.0 * basis(m, n).imag();
      }
    }
  });
  return a;
}

// Euclidean projection of the eigenvalues onto the probability simplex: shift
// by a common threshold, clip at zero, unit trace.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& lam) {
  std::vector<double> u(lam.data(), lam.data() + lam.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (lam.array() - theta).cwiseMax(0.0);
}

Eigen::MatrixXcd project_physical(const Eigen::MatrixXcd& m) {
  const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  Eigen::VectorXd lam = project_simplex(eig.eigenvalues());
  lam /= lam.sum();
  Eigen::MatrixXcd out = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint());
}

}  // namespace

void PixelSet::validate() const {
  if (coords.size() != values.size()) throw ValidationError("pixel coordinates and values differ in length");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i].x) || !std::isfinite(coords[i].p) || !std::isfinite(values[i])) {
      throw ValidationError("pixel " + std::to_string(i) + " is not finite");
    }
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("pixel noise s must be > 0");
}

ReconstructionResult reconstruct_state(const PixelSet& pixels, const ReconstructionSettings& settings) {
  pixels.validate();
  if (settings.dim < 8) throw ValidationError("reconstruction needs dim >= 8");
  const HermitianLayout layout{settings.dim};
  if (pixels.size() < static_cast<std::size_t>(layout.size())) {
    throw ValidationError("reconstruction needs at least dim^2 = " + std::to_string(layout.size()) +
                          " pixels, got " + std::to_string(pixels.size()));
  }
  if (settings.max_iter < 1 || !(settings.tol >= 0.0) || !(settings.initial_step > 0.0)) {
    throw ValidationError("invalid reconstruction settings");
  }

  const Eigen::MatrixXd a = design_matrix(pixels, layout);
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(pixels.values.data(),
                                                              static_cast<Eigen::Index>(pixels.values.size()));
  // Normal-equation form: f(x) = v.v - 2 x.(A^T v) + x.(A^T A) x.
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd atv = a.transpose() * v;
  const double vv = v.squaredNorm();
  auto objective = [&](const Eigen::VectorXd& x) { return vv - 2.0 * x.dot(atv) + x.dot(gram * x); };

  ReconstructionResult result;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    result.conditioning_warning = !(hi > 0.0) || lo / hi < 1e-12;
  }

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(settings.dim, settings.dim) / settings.dim;
  Eigen::VectorXd x = layout.to_params(rho);
  // Off-diagonal parameters appear twice in the Frobenius norm; scaling their
  // gradient by 1/2 makes the step the Frobenius gradient, matching the projection.
  Eigen::VectorXd metric = Eigen::VectorXd::Constant(layout.size(), 0.5);
  metric.head(settings.dim).setOnes();
  double f = objective(x);
  result.objective_history.push_back(f);

  int it = 0;
  for (; it < settings.max_iter; ++it) {
    const Eigen::VectorXd grad = 2.0 * (gram * x - atv).cwiseProduct(metric);
    double step = settings.initial_step;
    bool accepted = false;
    Eigen::VectorXd x_try;
    double f_try = f;
    while (step > 1e-30) {
      x_try = layout.to_params(project_physical(layout.to_matrix(x - step * grad)));
      f_try = objective(x_try);
      if (f_try < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    const double improvement = f - f_try;
    x = std::move(x_try);
    f = f_try;
    result.objective_history.push_back(f);
    if (improvement < settings.tol) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.iterations = it;
  result.rho = DensityMatrix(project_physical(layout.to_matrix(x)));
  result.objective = (v - a * layout.to_params(result.rho.matrix())).squaredNorm();
  return result;
}

NoiseEstimate estimate_noise_sigma(const PixelSet& pixels, const DensityMatrix& rho) {
  if (pixels.coords.size() != pixels.values.size()) {
    throw ValidationError("pixel coordinates and values differ in length");
  }
  if (pixels.size() < 30) {
    throw ValidationError("noise estimate needs at least 30 pixels, got " + std::to_string(pixels.size()));
  }
  const std::vector<double> model = wigner_at(rho, pixels.coords);
  const auto n = static_cast<double>(pixels.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) mean += pixels.values[i] - model[i];
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double d = pixels.values[i] - model[i] - mean;
    var += d * d;
  }
  return {std::sqrt(var / n), mean, pixels.size()};
}

}  // namespace gravicat
