#include "gravicat/phase_space.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "gravicat/error.hpp"
#include "gravicat/kernels.hpp"
#include "gravicat/parallel.hpp"

namespace gravicat {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kKernelRadiusSigmas = 6.0;
constexpr double kSupportSigmas = 5.0;
constexpr int kHermiteNodes = 16;

// Weights of one output coordinate over a contiguous run of input nodes.
struct AxisWeights {
  std::size_t lo = 0;
  std::vector<double> w;
};

struct Axis {
  double min;
  double h;
  std::size_t n;
};

struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum 1 (weight e^{-x^2}/sqrt(pi))
};

// Golub-Welsch for the physicists' Hermite weight.
const HermiteRule& hermite_rule() {
  static const HermiteRule rule = [] {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kHermiteNodes, kHermiteNodes);
    for (int k = 1; k < kHermiteNodes; ++k) {
      jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    HermiteRule r;
    for (int k = 0; k < kHermiteNodes; ++k) {
      r.nodes.push_back(eig.eigenvalues()(k));
      const double v0 = eig.eigenvectors()(0, k);
      r.weights.push_back(v0 * v0);
    }
    return r;
  }();
  return rule;
}

// Convolution path: weight of input node u for output coordinate `out` is
// h exp(-(out - c u)^2 / S) / sqrt(pi S), renormalized so that the full
// (untruncated-lattice) window sums to 1/c.
AxisWeights convolution_weights(const Axis& axis, double out, double c, double spread) {
  const double sigma = std::sqrt(spread / 2.0);
  const double centre = (out / c - axis.min) / axis.h;
  const double radius = kKernelRadiusSigmas * sigma / c / axis.h;
  const long k_lo = static_cast<long>(std::ceil(centre - radius));
  const long k_hi = static_cast<long>(std::floor(centre + radius));
  const double pref = axis.h / std::sqrt(kPi * spread);

  double window_sum = 0.0;
  AxisWeights aw;
  const long n = static_cast<long>(axis.n);
  const long in_lo = std::max(k_lo, 0L);
  const long in_hi = std::min(k_hi, n - 1);
  if (in_lo <= in_hi) {
    aw.lo = static_cast<std::size_t>(in_lo);
    aw.w.resize(static_cast<std::size_t>(in_hi - in_lo + 1));
  }
  for (long k = k_lo; k <= k_hi; ++k) {
    const double u = axis.min + static_cast<double>(k) * axis.h;
    const double d = out - c * u;
    const double wk = pref * std::exp(-d * d / spread);
    window_sum += wk;
    if (k >= in_lo && k <= in_hi) aw.w[static_cast<std::size_t>(k - in_lo)] = wk;
  }
  if (window_sum > 0.0) {
    const double scale = 1.0 / (window_sum * c);
    for (double& v : aw.w) v *= scale;
  }
  return aw;
}

constexpr int kInterpPoints = 6;

// Six-point Lagrange interpolation weights at fractional offset t in [0, 1)
// for nodes at offsets -2 .. 3.
void lagrange_weights(double t, double (&w)[kInterpPoints]) {
  for (int m = 0; m < kInterpPoints; ++m) {
    const double xm = m - 2;
    double v = 1.0;
    for (int k = 0; k < kInterpPoints; ++k) {
      if (k != m) v *= (t - (k - 2)) / (xm - (k - 2));
    }
    w[m] = v;
  }
}

// Small-time path: Gauss-Hermite quadrature of the narrow Gaussian blur over a
// quintic interpolant of the (rescaled) input axis.
AxisWeights small_time_weights(const Axis& axis, double out, double c, double spread) {
  const HermiteRule& rule = hermite_rule();
  const double step = std::sqrt(spread);  // sqrt(2) sigma
  std::map<long, double> acc;
  for (int k = 0; k < kHermiteNodes; ++k) {
    const double src = (out - step * rule.nodes[k]) / c;
    const double q = (src - axis.min) / axis.h;
    const double base = std::floor(q);
    double lw[kInterpPoints];
    lagrange_weights(q - base, lw);
    const long i0 = static_cast<long>(base);
    for (int m = 0; m < kInterpPoints; ++m) {
      const long idx = i0 - 2 + m;
      if (idx < 0 || idx >= static_cast<long>(axis.n)) continue;
      acc[idx] += rule.weights[k] * lw[m] / c;
    }
  }
  AxisWeights aw;
  if (acc.empty()) return aw;
  aw.lo = static_cast<std::size_t>(acc.begin()->first);
  aw.w.assign(static_cast<std::size_t>(acc.rbegin()->first - acc.begin()->first + 1), 0.0);
  for (const auto& [idx, v] : acc) aw.w[static_cast<std::size_t>(idx) - aw.lo] = v;
  return aw;
}

std::vector<AxisWeights> axis_weights(const Axis& axis, std::span<const double> outs, const EvolutionParams& ep,
                                      EvolutionPath path) {
  const double c = ep.contraction();
  const double spread = ep.spread();
  std::vector<AxisWeights> result(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    result[i] = path == EvolutionPath::Convolution ? convolution_weights(axis, outs[i], c, spread)
                                                   : small_time_weights(axis, outs[i], c, spread);
  }
  return result;
}

// Applies the separable map: out(i, j) = sum_u sum_v wx_i(u) W0(u, v) wp_j(v)
// for the requested (x index, p index) pairs.
std::vector<double> apply_separable(const WignerGrid& w0, const std::vector<AxisWeights>& wx,
                                    const std::vector<AxisWeights>& wp,
                                    std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  const std::size_t nx = w0.spec.nx;
  const std::size_t np = w0.spec.np;
  // Pass 1: contract over P. partial[j * nx + u]
  std::vector<double> partial(wp.size() * nx, 0.0);
  parallel_for(nx, [&](std::size_t u) {
    const double* row = w0.values.data() + u * np;
    for (std::size_t j = 0; j < wp.size(); ++j) {
      const AxisWeights& k = wp[j];
      partial[j * nx + u] = k.w.empty() ? 0.0 : kernels::active().dot(row + k.lo, k.w.data(), k.w.size());
    }
  });
  // Pass 2: contract over X.
  std::vector<double> out(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t n) {
    const auto [i, j] = pairs[n];
    const AxisWeights& k = wx[i];
    out[n] = k.w.empty() ? 0.0 : kernels::active().dot(partial.data() + j * nx + k.lo, k.w.data(), k.w.size());
  });
  return out;
}

void require_same_spec(const WignerGrid& a, const WignerGrid& b) {
  if (!(a.spec == b.spec)) throw ValidationError("Wigner grids have different grid specs");
}

}  // namespace

double QuadratureConvention::x_of(std::complex<double> alpha) { return std::numbers::sqrt2 * alpha.real(); }
double QuadratureConvention::p_of(std::complex<double> alpha) { return std::numbers::sqrt2 * alpha.imag(); }
std::complex<double> QuadratureConvention::alpha_of(double x, double p) {
  return {x / std::numbers::sqrt2, p / std::numbers::sqrt2};
}
double QuadratureConvention::vacuum(double x, double p) { return std::exp(-x * x - p * p) / kPi; }

void GridSpec::validate() const {
  if (nx < 16 || np < 16) throw ValidationError("grid needs at least 16 points per axis");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(p_min) || !std::isfinite(p_max)) {
    throw ValidationError("grid bounds must be finite");
  }
  if (!(x_max > x_min) || !(p_max > p_min)) throw ValidationError("grid bounds must be increasing");
}

bool GridSpec::contains(double x, double p) const {
  const double ex = 1e-12 * (x_max - x_min);
  const double ep = 1e-12 * (p_max - p_min);
  return x >= x_min - ex && x <= x_max + ex && p >= p_min - ep && p <= p_max + ep;
}

GridSpec GridSpec::symmetric(double extent, double max_spacing) {
  if (!(extent > 0.0) || !(max_spacing > 0.0)) throw ValidationError("grid extent and spacing must be > 0");
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * extent / max_spacing - 1e-9)) + 1;
  GridSpec g{-extent, extent, -extent, extent, std::max<std::size_t>(n, 16), std::max<std::size_t>(n, 16)};
  return g;
}

GridSpec GridSpec::default_for(std::complex<double> alpha, double max_spacing) {
  return symmetric(std::numbers::sqrt2 * std::abs(alpha) + 5.0, max_spacing);
}

WignerGrid::WignerGrid(GridSpec s) : spec(s), values(s.nx * s.np, 0.0) {}

double WignerGrid::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * cell_area();
}

PhaseMoments moments(const WignerGrid& w) {
  double n0 = 0, sx = 0, sp = 0, sxx = 0, spp = 0;
  for (std::size_t i = 0; i < w.spec.nx; ++i) {
    const double x = w.spec.x(i);
    for (std::size_t j = 0; j < w.spec.np; ++j) {
      const double p = w.spec.p(j);
      const double v = w.at(i, j);
      n0 += v;
      sx += v * x;
      sp += v * p;
      sxx += v * x * x;
      spp += v * p * p;
    }
  }
  const double da = w.cell_area();
  PhaseMoments m{};
  m.norm = n0 * da;
  m.mean_x = sx * da / m.norm;
  m.mean_p = sp * da / m.norm;
  m.var_x = sxx * da / m.norm - m.mean_x * m.mean_x;
  m.var_p = spp * da / m.norm - m.mean_p * m.mean_p;
  m.mean_occupation = 0.5 * (sxx + spp) * da / m.norm - 0.5;
  return m;
}

void EvolutionParams::validate() const {
  if (!(gamma_down > 0.0) || !std::isfinite(gamma_down)) throw ValidationError("gamma_down must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be >= 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("evolution time must be >= 0");
}

double EvolutionParams::spread() const {
  return (2.0 * gamma / gamma_down + 1.0) * (-std::expm1(-gamma_down * t));
}

double EvolutionParams::contraction() const { return std::exp(-gamma_down * t / 2.0); }

EvolutionPath evolution_path(const GridSpec& spec, const EvolutionParams& ep) {
  if (ep.t == 0.0) return EvolutionPath::Identity;
  const double sigma = std::sqrt(ep.spread() / 2.0);
  const double h = std::max(spec.dx(), spec.dp());
  return sigma < 2.0 * h ? EvolutionPath::SmallTime : EvolutionPath::Convolution;
}

WignerGrid coherent_wigner(std::complex<double> alpha, const GridSpec& spec) {
  spec.validate();
  WignerGrid w(spec);
  const double x0 = QuadratureConvention::x_of(alpha);
  const double p0 = QuadratureConvention::p_of(alpha);
  for (std::size_t i = 0; i < spec.nx; ++i) {
    const double dx = spec.x(i) - x0;
    for (std::size_t j = 0; j < spec.np; ++j) {
      const double dp = spec.p(j) - p0;
      w.at(i, j) = std::exp(-dx * dx - dp * dp) / kPi;
    }
  }
  const double margin = kSupportSigmas / std::numbers::sqrt2;
  w.support_warning = !(x0 - margin >= spec.x_min && x0 + margin <= spec.x_max && p0 - margin >= spec.p_min &&
                        p0 + margin <= spec.p_max);
  return w;
}

double cat_wigner_value(std::complex<double> alpha, double x, double p) {
  const double x0 = QuadratureConvention::x_of(alpha);
  const double p0 = QuadratureConvention::p_of(alpha);
  const double norm = 1.0 / (2.0 * (1.0 + std::exp(-2.0 * std::norm(alpha))) * kPi);
  const double plus = std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0));
  const double minus = std::exp(-(x + x0) * (x + x0) - (p + p0) * (p + p0));
  const double fringe = 2.0 * std::exp(-x * x - p * p) * std::cos(2.0 * (x0 * p - p0 * x));
  return norm * (plus + minus + fringe);
}

WignerGrid cat_wigner(std::complex<double> alpha, const GridSpec& spec) {
  spec.validate();
  WignerGrid w(spec);
  for (std::size_t i = 0; i < spec.nx; ++i) {
    for (std::size_t j = 0; j < spec.np; ++j) w.at(i, j) = cat_wigner_value(alpha, spec.x(i), spec.p(j));
  }
  const double x0 = QuadratureConvention::x_of(alpha);
  const double p0 = QuadratureConvention::p_of(alpha);
  const double margin = kSupportSigmas / std::numbers::sqrt2;
  const double ax = std::abs(x0) + margin;
  const double ap = std::abs(p0) + margin;
  w.support_warning = !(-ax >= spec.x_min && ax <= spec.x_max && -ap >= spec.p_min && ap <= spec.p_max);
  return w;
}

double cat_mean_occupation(std::complex<double> alpha) {
  const double n = std::norm(alpha);
  return n * std::tanh(n);
}

WignerGrid evolve_wigner(const WignerGrid& w0, const EvolutionParams& ep) {
  ep.validate();
  w0.spec.validate();
  const EvolutionPath path = evolution_path(w0.spec, ep);
  if (path == EvolutionPath::Identity) return w0;

  const GridSpec& g = w0.spec;
  std::vector<double> xs(g.nx), ps(g.np);
  for (std::size_t i = 0; i < g.nx; ++i) xs[i] = g.x(i);
  for (std::size_t j = 0; j < g.np; ++j) ps[j] = g.p(j);
  const auto wx = axis_weights({g.x_min, g.dx(), g.nx}, xs, ep, path);
  const auto wp = axis_weights({g.p_min, g.dp(), g.np}, ps, ep, path);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(g.nx * g.np);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.np; ++j) pairs.emplace_back(i, j);

  WignerGrid out(g);
  out.values = apply_separable(w0, wx, wp, pairs);
  return out;
}

std::vector<double> evolve_wigner_at(const WignerGrid& w0, const EvolutionParams& ep,
                                     std::span<const PhasePoint> points) {
  ep.validate();
  w0.spec.validate();
  const GridSpec& g = w0.spec;
  // t = 0 falls through to the small-time path, which then reduces to quintic interpolation.
  EvolutionPath path = evolution_path(g, ep);
  if (path == EvolutionPath::Identity) path = EvolutionPath::SmallTime;

  std::map<double, std::size_t> ux, up;
  for (const PhasePoint& pt : points) {
    ux.emplace(pt.x, 0);
    up.emplace(pt.p, 0);
  }
  std::vector<double> xs, ps;
  for (auto& [v, idx] : ux) {
    idx = xs.size();
    xs.push_back(v);
  }
  for (auto& [v, idx] : up) {
    idx = ps.size();
    ps.push_back(v);
  }
  const auto wx = axis_weights({g.x_min, g.dx(), g.nx}, xs, ep, path);
  const auto wp = axis_weights({g.p_min, g.dp(), g.np}, ps, ep, path);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(points.size());
  for (const PhasePoint& pt : points) pairs.emplace_back(ux.at(pt.x), up.at(pt.p));
  return apply_separable(w0, wx, wp, pairs);
}

std::vector<double> sample_wigner(const WignerGrid& w, std::span<const PhasePoint> points) {
  const GridSpec& g = w.spec;
  std::ostringstream bad;
  std::size_t n_bad = 0;
  for (const PhasePoint& pt : points) {
    if (!g.contains(pt.x, pt.p)) {
      if (n_bad < 20) bad << (n_bad ? ", " : "") << "(" << pt.x << ", " << pt.p << ")";
      ++n_bad;
    }
  }
  if (n_bad > 0) {
    throw ValidationError(std::to_string(n_bad) + " point(s) outside the Wigner grid: " + bad.str());
  }
  std::vector<double> out;
  out.reserve(points.size());
  for (const PhasePoint& pt : points) {
    const double qx = std::clamp((pt.x - g.x_min) / g.dx(), 0.0, static_cast<double>(g.nx - 1));
    const double qp = std::clamp((pt.p - g.p_min) / g.dp(), 0.0, static_cast<double>(g.np - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(qx), g.nx - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(qp), g.np - 2);
    const double fx = qx - static_cast<double>(i);
    const double fp = qp - static_cast<double>(j);
    out.push_back((1 - fx) * (1 - fp) * w.at(i, j) + fx * (1 - fp) * w.at(i + 1, j) +
                  (1 - fx) * fp * w.at(i, j + 1) + fx * fp * w.at(i + 1, j + 1));
  }
  return out;
}

double negativity(const WignerGrid& w) {
  double sum = 0.0;
  for (double v : w.values) sum += std::abs(v);
  return sum * w.cell_area() - 1.0;
}

double max_abs_diff(const WignerGrid& a, const WignerGrid& b) {
  require_same_spec(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) m = std::max(m, std::abs(a.values[k] - b.values[k]));
  return m;
}

}  // namespace gravicat
