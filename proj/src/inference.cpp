#include "gravicat/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gravicat/error.hpp"
#include "gravicat/kernels.hpp"
#include "gravicat/parallel.hpp"

namespace gravicat {
namespace {

constexpr double kRelativeStep = 1e-3;

double norm2(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

std::vector<double> finite_difference(const ForwardModel& model, std::size_t k, double gamma, double h_zero) {
  if (gamma == 0.0) {
    const double h = h_zero;
    const auto w0 = model.predict(k, 0.0);
    const auto w1 = model.predict(k, h);
    const auto w2 = model.predict(k, 2.0 * h);
    std::vector<double> d(w0.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (-3.0 * w0[i] + 4.0 * w1[i] - w2[i]) / (2.0 * h);
    return d;
  }
  const double h = kRelativeStep * gamma;
  const auto wp = model.predict(k, gamma + h);
  const auto wm = model.predict(k, gamma - h);
  const auto wc = model.predict(k, gamma);
  std::vector<double> central(wc.size()), gap(wc.size());
  for (std::size_t i = 0; i < wc.size(); ++i) {
    central[i] = (wp[i] - wm[i]) / (2.0 * h);
    // forward minus backward one-sided estimate
    gap[i] = ((wp[i] - wc[i]) - (wc[i] - wm[i])) / h;
  }
  if (norm2(gap) <= 0.01 * norm2(central)) return central;
  const auto hp = model.predict(k, gamma + 0.5 * h);
  const auto hm = model.predict(k, gamma - 0.5 * h);
  std::vector<double> d(wc.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double half = (hp[i] - hm[i]) / h;
    d[i] = (4.0 * half - central[i]) / 3.0;
  }
  return d;
}

std::vector<double> trapezoid_cumulative(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> c(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) c[i] = c[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return c;
}

std::vector<PixelSet> pixel_sets(const TimedPixelData& data) {
  std::vector<PixelSet> out;
  for (const Snapshot& s : data.snapshots) out.push_back(s.pixels);
  return out;
}

}  // namespace

void TimedPixelData::validate() const {
  device.validate();
  if (snapshots.empty()) throw ValidationError("no snapshots at t > 0");
  double prev = 0.0;
  for (const Snapshot& s : snapshots) {
    if (!(s.t > prev)) throw ValidationError("snapshot times must be > 0 and strictly increasing");
    prev = s.t;
    s.pixels.validate();
  }
  initial.spec.validate();
}

WignerForwardModel::WignerForwardModel(const TimedPixelData& data, bool caching)
    : initial_(data.initial), gamma_down_(data.device.gamma_down()), caching_(caching) {
  data.validate();
  for (const Snapshot& s : data.snapshots) {
    times_.push_back(s.t);
    coords_.push_back(s.pixels.coords);
    for (const PhasePoint& pt : s.pixels.coords) {
      if (!initial_.spec.contains(pt.x, pt.p)) {
        std::ostringstream msg;
        msg << "pixel (" << pt.x << ", " << pt.p << ") at t = " << s.t << " s lies outside the evolved grid";
        throw ValidationError(msg.str());
      }
    }
  }
}

std::vector<double> WignerForwardModel::compute(std::size_t snapshot, double gamma) const {
  return evolve_wigner_at(initial_, EvolutionParams{gamma_down_, gamma, times_.at(snapshot)}, coords_[snapshot]);
}

std::vector<double> WignerForwardModel::predict(std::size_t snapshot, double gamma) const {
  if (!caching_) return compute(snapshot, gamma);
  const auto key = std::make_pair(std::bit_cast<std::uint64_t>(gamma), snapshot);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto values = compute(snapshot, gamma);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(values)).first->second;
}

LogLikelihood log_likelihood(const ForwardModel& model, std::span<const PixelSet> observed, double gamma) {
  if (observed.size() != model.snapshot_count()) throw ValidationError("snapshot count mismatch");
  LogLikelihood ll;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const PixelSet& px = observed[k];
    if (!(px.s > 0.0)) throw ValidationError("pixel noise s must be > 0 for the likelihood");
    const auto pred = model.predict(k, gamma);
    if (pred.size() != px.values.size()) throw ValidationError("prediction/pixel count mismatch");
    ll.quadratic -= kernels::sum_sq_diff(px.values, pred) / (2.0 * px.s * px.s);
    ll.normalization -= static_cast<double>(px.values.size()) * std::log(std::sqrt(2.0 * std::numbers::pi * px.s * px.s));
  }
  return ll;
}

double log_likelihood(const TimedPixelData& data, DiffusionRate gamma) {
  const WignerForwardModel model(data, false);
  const auto sets = pixel_sets(data);
  return log_likelihood(model, sets, gamma.value()).total();
}

void GammaGrid::validate() const {
  if (values.size() < 200) throw ValidationError("Gamma grid needs at least 200 points");
  if (values.front() != 0.0) throw ValidationError("Gamma grid must start at 0");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1]) || !std::isfinite(values[i])) {
      throw ValidationError("Gamma grid must be finite and strictly increasing");
    }
  }
}

GammaGrid GammaGrid::log_spaced(double gamma_max, int points) {
  if (!(gamma_max > 0.0) || points < 2) throw ValidationError("invalid log-spaced Gamma grid");
  GammaGrid g;
  g.values.push_back(0.0);
  const double lo = std::log(gamma_max * 1e-5);
  const double hi = std::log(gamma_max);
  for (int i = 0; i < points; ++i) {
    g.values.push_back(i + 1 == points ? gamma_max : std::exp(lo + (hi - lo) * i / (points - 1)));
  }
  g.validate();
  return g;
}

GammaGrid GammaGrid::linear(double gamma_max, int points) {
  if (!(gamma_max > 0.0) || points < 2) throw ValidationError("invalid linear Gamma grid");
  GammaGrid g;
  for (int i = 0; i < points; ++i) g.values.push_back(gamma_max * i / (points - 1));
  g.validate();
  return g;
}

std::vector<double> jeffreys_prior(const ForwardModel& model, std::span<const double> noise_sigma,
                                   const GammaGrid& grid) {
  grid.validate();
  if (noise_sigma.size() != model.snapshot_count()) throw ValidationError("one noise level per snapshot expected");
  const double h_zero = kRelativeStep * grid.values[1];
  std::vector<double> prior(grid.values.size());
  parallel_for(grid.values.size(), [&](std::size_t g) {
    const double gamma = grid.values[g];
    double fisher = 0.0;
    for (std::size_t k = 0; k < model.snapshot_count(); ++k) {
      const double s = noise_sigma[k];
      for (double d : finite_difference(model, k, gamma, h_zero)) fisher += (d * d) / (s * s);
    }
    if (!std::isfinite(fisher)) {
      std::ostringstream msg;
      msg << "non-finite Fisher information at Gamma = " << gamma;
      throw NumericalError(msg.str());
    }
    prior[g] = std::sqrt(fisher);
  });
  return prior;
}

double Posterior::integral() const { return trapezoid_cumulative(grid.values, density).back(); }

std::vector<double> Posterior::cumulative() const { return trapezoid_cumulative(grid.values, density); }

double Posterior::mean() const {
  std::vector<double> y(density.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = grid.values[i] * density[i];
  return trapezoid_cumulative(grid.values, y).back();
}

double Posterior::stddev() const {
  const double m = mean();
  std::vector<double> y(density.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (grid.values[i] - m) * (grid.values[i] - m) * density[i];
  return std::sqrt(trapezoid_cumulative(grid.values, y).back());
}

double Posterior::mode() const {
  const auto it = std::max_element(density.begin(), density.end());
  return grid.values[static_cast<std::size_t>(it - density.begin())];
}

double Posterior::mass_between(double lo, double hi) const {
  double mass = 0.0;
  for (std::size_t i = 1; i < density.size(); ++i) {
    const double a = grid.values[i - 1];
    const double b = grid.values[i];
    if (a >= lo && b <= hi) mass += 0.5 * (density[i] + density[i - 1]) * (b - a);
  }
  return mass;
}

Posterior posterior(const ForwardModel& model, std::span<const PixelSet> observed, const GammaGrid& grid,
                    std::span<const double> prior) {
  grid.validate();
  if (prior.size() != grid.values.size()) throw ValidationError("prior and Gamma grid differ in length");
  Posterior post;
  post.grid = grid;
  post.prior.assign(prior.begin(), prior.end());
  post.log_likelihood.resize(grid.values.size());
  parallel_for(grid.values.size(), [&](std::size_t g) {
    post.log_likelihood[g] = log_likelihood(model, observed, grid.values[g]).quadratic;
  });
  const double peak = *std::max_element(post.log_likelihood.begin(), post.log_likelihood.end());
  post.density.resize(grid.values.size());
  for (std::size_t g = 0; g < grid.values.size(); ++g) {
    post.density[g] = std::exp(post.log_likelihood[g] - peak) * post.prior[g];
  }
  const double z = post.integral();
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("posterior is zero or non-finite on the whole Gamma grid");
  for (double& d : post.density) d /= z;
  return post;
}

Posterior posterior(const ForwardModel& model, std::span<const PixelSet> observed, const GammaGrid& grid,
                    PriorKind prior) {
  std::vector<double> p;
  if (prior == PriorKind::Jeffreys) {
    std::vector<double> sigmas;
    for (const PixelSet& px : observed) sigmas.push_back(px.s);
    p = jeffreys_prior(model, sigmas, grid);
  } else {
    p.assign(grid.values.size(), 1.0);
  }
  return posterior(model, observed, grid, p);
}

Posterior posterior(const TimedPixelData& data, const GammaGrid& grid, PriorKind prior) {
  const WignerForwardModel model(data);
  const auto sets = pixel_sets(data);
  return posterior(model, sets, grid, prior);
}

double quantile(const Posterior& post, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probability must lie in (0, 1)");
  const auto c = post.cumulative();
  const auto& x = post.grid.values;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] >= p) {
      const double span = c[i] - c[i - 1];
      const double f = span > 0.0 ? (p - c[i - 1]) / span : 1.0;
      return x[i - 1] + f * (x[i] - x[i - 1]);
    }
  }
  return x.back();
}

InferenceReport infer_bound(const TimedPixelData& data, const InferenceSettings& settings) {
  if (!(settings.confidence > 0.0 && settings.confidence < 1.0)) throw ValidationError("confidence must lie in (0, 1)");
  const WignerForwardModel model(data);
  const auto sets = pixel_sets(data);
  InferenceReport report;
  double gamma_max = settings.gamma_max;
  for (int ext = 0;; ++ext) {
    const GammaGrid grid = GammaGrid::log_spaced(gamma_max, settings.points);
    report.posterior = posterior(model, sets, grid, settings.prior);
    report.extensions = ext;
    report.gamma_max = gamma_max;
    if (ext >= settings.max_extensions || report.posterior.mass_between(gamma_max / 10.0, gamma_max) <= 1e-3) break;
    gamma_max *= 10.0;
  }
  report.gamma_star = quantile(report.posterior, settings.confidence);
  if (!(report.gamma_star > 0.0)) throw NumericalError("exclusion threshold is zero; no finite R0 bound");
  report.r0_min = r0_lower_bound(DiffusionRate(report.gamma_star), data.device).value();
  return report;
}

}  // namespace gravicat
