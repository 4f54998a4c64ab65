#pragma once

// Grid-based Bayesian inference of the diffusion rate from time-stamped Wigner
// pixels: Gaussian pixel likelihood, Jeffreys prior from the numerical Fisher
// information, posterior quantiles, and the conversion to an R0 bound.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "gravicat/dp_model.hpp"
#include "gravicat/phase_space.hpp"
#include "gravicat/reconstruction.hpp"

namespace gravicat {

struct Snapshot {
  double t;  // s
  PixelSet pixels;
};

// Snapshots at t > 0 (t = 0 pixels feed the reconstruction, not the likelihood),
// the device record and the t = 0 state they are propagated from.
struct TimedPixelData {
  std::vector<Snapshot> snapshots;
  DeviceParams device{};
  WignerGrid initial;

  void validate() const;
};

// Predicted pixel values per snapshot as a function of Gamma.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual std::size_t snapshot_count() const = 0;
  virtual std::vector<double> predict(std::size_t snapshot, double gamma) const = 0;
};

// The damping + diffusion propagator evaluated at the measured pixel
// coordinates. Predictions are memoized per (Gamma, snapshot) unless caching is off.
class WignerForwardModel final : public ForwardModel {
 public:
  WignerForwardModel(const TimedPixelData& data, bool caching = true);

  std::size_t snapshot_count() const override { return times_.size(); }
  std::vector<double> predict(std::size_t snapshot, double gamma) const override;

 private:
  std::vector<double> compute(std::size_t snapshot, double gamma) const;

  WignerGrid initial_;
  double gamma_down_;
  std::vector<double> times_;
  std::vector<std::vector<PhasePoint>> coords_;
  bool caching_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::uint64_t, std::size_t>, std::vector<double>> cache_;
};

// Log-likelihood split into the residual term and the Gamma-independent
// normalization -n log sqrt(2 pi s^2). Posteriors use only the residual term.
struct LogLikelihood {
  double quadratic = 0.0;
  double normalization = 0.0;
  double total() const { return quadratic + normalization; }
};

LogLikelihood log_likelihood(const ForwardModel& model, std::span<const PixelSet> observed, double gamma);
double log_likelihood(const TimedPixelData& data, DiffusionRate gamma);

// Support of the posterior: strictly increasing, contains 0, at least 200 points.
struct GammaGrid {
  std::vector<double> values;

  void validate() const;
  double max() const { return values.back(); }
  // 0 followed by `points` log-spaced values on [gamma_max * 1e-5, gamma_max].
  static GammaGrid log_spaced(double gamma_max = 1e5, int points = 400);
  static GammaGrid linear(double gamma_max, int points);
};

// Unnormalized Jeffreys prior sqrt(sum_{k,i} (dW_ki/dGamma)^2 / s_k^2). The
// derivative is a central difference with relative step 1e-3; when the forward
// and backward one-sided estimates differ by more than 1%, a Richardson
// extrapolation with a half step is used instead. At Gamma = 0 a second-order
// one-sided formula with step 1e-3 * grid[1] is used.
std::vector<double> jeffreys_prior(const ForwardModel& model, std::span<const double> noise_sigma,
                                   const GammaGrid& grid);

struct Posterior {
  GammaGrid grid;
  std::vector<double> density;  // normalized: trapezoidal integral = 1
  std::vector<double> prior;    // as supplied, unnormalized
  std::vector<double> log_likelihood;  // residual term per grid point

  double integral() const;
  // Trapezoidal cumulative mass at each grid point.
  std::vector<double> cumulative() const;
  double mean() const;
  double stddev() const;
  double mode() const;
  double mass_between(double lo, double hi) const;
};

enum class PriorKind { Jeffreys, Constant };

// p(Gamma | D) proportional to exp(logL - max logL) * prior, normalized by the trapezoidal rule.
Posterior posterior(const ForwardModel& model, std::span<const PixelSet> observed, const GammaGrid& grid,
                    std::span<const double> prior);
Posterior posterior(const ForwardModel& model, std::span<const PixelSet> observed, const GammaGrid& grid,
                    PriorKind prior = PriorKind::Jeffreys);
Posterior posterior(const TimedPixelData& data, const GammaGrid& grid, PriorKind prior = PriorKind::Jeffreys);

// Smallest Gamma whose cumulative mass reaches p, interpolated linearly between
// grid points. The exclusion threshold is quantile(post, 0.95).
double quantile(const Posterior& post, double p);

struct InferenceSettings {
  double gamma_max = 1e5;
  int points = 400;
  double confidence = 0.95;
  PriorKind prior = PriorKind::Jeffreys;
  // Gamma_max is multiplied by 10 while the top decade holds more than 1e-3 of the mass.
  int max_extensions = 4;
};

struct InferenceReport {
  double gamma_star = 0.0;
  double r0_min = 0.0;
  Posterior posterior;
  int extensions = 0;
  double gamma_max = 0.0;
};

InferenceReport infer_bound(const TimedPixelData& data, const InferenceSettings& settings = {});

}  // namespace gravicat
