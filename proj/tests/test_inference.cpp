#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "gravicat/dataio.hpp"
#include "gravicat/error.hpp"
#include "gravicat/inference.hpp"

using namespace gravicat;

namespace {

const std::complex<double> kCat{std::sqrt(2.1), 0.0};

// Prediction c_i * Gamma + b_i for each pixel.
class AffineModel final : public ForwardModel {
 public:
  AffineModel(std::vector<double> slope, std::vector<double> offset) : slope_(std::move(slope)), offset_(std::move(offset)) {}
  std::size_t snapshot_count() const override { return 1; }
  std::vector<double> predict(std::size_t, double gamma) const override {
    std::vector<double> out(slope_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = slope_[i] * gamma + offset_[i];
    return out;
  }

 private:
  std::vector<double> slope_, offset_;
};

class ScaledModel final : public ForwardModel {
 public:
  ScaledModel(const ForwardModel& inner, double c) : inner_(inner), c_(c) {}
  std::size_t snapshot_count() const override { return inner_.snapshot_count(); }
  std::vector<double> predict(std::size_t k, double gamma) const override {
    auto v = inner_.predict(k, gamma);
    for (double& x : v) x *= c_;
    return v;
  }

 private:
  const ForwardModel& inner_;
  double c_;
};

class NanModel final : public ForwardModel {
 public:
  std::size_t snapshot_count() const override { return 1; }
  std::vector<double> predict(std::size_t, double gamma) const override {
    return {gamma > 50.0 ? std::nan("") : gamma};
  }
};

struct Synthetic {
  DatasetFile file;
  TimedPixelData data;
};

Synthetic make_synthetic(double gamma_true, double noise, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.gamma_true = gamma_true;
  cfg.device.s = noise;
  cfg.seed = seed;
  Synthetic s;
  s.file = synth_dataset(cfg);
  s.data = to_timed_data(s.file, cat_wigner(kCat, GridSpec::default_for(kCat)));
  return s;
}

std::vector<PixelSet> sets_of(const TimedPixelData& d) {
  std::vector<PixelSet> out;
  for (const auto& s : d.snapshots) out.push_back(s.pixels);
  return out;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("Gamma grids") {
  const auto g = GammaGrid::log_spaced();
  CHECK(g.values.size() == 401);
  CHECK(g.values.front() == 0.0);
  CHECK(g.values[1] == doctest::Approx(1.0));
  CHECK(g.max() == 1e5);
  CHECK_THROWS_AS(GammaGrid::linear(10.0, 150), ValidationError);
  GammaGrid bad = GammaGrid::linear(10.0, 300);
  bad.values[0] = 0.01;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("timed data invariants") {
  auto s = make_synthetic(0.0, 0.051, 1);
  auto d = s.data;
  std::swap(d.snapshots[0], d.snapshots[1]);
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = s.data;
  d.snapshots[0].t = 0.0;
  CHECK_THROWS_AS(d.validate(), ValidationError);

  d = s.data;
  d.snapshots[1].pixels.coords[7] = {9.5, -0.25};
  try {
    WignerForwardModel m(d);
    FAIL("expected an out-of-grid error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(9.5, -0.25)") != std::string::npos);
  }
}

TEST_CASE("likelihood: noise scaling and zero-residual pixels") {
  const AffineModel model({1.0, -2.0, 0.5}, {0.1, 0.2, 0.3});
  PixelSet px;
  px.coords = {{0, 0}, {1, 0}, {0, 1}};
  px.values = {3.0, -1.0, 0.9};
  px.s = 0.3;
  const auto a = log_likelihood(model, std::span(&px, 1), 1.5);
  PixelSet px2 = px;
  px2.s = 0.6;
  const auto b = log_likelihood(model, std::span(&px2, 1), 1.5);
  CHECK(b.quadratic == doctest::Approx(a.quadratic / 4).epsilon(1e-15));

  const AffineModel more({1.0, -2.0, 0.5, 0.25}, {0.1, 0.2, 0.3, -0.4});
  PixelSet px3 = px;
  px3.coords.push_back({1, 1});
  px3.values.push_back(0.25 * 1.5 - 0.4);
  const auto c = log_likelihood(more, std::span(&px3, 1), 1.5);
  CHECK(c.quadratic == a.quadratic);
  CHECK(c.total() - a.total() == doctest::Approx(-std::log(std::sqrt(2 * std::numbers::pi * 0.09))).epsilon(1e-12));
}

TEST_CASE("noiseless data: likelihood peaks at the generating Gamma") {
  SynthConfig cfg;
  cfg.gamma_true = 2000.0;
  cfg.device.s = 0.0;
  auto file = synth_dataset(cfg);
  file.device.noise_sigma = 0.051;
  const auto data = to_timed_data(file, cat_wigner(kCat, GridSpec::default_for(kCat)));
  const WignerForwardModel model(data);
  const auto sets = sets_of(data);
  const auto grid = GammaGrid::linear(4000.0, 201);
  std::size_t best = 0;
  double best_ll = -1e300;
  for (std::size_t g = 0; g < grid.values.size(); ++g) {
    const double ll = log_likelihood(model, sets, grid.values[g]).total();
    if (ll > best_ll) best_ll = ll, best = g;
  }
  CHECK(grid.values[best] == 2000.0);
  CHECK(log_likelihood(model, sets, 2000.0).quadratic == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
}

TEST_CASE("Jeffreys prior of an affine model is constant") {
  const AffineModel model({3.7}, {0.2});
  const std::vector<double> sig{0.05};
  const auto grid = GammaGrid::log_spaced(1e5, 400);
  const auto prior = jeffreys_prior(model, sig, grid);
  for (double p : prior) CHECK(p == doctest::Approx(prior[0]).epsilon(1e-6));
  CHECK(prior[0] == doctest::Approx(3.7 / 0.05).epsilon(1e-6));
}

TEST_CASE("Jeffreys prior: non-finite derivative names the Gamma point") {
  const NanModel model;
  const std::vector<double> sig{1.0};
  try {
    jeffreys_prior(model, sig, GammaGrid::linear(100.0, 201));
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("Gamma = ") != std::string::npos);
  }
}

TEST_CASE("Jeffreys prior on the reference layout") {
  const auto s = make_synthetic(0.0, 0.051, 1);
  const WignerForwardModel model(s.data);
  const std::vector<double> sig{0.051, 0.051};
  const auto prior = jeffreys_prior(model, sig, GammaGrid::log_spaced());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    CHECK(std::isfinite(prior[i]));
    CHECK(prior[i] > 0.0);
  }
}

TEST_CASE("flat likelihood returns the prior") {
  const AffineModel model({1.0}, {0.0});
  PixelSet px;
  px.coords = {{0, 0}};
  px.values = {5.0};
  px.s = 1e6;
  const auto grid = GammaGrid::linear(10.0, 301);
  std::vector<double> prior(grid.values.size());
  for (std::size_t i = 0; i < prior.size(); ++i) prior[i] = 1.0 + grid.values[i];
  const auto post = posterior(model, std::span(&px, 1), grid, prior);
  const double z = 10.0 + 50.0;  // integral of 1 + x on [0, 10]
  for (std::size_t i = 0; i < prior.size(); ++i) CHECK(post.density[i] == doctest::Approx(prior[i] / z).epsilon(1e-6));
  CHECK(post.integral() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("all-zero posterior is a numerical failure") {
  const AffineModel model({1.0}, {0.0});
  PixelSet px;
  px.coords = {{0, 0}};
  px.values = {5.0};
  px.s = 1.0;
  const auto grid = GammaGrid::linear(10.0, 301);
  const std::vector<double> prior(grid.values.size(), 0.0);
  CHECK_THROWS_AS(posterior(model, std::span(&px, 1), grid, prior), NumericalError);
}

TEST_CASE("quantiles of a triangular density") {
  Posterior post;
  post.grid = GammaGrid::linear(2.0, 401);
  for (double x : post.grid.values) post.density.push_back(1.0 - std::abs(x - 1.0));
  post.prior.assign(post.density.size(), 1.0);
  CHECK(post.integral() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(quantile(post, 0.5) == doctest::Approx(1.0).epsilon(0.005));
  double prev = 0.0;
  for (double p = 0.01; p < 1.0; p += 0.01) {
    const double q = quantile(post, p);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK_THROWS_AS(quantile(post, 1.0), ValidationError);
}

TEST_CASE("caching does not change results") {
  const auto s = make_synthetic(1e3, 0.051, 2);
  const WignerForwardModel cached(s.data, true);
  const WignerForwardModel plain(s.data, false);
  const auto sets = sets_of(s.data);
  const auto grid = GammaGrid::log_spaced(1e5, 200);
  const auto a = posterior(cached, sets, grid, PriorKind::Jeffreys);
  const auto b = posterior(plain, sets, grid, PriorKind::Jeffreys);
  CHECK(a.density == b.density);
  CHECK(a.prior == b.prior);
  const auto again = posterior(cached, sets, grid, PriorKind::Jeffreys);
  CHECK(again.density == a.density);
}

TEST_CASE("common rescaling of values, predictions and noise leaves the posterior unchanged") {
  const auto s = make_synthetic(1e3, 0.051, 3);
  const WignerForwardModel model(s.data);
  const auto sets = sets_of(s.data);
  const auto grid = GammaGrid::log_spaced(1e5, 200);
  const auto base = posterior(model, sets, grid, PriorKind::Jeffreys);
  for (double c : {4.0, 0.125}) {
    const ScaledModel scaled(model, c);
    auto ss = sets;
    for (auto& px : ss) {
      px.s *= c;
      for (double& v : px.values) v *= c;
    }
    const auto post = posterior(scaled, ss, grid, PriorKind::Jeffreys);
    CHECK(post.density == base.density);
  }
}

TEST_CASE("recovery of a known diffusion rate") {
  const auto s = make_synthetic(1e3, 0.051, 4);
  const auto grid = GammaGrid::log_spaced();
  const auto post = posterior(s.data, grid);
  CHECK(post.integral() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(post.mode() - 1e3) <= 3 * post.stddev());
  CHECK(quantile(post, 0.025) <= 1e3);
  CHECK(quantile(post, 0.975) >= 1e3);

  const double q_j = quantile(post, 0.95);
  const double q_c = quantile(posterior(s.data, grid, PriorKind::Constant), 0.95);
  CHECK(q_c / q_j < 2.0);
  CHECK(q_j / q_c < 2.0);
}

TEST_CASE("sharper data gives a tighter bound") {
  double prev = 1e300;
  for (double noise : {0.1, 0.05, 0.025}) {
    const auto s = make_synthetic(0.0, noise, 6);
    const auto rep = infer_bound(s.data);
    CAPTURE(noise);
    CHECK(rep.gamma_star < prev);
    CHECK(rep.r0_min == doctest::Approx(r0_lower_bound(DiffusionRate(rep.gamma_star), s.data.device).value()));
    prev = rep.gamma_star;
  }
}

TEST_CASE("bound stage at the reference thresholds") {
  const auto dev = DeviceParams::sapphire_hbar();
  CHECK(r0_lower_bound(DiffusionRate(1.4e3), dev).value() == doctest::Approx(6.2e-17).epsilon(0.02));
  CHECK(r0_lower_bound(DiffusionRate(1.9e2), dev).value() == doctest::Approx(1.2e-16).epsilon(0.02));
}

}
