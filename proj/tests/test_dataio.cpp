#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "gravicat/dataio.hpp"
#include "gravicat/error.hpp"

using namespace gravicat;
namespace fs = std::filesystem;

namespace {

const std::complex<double> kCat{std::sqrt(2.1), 0.0};

const char* kMinimal = R"({
  "schema_version": "gravicat.dataset/1",
  "device": {"omega_ghz": 5.961, "t1_us": 84, "m_eff_ug": 16.2, "a_um": 0.001, "rho_g_cm3": 3.98, "noise_sigma": 0.051},
  "snapshots": [{"t_us": 10, "pixels": [{"x": 0.5, "p": -0.25, "w": 0.1}]}]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse_dataset(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

DatasetFile random_file(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> pos(1e-3, 100.0);
  DatasetFile f;
  f.device = {pos(rng), pos(rng), pos(rng), pos(rng), pos(rng), std::abs(u(rng)) / 6.0};
  const int ns = 1 + static_cast<int>(rng() % 4);
  double t = 0.0;
  for (int k = 0; k < ns; ++k) {
    DatasetSnapshot s;
    s.t_us = t;
    t += pos(rng);
    const int np = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < np; ++i) s.pixels.push_back({u(rng), u(rng), u(rng) * 1e-3 / 7.0});
    f.snapshots.push_back(s);
  }
  if (rng() % 2) f.initial_state = InitialStateSpec{"cat", u(rng), u(rng)};
  f.provenance.text = "generated";
  if (rng() % 2) f.provenance.seed = rng();
  f.provenance.parameters["x"] = u(rng);
  return f;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("minimal file loads") {
  const auto f = parse_dataset(kMinimal);
  REQUIRE(f.snapshots.size() == 1);
  CHECK(f.snapshots[0].pixels[0] == DatasetPixel{0.5, -0.25, 0.1});
  const auto si = f.device.to_si();
  CHECK(si.omega == doctest::Approx(2 * std::numbers::pi * 5.961e9));
  CHECK(si.T1 == doctest::Approx(84e-6));
  CHECK(si.m_eff == doctest::Approx(16.2e-9));
  CHECK(si.a == doctest::Approx(1e-9));
  CHECK(si.rho_bar == doctest::Approx(3980.0));
  CHECK(f.initial_snapshot() == nullptr);
}

TEST_CASE("duplicate snapshot time is rejected by name") {
  std::string text = replace(kMinimal, R"([{"t_us": 10,)",
                             R"([{"t_us": 12.5, "pixels": []}, {"t_us": 12.5,)");
  const auto msg = error_of(text);
  CHECK(msg.find("12.5") != std::string::npos);
  CHECK(msg.find("duplicate") != std::string::npos);
}

TEST_CASE("parse errors carry line and column") {
  std::string text = replace(kMinimal, R"("w": 0.1)", R"("w": 0.1,,)");
  const auto msg = error_of(text);
  CHECK(msg.find("line 4") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("schema violations carry the field path") {
  CHECK(error_of(replace(kMinimal, R"("w": 0.1)", R"("w": "a")")).find("$.snapshots[0].pixels[0].w") != std::string::npos);
  CHECK(error_of(replace(kMinimal, R"("x": 0.5, )", "")).find("$.snapshots[0].pixels[0].x") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "gravicat.dataset/1", "gravicat.dataset/9")).find("$.schema_version") != std::string::npos);
  CHECK(error_of(replace(kMinimal, R"("t_us": 10)", R"("t_us": -1)")).find("$.snapshots[0].t_us") != std::string::npos);
}

TEST_CASE("unit annotation mismatch") {
  const auto msg = error_of(replace(kMinimal, R"("t1_us": 84)", R"("t1_ms": 0.084)"));
  CHECK(msg.find("unit") != std::string::npos);
  CHECK(msg.find("t1_us") != std::string::npos);
  CHECK(error_of(replace(kMinimal, R"("omega_ghz")", R"("omega_hz")")).find("omega_ghz") != std::string::npos);
}

TEST_CASE("round trip over generated files") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const auto f = random_file(rng);
    const auto back = parse_dataset(serialize_dataset(f));
    CHECK(back == f);
  }
  const auto path = fs::temp_directory_path() / "gravicat_roundtrip.json";
  const auto f = random_file(rng);
  save_dataset(f, path);
  CHECK(load_dataset(path) == f);
  fs::remove(path);
  CHECK_THROWS_AS(load_dataset(fs::temp_directory_path() / "gravicat_no_such_file.json"), ValidationError);
}

TEST_CASE("seeding") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(snapshot_seed(7, 0) == splitmix64(7 + 0x9E3779B97F4A7C15ULL));
  CHECK(snapshot_seed(7, 2) == splitmix64(7 + 3 * 0x9E3779B97F4A7C15ULL));

  std::mt19937_64 ref(42);
  const double u1 = static_cast<double>((ref() >> 11) + 1) / 9007199254740992.0;
  const double u2 = static_cast<double>((ref() >> 11) + 1) / 9007199254740992.0;
  GaussianStream g(42);
  CHECK(g.next() == doctest::Approx(std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2)).epsilon(1e-15));
  CHECK(g.next() == doctest::Approx(std::sqrt(-2 * std::log(u1)) * std::sin(2 * std::numbers::pi * u2)).epsilon(1e-15));

  GaussianStream s(123);
  double m = 0, v = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.next();
    m += z;
    v += z * z;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 0.01);
  CHECK(v == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("synthesis is deterministic in the seed") {
  SynthConfig cfg;
  cfg.seed = 7;
  const auto a = serialize_dataset(synth_dataset(cfg));
  CHECK(a == serialize_dataset(synth_dataset(cfg)));
  cfg.seed = 8;
  CHECK(a != serialize_dataset(synth_dataset(cfg)));
}

TEST_CASE("noiseless synthesis equals the forward model") {
  SynthConfig cfg;
  cfg.device.s = 0.0;
  cfg.gamma_true = 500.0;
  cfg.include_t0 = true;
  const auto f = synth_dataset(cfg);
  REQUIRE(f.snapshots.size() == 3);
  REQUIRE(f.initial_snapshot() != nullptr);
  for (const auto& px : f.initial_snapshot()->pixels) CHECK(px.w == cat_wigner_value(kCat, px.x, px.p));
  const auto w0 = cat_wigner(kCat, GridSpec::default_for(kCat));
  for (std::size_t k = 1; k < 3; ++k) {
    const auto& snap = f.snapshots[k];
    std::vector<PhasePoint> pts;
    for (const auto& px : snap.pixels) pts.push_back({px.x, px.p});
    const auto model = evolve_wigner_at(w0, {1.0 / 84e-6, 500.0, snap.t_us * 1e-6}, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(snap.pixels[i].w == model[i]);
  }
  CHECK(f.provenance.seed.has_value());
  CHECK(f.provenance.parameters.at("gamma_true_per_s") == 500.0);
}

TEST_CASE("conversion to timed data") {
  SynthConfig cfg;
  cfg.include_t0 = true;
  cfg.times_us = {40.0, 10.0};
  const auto f = synth_dataset(cfg);
  const auto d = to_timed_data(f, cat_wigner(kCat, GridSpec::default_for(kCat)));
  REQUIRE(d.snapshots.size() == 2);
  CHECK(d.snapshots[0].t == doctest::Approx(10e-6));
  CHECK(d.snapshots[1].t == doctest::Approx(40e-6));
  CHECK(d.snapshots[0].pixels.s == 0.051);
  CHECK(d.snapshots[0].pixels.size() == 41 * 41);
}

TEST_CASE("snapshot lattice to grid") {
  SynthConfig cfg;
  cfg.pixels = GridSpec{-3, 3, -2, 2, 25, 17};
  const auto f = synth_dataset(cfg);
  const auto g = snapshot_grid(f.snapshots[0]);
  CHECK(g.spec.nx == 25);
  CHECK(g.spec.np == 17);
  CHECK(g.at(3, 5) == f.snapshots[0].pixels[3 * 17 + 5].w);
  DatasetSnapshot ragged = f.snapshots[0];
  ragged.pixels.pop_back();
  CHECK_THROWS_AS(snapshot_grid(ragged), ValidationError);
}

TEST_CASE("grid and density matrix files") {
  const auto g = cat_wigner(kCat, GridSpec::symmetric(3.0, 0.2));
  const auto back = parse_grid(serialize_grid(g));
  CHECK(back.spec == g.spec);
  CHECK(back.values == g.values);
  const auto rho = cat_density_matrix({0.7, 0.3}, 20);
  CHECK(density_matrix_from_json(density_matrix_json(rho)).matrix() == rho.matrix());
}

TEST_CASE("manifest and hashing") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  ResultManifest m;
  m.input_sha256 = sha256_hex("x");
  m.config["seed"] = 7;
  m.gamma_star = 1234.5;
  m.r0_min = 7e-17;
  Posterior post;
  post.grid = GammaGrid::linear(1.0, 201);
  post.density.assign(201, 1.0);
  post.prior.assign(201, 1.0);
  m.posterior = post;
  const auto j = m.to_json();
  for (const char* key : {"schema_version", "software_version", "input_sha256", "config", "gamma_star_per_s", "r0_min_m",
                          "posterior", "wall_clock"})
    CHECK(j.contains(key));
  CHECK(j["gamma_star_per_s"].get<double>() == 1234.5);
  CHECK(j["software_version"] == std::string(kSoftwareVersion));
}

TEST_CASE("heatmap colours") {
  const auto vac = coherent_wigner(0.0, GridSpec::symmetric(4.0, 0.1));
  const auto svg_vac = render_heatmap_svg(vac, "vacuum");
  CHECK(svg_vac.find("class=\"neg\"") == std::string::npos);
  CHECK(svg_vac.find("class=\"pos\"") != std::string::npos);
  const auto svg_cat = render_heatmap_svg(cat_wigner(kCat, GridSpec::default_for(kCat)), "cat");
  CHECK(svg_cat.find("class=\"neg\"") != std::string::npos);
  CHECK(svg_cat.find("<svg") != std::string::npos);
  CHECK(svg_cat.find("</svg>") != std::string::npos);
}

TEST_CASE("heatmap golden file") {
  const auto svg = render_heatmap_svg(cat_wigner(kCat, GridSpec::symmetric(4.0, 0.25)), "golden cat");
  const fs::path golden = fs::path(GRAVICAT_GOLDEN_DIR) / "cat_small.svg";
  if (std::getenv("GRAVICAT_UPDATE_GOLDEN")) write_file(golden, svg);
  CHECK(read_file(golden) == svg);
  CHECK(render_heatmap_svg(cat_wigner(kCat, GridSpec::symmetric(4.0, 0.25)), "golden cat") == svg);
}

TEST_CASE("heatmap to an unwritable path") {
  const auto vac = coherent_wigner(0.0, GridSpec::symmetric(4.0, 0.25));
  CHECK_THROWS(emit_heatmap(vac, "/nonexistent_dir/x/y.svg"));
}

}
