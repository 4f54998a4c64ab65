#pragma once

// On-disk formats (JSON) and synthetic data generation.
//
// Dataset files keep the units they are written in (GHz, us, ug, um, g/cm^3);
// conversion to SI happens in DatasetDevice::to_si() and to_timed_data().
// See docs/formats.md for the schemas.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gravicat/dp_model.hpp"
#include "gravicat/fock_oracle.hpp"
#include "gravicat/inference.hpp"
#include "gravicat/phase_space.hpp"

namespace gravicat {

inline constexpr std::string_view kDatasetSchema = "gravicat.dataset/1";
inline constexpr std::string_view kGridSchema = "gravicat.wigner_grid/1";
inline constexpr std::string_view kManifestSchema = "gravicat.manifest/1";
inline constexpr std::string_view kDensityMatrixSchema = "gravicat.density_matrix/1";
inline constexpr std::string_view kSoftwareVersion = "0.1.0";

struct DatasetDevice {
  double omega_ghz = 0.0;  // omega / 2 pi
  double t1_us = 0.0;
  double m_eff_ug = 0.0;
  double a_um = 0.0;
  double rho_g_cm3 = 0.0;
  double noise_sigma = 0.0;

  DeviceParams to_si() const;
  static DatasetDevice from_si(const DeviceParams& dev);
  friend bool operator==(const DatasetDevice&, const DatasetDevice&) = default;
};

struct DatasetPixel {
  double x = 0.0;
  double p = 0.0;
  double w = 0.0;
  friend bool operator==(const DatasetPixel&, const DatasetPixel&) = default;
};

struct DatasetSnapshot {
  double t_us = 0.0;
  std::vector<DatasetPixel> pixels;
  friend bool operator==(const DatasetSnapshot&, const DatasetSnapshot&) = default;
};

// Analytic t = 0 state, recorded by the synthesizer.
struct InitialStateSpec {
  std::string kind = "cat";
  double alpha_re = 0.0;
  double alpha_im = 0.0;
  friend bool operator==(const InitialStateSpec&, const InitialStateSpec&) = default;
};

struct Provenance {
  std::string text;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> parameters;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DatasetFile {
  std::string schema_version{kDatasetSchema};
  DatasetDevice device;
  std::vector<DatasetSnapshot> snapshots;
  std::optional<InitialStateSpec> initial_state;
  Provenance provenance;

  // Snapshot at t_us == 0, if any.
  const DatasetSnapshot* initial_snapshot() const;
  friend bool operator==(const DatasetFile&, const DatasetFile&) = default;
};

// Throws ValidationError: parse errors carry line/column, schema violations the
// field path (e.g. "snapshots[1].pixels[3].w"), unit mismatches the expected key.
DatasetFile parse_dataset(std::string_view text);
std::string serialize_dataset(const DatasetFile& file);
DatasetFile load_dataset(const std::filesystem::path& path);
void save_dataset(const DatasetFile& file, const std::filesystem::path& path);

PixelSet to_pixel_set(const DatasetSnapshot& snap, double s);

// Snapshots with t > 0 in SI, ready for the likelihood.
TimedPixelData to_timed_data(const DatasetFile& file, WignerGrid initial);

// Snapshot pixels laid out on a full rectangular lattice, as a WignerGrid.
// Throws ValidationError when the pixels are not such a lattice.
WignerGrid snapshot_grid(const DatasetSnapshot& snap);

// ---- deterministic noise ------------------------------------------------

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of snapshot k: splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15).
std::uint64_t snapshot_seed(std::uint64_t seed, std::size_t k);

// Standard normal deviates: std::mt19937_64 uniform bits, 53-bit doubles in
// (0, 1], Box-Muller (both outputs used). The algorithm is fixed so streams
// are identical across platforms and standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed);
  double next();

 private:
  double uniform();
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// ---- synthetic data -----------------------------------------------------

struct SynthConfig {
  std::complex<double> alpha{std::sqrt(2.1), 0.0};
  DeviceParams device = DeviceParams::sapphire_hbar();
  double gamma_true = 0.0;           // s^-1
  std::vector<double> times_us{10.0, 40.0};
  bool include_t0 = false;           // add a t = 0 snapshot for reconstruction
  GridSpec pixels{-4.0, 4.0, -4.0, 4.0, 41, 41};
  double model_spacing = 0.05;       // spacing of the propagated Wigner grid
  std::uint64_t seed = 0;
};

// Cat Wigner function propagated to each time, sampled at the pixel lattice,
// plus N(0, device.s^2) noise from GaussianStream(snapshot_seed(seed, k)).
DatasetFile synth_dataset(const SynthConfig& config);

// ---- Wigner grid and density matrix files --------------------------------

std::string serialize_grid(const WignerGrid& grid);
WignerGrid parse_grid(std::string_view text);
void save_grid(const WignerGrid& grid, const std::filesystem::path& path);
WignerGrid load_grid(const std::filesystem::path& path);

nlohmann::json density_matrix_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

// ---- manifest -----------------------------------------------------------

struct ResultManifest {
  std::string input_sha256;
  nlohmann::ordered_json config;
  std::optional<Posterior> posterior;
  double gamma_star = 0.0;
  double r0_min = 0.0;
  std::string started_utc;
  double elapsed_s = 0.0;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// ---- SVG heatmap --------------------------------------------------------

// Diverging map (blue < 0 < red) symmetric about zero, quadrature axes and a
// colorbar. Grids wider than 160 cells per axis are block-averaged. Negative
// cells carry class="neg", non-negative ones class="pos".
std::string render_heatmap_svg(const WignerGrid& w, std::string_view title = "");
void emit_heatmap(const WignerGrid& w, const std::filesystem::path& path, std::string_view title = "");

}  // namespace gravicat
