#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <thread>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gravicat/dataio.hpp"
#include "gravicat/dp_model.hpp"
#include "gravicat/error.hpp"
#include "gravicat/fock_oracle.hpp"
#include "gravicat/inference.hpp"
#include "gravicat/kernels.hpp"
#include "gravicat/oracle_check.hpp"
#include "gravicat/parallel.hpp"
#include "gravicat/phase_space.hpp"
#include "gravicat/reconstruction.hpp"

namespace gravicat::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string> kSubcommands{"synth", "reconstruct", "evolve", "infer", "bound", "oracle-check", "plot"};

// JSON config: top-level keys set global options, an object named after a
// subcommand sets that subcommand's options, and "common" applies to every
// subcommand that has an option of that name. Command-line flags win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (key == "common") continue;
      if (value.is_object()) {
        for (const auto& [k, v] : value.items()) items.push_back(item({key}, k, v));
      } else {
        items.push_back(item({}, key, value));
      }
    }
    if (j.contains("common")) {
      if (!j["common"].is_object()) throw CLI::ConfigError("config key \"common\" must be an object");
      for (const auto& sub : kSubcommands)
        for (const auto& [k, v] : j["common"].items()) items.push_back(item({sub}, k, v));
    }
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError("unsupported config value " + v.dump());
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const nlohmann::json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }
};

// Effective value of every option of a subcommand, defaults included.
ojson effective_config(const CLI::App& sub) {
  ojson j;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "help-all" || name == "config") continue;
    std::vector<std::string> vals = opt->results();
    if (vals.empty() && !opt->get_default_str().empty()) vals = {opt->get_default_str()};
    auto to_json = [](const std::string& s) -> ojson {
      if (s == "true") return true;
      if (s == "false") return false;
      try {
        std::size_t pos = 0;
        const long long i = std::stoll(s, &pos);
        if (pos == s.size()) return i;
      } catch (const std::exception&) {
      }
      try {
        std::size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos == s.size()) return d;
      } catch (const std::exception&) {
      }
      return s;
    };
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0 ? true : (vals.empty() ? false : to_json(vals.front()) == ojson(true));
    } else if (opt->get_items_expected_max() > 1) {
      ojson arr = ojson::array();
      for (const auto& v : vals) {
        std::stringstream ss(v);
        std::string part;
        while (std::getline(ss, part, ',')) {
          if (part.empty()) continue;
          std::string t = part;
          if (!t.empty() && t.front() == '[') t.erase(0, 1);
          if (!t.empty() && t.back() == ']') t.pop_back();
          if (!t.empty()) arr.push_back(to_json(t));
        }
      }
      j[name] = std::move(arr);
    } else if (vals.empty()) {
      j[name] = nullptr;
    } else {
      j[name] = to_json(vals.front());
    }
  }
  return j;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string sci(double v, int digits = 4) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(digits) << v;
  return out.str();
}

struct DeviceFlags {
  double omega_ghz = 5.961;
  double t1_us = 84.0;
  double m_eff_ug = 16.2;
  double a_um = 1e-3;
  double rho_g_cm3 = 3.98;
  double noise = 0.051;
  CLI::Option* omega_opt = nullptr;
  CLI::Option* t1_opt = nullptr;
  CLI::Option* m_opt = nullptr;
  CLI::Option* a_opt = nullptr;
  CLI::Option* rho_opt = nullptr;
  CLI::Option* noise_opt = nullptr;

  void add(CLI::App* sub, bool with_noise = true) {
    omega_opt = sub->add_option("--omega-ghz", omega_ghz, "Mode frequency omega/2pi [GHz]");
    t1_opt = sub->add_option("--t1-us", t1_us, "Energy relaxation time T1 [us]");
    m_opt = sub->add_option("--m-eff-ug", m_eff_ug, "Effective mode mass [ug]");
    a_opt = sub->add_option("--a-um", a_um, "Effective lattice constant a [um] (1e-3 um = 1 nm)");
    rho_opt = sub->add_option("--rho-g-cm3", rho_g_cm3, "Mean mass density [g/cm^3]");
    if (with_noise) noise_opt = sub->add_option("--noise", noise, "Wigner pixel noise standard deviation s [dimensionless]");
  }

  DatasetDevice file_units() const { return {omega_ghz, t1_us, m_eff_ug, a_um, rho_g_cm3, noise}; }

  // Dataset device with every explicitly given flag applied on top.
  DatasetDevice override(DatasetDevice d) const {
    if (omega_opt->count()) d.omega_ghz = omega_ghz;
    if (t1_opt->count()) d.t1_us = t1_us;
    if (m_opt->count()) d.m_eff_ug = m_eff_ug;
    if (a_opt->count()) d.a_um = a_um;
    if (rho_opt->count()) d.rho_g_cm3 = rho_g_cm3;
    if (noise_opt && noise_opt->count()) d.noise_sigma = noise;
    return d;
  }
};

void write_json(const fs::path& path, const ojson& j) { write_file(path, j.dump(1) + "\n"); }

// Grid large enough for both the pixels and the state's support.
GridSpec model_grid(const std::vector<PixelSet>& sets, double state_extent, double spacing) {
  double extent = state_extent;
  for (const auto& s : sets)
    for (const auto& c : s.coords) extent = std::max({extent, std::abs(c.x) + 1.0, std::abs(c.p) + 1.0});
  return GridSpec::symmetric(extent, spacing);
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  double alpha2 = 0.0;
  std::vector<double> times_us;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  bool include_t0 = false;
  double pixel_extent = 4.0;
  std::size_t pixel_n = 41;
  double model_spacing = 0.05;
  std::string out = "dataset.json";
  DeviceFlags dev;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic cat-state Wigner dataset");
  sub->add_option("--alpha2", a.alpha2, "Cat amplitude |alpha|^2 [quanta]")->required()->default_str("")->check(CLI::PositiveNumber);
  a.dev.add(sub);
  a.dev.t1_opt->required()->default_str("");
  a.dev.noise_opt->required()->default_str("");
  sub->add_option("--times-us", a.times_us, "Snapshot times, comma separated [us]")->required()->default_str("")->delimiter(',');
  sub->add_option("--seed", a.seed, "Noise seed [integer]")->required()->default_str("");
  sub->add_option("--gamma", a.gamma, "True diffusion rate Gamma [1/s]");
  sub->add_flag("--include-t0", a.include_t0, "Add a t = 0 snapshot for state reconstruction");
  sub->add_option("--pixel-extent", a.pixel_extent, "Pixel lattice half width in X and P [dimensionless quadrature]");
  sub->add_option("--pixel-n", a.pixel_n, "Pixels per axis [count]");
  sub->add_option("--model-spacing", a.model_spacing, "Spacing of the propagated Wigner grid [dimensionless quadrature]");
  sub->add_option("--out", a.out, "Output dataset path [JSON file]");
}

int run_synth(const CLI::App& sub, const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg;
  cfg.alpha = {std::sqrt(a.alpha2), 0.0};
  cfg.device = a.dev.file_units().to_si();
  cfg.gamma_true = a.gamma;
  cfg.times_us = a.times_us;
  cfg.include_t0 = a.include_t0;
  cfg.pixels = GridSpec{-a.pixel_extent, a.pixel_extent, -a.pixel_extent, a.pixel_extent, a.pixel_n, a.pixel_n};
  cfg.model_spacing = a.model_spacing;
  cfg.seed = a.seed;
  const DatasetFile file = synth_dataset(cfg);
  save_dataset(file, a.out);
  out << "effective config: " << effective_config(sub).dump() << "\n";
  out << "wrote " << a.out << " (" << file.snapshots.size() << " snapshots)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- reconstruct

struct ReconArgs {
  std::string data;
  double time_us = 0.0;
  int dim = 20;
  int max_iter = 5000;
  double tol = 1e-10;
  std::string out = "density_matrix.json";
  std::string grid_out;
  std::string svg;
  double spacing = 0.05;
};

void add_reconstruct(CLI::App& app, ReconArgs& a) {
  auto* sub = app.add_subcommand("reconstruct", "Reconstruct a density matrix from one snapshot of a dataset");
  sub->add_option("--data", a.data, "Input dataset [JSON file]")->required()->default_str("");
  sub->add_option("--time-us", a.time_us, "Time of the snapshot to reconstruct [us]");
  sub->add_option("--dim", a.dim, "Fock truncation [levels]");
  sub->add_option("--max-iter", a.max_iter, "Maximum projected-gradient iterations [count]");
  sub->add_option("--tol", a.tol, "Stop when the objective improves by less than this [W^2 units]");
  sub->add_option("--out", a.out, "Output density matrix [JSON file]");
  sub->add_option("--grid-out", a.grid_out, "Also write the reconstructed Wigner grid [JSON file]");
  sub->add_option("--svg", a.svg, "Also write a heatmap of the reconstructed state [SVG file]");
  sub->add_option("--spacing", a.spacing, "Spacing of --grid-out / --svg [dimensionless quadrature]");
}

int run_reconstruct(const CLI::App& sub, const ReconArgs& a, std::ostream& out) {
  const DatasetFile file = load_dataset(a.data);
  const DatasetSnapshot* snap = nullptr;
  for (const auto& s : file.snapshots)
    if (s.t_us == a.time_us) snap = &s;
  if (!snap) throw ValidationError("--time-us: dataset has no snapshot at t = " + sci(a.time_us) + " us");
  const PixelSet pixels = to_pixel_set(*snap, file.device.noise_sigma > 0.0 ? file.device.noise_sigma : 1.0);
  const ReconstructionResult r = reconstruct_state(pixels, {a.dim, a.max_iter, a.tol, 1.0});
  const NoiseEstimate noise = estimate_noise_sigma(pixels, r.rho);

  nlohmann::json j = density_matrix_json(r.rho);
  nlohmann::json diag;
  diag["objective"] = r.objective;
  diag["iterations"] = r.iterations;
  diag["converged"] = r.converged;
  diag["conditioning_warning"] = r.conditioning_warning;
  diag["truncation_flag"] = r.rho.truncation_flag();
  diag["mean_occupation"] = r.rho.mean_occupation();
  diag["noise_sigma_estimate"] = noise.sigma;
  diag["residual_mean"] = noise.mean;
  if (file.initial_state && file.initial_state->kind == "cat" && a.time_us == 0.0) {
    const std::complex<double> alpha{file.initial_state->alpha_re, file.initial_state->alpha_im};
    const int big = std::max(a.dim, min_cat_dim(alpha));
    const Eigen::VectorXcd psi = cat_state_vector(alpha, big).head(a.dim);
    diag["fidelity_to_initial_state"] = fidelity(r.rho, psi / psi.norm());
  }
  j["diagnostics"] = diag;
  j["config"] = effective_config(sub);
  write_file(a.out, j.dump(1) + "\n");

  if (!a.grid_out.empty() || !a.svg.empty()) {
    const WignerGrid w = wigner_from_rho(r.rho, GridSpec::symmetric(std::sqrt(2.0 * r.rho.mean_occupation() + 1.0) + 5.0, a.spacing));
    if (!a.grid_out.empty()) save_grid(w, a.grid_out);
    if (!a.svg.empty()) emit_heatmap(w, a.svg, "reconstructed state");
  }
  out << "effective config: " << effective_config(sub).dump() << "\n";
  out << "objective " << sci(r.objective) << " after " << r.iterations << " iterations"
      << (r.converged ? "" : " (not converged)") << (r.conditioning_warning ? " [ill-conditioned pixel geometry]" : "")
      << "\n";
  out << "estimated noise sigma " << sci(noise.sigma) << "\n";
  if (diag.contains("fidelity_to_initial_state"))
    out << "fidelity to recorded initial state " << diag["fidelity_to_initial_state"].get<double>() << "\n";
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evolve

struct EvolveArgs {
  std::string in;
  double alpha2 = 0.0;
  double t_us = 0.0;
  double gamma = 0.0;
  double t1_us = 84.0;
  double spacing = 0.05;
  std::string out = "evolved.json";
  std::string svg;
  CLI::Option* in_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
};

void add_evolve(CLI::App& app, EvolveArgs& a) {
  auto* sub = app.add_subcommand("evolve", "Propagate a Wigner grid under damping and diffusion");
  a.in_opt = sub->add_option("--in", a.in, "Input Wigner grid [JSON file]")->default_str("");
  a.alpha_opt = sub->add_option("--alpha2", a.alpha2, "Start from an even cat of this |alpha|^2 instead of --in [quanta]")
                    ->default_str("");
  sub->add_option("--t-us", a.t_us, "Evolution time [us]")->required()->default_str("");
  sub->add_option("--gamma", a.gamma, "Diffusion rate Gamma [1/s]");
  sub->add_option("--t1-us", a.t1_us, "Energy relaxation time T1 [us]");
  sub->add_option("--spacing", a.spacing, "Grid spacing when starting from --alpha2 [dimensionless quadrature]");
  sub->add_option("--out", a.out, "Output Wigner grid [JSON file]");
  sub->add_option("--svg", a.svg, "Also write a heatmap of the result [SVG file]");
  a.in_opt->excludes(a.alpha_opt);
}

int run_evolve(const CLI::App& sub, const EvolveArgs& a, std::ostream& out) {
  WignerGrid w0;
  if (a.in_opt->count()) {
    w0 = load_grid(a.in);
  } else if (a.alpha_opt->count()) {
    if (!(a.alpha2 > 0.0)) throw ValidationError("--alpha2 must be > 0");
    const std::complex<double> alpha{std::sqrt(a.alpha2), 0.0};
    w0 = cat_wigner(alpha, GridSpec::default_for(alpha, a.spacing));
  } else {
    throw ValidationError("one of --in or --alpha2 is required");
  }
  if (!(a.t1_us > 0.0)) throw ValidationError("--t1-us must be > 0");
  const EvolutionParams ep{1.0 / (a.t1_us * 1e-6), a.gamma, a.t_us * 1e-6};
  const WignerGrid w = evolve_wigner(w0, ep);
  save_grid(w, a.out);
  if (!a.svg.empty()) emit_heatmap(w, a.svg, "t = " + sci(a.t_us, 3) + " us");
  out << "effective config: " << effective_config(sub).dump() << "\n";
  out << "integral " << w.integral() << ", negativity " << negativity(w)
      << (w.support_warning ? " [grid does not contain the propagated support]" : "") << "\n";
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string data;
  std::string out = "manifest.json";
  std::string posterior_csv = "posterior.csv";
  std::string initial = "auto";
  double gamma_max = 1e5;
  int gamma_points = 400;
  int max_extensions = 4;
  double confidence = 0.95;
  std::string prior = "jeffreys";
  double gamma_star_override = 0.0;
  int dim = 20;
  int max_iter = 5000;
  double tol = 1e-10;
  double spacing = 0.05;
  DeviceFlags dev;
  CLI::Option* data_opt = nullptr;
  CLI::Option* override_opt = nullptr;
};

void add_infer(CLI::App& app, InferArgs& a) {
  auto* sub = app.add_subcommand("infer", "Posterior over Gamma and the R0 lower bound from a dataset");
  a.data_opt = sub->add_option("--data", a.data, "Input dataset [JSON file]");
  sub->add_option("--out", a.out, "Output manifest [JSON file]");
  sub->add_option("--posterior-csv", a.posterior_csv, "Output posterior table gamma,density,prior [CSV file]");
  sub->add_option("--initial", a.initial, "Initial state: reconstruct from t = 0 pixels, analytic from the recorded state, or auto")
      ->check(CLI::IsMember({"auto", "reconstruct", "analytic"}));
  sub->add_option("--gamma-max", a.gamma_max, "Upper end of the Gamma grid [1/s]");
  sub->add_option("--gamma-points", a.gamma_points, "Log-spaced Gamma grid points above zero [count]");
  sub->add_option("--max-extensions", a.max_extensions, "Times the grid may grow by 10x when mass sits at the top [count]");
  sub->add_option("--confidence", a.confidence, "Posterior quantile reported as Gamma* [probability]");
  sub->add_option("--prior", a.prior, "Prior over Gamma")->check(CLI::IsMember({"jeffreys", "constant"}));
  a.override_opt = sub->add_option("--gamma-star-override", a.gamma_star_override,
                                   "Skip inference and bound this Gamma* [1/s]")
                       ->default_str("");
  sub->add_option("--dim", a.dim, "Fock truncation for reconstruction [levels]");
  sub->add_option("--max-iter", a.max_iter, "Reconstruction iteration limit [count]");
  sub->add_option("--tol", a.tol, "Reconstruction objective tolerance [W^2 units]");
  sub->add_option("--spacing", a.spacing, "Forward-model Wigner grid spacing [dimensionless quadrature]");
  a.dev.add(sub);
}

void write_posterior_csv(const fs::path& path, const Posterior& post) {
  std::ostringstream csv;
  csv << "gamma_per_s,density,prior\n" << std::setprecision(17);
  for (std::size_t i = 0; i < post.grid.values.size(); ++i)
    csv << post.grid.values[i] << "," << post.density[i] << "," << post.prior[i] << "\n";
  write_file(path, csv.str());
}

int run_infer(const CLI::App& sub, const InferArgs& a, std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  ResultManifest m;
  m.started_utc = utc_now();
  m.config = effective_config(sub);
  m.extra["simd"] = std::string(kernels::active().isa);

  if (a.override_opt->count()) {
    DatasetDevice dev = a.dev.file_units();
    if (a.data_opt->count()) {
      const std::string bytes = read_file(a.data);
      m.input_sha256 = sha256_hex(bytes);
      dev = a.dev.override(parse_dataset(bytes).device);
    }
    DeviceParams si = dev.to_si();
    si.validate();
    m.gamma_star = a.gamma_star_override;
    m.r0_min = r0_lower_bound(DiffusionRate(a.gamma_star_override), si).value();
    m.extra["gamma_star_source"] = "override";
  } else {
    if (!a.data_opt->count()) throw ValidationError("--data is required unless --gamma-star-override is given");
    const std::string bytes = read_file(a.data);
    m.input_sha256 = sha256_hex(bytes);
    DatasetFile file = parse_dataset(bytes);
    file.device = a.dev.override(file.device);
    const DatasetSnapshot* t0 = file.initial_snapshot();

    std::vector<PixelSet> later;
    for (const auto& s : file.snapshots)
      if (s.t_us > 0.0) later.push_back(to_pixel_set(s, file.device.noise_sigma));
    if (later.empty()) throw ValidationError("dataset has no snapshots with t > 0");

    bool use_recon = false;
    if (a.initial == "reconstruct") {
      if (!t0) throw ValidationError("--initial reconstruct: dataset has no t = 0 pixels");
      use_recon = true;
    } else if (a.initial == "analytic") {
      if (!file.initial_state) throw ValidationError("--initial analytic: dataset records no initial_state");
    } else {
      use_recon = t0 != nullptr;
      if (!use_recon && !file.initial_state)
        throw ValidationError("dataset has neither t = 0 pixels nor an initial_state");
    }

    WignerGrid initial;
    ojson init_info;
    if (use_recon) {
      const PixelSet p0 = to_pixel_set(*t0, file.device.noise_sigma > 0.0 ? file.device.noise_sigma : 1.0);
      out << "reconstructing initial state from " << p0.size() << " pixels\n";
      const ReconstructionResult r = reconstruct_state(p0, {a.dim, a.max_iter, a.tol, 1.0});
      const NoiseEstimate noise = estimate_noise_sigma(p0, r.rho);
      const double extent = std::sqrt(2.0 * (r.rho.mean_occupation() + 1.0)) + 5.0;
      initial = wigner_from_rho(r.rho, model_grid(later, extent, a.spacing));
      init_info["source"] = "reconstruction";
      init_info["objective"] = r.objective;
      init_info["iterations"] = r.iterations;
      init_info["converged"] = r.converged;
      init_info["conditioning_warning"] = r.conditioning_warning;
      init_info["noise_sigma_estimate"] = noise.sigma;
      out << "estimated noise sigma " << sci(noise.sigma) << " (dataset states " << sci(file.device.noise_sigma) << ")\n";
    } else {
      const std::complex<double> alpha{file.initial_state->alpha_re, file.initial_state->alpha_im};
      const GridSpec g = model_grid(later, std::sqrt(2.0) * std::abs(alpha) + 5.0, a.spacing);
      initial = file.initial_state->kind == "coherent" ? coherent_wigner(alpha, g) : cat_wigner(alpha, g);
      init_info["source"] = "analytic " + file.initial_state->kind;
    }
    m.extra["initial_state"] = init_info;

    InferenceSettings settings;
    settings.gamma_max = a.gamma_max;
    settings.points = a.gamma_points;
    settings.confidence = a.confidence;
    settings.prior = a.prior == "constant" ? PriorKind::Constant : PriorKind::Jeffreys;
    settings.max_extensions = a.max_extensions;
    out << "computing posterior\n";
    const InferenceReport rep = infer_bound(to_timed_data(file, std::move(initial)), settings);
    m.gamma_star = rep.gamma_star;
    m.r0_min = rep.r0_min;
    m.posterior = rep.posterior;
    m.extra["gamma_star_source"] = "posterior quantile";
    m.extra["grid_extensions"] = rep.extensions;
    m.extra["gamma_grid_max_per_s"] = rep.gamma_max;
    write_posterior_csv(a.posterior_csv, rep.posterior);
  }
  m.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(a.out, m.to_json());
  out << "effective config: " << m.config.dump() << "\n";
  out << "Gamma* = " << sci(m.gamma_star) << " 1/s\n";
  out << "R0 >= " << sci(m.r0_min) << " m\n";
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bound

struct BoundArgs {
  double gamma = 0.0;
  double n_ss = 0.0;
  std::string out;
  DeviceFlags dev;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* nss_opt = nullptr;
};

void add_bound(CLI::App& app, BoundArgs& a) {
  auto* sub = app.add_subcommand("bound", "Convert a diffusion-rate threshold into an R0 lower bound");
  a.gamma_opt = sub->add_option("--gamma", a.gamma, "Diffusion-rate threshold Gamma* [1/s]")->default_str("");
  a.nss_opt = sub->add_option("--n-ss", a.n_ss, "Use Gamma* = n_ss / T1 from a steady-state occupation instead [quanta]")
                  ->default_str("");
  a.gamma_opt->excludes(a.nss_opt);
  a.dev.add(sub, false);
  sub->add_option("--out", a.out, "Also write the result [JSON file]");
}

int run_bound(const CLI::App& sub, const BoundArgs& a, std::ostream& out) {
  DeviceParams dev = a.dev.file_units().to_si();
  dev.validate();
  double gamma = a.gamma;
  if (a.nss_opt->count()) {
    gamma = classical_gamma(a.n_ss, dev.T1).value();
  } else if (!a.gamma_opt->count()) {
    throw ValidationError("one of --gamma or --n-ss is required");
  }
  const double r0 = r0_lower_bound(DiffusionRate(gamma), dev).value();
  const ojson cfg = effective_config(sub);
  out << "effective config: " << cfg.dump() << "\n";
  out << "Gamma* = " << sci(gamma) << " 1/s\n";
  out << "R0 >= " << sci(r0) << " m\n";
  if (!a.out.empty()) {
    ojson j;
    j["config"] = cfg;
    j["gamma_star_per_s"] = gamma;
    j["r0_min_m"] = r0;
    write_json(a.out, j);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- oracle-check

struct OracleArgs {
  double tol = 1e-3;
  OracleCheckSettings settings;
};

void add_oracle(CLI::App& app, OracleArgs& a) {
  auto* sub = app.add_subcommand("oracle-check", "Compare the phase-space propagator against the Fock-space reference");
  sub->add_option("--tol", a.tol, "Pass threshold on the max |W_phase - W_fock| [1/area]");
  sub->add_option("--alpha2", a.settings.alpha2, "Cat |alpha|^2 values, comma separated [quanta]")->delimiter(',');
  sub->add_option("--ratios", a.settings.ratios, "Gamma / gamma_down values, comma separated [dimensionless]")->delimiter(',');
  sub->add_option("--gamma-t", a.settings.gamma_t, "gamma_down * t values, comma separated [dimensionless]")->delimiter(',');
  sub->add_option("--spacing", a.settings.spacing, "Comparison grid spacing [dimensionless quadrature]");
  sub->add_option("--dim", a.settings.dim, "Fock truncation, 0 = max(40, minimal cat truncation + 15) [levels]");
}

int run_oracle(const CLI::App& sub, const OracleArgs& a, std::ostream& out) {
  out << "effective config: " << effective_config(sub).dump() << "\n";
  const auto cases = run_oracle_matrix(a.settings);
  bool ok = true;
  out << "alpha2  Gamma/gd  gd*t   max|dW|      norm        result\n";
  for (const auto& c : cases) {
    const bool pass = c.max_abs_diff <= a.tol && !c.truncation_flag;
    ok = ok && pass;
    out << std::fixed << std::setprecision(2) << std::setw(6) << c.alpha2 << "  " << std::setw(8) << c.ratio << "  "
        << std::setw(5) << c.gamma_t << "  " << std::scientific << std::setprecision(3) << c.max_abs_diff << "  "
        << std::fixed << std::setprecision(8) << c.norm << "  " << (pass ? "pass" : "FAIL")
        << (c.truncation_flag ? " (Fock truncation too small)" : "") << "\n";
  }
  out << std::defaultfloat;
  out << (ok ? "all cases within " : "some cases exceed ") << sci(a.tol, 2) << "\n";
  return ok ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string in;
  std::string out_dir = ".";
};

void add_plot(CLI::App& app, PlotArgs& a) {
  auto* sub = app.add_subcommand("plot", "Heatmaps of a dataset (one SVG per snapshot) or of a Wigner grid");
  sub->add_option("--in", a.in, "Dataset or Wigner grid [JSON file]")->required()->default_str("");
  sub->add_option("--out-dir", a.out_dir, "Directory for the SVG files [path]");
}

std::string time_tag(double t_us) {
  std::ostringstream s;
  s << t_us;
  return s.str();
}

int run_plot(const CLI::App& sub, const PlotArgs& a, std::ostream& out) {
  const std::string text = read_file(a.in);
  std::string schema;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.contains("schema_version") && j["schema_version"].is_string())
      schema = j["schema_version"].get<std::string>();
  } catch (const nlohmann::json::parse_error&) {
  }
  fs::create_directories(a.out_dir);
  out << "effective config: " << effective_config(sub).dump() << "\n";
  const std::string stem = fs::path(a.in).stem().string();
  if (schema == kGridSchema) {
    const fs::path p = fs::path(a.out_dir) / (stem + ".svg");
    emit_heatmap(parse_grid(text), p, stem);
    out << "wrote " << p.string() << "\n";
    return kExitOk;
  }
  const DatasetFile file = parse_dataset(text);
  for (std::size_t k = 0; k < file.snapshots.size(); ++k) {
    const auto& s = file.snapshots[k];
    const fs::path p = fs::path(a.out_dir) / (stem + "_t" + time_tag(s.t_us) + "us.svg");
    emit_heatmap(snapshot_grid(s), p, "t = " + time_tag(s.t_us) + " us");
    out << "wrote " << p.string() << "\n";
  }
  return kExitOk;
}

// Flag, then GRAVICAT_THREADS, then all cores; 0 also means all cores.
int resolve_threads(std::optional<int> flag) {
  int n = 0;
  if (flag) {
    n = *flag;
  } else if (const char* env = std::getenv("GRAVICAT_THREADS")) {
    try {
      std::size_t pos = 0;
      n = std::stoi(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      n = -1;
    }
    if (n < 0) throw ValidationError(std::string("GRAVICAT_THREADS must be a non-negative integer, got '") + env + "'");
  }
  return n > 0 ? n : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds on the Diosi-Penrose cutoff R0 from Wigner measurements of a mechanical cat state", "gravicat"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config; top-level keys, per-subcommand objects and a \"common\" object (flags win)");
  app.set_version_flag("--version", std::string(kSoftwareVersion));
  int threads = 0;
  CLI::Option* threads_opt =
      app.add_option("--threads", threads, "Worker threads, 0 = all available cores; env GRAVICAT_THREADS if unset [count]")
          ->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  ReconArgs recon;
  EvolveArgs evolve;
  InferArgs infer;
  BoundArgs bound;
  OracleArgs oracle;
  PlotArgs plot;
  add_synth(app, synth);
  add_reconstruct(app, recon);
  add_evolve(app, evolve);
  add_infer(app, infer);
  add_bound(app, bound);
  add_oracle(app, oracle);
  add_plot(app, plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    set_num_threads(resolve_threads(threads_opt->count() ? std::optional<int>(threads) : std::nullopt));
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "synth") return run_synth(*sub, synth, out);
    if (name == "reconstruct") return run_reconstruct(*sub, recon, out);
    if (name == "evolve") return run_evolve(*sub, evolve, out);
    if (name == "infer") return run_infer(*sub, infer, out);
    if (name == "bound") return run_bound(*sub, bound, out);
    if (name == "oracle-check") return run_oracle(*sub, oracle, out);
    if (name == "plot") return run_plot(*sub, plot, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const RangeError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace gravicat::cli
