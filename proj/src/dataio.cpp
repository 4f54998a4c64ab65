#include "gravicat/dataio.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "gravicat/error.hpp"

namespace gravicat {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ValidationError("schema violation at " + path + ": " + what);
}

// nlohmann messages read "[json.exception...] parse error at line L, column C: detail".
std::string detail_of(const std::string& what) {
  const auto pos = what.find(": ");
  return pos == std::string::npos ? what : what.substr(pos + 2);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          detail_of(e.what()));
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  return j;
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing field");
  if (!it->is_number()) schema_error(path + "." + key, "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) schema_error(path + "." + key, "value is not finite");
  return v;
}

// Keys of the form <stem>_<unit>. A known stem with the wrong unit is a unit
// mismatch; anything else unknown is a schema violation.
void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    for (const std::string& expected : allowed) {
      const auto cut = expected.rfind('_');
      const std::string stem = cut == std::string::npos ? expected : expected.substr(0, cut);
      if (key == stem || key.rfind(stem + "_", 0) == 0) {
        throw ValidationError("unit-annotation mismatch at " + path + "." + key + ": expected field '" + expected + "'");
      }
    }
    schema_error(path + "." + key, "unknown field");
  }
}

ojson device_json(const DatasetDevice& d) {
  ojson j;
  j["omega_ghz"] = d.omega_ghz;
  j["t1_us"] = d.t1_us;
  j["m_eff_ug"] = d.m_eff_ug;
  j["a_um"] = d.a_um;
  j["rho_g_cm3"] = d.rho_g_cm3;
  j["noise_sigma"] = d.noise_sigma;
  return j;
}

}  // namespace

DeviceParams DatasetDevice::to_si() const {
  DeviceParams dev{
      .omega = 2.0 * std::numbers::pi * omega_ghz * 1e9,
      .T1 = t1_us * 1e-6,
      .m_eff = m_eff_ug * 1e-9,
      .a = a_um * 1e-6,
      .rho_bar = rho_g_cm3 * 1e3,
      .s = noise_sigma,
  };
  dev.validate();
  return dev;
}

DatasetDevice DatasetDevice::from_si(const DeviceParams& dev) {
  return {
      .omega_ghz = dev.omega / (2.0 * std::numbers::pi * 1e9),
      .t1_us = dev.T1 * 1e6,
      .m_eff_ug = dev.m_eff * 1e9,
      .a_um = dev.a * 1e6,
      .rho_g_cm3 = dev.rho_bar * 1e-3,
      .noise_sigma = dev.s,
  };
}

const DatasetSnapshot* DatasetFile::initial_snapshot() const {
  for (const DatasetSnapshot& s : snapshots) {
    if (s.t_us == 0.0) return &s;
  }
  return nullptr;
}

DatasetFile parse_dataset(std::string_view text) {
  const json root = parse_json(text);
  require_object(root, "$");
  check_keys(root, "$", {"schema_version", "device", "snapshots", "initial_state", "provenance"});
  DatasetFile file;

  const auto sv = root.find("schema_version");
  if (sv == root.end() || !sv->is_string()) schema_error("$.schema_version", "missing or not a string");
  file.schema_version = sv->get<std::string>();
  if (file.schema_version != kDatasetSchema) {
    schema_error("$.schema_version", "unrecognized version '" + file.schema_version + "'");
  }

  if (!root.contains("device")) schema_error("$.device", "missing field");
  const json& dev = require_object(root["device"], "$.device");
  check_keys(dev, "$.device", {"omega_ghz", "t1_us", "m_eff_ug", "a_um", "rho_g_cm3", "noise_sigma"});
  file.device.omega_ghz = require_number(dev, "omega_ghz", "$.device");
  file.device.t1_us = require_number(dev, "t1_us", "$.device");
  file.device.m_eff_ug = require_number(dev, "m_eff_ug", "$.device");
  file.device.a_um = require_number(dev, "a_um", "$.device");
  file.device.rho_g_cm3 = require_number(dev, "rho_g_cm3", "$.device");
  file.device.noise_sigma = require_number(dev, "noise_sigma", "$.device");
  try {
    file.device.to_si();
  } catch (const ValidationError& e) {
    schema_error("$.device", e.what());
  }

  if (!root.contains("snapshots") || !root["snapshots"].is_array()) schema_error("$.snapshots", "expected an array");
  std::set<double> seen;
  const json& snaps = root["snapshots"];
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const std::string path = "$.snapshots[" + std::to_string(k) + "]";
    const json& sj = require_object(snaps[k], path);
    check_keys(sj, path, {"t_us", "pixels"});
    DatasetSnapshot snap;
    snap.t_us = require_number(sj, "t_us", path);
    if (snap.t_us < 0.0) schema_error(path + ".t_us", "negative time");
    if (!seen.insert(snap.t_us).second) {
      std::ostringstream msg;
      msg << "duplicate snapshot time t_us = " << snap.t_us;
      schema_error(path + ".t_us", msg.str());
    }
    if (!sj.contains("pixels") || !sj["pixels"].is_array()) schema_error(path + ".pixels", "expected an array");
    const json& pj = sj["pixels"];
    snap.pixels.reserve(pj.size());
    for (std::size_t i = 0; i < pj.size(); ++i) {
      const std::string ppath = path + ".pixels[" + std::to_string(i) + "]";
      require_object(pj[i], ppath);
      check_keys(pj[i], ppath, {"x", "p", "w"});
      snap.pixels.push_back(
          {require_number(pj[i], "x", ppath), require_number(pj[i], "p", ppath), require_number(pj[i], "w", ppath)});
    }
    file.snapshots.push_back(std::move(snap));
  }

  if (root.contains("initial_state")) {
    const json& is = require_object(root["initial_state"], "$.initial_state");
    check_keys(is, "$.initial_state", {"kind", "alpha_re", "alpha_im"});
    InitialStateSpec spec;
    if (!is.contains("kind") || !is["kind"].is_string()) schema_error("$.initial_state.kind", "expected a string");
    spec.kind = is["kind"].get<std::string>();
    if (spec.kind != "cat" && spec.kind != "coherent") schema_error("$.initial_state.kind", "unknown state kind");
    spec.alpha_re = require_number(is, "alpha_re", "$.initial_state");
    spec.alpha_im = require_number(is, "alpha_im", "$.initial_state");
    file.initial_state = spec;
  }

  if (root.contains("provenance")) {
    const json& pv = require_object(root["provenance"], "$.provenance");
    check_keys(pv, "$.provenance", {"text", "seed", "parameters"});
    if (pv.contains("text")) {
      if (!pv["text"].is_string()) schema_error("$.provenance.text", "expected a string");
      file.provenance.text = pv["text"].get<std::string>();
    }
    if (pv.contains("seed")) {
      if (!pv["seed"].is_number_unsigned()) schema_error("$.provenance.seed", "expected an unsigned integer");
      file.provenance.seed = pv["seed"].get<std::uint64_t>();
    }
    if (pv.contains("parameters")) {
      const json& params = require_object(pv["parameters"], "$.provenance.parameters");
      for (const auto& [key, value] : params.items()) {
        file.provenance.parameters[key] = require_number(params, key, "$.provenance.parameters");
      }
    }
  }
  return file;
}

std::string serialize_dataset(const DatasetFile& file) {
  ojson root;
  root["schema_version"] = file.schema_version;
  root["device"] = device_json(file.device);
  if (file.initial_state) {
    ojson is;
    is["kind"] = file.initial_state->kind;
    is["alpha_re"] = file.initial_state->alpha_re;
    is["alpha_im"] = file.initial_state->alpha_im;
    root["initial_state"] = is;
  }
  ojson prov;
  prov["text"] = file.provenance.text;
  if (file.provenance.seed) prov["seed"] = *file.provenance.seed;
  ojson params = ojson::object();
  for (const auto& [k, v] : file.provenance.parameters) params[k] = v;
  prov["parameters"] = params;
  root["provenance"] = prov;
  ojson snaps = ojson::array();
  for (const DatasetSnapshot& s : file.snapshots) {
    ojson sj;
    sj["t_us"] = s.t_us;
    ojson px = ojson::array();
    for (const DatasetPixel& p : s.pixels) px.push_back(ojson{{"x", p.x}, {"p", p.p}, {"w", p.w}});
    sj["pixels"] = std::move(px);
    snaps.push_back(std::move(sj));
  }
  root["snapshots"] = std::move(snaps);
  return root.dump(1) + "\n";
}

DatasetFile load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

void save_dataset(const DatasetFile& file, const std::filesystem::path& path) {
  write_file(path, serialize_dataset(file));
}

PixelSet to_pixel_set(const DatasetSnapshot& snap, double s) {
  PixelSet px;
  px.s = s;
  px.coords.reserve(snap.pixels.size());
  px.values.reserve(snap.pixels.size());
  for (const DatasetPixel& p : snap.pixels) {
    px.coords.push_back({p.x, p.p});
    px.values.push_back(p.w);
  }
  return px;
}

TimedPixelData to_timed_data(const DatasetFile& file, WignerGrid initial) {
  TimedPixelData data;
  data.device = file.device.to_si();
  data.initial = std::move(initial);
  std::vector<const DatasetSnapshot*> later;
  for (const DatasetSnapshot& s : file.snapshots) {
    if (s.t_us > 0.0) later.push_back(&s);
  }
  std::sort(later.begin(), later.end(), [](auto* a, auto* b) { return a->t_us < b->t_us; });
  for (const DatasetSnapshot* s : later) data.snapshots.push_back({s->t_us * 1e-6, to_pixel_set(*s, data.device.s)});
  data.validate();
  return data;
}

WignerGrid snapshot_grid(const DatasetSnapshot& snap) {
  std::set<double> xs, ps;
  for (const DatasetPixel& p : snap.pixels) {
    xs.insert(p.x);
    ps.insert(p.p);
  }
  if (xs.size() < 2 || ps.size() < 2 || xs.size() * ps.size() != snap.pixels.size()) {
    throw ValidationError("snapshot pixels do not form a full rectangular lattice");
  }
  const std::vector<double> xv(xs.begin(), xs.end()), pv(ps.begin(), ps.end());
  auto uniform = [](const std::vector<double>& v) {
    const double h = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::abs(v[i] - (v.front() + static_cast<double>(i) * h)) > 1e-9 * (std::abs(h) + 1.0)) return false;
    }
    return true;
  };
  if (!uniform(xv) || !uniform(pv)) throw ValidationError("snapshot pixel lattice is not uniformly spaced");
  WignerGrid g(GridSpec{xv.front(), xv.back(), pv.front(), pv.back(), xv.size(), pv.size()});
  std::vector<char> filled(g.values.size(), 0);
  for (const DatasetPixel& p : snap.pixels) {
    const auto i = static_cast<std::size_t>(std::lower_bound(xv.begin(), xv.end(), p.x) - xv.begin());
    const auto j = static_cast<std::size_t>(std::lower_bound(pv.begin(), pv.end(), p.p) - pv.begin());
    g.at(i, j) = p.w;
    filled[i * g.spec.np + j] = 1;
  }
  if (std::find(filled.begin(), filled.end(), 0) != filled.end()) {
    throw ValidationError("snapshot pixel lattice has repeated or missing nodes");
  }
  return g;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t snapshot_seed(std::uint64_t seed, std::size_t k) {
  return splitmix64(seed + static_cast<std::uint64_t>(k + 1) * 0x9E3779B97F4A7C15ULL);
}

GaussianStream::GaussianStream(std::uint64_t seed) : engine_(seed) {}

double GaussianStream::uniform() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

DatasetFile synth_dataset(const SynthConfig& config) {
  config.device.validate();
  config.pixels.validate();
  if (!(config.gamma_true >= 0.0)) throw ValidationError("gamma_true must be >= 0");
  std::vector<double> times = config.times_us;
  if (config.include_t0) times.insert(times.begin(), 0.0);
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("snapshot times must be finite and >= 0");
  }

  const double pixel_extent = std::max({std::abs(config.pixels.x_min), std::abs(config.pixels.x_max),
                                        std::abs(config.pixels.p_min), std::abs(config.pixels.p_max)});
  const double extent = std::max(std::numbers::sqrt2 * std::abs(config.alpha) + 5.0, pixel_extent + 1.0);
  const WignerGrid initial = cat_wigner(config.alpha, GridSpec::symmetric(extent, config.model_spacing));

  std::vector<PhasePoint> coords;
  for (std::size_t i = 0; i < config.pixels.nx; ++i)
    for (std::size_t j = 0; j < config.pixels.np; ++j) coords.push_back({config.pixels.x(i), config.pixels.p(j)});

  DatasetFile file;
  file.device = DatasetDevice::from_si(config.device);
  file.initial_state = InitialStateSpec{"cat", config.alpha.real(), config.alpha.imag()};
  file.provenance.text =
      "synthetic even cat state propagated under damping + diffusion, sampled on a pixel lattice with seeded "
      "Gaussian noise (mt19937_64 + Box-Muller, per-snapshot SplitMix64 seeds)";
  file.provenance.seed = config.seed;
  file.provenance.parameters = {
      {"alpha_re", config.alpha.real()},     {"alpha_im", config.alpha.imag()},
      {"gamma_true_per_s", config.gamma_true}, {"model_spacing", config.model_spacing},
      {"pixel_x_min", config.pixels.x_min},  {"pixel_x_max", config.pixels.x_max},
      {"pixel_p_min", config.pixels.p_min},  {"pixel_p_max", config.pixels.p_max},
      {"pixel_nx", static_cast<double>(config.pixels.nx)},
      {"pixel_np", static_cast<double>(config.pixels.np)},
  };

  const double s = config.device.s;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k] * 1e-6;
    std::vector<double> w;
    if (t == 0.0) {
      for (const PhasePoint& pt : coords) w.push_back(cat_wigner_value(config.alpha, pt.x, pt.p));
    } else {
      w = evolve_wigner_at(initial, EvolutionParams{config.device.gamma_down(), config.gamma_true, t}, coords);
    }
    DatasetSnapshot snap;
    snap.t_us = times[k];
    GaussianStream noise(snapshot_seed(config.seed, k));
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const double value = s > 0.0 ? w[i] + s * noise.next() : w[i];
      snap.pixels.push_back({coords[i].x, coords[i].p, value});
    }
    file.snapshots.push_back(std::move(snap));
  }
  return file;
}

std::string serialize_grid(const WignerGrid& grid) {
  ojson j;
  j["schema_version"] = kGridSchema;
  j["x_min"] = grid.spec.x_min;
  j["x_max"] = grid.spec.x_max;
  j["p_min"] = grid.spec.p_min;
  j["p_max"] = grid.spec.p_max;
  j["nx"] = grid.spec.nx;
  j["np"] = grid.spec.np;
  j["layout"] = "x-major";
  j["values"] = grid.values;
  return j.dump() + "\n";
}

WignerGrid parse_grid(std::string_view text) {
  const json j = parse_json(text);
  require_object(j, "$");
  if (!j.contains("schema_version") || j["schema_version"] != kGridSchema) {
    schema_error("$.schema_version", "expected '" + std::string(kGridSchema) + "'");
  }
  GridSpec spec;
  spec.x_min = require_number(j, "x_min", "$");
  spec.x_max = require_number(j, "x_max", "$");
  spec.p_min = require_number(j, "p_min", "$");
  spec.p_max = require_number(j, "p_max", "$");
  if (!j.contains("nx") || !j["nx"].is_number_unsigned()) schema_error("$.nx", "expected an unsigned integer");
  if (!j.contains("np") || !j["np"].is_number_unsigned()) schema_error("$.np", "expected an unsigned integer");
  spec.nx = j["nx"].get<std::size_t>();
  spec.np = j["np"].get<std::size_t>();
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    schema_error("$", e.what());
  }
  if (!j.contains("values") || !j["values"].is_array()) schema_error("$.values", "expected an array");
  WignerGrid g(spec);
  if (j["values"].size() != g.values.size()) schema_error("$.values", "expected nx * np entries");
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    const json& v = j["values"][k];
    if (!v.is_number()) schema_error("$.values[" + std::to_string(k) + "]", "expected a number");
    g.values[k] = v.get<double>();
  }
  return g;
}

void save_grid(const WignerGrid& grid, const std::filesystem::path& path) { write_file(path, serialize_grid(grid)); }

WignerGrid load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path)); }

nlohmann::json density_matrix_json(const DensityMatrix& rho) {
  json j;
  j["schema_version"] = kDensityMatrixSchema;
  j["dim"] = rho.dim();
  json re = json::array(), im = json::array();
  for (int r = 0; r < rho.dim(); ++r) {
    json rr = json::array(), ii = json::array();
    for (int c = 0; c < rho.dim(); ++c) {
      rr.push_back(rho.matrix()(r, c).real());
      ii.push_back(rho.matrix()(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("re") || !j.contains("im")) {
    schema_error("$", "expected a density matrix object with dim, re, im");
  }
  const int dim = j["dim"].get<int>();
  if (dim < 1) schema_error("$.dim", "must be >= 1");
  Eigen::MatrixXcd m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = {j["re"].at(r).at(c).get<double>(), j["im"].at(r).at(c).get<double>()};
  return DensityMatrix(std::move(m));
}

nlohmann::ordered_json ResultManifest::to_json() const {
  ojson j;
  j["schema_version"] = kManifestSchema;
  j["software_version"] = kSoftwareVersion;
  j["input_sha256"] = input_sha256;
  j["config"] = config;
  j["gamma_star_per_s"] = gamma_star;
  j["r0_min_m"] = r0_min;
  if (posterior) {
    ojson post;
    post["gamma_per_s"] = posterior->grid.values;
    post["density"] = posterior->density;
    post["prior_unnormalized"] = posterior->prior;
    post["mean_per_s"] = posterior->mean();
    post["stddev_per_s"] = posterior->stddev();
    post["mode_per_s"] = posterior->mode();
    j["posterior"] = std::move(post);
  }
  for (const auto& [k, v] : extra.items()) j[k] = v;
  ojson wall;
  wall["started_utc"] = started_utc;
  wall["elapsed_s"] = elapsed_s;
  j["wall_clock"] = std::move(wall);
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace gravicat
