// Copyright 2026 The Spinforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "spinforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string_view>

#include "spinforge/dephasing.hpp"
#include "spinforge/fitting.hpp"
#include "spinforge/lattice.hpp"
#include "spinforge/protocol.hpp"
#include "spinforge/pulse.hpp"
#include "spinforge/spectra.hpp"
#include "spinforge/spinsys.hpp"

#ifndef SPINFORGE_VERSION
#define SPINFORGE_VERSION "0.0.0"
#endif

namespace spinforge::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr double kPi = 3.14159265358979323846264338327950288;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_required(const json& obj, const std::string& key,
               const std::string& where) {
  if (!obj.contains(key)) {
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback,
         const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get_required<T>(obj, key, where);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void atomic_write(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Everything a command needs besides its own section of the config.
class Context {
 public:
  Context(std::string command, json config, fs::path base_dir,
          const CommandOptions& options)
      : command_(std::move(command)),
        config_(std::move(config)),
        base_dir_(std::move(base_dir)) {
    if (!config_.is_object()) throw ConfigError("config must be a JSON object");
    if (!config_.contains("schema")) throw ConfigError("config: missing 'schema'");
    if (!config_["schema"].is_number_integer() || config_["schema"] != 1) {
      throw ConfigError("config: unsupported schema " + config_["schema"].dump() +
                        " (this build reads schema 1)");
    }
    if (config_.contains("command") &&
        get_required<std::string>(config_, "command", "config") != command_) {
      throw ConfigError("config is for command '" +
                        config_["command"].get<std::string>() + "', not '" +
                        command_ + "'");
    }
    seed_ = options.seed ? *options.seed
                         : get_or<std::uint64_t>(config_, "seed", kDefaultSeed,
                                                 "config");
    if (options.out_dir) {
      out_dir_ = *options.out_dir;
    } else {
      out_dir_ = resolve(get_or<std::string>(config_, "out_dir", "out", "config"));
    }
    json hashed = config_;
    hashed["seed"] = seed_;
    hashed.erase("out_dir");
    comment_ = "# spinforge " + version() + " " + command_ + " " +
               config_hash(hashed) + "\n";
  }

  const json& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  CommandResult& result() { return result_; }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return (path.is_absolute() ? path : base_dir_ / path).lexically_normal();
  }

  void write_csv(const std::string& name,
                 const std::function<void(std::ostream&)>& body) {
    std::ostringstream s;
    s << comment_;
    s << std::setprecision(12);
    body(s);
    emit(name, s.str());
  }

  void write_json(const std::string& name, const json& doc) {
    emit(name, doc.dump(2) + "\n");
  }

  void warn(const std::string& message) {
    result_.warnings.push_back(message);
    result_.exit_code = std::max<int>(result_.exit_code, kNumericalWarning);
  }

  CommandResult finish(json summary) {
    summary["command"] = command_;
    summary["seed"] = seed_;
    summary["warnings"] = result_.warnings;
    write_json("summary.json", summary);
    result_.summary = std::move(summary);
    return std::move(result_);
  }

 private:
  void emit(const std::string& name, const std::string& text) {
    fs::create_directories(out_dir_);
    const fs::path path = out_dir_ / name;
    atomic_write(path, text);
    result_.files.push_back(path);
  }

  std::string command_;
  json config_;
  fs::path base_dir_;
  fs::path out_dir_;
  std::uint64_t seed_ = kDefaultSeed;
  std::string comment_;
  CommandResult result_;
};

// ---- shared config pieces ----

struct LoadedSystem {
  SpinSystem sys;
  bool builtin_malonic = false;
};

LoadedSystem load_system(const Context& ctx, const json& node) {
  if (node.is_string()) {
    const std::string name = node.get<std::string>();
    if (name == "malonic") return {malonic_system(), true};
    return {spin_system_from_json(read_json_file(ctx.resolve(name))), false};
  }
  if (node.is_object()) return {spin_system_from_json(node), false};
  throw ConfigError("system must be \"malonic\", a file path or an object");
}

std::vector<double> load_t2star(const json& cfg, const LoadedSystem& loaded,
                                const std::string& where) {
  if (cfg.contains("t2star_ms")) {
    return get_required<std::vector<double>>(cfg, "t2star_ms", where);
  }
  if (loaded.builtin_malonic) return malonic_t2star_ms();
  throw ConfigError(where + ": t2star_ms is required for a custom system");
}

int spin_ref(const SpinSystem& sys, const json& node, const std::string& where) {
  if (node.is_number_integer()) return node.get<int>();
  if (node.is_string()) {
    try {
      return sys.index_of(node.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + ": spins are given as 1-based indices or labels");
}

// "sum_x", "sum_z", or a list of Pauli symbols such as ["X", "I", "Z"].
OperatorMatrix operator_from_config(const json& node, int n_spins,
                                    const std::string& where) {
  if (node.is_string()) {
    const std::string name = node.get<std::string>();
    if (name == "sum_x") return collective_pauli(PauliAxis::X, n_spins);
    if (name == "sum_y") return collective_pauli(PauliAxis::Y, n_spins);
    if (name == "sum_z") return collective_pauli(PauliAxis::Z, n_spins);
    if (name == "sum_minus") return default_observable(n_spins);
    throw ConfigError(where + ": unknown operator '" + name + "'");
  }
  if (node.is_array()) {
    const auto symbols = node.get<std::vector<std::string>>();
    if (static_cast<int>(symbols.size()) != n_spins) {
      throw ConfigError(where + ": need one Pauli symbol per spin");
    }
    return product_operator(symbols);
  }
  throw ConfigError(where + ": operator must be a name or a symbol list");
}

json matrix_to_json(const CMatrix& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array();
    json ii = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

CMatrix matrix_from_json(const json& doc, const std::string& where) {
  check_keys(doc, {"re", "im"}, where);
  const auto re = get_required<std::vector<std::vector<double>>>(doc, "re", where);
  const auto im = get_required<std::vector<std::vector<double>>>(doc, "im", where);
  const auto n = static_cast<Eigen::Index>(re.size());
  if (static_cast<Eigen::Index>(im.size()) != n) {
    throw ConfigError(where + ": re and im differ in size");
  }
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(re[r].size()) != n ||
        static_cast<Eigen::Index>(im[r].size()) != n) {
      throw ConfigError(where + ": matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(re[r][c], im[r][c]);
  }
  return m;
}

struct FrequencyGrid {
  std::vector<double> freq_khz;
};

std::vector<double> uniform_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) {
    throw ConfigError("frequency grid needs points >= 2 and max > min");
  }
  std::vector<double> g(points);
  for (int k = 0; k < points; ++k) {
    g[k] = lo + (hi - lo) * k / static_cast<double>(points - 1);
  }
  return g;
}

// Grid from the config, or padded around the lines by 20 of the widest FWHM.
std::vector<double> spectrum_grid(const json& cfg, const TransitionList& lines,
                                  const std::vector<double>& t2star_ms,
                                  const std::string& where) {
  if (cfg.contains("grid")) {
    const json& g = cfg["grid"];
    check_keys(g, {"min_khz", "max_khz", "points"}, where + ".grid");
    return uniform_grid(get_required<double>(g, "min_khz", where + ".grid"),
                        get_required<double>(g, "max_khz", where + ".grid"),
                        get_or<int>(g, "points", 4096, where + ".grid"));
  }
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t k = 0; k < lines.lines.size(); ++k) {
    const double f = lines.lines[k].freq_khz;
    lo = k == 0 ? f : std::min(lo, f);
    hi = k == 0 ? f : std::max(hi, f);
  }
  const double t2min = *std::min_element(t2star_ms.begin(), t2star_ms.end());
  const double pad = 20.0 / (kPi * t2min);
  return uniform_grid(lo - pad, hi + pad, 4096);
}

struct ObservedSpectrum {
  std::vector<double> freq_khz;
  std::vector<double> amplitude;
};

ObservedSpectrum read_spectrum_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observed spectrum " + path.string());
  ObservedSpectrum out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("freq_khz", 0) == 0) continue;
    }
    std::istringstream fields(line);
    double f = 0.0;
    double a = 0.0;
    char comma = 0;
    if (!(fields >> f >> comma >> a) || comma != ',') {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'freq_khz,amplitude'");
    }
    out.freq_khz.push_back(f);
    out.amplitude.push_back(a);
  }
  if (out.freq_khz.size() < 4) {
    throw ConfigError(path.string() + ": too few spectrum points");
  }
  return out;
}

std::vector<bool> bool_list(const json& node, std::size_t n,
                            const std::string& where) {
  if (node.is_boolean()) return std::vector<bool>(n, node.get<bool>());
  const auto v = node.get<std::vector<bool>>();
  if (v.size() != n) {
    throw ConfigError(where + ": expected " + std::to_string(n) + " flags");
  }
  return v;
}

// ---- spectrum ----

CommandResult cmd_spectrum(Context& ctx) {
  const json& cfg = ctx.config();
  check_keys(cfg, {"schema", "command", "seed", "out_dir", "system",
                   "t2star_ms", "eta", "grid", "initial_state", "observable",
                   "observed", "fit"},
             "spectrum config");
  const LoadedSystem loaded =
      load_system(ctx, cfg.contains("system") ? cfg["system"] : json("malonic"));
  const SpinSystem& sys = loaded.sys;
  sys.validate();
  const int n = sys.n_spins();
  LineshapeParams shape{load_t2star(cfg, loaded, "spectrum config")};
  shape.validate(n);
  const double eta = get_or<double>(cfg, "eta", 0.0, "spectrum config");

  const DensityState rho0 =
      cfg.contains("initial_state")
          ? operator_from_config(cfg["initial_state"], n, "initial_state")
          : default_initial_state(n);
  const OperatorMatrix observable =
      cfg.contains("observable")
          ? operator_from_config(cfg["observable"], n, "observable")
          : default_observable(n);
  TransitionList lines = transition_spectrum(sys, rho0, observable);
  if (eta > 0.0) lines = natural_abundance_overlay(sys, eta, lines);

  const std::vector<double> grid =
      spectrum_grid(cfg, lines, shape.t2star_ms, "spectrum config");
  const std::vector<double> amplitude = broaden(lines, shape, grid);
  ctx.write_csv("transitions.csv",
                [&](std::ostream& o) { write_transitions_csv(o, lines); });
  ctx.write_csv("spectrum.csv", [&](std::ostream& o) {
    write_spectrum_csv(o, grid, amplitude);
  });

  json summary = {{"n_lines", lines.lines.size()},
                  {"eta", eta},
                  {"grid_khz", {grid.front(), grid.back(), grid.size()}}};
  json totals = json::object();
  for (int j = 1; j <= n; ++j) totals[sys.labels[j - 1]] = lines.spin_total(j);
  summary["spin_totals"] = totals;

  if (cfg.contains("observed")) {
    const ObservedSpectrum obs =
        read_spectrum_file(ctx.resolve(get_required<std::string>(
            cfg, "observed", "spectrum config")));
    const json fit_cfg = cfg.contains("fit") ? cfg["fit"] : json::object();
    check_keys(fit_cfg,
               {"zeeman", "coupling", "t2star", "max_evaluations",
                "residual_threshold"},
               "spectrum config.fit");
    SpectrumFitMask mask = SpectrumFitMask::all_free(n);
    if (fit_cfg.contains("zeeman")) mask.zeeman = bool_list(fit_cfg["zeeman"], n, "fit.zeeman");
    if (fit_cfg.contains("coupling")) {
      mask.coupling = bool_list(fit_cfg["coupling"], mask.coupling.size(), "fit.coupling");
    }
    if (fit_cfg.contains("t2star")) mask.t2star = bool_list(fit_cfg["t2star"], n, "fit.t2star");
    SpectrumFitOptions options;
    options.eta = eta;
    options.max_evaluations = get_or<int>(fit_cfg, "max_evaluations",
                                          options.max_evaluations, "fit");
    options.residual_threshold = get_or<double>(
        fit_cfg, "residual_threshold", options.residual_threshold, "fit");
    const SpectrumFitResult fit =
        fit_spectrum(obs.freq_khz, obs.amplitude, sys, shape, mask, options);
    ctx.write_json("fit_report.json", fit_report_json(fit));
    const std::vector<double> model =
        model_spectrum(fit.system, fit.lineshape, obs.freq_khz, eta);
    ctx.write_csv("fit_spectrum.csv", [&](std::ostream& o) {
      write_spectrum_csv(o, obs.freq_khz, model);
    });
    summary["fit_residual"] = fit.residual;
    summary["fit_evaluations"] = fit.evaluations;
    if (fit.diverged) {
      ctx.warn("spectrum fit diverged: residual " + std::to_string(fit.residual));
    }
  } else if (cfg.contains("fit")) {
    throw ConfigError("spectrum config: 'fit' needs an 'observed' spectrum");
  }
  return ctx.finish(summary);
}

// ---- optimize ----

GateTarget target_from_config(const Context& ctx, const SpinSystem& sys,
                              const json& node) {
  const std::string where = "optimize config.target";
  if (!node.is_object()) throw ConfigError(where + " must be an object");
  if (node.contains("unitary_file")) {
    check_keys(node, {"unitary_file", "name"}, where);
    GateTarget t{matrix_from_json(read_json_file(ctx.resolve(
                                      node["unitary_file"].get<std::string>())),
                                  "unitary file"),
                 get_or<std::string>(node, "name", "custom", where)};
    return t;
  }
  const std::string name = get_required<std::string>(node, "name", where);
  const int n = sys.n_spins();
  if (name == "X90_all") {
    check_keys(node, {"name"}, where);
    return x90_all_target(n);
  }
  if (name == "CNN") {
    check_keys(node, {"name", "control", "targets"}, where);
    const int control = spin_ref(sys, get_required<json>(node, "control", where), where);
    std::vector<int> targets;
    for (const auto& t : get_required<json>(node, "targets", where)) {
      targets.push_back(spin_ref(sys, t, where));
    }
    return controlled_not_target(n, control, targets);
  }
  if (name == "SWAP") {
    check_keys(node, {"name", "spins"}, where);
    const json spins = get_required<json>(node, "spins", where);
    if (!spins.is_array() || spins.size() != 2) {
      throw ConfigError(where + ".spins must list two spins");
    }
    return swap_target(n, spin_ref(sys, spins[0], where),
                       spin_ref(sys, spins[1], where));
  }
  if (name == "selective_90") {
    check_keys(node, {"name", "spin"}, where);
    return selective_90_target(n, spin_ref(sys, get_required<json>(node, "spin", where), where));
  }
  if (name == "TQPP_completion") {
    check_keys(node, {"name"}, where);
    return tqpp_target();
  }
  if (name == "IIZ_to_ZZZ") {
    check_keys(node, {"name"}, where);
    return iiz_to_zzz_target();
  }
  throw ConfigError(where + ": unknown target '" + name + "'");
}

EnsembleDistribution ensemble_from_config(const json& cfg) {
  if (!cfg.contains("ensemble")) return EnsembleDistribution::rf_binomial(0.06);
  const json& node = cfg["ensemble"];
  const std::string where = "optimize config.ensemble";
  if (node.is_string()) {
    if (node == "nominal") return EnsembleDistribution::nominal();
    throw ConfigError(where + ": unknown ensemble '" + node.get<std::string>() + "'");
  }
  check_keys(node, {"rf_sigma", "points"}, where);
  if (node.contains("rf_sigma") == node.contains("points")) {
    throw ConfigError(where + ": give exactly one of rf_sigma and points");
  }
  if (node.contains("rf_sigma")) {
    return EnsembleDistribution::rf_binomial(get_required<double>(node, "rf_sigma", where));
  }
  EnsembleDistribution dist;
  for (const auto& p : node["points"]) {
    check_keys(p, {"rf_scale", "zeeman_offset_khz", "weight"}, where + ".points");
    dist.points.push_back({get_or<double>(p, "rf_scale", 1.0, where),
                           get_or<double>(p, "zeeman_offset_khz", 0.0, where),
                           get_or<double>(p, "weight", 1.0, where)});
  }
  dist.validate();
  return dist;
}

Bound bound_from(const json& node, const std::string& where) {
  const auto v = node.get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError(where + " must be [min, max]");
  return {v[0], v[1]};
}

OptimizerConfig optimizer_from_config(const json& cfg, std::uint64_t seed) {
  OptimizerConfig oc;
  oc.seed = seed;
  if (!cfg.contains("optimizer")) return oc;
  const json& o = cfg["optimizer"];
  const std::string where = "optimize config.optimizer";
  check_keys(o, {"n_segments", "total_duration_ms", "max_evaluations",
                 "convergence_tol", "restarts", "target_fidelity",
                 "simplex_rebuilds", "rf_reference_khz", "bounds"},
             where);
  oc.n_segments = get_or<int>(o, "n_segments", oc.n_segments, where);
  oc.total_duration_ms = get_or<double>(o, "total_duration_ms", oc.total_duration_ms, where);
  oc.max_evaluations = get_or<int>(o, "max_evaluations", oc.max_evaluations, where);
  oc.convergence_tol = get_or<double>(o, "convergence_tol", oc.convergence_tol, where);
  oc.restarts = get_or<int>(o, "restarts", oc.restarts, where);
  oc.target_fidelity = get_or<double>(o, "target_fidelity", oc.target_fidelity, where);
  oc.simplex_rebuilds = get_or<int>(o, "simplex_rebuilds", oc.simplex_rebuilds, where);
  oc.rf_reference_khz = get_or<double>(o, "rf_reference_khz", oc.rf_reference_khz, where);
  if (o.contains("bounds")) {
    const json& b = o["bounds"];
    check_keys(b, {"duration_ms", "amplitude_khz", "phase_rad", "offset_khz"},
               where + ".bounds");
    if (b.contains("duration_ms")) oc.duration_ms = bound_from(b["duration_ms"], "bounds.duration_ms");
    if (b.contains("amplitude_khz")) oc.amplitude_khz = bound_from(b["amplitude_khz"], "bounds.amplitude_khz");
    if (b.contains("phase_rad")) oc.phase_rad = bound_from(b["phase_rad"], "bounds.phase_rad");
    if (b.contains("offset_khz")) oc.offset_khz = bound_from(b["offset_khz"], "bounds.offset_khz");
  }
  oc.validate();
  return oc;
}

CommandResult cmd_optimize(Context& ctx) {
  const json& cfg = ctx.config();
  const std::string where = "optimize config";
  check_keys(cfg, {"schema", "command", "seed", "out_dir", "system", "target",
                   "target_species", "ensemble", "optimizer", "scan",
                   "band_threshold", "min_fidelity"},
             where);
  const LoadedSystem loaded =
      load_system(ctx, cfg.contains("system") ? cfg["system"] : json("malonic"));
  const SpinSystem& sys = loaded.sys;
  sys.validate();
  const GateTarget target =
      target_from_config(ctx, sys, get_required<json>(cfg, "target", where));
  target.validate();
  if (target.unitary.rows() != sys.dim()) {
    throw ConfigError(where + ": target dimension does not match the system");
  }
  const std::string species =
      get_or<std::string>(cfg, "target_species", "13C", where);
  const EnsembleDistribution dist = ensemble_from_config(cfg);
  const OptimizerConfig oc = optimizer_from_config(cfg, ctx.seed());
  const double band_threshold = get_or<double>(cfg, "band_threshold", 0.9, where);
  const double min_fidelity = get_or<double>(cfg, "min_fidelity", 0.95, where);

  std::vector<double> rf_scales{0.94, 1.0, 1.06};
  std::vector<double> offsets = uniform_grid(-1.0, 1.0, 41);
  if (cfg.contains("scan")) {
    const json& s = cfg["scan"];
    check_keys(s, {"rf_scales", "min_offset_khz", "max_offset_khz", "points"},
               where + ".scan");
    rf_scales = get_or<std::vector<double>>(s, "rf_scales", rf_scales, where);
    offsets = uniform_grid(get_or<double>(s, "min_offset_khz", -1.0, where),
                           get_or<double>(s, "max_offset_khz", 1.0, where),
                           get_or<int>(s, "points", 41, where));
  }

  const OptimizationResult opt = optimize_pulse(sys, target, dist, oc, species);
  ctx.write_json("pulse.json", pulse_to_json(opt.pulse));
  ctx.write_csv("fidelity_trace.csv", [&](std::ostream& o) {
    o << "evaluation,fidelity\n";
    for (std::size_t k = 0; k < opt.fidelity_trace.size(); ++k) {
      o << k + 1 << ',' << opt.fidelity_trace[k] << '\n';
    }
  });
  const RobustnessGrid grid =
      robustness_scan(sys, opt.pulse, target, rf_scales, offsets);
  ctx.write_csv("robustness.csv",
                [&](std::ostream& o) { write_robustness_csv(o, grid); });

  json bands = json::array();
  for (std::size_t i = 0; i < grid.rf_scales.size(); ++i) {
    bands.push_back({{"rf_scale", grid.rf_scales[i]},
                     {"band_width_khz", offset_band_width(grid, i, band_threshold)}});
  }
  if (opt.fidelity < min_fidelity) {
    ctx.warn("ensemble fidelity " + std::to_string(opt.fidelity) +
             " below " + std::to_string(min_fidelity));
  }
  return ctx.finish({{"target", target.name},
                     {"fidelity", opt.fidelity},
                     {"evaluations", opt.evaluations},
                     {"n_segments", opt.pulse.segments.size()},
                     {"duration_ms", opt.pulse.total_duration_ms()},
                     {"band_threshold", band_threshold},
                     {"bands", bands}});
}

// ---- pseudopure ----

ProtocolStage stage_from_config(const Context& ctx, const json& cfg,
                                const std::string& key,
                                const UnitaryMatrix& ideal) {
  if (!cfg.contains(key)) return ideal;
  const json& node = cfg[key];
  if (node.is_string()) {
    const std::string s = node.get<std::string>();
    if (s == "ideal") return ideal;
    return pulse_from_json(read_json_file(ctx.resolve(s)));
  }
  throw ConfigError("pseudopure config." + key +
                    " must be \"ideal\" or a pulse file path");
}

CommandResult cmd_pseudopure(Context& ctx) {
  const json& cfg = ctx.config();
  const std::string where = "pseudopure config";
  check_keys(cfg, {"schema", "command", "seed", "out_dir", "system",
                   "iiz_to_zzz", "tqpp", "phase_cycle", "rf_scale",
                   "zeeman_offset_khz", "t2star_ms", "grid", "min_correlation"},
             where);
  const LoadedSystem loaded =
      load_system(ctx, cfg.contains("system") ? cfg["system"] : json("malonic"));
  const SpinSystem& sys = loaded.sys;
  sys.validate();
  PseudopureInputs inputs;
  inputs.iiz_to_zzz = stage_from_config(ctx, cfg, "iiz_to_zzz", iiz_to_zzz_target().unitary);
  inputs.tqpp = stage_from_config(ctx, cfg, "tqpp", tqpp_target().unitary);
  const std::string cycle = get_or<std::string>(cfg, "phase_cycle", "three_quantum", where);
  if (cycle == "three_quantum") {
    inputs.cycle = PhaseCycle::three_quantum();
  } else if (cycle == "none") {
    inputs.cycle = PhaseCycle::none();
  } else {
    throw ConfigError(where + ": phase_cycle is \"three_quantum\" or \"none\"");
  }
  const double rf_scale = get_or<double>(cfg, "rf_scale", 1.0, where);
  const double offset = get_or<double>(cfg, "zeeman_offset_khz", 0.0, where);
  const double min_corr = get_or<double>(cfg, "min_correlation", 0.9, where);
  LineshapeParams shape{load_t2star(cfg, loaded, where)};
  shape.validate(sys.n_spins());

  const PseudopureResult pp = pseudopure_protocol(sys, inputs, rf_scale, offset);
  json state = matrix_to_json(pp.state);
  state["labels"] = sys.labels;
  state["correlation"] = pp.correlation;
  ctx.write_json("state.json", state);

  const TransitionList lines =
      transition_spectrum(sys, pp.state, default_observable(sys.n_spins()));
  const std::vector<double> grid = spectrum_grid(cfg, lines, shape.t2star_ms, where);
  const std::vector<double> amplitude = broaden(lines, shape, grid);
  ctx.write_csv("readout_transitions.csv",
                [&](std::ostream& o) { write_transitions_csv(o, lines); });
  ctx.write_csv("readout_spectrum.csv", [&](std::ostream& o) {
    write_spectrum_csv(o, grid, amplitude);
  });

  // Fraction of readout intensity away from the first spin's multiplet.
  double total = 0.0;
  double off_target = 0.0;
  for (const auto& l : lines.lines) {
    total += std::abs(l.intensity);
    if (l.spin != 1) off_target += std::abs(l.intensity);
  }
  json orders = json::object();
  const double norm2 = pp.state.squaredNorm();
  for (const auto& [order, part] : coherence_decompose(pp.state)) {
    orders[std::to_string(order)] = norm2 > 0.0 ? part.squaredNorm() / norm2 : 0.0;
  }
  if (pp.correlation < min_corr) {
    ctx.warn("state correlation " + std::to_string(pp.correlation) + " below " +
             std::to_string(min_corr));
  }
  return ctx.finish({{"correlation", pp.correlation},
                     {"phase_cycle", cycle},
                     {"leakage_fraction", total > 0.0 ? off_target / total : 0.0},
                     {"coherence_weights", orders}});
}

// ---- dephasing ----

std::vector<DipolarEnvironment> envs_from_list(const json& node) {
  if (!node.is_array() || node.empty()) {
    throw ConfigError("dephasing config.environments must be a non-empty array");
  }
  std::vector<DipolarEnvironment> envs;
  for (const auto& e : node) {
    const std::string where = "dephasing config.environments";
    check_keys(e, {"d_alpha_khz", "d_beta_khz", "d_gamma_khz"}, where);
    envs.push_back({get_required<double>(e, "d_alpha_khz", where),
                    get_required<double>(e, "d_beta_khz", where),
                    get_required<double>(e, "d_gamma_khz", where)});
  }
  return envs;
}

FrequencyFamilies families_from(const std::string& s) {
  if (s == "three_halves") return FrequencyFamilies::ThreeHalvesOnly;
  if (s == "both") return FrequencyFamilies::Both;
  throw ConfigError("frequency mode must be \"three_halves\" or \"both\"");
}

json fit_json(const LorentzianFit& f) {
  return {{"amplitude", f.amplitude}, {"center", f.center},
          {"fwhm", f.fwhm},           {"baseline", f.baseline},
          {"residual", f.residual},   {"evaluations", f.evaluations},
          {"ok", f.ok}};
}

json kraus_report(const std::vector<DipolarEnvironment>& envs,
                  const std::vector<double>& times, int samples,
                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_env(0, envs.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_t(0, times.size() - 1);
  double max_disc = 0.0;
  double sum_disc = 0.0;
  double max_paper_completeness = 0.0;
  double max_exact_completeness = 0.0;
  for (int k = 0; k < samples; ++k) {
    const DipolarEnvironment& env = envs[pick_env(rng)];
    const double t = times[pick_t(rng)];
    const double d = paper_kraus_discrepancy(env, t);
    max_disc = std::max(max_disc, d);
    sum_disc += d;
    max_paper_completeness =
        std::max(max_paper_completeness, kraus_paper(env, t).completeness_error());
    max_exact_completeness =
        std::max(max_exact_completeness, kraus_exact(env, t).completeness_error());
  }
  return {{"samples", samples},
          {"paper_vs_exact_max", max_disc},
          {"paper_vs_exact_mean", samples > 0 ? sum_disc / samples : 0.0},
          {"paper_completeness_error_max", max_paper_completeness},
          {"exact_completeness_error_max", max_exact_completeness}};
}

CommandResult cmd_dephasing(Context& ctx) {
  const json& cfg = ctx.config();
  const std::string where = "dephasing config";
  check_keys(cfg, {"schema", "command", "seed", "out_dir", "environments",
                   "structure", "model", "time_grid", "lorentzian_threshold",
                   "kraus_samples", "additivity"},
             where);
  if (cfg.contains("environments") == cfg.contains("structure")) {
    throw ConfigError(where + ": give exactly one of environments and structure");
  }
  json summary = json::object();
  std::vector<DipolarEnvironment> envs;
  if (cfg.contains("environments")) {
    envs = envs_from_list(cfg["environments"]);
  } else {
    const json& s = cfg["structure"];
    const std::string sw = where + ".structure";
    check_keys(s, {"file", "ref_molecule", "ref_label", "shells",
                   "exclude_like_spins", "eta", "mode", "bins"},
               sw);
    const CrystalStructure structure =
        load_structure_file(ctx.resolve(get_required<std::string>(s, "file", sw)).string());
    const int ref_molecule = get_or<int>(s, "ref_molecule", 0, sw);
    const std::string ref_label = get_required<std::string>(s, "ref_label", sw);
    const int shells = get_or<int>(s, "shells", 1, sw);
    const FrequencyFamilies mode =
        families_from(get_or<std::string>(s, "mode", "three_halves", sw));
    HistogramBins bins;
    if (s.contains("bins")) {
      check_keys(s["bins"], {"n_bins", "half_width_hz"}, sw + ".bins");
      bins.n_bins = get_or<int>(s["bins"], "n_bins", bins.n_bins, sw);
      bins.half_width_hz = get_or<double>(s["bins"], "half_width_hz", bins.half_width_hz, sw);
    }
    const SiteEnumeration sites =
        enumerate_sites(structure, ref_molecule, ref_label, shells);
    const auto assignment = reference_assignment(structure, ref_label);
    envs = molecule_environments(sites, assignment,
                                 get_or<bool>(s, "exclude_like_spins", false, sw));
    const CouplingHistogram hist = frequency_histogram(envs, mode, bins);
    ctx.write_csv("histogram.csv",
                  [&](std::ostream& o) { write_histogram_csv(o, hist); });
    const LorentzianFit hfit = histogram_fwhm(hist);
    summary["structure"] = {{"n_sites", sites.sites.size()},
                            {"n_molecules", sites.n_molecules},
                            {"histogram_fwhm_hz", hfit.fwhm},
                            {"histogram_fit_ok", hfit.ok}};
    if (s.contains("eta")) {
      const LinewidthReport report = linewidth_report(
          structure, shells, get_required<double>(s, "eta", sw), mode, bins);
      ctx.write_json("linewidth_report.json", linewidth_report_json(report));
    }
  }

  const std::string model_name = get_or<std::string>(cfg, "model", "exact", where);
  KrausModel model = KrausModel::ExactPartialTrace;
  if (model_name == "paper") {
    model = KrausModel::PaperLiteral;
  } else if (model_name != "exact") {
    throw ConfigError(where + ": model must be \"exact\" or \"paper\"");
  }
  std::vector<double> times;
  if (cfg.contains("time_grid")) {
    const json& g = cfg["time_grid"];
    check_keys(g, {"points", "max_ms"}, where + ".time_grid");
    const int points = get_or<int>(g, "points", 512, where);
    if (g.contains("max_ms")) {
      const double max_ms = get_required<double>(g, "max_ms", where);
      if (points < 2 || !(max_ms > 0.0)) {
        throw ConfigError(where + ".time_grid needs points >= 2 and max_ms > 0");
      }
      for (int k = 0; k < points; ++k) times.push_back(max_ms * k / (points - 1.0));
    } else {
      times = default_time_grid(envs, points);
    }
  } else {
    times = default_time_grid(envs);
  }

  const CorrelationTrace trace = correlation_trace(envs, times, model);
  const Spectrum spectrum = spectrum_of_trace(trace);
  ctx.write_csv("trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
  ctx.write_csv("spectrum.csv",
                [&](std::ostream& o) { write_spectrum_csv(o, spectrum); });
  const LorentzianFit lfit = lorentzian_fwhm(
      spectrum, get_or<double>(cfg, "lorentzian_threshold", 0.5, where));
  ctx.write_json("lorentzian.json", fit_json(lfit));
  if (!lfit.ok) {
    ctx.warn("Lorentzian fit residual " + std::to_string(lfit.residual) +
             " above threshold");
  }
  ctx.write_json("kraus_report.json",
                 kraus_report(envs, times, get_or<int>(cfg, "kraus_samples", 20, where),
                              ctx.seed()));

  summary["n_environments"] = envs.size();
  summary["model"] = model_name;
  summary["peaks_hz"] = spectrum_peaks_hz(spectrum);
  summary["bin_hz"] = spectrum.bin_hz;
  summary["lorentzian_fwhm_hz"] = lfit.fwhm;
  if (envs.size() == 1) {
    json listed = json::array();
    for (const auto& w : phase_spectrum_frequencies(envs[0])) {
      listed.push_back(w.frequency_khz * 1e3);
    }
    summary["enumerated_hz"] = listed;
  }

  if (cfg.contains("additivity")) {
    const json& a = cfg["additivity"];
    const std::string aw = where + ".additivity";
    check_keys(a, {"times_1q_ms", "samples", "points", "max_ms", "floor"}, aw);
    const auto t1q = get_required<std::vector<double>>(a, "times_1q_ms", aw);
    if (t1q.size() != 3) throw ConfigError(aw + ".times_1q_ms needs 3 values");
    const int samples = get_or<int>(a, "samples", 10000, aw);
    const double max_ms = get_or<double>(
        a, "max_ms", 3.0 * *std::max_element(t1q.begin(), t1q.end()), aw);
    const int points = get_or<int>(a, "points", 256, aw);
    std::array<std::vector<double>, 3> freqs;
    for (int j = 0; j < 3; ++j) {
      if (!(t1q[j] > 0.0)) throw ConfigError(aw + ": 1Q times must be > 0");
      freqs[j] = cauchy_frequency_samples(1.0 / t1q[j], samples,
                                          ctx.seed() + static_cast<std::uint64_t>(j));
    }
    const std::vector<double> grid = uniform_grid(0.0, max_ms, points);
    const AdditivityResult r =
        tq_rate_additivity(freqs, grid, get_or<double>(a, "floor", 0.1, aw));
    const double predicted = predicted_3q_time({t1q[0], t1q[1], t1q[2]});
    ctx.write_json("additivity.json",
                   {{"times_1q_ms", t1q},
                    {"rates_1q_per_ms", r.rates_1q},
                    {"rate_3q_per_ms", r.rate_3q},
                    {"ratio_to_sum", r.ratio},
                    {"measured_3q_ms", r.rate_3q > 0.0 ? 1.0 / r.rate_3q : 0.0},
                    {"predicted_3q_ms", predicted},
                    {"samples", samples}});
    summary["additivity_ratio"] = r.ratio;
  }
  return ctx.finish(summary);
}

// ---- sequence ----

std::vector<SequenceElement> block_from_config(const Context& ctx,
                                               const json& cfg) {
  const std::string where = "sequence config";
  const json node = get_required<json>(cfg, "sequence", where);
  if (node.is_array()) {
    try {
      return sequence_from_json(node);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (!node.is_string()) {
    throw ConfigError(where + ".sequence must be a name, a file or an array");
  }
  const std::string name = node.get<std::string>();
  const double tau = get_or<double>(cfg, "tau_ms", 0.01, where);
  if (name == "hahn") return hahn_echo_elements(get_or<double>(cfg, "echo_ms", 1.0, where));
  if (name == "mrev8") return mrev8_cycle_elements(tau);
  if (name == "mrev8_hahn") {
    auto block = mrev8_cycle_elements(tau);
    const auto half = block;
    block.emplace_back(IdealPulse{PauliAxis::Y, kPi, {}});
    block.insert(block.end(), half.begin(), half.end());
    return block;
  }
  if (name == "free") return {Delay{get_or<double>(cfg, "block_ms", 12.0 * tau, where)}};
  try {
    return sequence_from_json(read_json_file(ctx.resolve(name)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

CommandResult cmd_sequence(Context& ctx) {
  const json& cfg = ctx.config();
  const std::string where = "sequence config";
  check_keys(cfg, {"schema", "command", "seed", "out_dir", "system", "cluster",
                   "sequence", "tau_ms", "echo_ms", "block_ms", "n_blocks",
                   "initial_state", "observable", "compare_free", "free_substeps",
                   "fit_floor"},
             where);
  if (cfg.contains("system") == cfg.contains("cluster")) {
    throw ConfigError(where + ": give exactly one of system and cluster");
  }
  std::vector<SpinSystem> ensemble;
  if (cfg.contains("system")) {
    ensemble.push_back(load_system(ctx, cfg["system"]).sys);
  } else {
    const json& c = cfg["cluster"];
    check_keys(c, {"n_spins", "members", "rms_coupling_khz"}, where + ".cluster");
    ensemble = random_like_spin_clusters(
        get_or<int>(c, "n_spins", 4, where), get_or<int>(c, "members", 16, where),
        get_required<double>(c, "rms_coupling_khz", where), ctx.seed());
  }
  for (const auto& s : ensemble) s.validate();
  const int n = ensemble.front().n_spins();
  const std::vector<SequenceElement> block = block_from_config(ctx, cfg);
  for (const auto& e : block) validate_element(e, n);
  const int n_blocks = get_or<int>(cfg, "n_blocks", 64, where);
  const DensityState rho0 =
      cfg.contains("initial_state")
          ? operator_from_config(cfg["initial_state"], n, "initial_state")
          : collective_pauli(PauliAxis::X, n);
  const OperatorMatrix observable =
      cfg.contains("observable")
          ? operator_from_config(cfg["observable"], n, "observable")
          : rho0;
  const double floor = get_or<double>(cfg, "fit_floor", 0.1, where);

  const DecayCurve curve =
      repeated_block_decay(ensemble, block, n_blocks, rho0, observable);
  // Refocusing pulses may flip the sign of the observed coherence from block
  // to block; the decay is fitted on the magnitude.
  std::vector<double> magnitude(curve.signal.size());
  std::transform(curve.signal.begin(), curve.signal.end(), magnitude.begin(),
                 [](double v) { return std::abs(v); });
  const ExponentialFit fit = fit_exponential_decay(curve.times_ms, magnitude, floor);
  const bool compare = get_or<bool>(cfg, "compare_free", true, where);
  const int free_substeps = get_or<int>(cfg, "free_substeps", 12, where);
  if (free_substeps < 1) throw ConfigError(where + ": free_substeps must be >= 1");
  ctx.write_csv("decay.csv", [&](std::ostream& o) {
    o << "t_ms,signal\n";
    for (std::size_t k = 0; k < curve.times_ms.size(); ++k) {
      o << curve.times_ms[k] << ',' << curve.signal[k] << '\n';
    }
  });
  // Rates at rounding level mean "no measurable decay".
  constexpr double kMinRate = 1e-9;
  const auto time_constant = [](double rate) -> json {
    return rate > kMinRate ? json(1.0 / rate) : json(nullptr);
  };
  json fit_doc = {{"rate_per_ms", fit.rate},
                  {"time_constant_ms", time_constant(fit.rate)},
                  {"points_used", fit.points_used},
                  {"block_ms", sequence_duration_ms(block)},
                  {"n_blocks", n_blocks}};
  if (compare) {
    // Free evolution over the same span, sampled finer than one block so a
    // fast initial decay is resolved.
    const std::vector<SequenceElement> free_block{
        Delay{sequence_duration_ms(block) / free_substeps}};
    const DecayCurve free_curve = repeated_block_decay(
        ensemble, free_block, n_blocks * free_substeps, rho0, observable);
    const ExponentialFit free_fit =
        fit_exponential_decay(free_curve.times_ms, free_curve.signal, floor);
    ctx.write_csv("free_decay.csv", [&](std::ostream& o) {
      o << "t_ms,signal\n";
      for (std::size_t k = 0; k < free_curve.times_ms.size(); ++k) {
        o << free_curve.times_ms[k] << ',' << free_curve.signal[k] << '\n';
      }
    });
    fit_doc["free_rate_per_ms"] = free_fit.rate;
    fit_doc["free_time_constant_ms"] = time_constant(free_fit.rate);
    fit_doc["suppression"] =
        fit.rate > kMinRate && free_fit.rate > kMinRate
            ? json(free_fit.rate / fit.rate)
            : json(nullptr);
  }
  ctx.write_json("fit.json", fit_doc);
  return ctx.finish(fit_doc);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"spectrum", "optimize",
                                              "pseudopure", "dephasing",
                                              "sequence"};
  return names;
}

std::string version() { return SPINFORGE_VERSION; }

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

CommandResult run_command(const std::string& command,
                          const nlohmann::json& config,
                          const std::filesystem::path& base_dir,
                          const CommandOptions& options) {
  Context ctx(command, config, base_dir, options);
  if (command == "spectrum") return cmd_spectrum(ctx);
  if (command == "optimize") return cmd_optimize(ctx);
  if (command == "pseudopure") return cmd_pseudopure(ctx);
  if (command == "dephasing") return cmd_dephasing(ctx);
  if (command == "sequence") return cmd_sequence(ctx);
  throw ConfigError("unknown command '" + command + "'");
}

CommandResult run_command_file(const std::string& command,
                               const std::filesystem::path& config_path,
                               const CommandOptions& options) {
  const json config = read_json_file(config_path);
  return run_command(command, config, config_path.parent_path(), options);
}

int run_and_report(const std::string& command,
                   const std::filesystem::path& config_path,
                   const CommandOptions& options) {
  try {
    const CommandResult r = run_command_file(command, config_path, options);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : r.files) std::cout << f.string() << '\n';
    return r.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace spinforge::cli
