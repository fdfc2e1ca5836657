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

#include "spinforge/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "spinforge/parallel.hpp"
#include "spinforge/simplex.hpp"

namespace spinforge {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

Eigen::VectorXd species_z_diagonal(const SpinSystem& sys,
                                   const std::vector<int>& spins) {
  const int n = sys.n_spins();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(sys.dim());
  for (Eigen::Index b = 0; b < sys.dim(); ++b) {
    for (int j : spins) diag(b) += ((b >> (n - j)) & 1) ? -1.0 : 1.0;
  }
  return diag;
}

}  // namespace

double ShapedPulse::total_duration_ms() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration_ms;
  return total;
}

void ShapedPulse::validate() const {
  if (segments.empty()) {
    throw std::invalid_argument("shaped pulse has no segments");
  }
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (!(s.duration_ms > 0.0) || !std::isfinite(s.duration_ms)) {
      throw std::invalid_argument("segment " + std::to_string(k) +
                                  ": duration must be > 0");
    }
    if (!(s.amplitude_khz >= 0.0) || !std::isfinite(s.amplitude_khz)) {
      throw std::invalid_argument("segment " + std::to_string(k) +
                                  ": amplitude must be >= 0");
    }
    if (!std::isfinite(s.phase_rad) || !std::isfinite(s.offset_khz)) {
      throw std::invalid_argument("segment " + std::to_string(k) +
                                  ": phase and offset must be finite");
    }
  }
}

void EnsembleDistribution::validate() const {
  if (points.empty()) {
    throw std::invalid_argument("ensemble distribution is empty");
  }
  double total = 0.0;
  for (const auto& p : points) {
    if (!(p.weight >= 0.0)) {
      throw std::invalid_argument("ensemble weights must be >= 0");
    }
    total += p.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("ensemble weights must sum to 1");
  }
}

EnsembleDistribution EnsembleDistribution::nominal() {
  return {{EnsemblePoint{1.0, 0.0, 1.0}}};
}

EnsembleDistribution EnsembleDistribution::rf_binomial(double sigma) {
  // Variance of the {1,4,6,4,1}/16 weights on {-2,-1,0,1,2} x s is s^2.
  const double s = sigma;
  EnsembleDistribution d;
  const double w[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  for (int k = -2; k <= 2; ++k) {
    d.points.push_back({1.0 + k * s, 0.0, w[k + 2]});
  }
  return d;
}

void GateTarget::validate() const {
  if (!is_power_of_two_dim(unitary.rows()) ||
      unitary.rows() != unitary.cols()) {
    throw std::invalid_argument("gate target must be square with 2^n rows");
  }
  if (!is_unitary(unitary, 1e-10)) {
    throw std::invalid_argument("gate target '" + name + "' is not unitary");
  }
}

PropagationContext::PropagationContext(const SpinSystem& sys,
                                       const std::string& target_species,
                                       const CouplingForm& form) {
  sys.validate();
  internal_ = internal_hamiltonian(sys, form);
  total_z_ = total_z_diagonal(sys.n_spins());
  const std::vector<int> targets = sys.spins_of_species(target_species);
  target_z_ = species_z_diagonal(sys, targets);
  const Eigen::Index dim = sys.dim();
  if (targets.empty()) {
    target_x_ = OperatorMatrix::Zero(dim, dim);
    target_y_ = OperatorMatrix::Zero(dim, dim);
  } else {
    target_x_ = collective_pauli(PauliAxis::X, sys.n_spins(), targets);
    target_y_ = collective_pauli(PauliAxis::Y, sys.n_spins(), targets);
  }
  const OperatorMatrix zt = target_z_.cast<Complex>().asDiagonal();
  frame_exact_ = max_abs(commutator(internal_, zt)) < 1e-12;
}

OperatorMatrix PropagationContext::segment_hamiltonian(
    const PulseSegment& seg, double rf_scale, double zeeman_offset_khz) const {
  OperatorMatrix h = internal_;
  const double rf = 0.5 * rf_scale * seg.amplitude_khz;
  if (rf != 0.0) {
    h += (rf * std::cos(seg.phase_rad)) * target_x_ +
         (rf * std::sin(seg.phase_rad)) * target_y_;
  }
  for (Eigen::Index b = 0; b < h.rows(); ++b) {
    h(b, b) += 0.5 * (zeeman_offset_khz * total_z_(b) -
                      seg.offset_khz * target_z_(b));
  }
  return h;
}

UnitaryMatrix segment_propagator(const PropagationContext& ctx,
                                 const PulseSegment& seg, double rf_scale,
                                 double zeeman_offset_khz) {
  if (seg.offset_khz != 0.0 && !ctx.frame_exact()) {
    throw std::invalid_argument(
        "carrier offset requires an internal Hamiltonian that commutes with "
        "the driven spins' total Z; truncate unlike-spin couplings");
  }
  const OperatorMatrix h =
      ctx.segment_hamiltonian(seg, rf_scale, zeeman_offset_khz);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const Eigen::VectorXd& w = solver.eigenvalues();
  const CMatrix& v = solver.eigenvectors();
  CVector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    phases(k) = std::polar(1.0, -kTwoPi * w(k) * seg.duration_ms);
  }
  UnitaryMatrix u = v * phases.asDiagonal() * v.adjoint();
  if (seg.offset_khz != 0.0) {
    // Back to the base frame: exp(-i 2π δ τ Z'/2) on the driven spins.
    const double angle = -kTwoPi * seg.offset_khz * seg.duration_ms * 0.5;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      u.row(r) *= std::polar(1.0, angle * ctx.target_z()(r));
    }
  }
  return u;
}

UnitaryMatrix segment_propagator(const SpinSystem& sys, const PulseSegment& seg,
                                 double rf_scale, double zeeman_offset_khz,
                                 const std::string& target_species) {
  const PropagationContext ctx(sys, target_species);
  return segment_propagator(ctx, seg, rf_scale, zeeman_offset_khz);
}

UnitaryMatrix pulse_propagator(const PropagationContext& ctx,
                               const ShapedPulse& pulse, double rf_scale,
                               double zeeman_offset_khz) {
  pulse.validate();
  UnitaryMatrix u = UnitaryMatrix::Identity(ctx.dim(), ctx.dim());
  for (const auto& seg : pulse.segments) {
    u = segment_propagator(ctx, seg, rf_scale, zeeman_offset_khz) * u;
  }
  return u;
}

UnitaryMatrix pulse_propagator(const SpinSystem& sys, const ShapedPulse& pulse,
                               double rf_scale, double zeeman_offset_khz) {
  const PropagationContext ctx(sys, pulse.target_species);
  return pulse_propagator(ctx, pulse, rf_scale, zeeman_offset_khz);
}

ShapedPulse reversed_pulse(const ShapedPulse& pulse) {
  ShapedPulse out;
  out.target_species = pulse.target_species;
  for (auto it = pulse.segments.rbegin(); it != pulse.segments.rend(); ++it) {
    PulseSegment s = *it;
    s.phase_rad = it->phase_rad + kPi + kTwoPi * it->offset_khz * it->duration_ms;
    s.offset_khz = -it->offset_khz;
    out.segments.push_back(s);
  }
  return out;
}

double gate_fidelity(const UnitaryMatrix& desired, const UnitaryMatrix& actual) {
  if (desired.rows() != actual.rows() || desired.cols() != actual.cols()) {
    throw std::invalid_argument("gate_fidelity: dimension mismatch");
  }
  const Complex overlap = frobenius_inner(desired, actual) /
                          static_cast<double>(desired.rows());
  return std::norm(overlap);
}

double gate_fidelity(const GateTarget& target, const UnitaryMatrix& actual) {
  return gate_fidelity(target.unitary, actual);
}

double ensemble_fidelity(const PropagationContext& ctx, const ShapedPulse& pulse,
                         const GateTarget& target,
                         const EnsembleDistribution& dist) {
  dist.validate();
  std::vector<double> pointwise(dist.points.size());
  parallel_for(dist.points.size(), [&](std::size_t k) {
    const auto& p = dist.points[k];
    pointwise[k] = gate_fidelity(
        target, pulse_propagator(ctx, pulse, p.rf_scale, p.zeeman_offset_khz));
  });
  double f = 0.0;
  for (std::size_t k = 0; k < pointwise.size(); ++k) {
    f += dist.points[k].weight * pointwise[k];
  }
  return f;
}

double ensemble_fidelity(const SpinSystem& sys, const ShapedPulse& pulse,
                         const GateTarget& target,
                         const EnsembleDistribution& dist) {
  const PropagationContext ctx(sys, pulse.target_species);
  return ensemble_fidelity(ctx, pulse, target, dist);
}

double OptimizerConfig::rf_reference(const SpinSystem& sys) const {
  if (rf_reference_khz > 0.0) return rf_reference_khz;
  // Nutation rate of a 90 degree turn spread over the whole pulse.
  const double quarter_turn = 0.25 / total_duration_ms;
  return std::max(internal_norm(sys), quarter_turn);
}

OptimizerConfig OptimizerConfig::resolved(const SpinSystem& sys) const {
  OptimizerConfig c = *this;
  const double mean = total_duration_ms / std::max(1, n_segments);
  const double norm = rf_reference(sys);
  double spread = 0.0;
  for (double nu : sys.zeeman_khz) spread = std::max(spread, std::abs(nu));
  if (c.duration_ms.min == 0.0 && c.duration_ms.max == 0.0) {
    c.duration_ms = {0.25 * mean, 2.5 * mean};
  }
  if (c.amplitude_khz.min == 0.0 && c.amplitude_khz.max == 0.0) {
    c.amplitude_khz = {0.0, 3.0 * std::max(norm, 1.0)};
  }
  if (c.offset_khz.min == 0.0 && c.offset_khz.max == 0.0 && spread > 0.0) {
    c.offset_khz = {-2.0 * spread, 2.0 * spread};
  }
  return c;
}

void OptimizerConfig::validate() const {
  if (n_segments < 1) {
    throw std::invalid_argument("optimizer needs n_segments >= 1");
  }
  if (!(total_duration_ms > 0.0)) {
    throw std::invalid_argument("optimizer needs total_duration_ms > 0");
  }
  if (!(rf_reference_khz >= 0.0) || !std::isfinite(rf_reference_khz)) {
    throw std::invalid_argument("rf_reference_khz must be finite and >= 0");
  }
  if (max_evaluations < 0 || restarts < 1) {
    throw std::invalid_argument(
        "optimizer needs max_evaluations >= 0 and restarts >= 1");
  }
  for (const Bound* b : {&duration_ms, &amplitude_khz, &phase_rad, &offset_khz}) {
    if (!std::isfinite(b->min) || !std::isfinite(b->max) || b->min > b->max) {
      throw std::invalid_argument("optimizer bounds must be finite, min <= max");
    }
  }
}

namespace {

constexpr int kParamsPerSegment = 4;

std::vector<Bound> parameter_bounds(const OptimizerConfig& c) {
  return {c.duration_ms, c.amplitude_khz, c.phase_rad, c.offset_khz};
}

std::vector<double> flatten(const ShapedPulse& pulse) {
  std::vector<double> x;
  x.reserve(pulse.segments.size() * kParamsPerSegment);
  for (const auto& s : pulse.segments) {
    x.insert(x.end(), {s.duration_ms, s.amplitude_khz, s.phase_rad, s.offset_khz});
  }
  return x;
}

// Maps a parameter vector to a valid pulse, returning the quadratic penalty
// for out-of-bounds coordinates.
double unflatten(const std::vector<double>& x, const std::vector<Bound>& bounds,
                 ShapedPulse& pulse) {
  double penalty = 0.0;
  const std::size_t n = x.size() / kParamsPerSegment;
  pulse.segments.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    double v[kParamsPerSegment];
    for (int p = 0; p < kParamsPerSegment; ++p) {
      const double value = x[s * kParamsPerSegment + p];
      const Bound& b = bounds[p];
      const double range = std::max(b.max - b.min, 1e-12);
      if (value < b.min) penalty += std::pow((b.min - value) / range, 2);
      if (value > b.max) penalty += std::pow((value - b.max) / range, 2);
      v[p] = value;
    }
    pulse.segments[s].duration_ms = std::max(v[0], 1e-9);
    pulse.segments[s].amplitude_khz = std::max(v[1], 0.0);
    pulse.segments[s].phase_rad = v[2];
    pulse.segments[s].offset_khz = v[3];
  }
  return penalty;
}

}  // namespace

ShapedPulse initial_pulse(const SpinSystem& sys, const OptimizerConfig& config,
                          std::uint64_t stream,
                          const std::string& target_species) {
  const OptimizerConfig c = config.resolved(sys);
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed),
                    static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double norm = c.rf_reference(sys);
  double spread = 0.0;
  for (double nu : sys.zeeman_khz) spread = std::max(spread, std::abs(nu));

  auto in_bound = [](const Bound& b, double v) {
    return b.min == b.max ? b.min : std::clamp(v, b.min, b.max);
  };
  ShapedPulse pulse;
  pulse.target_species = target_species;
  const double mean = c.total_duration_ms / c.n_segments;
  for (int k = 0; k < c.n_segments; ++k) {
    PulseSegment s;
    s.duration_ms = in_bound(c.duration_ms, mean);
    s.amplitude_khz = in_bound(c.amplitude_khz, (0.5 + unit(rng)) * norm);
    s.phase_rad = in_bound(c.phase_rad, kTwoPi * unit(rng));
    s.offset_khz = in_bound(c.offset_khz, (2.0 * unit(rng) - 1.0) * spread);
    pulse.segments.push_back(s);
  }
  return pulse;
}

OptimizationResult optimize_pulse(const SpinSystem& sys,
                                  const GateTarget& target,
                                  const EnsembleDistribution& dist,
                                  const OptimizerConfig& config,
                                  const std::string& target_species) {
  config.validate();
  target.validate();
  dist.validate();
  if (target.unitary.rows() != sys.dim()) {
    throw std::invalid_argument("gate target dimension does not match system");
  }
  const OptimizerConfig c = config.resolved(sys);
  const PropagationContext ctx(sys, target_species);
  const std::vector<Bound> bounds = parameter_bounds(c);
  const double norm = c.rf_reference(sys);
  double spread = 0.0;
  for (double nu : sys.zeeman_khz) spread = std::max(spread, std::abs(nu));

  const double mean = c.total_duration_ms / c.n_segments;
  const double base_steps[kParamsPerSegment] = {
      0.2 * mean, 0.25 * norm, 0.6, 0.25 * std::max(spread, 0.1)};
  std::vector<double> steps;
  for (int k = 0; k < c.n_segments; ++k) {
    for (int p = 0; p < kParamsPerSegment; ++p) {
      steps.push_back(bounds[p].min == bounds[p].max ? 0.0 : base_steps[p]);
    }
  }

  OptimizationResult result;
  result.fidelity = -1.0;
  ShapedPulse scratch;
  scratch.target_species = target_species;
  const auto objective = [&](const std::vector<double>& x) {
    const double penalty = unflatten(x, bounds, scratch);
    return 1.0 - ensemble_fidelity(ctx, scratch, target, dist) + penalty;
  };

  const int per_restart = c.max_evaluations / c.restarts;
  for (int r = 0; r < c.restarts; ++r) {
    const ShapedPulse start =
        initial_pulse(sys, c, static_cast<std::uint64_t>(r), target_species);
    if (c.max_evaluations == 0) {
      const double f = ensemble_fidelity(ctx, start, target, dist);
      if (f > result.fidelity) {
        result.fidelity = f;
        result.pulse = start;
      }
      result.fidelity_trace.push_back(result.fidelity);
      continue;
    }
    NelderMeadOptions options;
    options.max_evaluations =
        r == c.restarts - 1 ? c.max_evaluations - result.evaluations
                            : per_restart;
    options.convergence_tol = c.convergence_tol;
    options.rebuilds = c.simplex_rebuilds;
    options.stop_below = 1.0 - c.target_fidelity;
    const NelderMeadResult nm = nelder_mead(objective, flatten(start), steps, options);
    result.evaluations += nm.evaluations;
    ShapedPulse best;
    best.target_species = target_species;
    unflatten(nm.best_x, bounds, best);
    for (double v : nm.best_trace) {
      // Trace carries fidelity without the bound penalty only when the best
      // point is in bounds, which is the common case; clamp for safety.
      const double f = std::clamp(1.0 - v, 0.0, 1.0);
      const double prev = result.fidelity_trace.empty()
                              ? 0.0
                              : result.fidelity_trace.back();
      result.fidelity_trace.push_back(std::max(prev, f));
    }
    const double f = ensemble_fidelity(ctx, best, target, dist);
    if (f > result.fidelity) {
      result.fidelity = f;
      result.pulse = best;
    }
    if (result.fidelity >= c.target_fidelity) break;
  }
  return result;
}

RobustnessGrid robustness_scan(const SpinSystem& sys, const ShapedPulse& pulse,
                               const GateTarget& target,
                               const std::vector<double>& rf_scales,
                               const std::vector<double>& offsets_khz) {
  if (rf_scales.empty() || offsets_khz.empty()) {
    throw std::invalid_argument("robustness scan needs nonempty grids");
  }
  const PropagationContext ctx(sys, pulse.target_species);
  RobustnessGrid grid{rf_scales, offsets_khz, {}};
  grid.fidelity.assign(rf_scales.size(),
                       std::vector<double>(offsets_khz.size(), 0.0));
  const std::size_t cols = offsets_khz.size();
  parallel_for(rf_scales.size() * cols, [&](std::size_t idx) {
    const std::size_t i = idx / cols;
    const std::size_t j = idx % cols;
    grid.fidelity[i][j] = gate_fidelity(
        target, pulse_propagator(ctx, pulse, rf_scales[i], offsets_khz[j]));
  });
  return grid;
}

double offset_band_width(const RobustnessGrid& grid, std::size_t rf_row,
                         double threshold) {
  const auto& offs = grid.offsets_khz;
  const auto& row = grid.fidelity.at(rf_row);
  std::size_t center = 0;
  for (std::size_t j = 1; j < offs.size(); ++j) {
    if (std::abs(offs[j]) < std::abs(offs[center])) center = j;
  }
  if (row[center] <= threshold) return 0.0;
  std::size_t lo = center;
  std::size_t hi = center;
  while (lo > 0 && row[lo - 1] > threshold) --lo;
  while (hi + 1 < offs.size() && row[hi + 1] > threshold) ++hi;
  return offs[hi] - offs[lo];
}

void write_robustness_csv(std::ostream& out, const RobustnessGrid& grid) {
  out << "rf_scale,offset_khz,fidelity\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < grid.rf_scales.size(); ++i) {
    for (std::size_t j = 0; j < grid.offsets_khz.size(); ++j) {
      out << grid.rf_scales[i] << ',' << grid.offsets_khz[j] << ','
          << grid.fidelity[i][j] << '\n';
    }
  }
}

nlohmann::json pulse_to_json(const ShapedPulse& pulse) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : pulse.segments) {
    segs.push_back({{"duration_ms", s.duration_ms},
                    {"amplitude_khz", s.amplitude_khz},
                    {"phase_rad", s.phase_rad},
                    {"offset_khz", s.offset_khz}});
  }
  return {{"segments", segs}, {"target_species", pulse.target_species}};
}

ShapedPulse pulse_from_json(const nlohmann::json& doc) {
  ShapedPulse pulse;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key != "segments" && key != "target_species") {
        throw std::invalid_argument("unknown pulse key '" + key + "'");
      }
    }
    pulse.target_species = doc.value("target_species", std::string("13C"));
    for (const auto& s : doc.at("segments")) {
      for (const auto& [key, value] : s.items()) {
        if (key != "duration_ms" && key != "amplitude_khz" &&
            key != "phase_rad" && key != "offset_khz") {
          throw std::invalid_argument("unknown pulse segment key '" + key + "'");
        }
      }
      PulseSegment seg;
      seg.duration_ms = s.at("duration_ms").get<double>();
      seg.amplitude_khz = s.at("amplitude_khz").get<double>();
      seg.phase_rad = s.at("phase_rad").get<double>();
      seg.offset_khz = s.value("offset_khz", 0.0);
      pulse.segments.push_back(seg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("pulse document: ") + e.what());
  }
  pulse.validate();
  return pulse;
}

GateTarget x90_all_target(int n_spins) {
  const OperatorMatrix sx = collective_pauli(PauliAxis::X, n_spins);
  // exp(-i (π/4) ΣX) = exp(-i 2π H t) with H t = ΣX / 8.
  return {expm_hermitian(sx / 8.0, 1.0), "X90_all"};
}

GateTarget controlled_not_target(int n_spins, int control,
                                 const std::vector<int>& targets) {
  if (n_spins < 1 || n_spins > kMaxSpins || control < 1 || control > n_spins) {
    throw std::invalid_argument("controlled-not: bad control spin");
  }
  Eigen::Index flip = 0;
  for (int t : targets) {
    if (t < 1 || t > n_spins || t == control) {
      throw std::invalid_argument("controlled-not: bad target spin");
    }
    flip |= Eigen::Index{1} << (n_spins - t);
  }
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  const Eigen::Index cbit = Eigen::Index{1} << (n_spins - control);
  UnitaryMatrix u = UnitaryMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    const Eigen::Index out = (b & cbit) ? (b ^ flip) : b;
    u(out, b) = 1.0;
  }
  std::string name = "CN";
  for (std::size_t k = 1; k < targets.size(); ++k) name += "N";
  name += "(" + std::to_string(control);
  for (int t : targets) name += "," + std::to_string(t);
  name += ")";
  return {u, name};
}

GateTarget swap_target(int n_spins, int i, int j) {
  if (i < 1 || j < 1 || i > n_spins || j > n_spins || i == j ||
      n_spins > kMaxSpins) {
    throw std::invalid_argument("swap: bad spin indices");
  }
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  const int bi = n_spins - i;
  const int bj = n_spins - j;
  UnitaryMatrix u = UnitaryMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    const Eigen::Index vi = (b >> bi) & 1;
    const Eigen::Index vj = (b >> bj) & 1;
    Eigen::Index out = b & ~((Eigen::Index{1} << bi) | (Eigen::Index{1} << bj));
    out |= (vi << bj) | (vj << bi);
    u(out, b) = 1.0;
  }
  return {u, "SWAP(" + std::to_string(i) + "," + std::to_string(j) + ")"};
}

GateTarget selective_90_target(int n_spins, int spin) {
  const OperatorMatrix x = embed_pauli(PauliAxis::X, spin, n_spins);
  return {expm_hermitian(x / 8.0, 1.0),
          "selective_90(" + std::to_string(spin) + ")"};
}

}  // namespace spinforge
