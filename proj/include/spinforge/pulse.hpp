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

#ifndef SPINFORGE_PULSE_HPP_
#define SPINFORGE_PULSE_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinforge/spincore.hpp"
#include "spinforge/spinsys.hpp"

namespace spinforge {

// One constant-Hamiltonian period of a modulated RF waveform.
//
// The phase is referenced to the start of the segment. A nonzero
// `offset_khz` moves the carrier away from the base rotating frame, so the
// drive phase advances as phase + 2π·offset·t within the segment.
struct PulseSegment {
  double duration_ms = 0.0;
  double amplitude_khz = 0.0;  // nutation frequency
  double phase_rad = 0.0;
  double offset_khz = 0.0;
};

struct ShapedPulse {
  std::vector<PulseSegment> segments;
  std::string target_species = "13C";

  double total_duration_ms() const;
  void validate() const;
};

struct EnsemblePoint {
  double rf_scale = 1.0;
  double zeeman_offset_khz = 0.0;
  double weight = 1.0;
};

struct EnsembleDistribution {
  std::vector<EnsemblePoint> points;

  void validate() const;

  static EnsembleDistribution nominal();
  // Five RF-scale points {1-2s, 1-s, 1, 1+s, 1+2s} with weights
  // {1,4,6,4,1}/16; s is set so the standard deviation equals `sigma`.
  static EnsembleDistribution rf_binomial(double sigma = 0.06);
};

struct GateTarget {
  UnitaryMatrix unitary;
  std::string name;

  void validate() const;
};

// Hamiltonian pieces reused across every segment of a pulse.
//
// The RF frame rotation acts on the target-species spins only, so a nonzero
// carrier offset is exact only when the internal Hamiltonian commutes with
// their total Z; the constructor records whether that holds.
class PropagationContext {
 public:
  PropagationContext(const SpinSystem& sys, const std::string& target_species,
                     const CouplingForm& form = CouplingForm::full());

  const OperatorMatrix& internal() const { return internal_; }
  const Eigen::VectorXd& total_z() const { return total_z_; }
  const Eigen::VectorXd& target_z() const { return target_z_; }
  const OperatorMatrix& target_x() const { return target_x_; }
  const OperatorMatrix& target_y() const { return target_y_; }
  bool frame_exact() const { return frame_exact_; }
  Eigen::Index dim() const { return internal_.rows(); }

  // Rotating-frame Hamiltonian of a segment in the frame that follows its
  // carrier.
  OperatorMatrix segment_hamiltonian(const PulseSegment& seg, double rf_scale,
                                     double zeeman_offset_khz) const;

 private:
  OperatorMatrix internal_;
  Eigen::VectorXd total_z_;
  Eigen::VectorXd target_z_;
  OperatorMatrix target_x_;
  OperatorMatrix target_y_;
  bool frame_exact_ = true;
};

UnitaryMatrix segment_propagator(const PropagationContext& ctx,
                                 const PulseSegment& seg, double rf_scale,
                                 double zeeman_offset_khz);
UnitaryMatrix segment_propagator(const SpinSystem& sys, const PulseSegment& seg,
                                 double rf_scale, double zeeman_offset_khz,
                                 const std::string& target_species = "13C");

// Time-ordered product, last segment leftmost.
UnitaryMatrix pulse_propagator(const PropagationContext& ctx,
                               const ShapedPulse& pulse, double rf_scale,
                               double zeeman_offset_khz);
UnitaryMatrix pulse_propagator(const SpinSystem& sys, const ShapedPulse& pulse,
                               double rf_scale, double zeeman_offset_khz);

// Inverse waveform for a drive-only Hamiltonian: segments in reverse order,
// carrier offsets negated, and each phase advanced by π plus the carrier
// phase accumulated over the original segment. Exact when the internal
// Hamiltonian and static offset are zero.
ShapedPulse reversed_pulse(const ShapedPulse& pulse);

// |Tr(U_des† U) / N|^2.
double gate_fidelity(const UnitaryMatrix& desired, const UnitaryMatrix& actual);
double gate_fidelity(const GateTarget& target, const UnitaryMatrix& actual);

double ensemble_fidelity(const PropagationContext& ctx, const ShapedPulse& pulse,
                         const GateTarget& target,
                         const EnsembleDistribution& dist);
double ensemble_fidelity(const SpinSystem& sys, const ShapedPulse& pulse,
                         const GateTarget& target,
                         const EnsembleDistribution& dist);

struct Bound {
  double min = 0.0;
  double max = 0.0;
};

struct OptimizerConfig {
  int n_segments = 8;
  double total_duration_ms = 0.5;
  int max_evaluations = 20000;
  double convergence_tol = 1e-5;
  int restarts = 1;
  std::uint64_t seed = 1;
  // Per-segment parameter bounds; a zero-width bound freezes the parameter
  // at that value.
  Bound duration_ms{0.0, 0.0};
  Bound amplitude_khz{0.0, 0.0};
  Bound phase_rad{-1e3, 1e3};
  Bound offset_khz{0.0, 0.0};
  // Stop as soon as ensemble fidelity reaches this value.
  double target_fidelity = 1.0;
  // Simplex rebuilds around the best vertex after each convergence.
  int simplex_rebuilds = 4;
  // RF amplitude scale for initial amplitudes, simplex steps and the default
  // amplitude bound; 0 means internal_norm(sys), but never less than the
  // amplitude that turns a spin by 90 degrees over total_duration_ms.
  double rf_reference_khz = 0.0;

  // Bounds left at {0, 0} are filled from the system: durations within
  // [0.25, 2.5] x the mean segment length, amplitudes within
  // [0, 3 x rf reference], offsets within ±2 x the Zeeman spread.
  OptimizerConfig resolved(const SpinSystem& sys) const;
  double rf_reference(const SpinSystem& sys) const;
  void validate() const;
};

struct OptimizationResult {
  ShapedPulse pulse;
  double fidelity = 0.0;
  // Best-so-far ensemble fidelity after every evaluation, across restarts.
  std::vector<double> fidelity_trace;
  int evaluations = 0;
};

OptimizationResult optimize_pulse(const SpinSystem& sys,
                                  const GateTarget& target,
                                  const EnsembleDistribution& dist,
                                  const OptimizerConfig& config,
                                  const std::string& target_species = "13C");

// Starting waveform for one restart, drawn from the seeded generator.
ShapedPulse initial_pulse(const SpinSystem& sys, const OptimizerConfig& config,
                          std::uint64_t stream,
                          const std::string& target_species = "13C");

struct RobustnessGrid {
  std::vector<double> rf_scales;
  std::vector<double> offsets_khz;
  // fidelity[i][j] at (rf_scales[i], offsets_khz[j]).
  std::vector<std::vector<double>> fidelity;
};

RobustnessGrid robustness_scan(const SpinSystem& sys, const ShapedPulse& pulse,
                               const GateTarget& target,
                               const std::vector<double>& rf_scales,
                               const std::vector<double>& offsets_khz);

// Width of the contiguous offset band around zero offset (at the given
// rf-scale row) where fidelity stays above `threshold`; returns 0 if the
// zero-offset point itself fails.
double offset_band_width(const RobustnessGrid& grid, std::size_t rf_row,
                         double threshold);

void write_robustness_csv(std::ostream& out, const RobustnessGrid& grid);

nlohmann::json pulse_to_json(const ShapedPulse& pulse);
ShapedPulse pulse_from_json(const nlohmann::json& doc);

// Named gate targets on an n-spin register (1-based spin indices).
GateTarget x90_all_target(int n_spins);
// Controlled NOT on every target spin, conditioned on control in |1>.
GateTarget controlled_not_target(int n_spins, int control,
                                 const std::vector<int>& targets);
GateTarget swap_target(int n_spins, int i, int j);
GateTarget selective_90_target(int n_spins, int spin);

}  // namespace spinforge

#endif  // SPINFORGE_PULSE_HPP_
