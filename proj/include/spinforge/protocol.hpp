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

#ifndef SPINFORGE_PROTOCOL_HPP_
#define SPINFORGE_PROTOCOL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinforge/pulse.hpp"
#include "spinforge/spincore.hpp"
#include "spinforge/spinsys.hpp"

namespace spinforge {

// U rho U^dagger.
DensityState conjugate(const UnitaryMatrix& u, const DensityState& rho);

// Collective z rotation exp(-i phi Z'/2) over all spins.
UnitaryMatrix collective_rz(int n_spins, double phi);

// Splits rho by coherence order n = (Z'_a - Z'_b)/2 of each element. Every
// order in [-n_spins, n_spins] is present; the parts sum to rho exactly.
std::map<int, DensityState> coherence_decompose(const DensityState& rho);

// R_z(phi) U R_z(-phi).
UnitaryMatrix phase_shifted_unitary(const UnitaryMatrix& u, double phi);

// Phase-cycled acquisition: step k shifts the gate phase by
// k * phase_increment, weights the result by signs[k] and unwinds it with
// receiver_phases[k].
struct PhaseCycle {
  int n_steps = 1;
  double phase_increment = 0.0;
  std::vector<int> signs;
  std::vector<double> receiver_phases;

  void validate() const;

  // Single step, no phase shift.
  static PhaseCycle none();
  // Six steps of π/3 with alternating signs. The receiver follows the RF
  // phase plus π, which turns the literal -6 of the alternating sum into +6.
  static PhaseCycle three_quantum();
};

// Sum over steps of signs[k] exp(i n phi_k), with phi_k = k * increment and
// k running from 1.
Complex phase_cycle_sum(const PhaseCycle& cycle, int order);

// (1/n) sum_k signs[k] R_z(-psi_k) U(phi_k) rho U(phi_k)^dagger R_z(psi_k),
// with U(phi) = R_z(phi) U R_z(-phi) and psi_k the receiver phase.
DensityState phase_cycle_filter(const UnitaryMatrix& gate,
                                const DensityState& rho,
                                const PhaseCycle& cycle);

// Tr(rho rho_ideal) / sqrt(Tr(rho^2) Tr(rho_ideal^2)).
double state_correlation(const DensityState& rho, const DensityState& ideal);

// 3/(4|d|): duration of exchange evolution that swaps two spin states.
double transfer_time(double d_ch_khz);

// Ideal three-spin gates of the pseudopure chain.
GateTarget iiz_to_zzz_target();   // CNOT(2->3) CNOT(1->3): IIZ -> ZZZ
GateTarget tqpp_target();         // |000> -> |000>, |111> -> |100>
UnitaryMatrix collective_y90(int n_spins);
// X(1+Z)(1+Z)/4 on three spins.
DensityState pseudopure_ideal_state();

// A stage of the pseudopure chain, either an ideal unitary or a pulse.
//
// Phase cycling shifts a pulse's segment phases; an ideal unitary is
// conjugated by the collective z rotation instead.
using ProtocolStage = std::variant<UnitaryMatrix, ShapedPulse>;

struct PseudopureInputs {
  std::optional<ProtocolStage> iiz_to_zzz;
  std::optional<ProtocolStage> tqpp;
  PhaseCycle cycle = PhaseCycle::three_quantum();
};

struct PseudopureResult {
  DensityState state;
  double correlation = 0.0;
};

// IIZ -> iiz_to_zzz -> ideal collective Y90 -> phase-cycled tqpp.
PseudopureResult pseudopure_protocol(const SpinSystem& sys,
                                     const PseudopureInputs& inputs,
                                     double rf_scale = 1.0,
                                     double zeeman_offset_khz = 0.0);

// Instantaneous rotation exp(-i (angle/2) sum_j sigma_axis^j) over the
// listed spins (1-based; empty means every spin).
struct IdealPulse {
  PauliAxis axis = PauliAxis::X;
  double angle_rad = 0.0;
  std::vector<int> spins;
};

struct Delay {
  double duration_ms = 0.0;
};

struct ShapedPulseRef {
  ShapedPulse pulse;
  double rf_scale = 1.0;
  double zeeman_offset_khz = 0.0;
};

using SequenceElement = std::variant<IdealPulse, Delay, ShapedPulseRef>;

void validate_element(const SequenceElement& element, int n_spins);

// Propagator of the element list applied left to right. Delays evolve under
// the internal Hamiltonian in the given coupling form.
UnitaryMatrix sequence_propagator(const SpinSystem& sys,
                                  const std::vector<SequenceElement>& elements,
                                  const CouplingForm& form = CouplingForm::full());

DensityState run_sequence(const SpinSystem& sys,
                          const std::vector<SequenceElement>& elements,
                          const DensityState& rho,
                          const CouplingForm& form = CouplingForm::full());

double sequence_duration_ms(const std::vector<SequenceElement>& elements);

// tau - xbar - tau - y - 2tau - ybar - tau - x - 2tau - x - tau - y - 2tau -
// ybar - tau - xbar - tau, all 90 degree pulses on every spin; 12 tau total.
std::vector<SequenceElement> mrev8_cycle_elements(double tau_ms);

// delay/2 - π_y - delay/2 on every spin.
std::vector<SequenceElement> hahn_echo_elements(double total_ms);

// Precession angle per cycle of a single spin at offset nu under one MREV-8
// cycle, divided by the free-evolution angle 2π nu (12 tau).
double mrev8_zeeman_scaling(double tau_ms, double nu_khz);

// Normalized signal Re Tr(rho(t) O) / Tr(rho0 O), ensemble averaged and
// sampled after each repetition of a block.
struct DecayCurve {
  std::vector<double> times_ms;
  std::vector<double> signal;
};

DecayCurve repeated_block_decay(const std::vector<SpinSystem>& ensemble,
                                const std::vector<SequenceElement>& block,
                                int n_blocks, const DensityState& rho0,
                                const OperatorMatrix& observable,
                                const CouplingForm& form = CouplingForm::full());

// Like-spin clusters with zero Zeeman shifts and Gaussian pair couplings from
// a seeded generator, rescaled so the RMS over every pair of every member is
// exactly `rms_coupling_khz`.
std::vector<SpinSystem> random_like_spin_clusters(int n_spins, int n_members,
                                                  double rms_coupling_khz,
                                                  std::uint64_t seed);

nlohmann::json sequence_to_json(const std::vector<SequenceElement>& elements);
std::vector<SequenceElement> sequence_from_json(const nlohmann::json& doc);

}  // namespace spinforge

#endif  // SPINFORGE_PROTOCOL_HPP_
