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


#ifndef SPINFORGE_SPECTRA_HPP_
#define SPINFORGE_SPECTRA_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinforge/spincore.hpp"
#include "spinforge/spinsys.hpp"

namespace spinforge {

struct SpectralLine {
  double freq_khz = 0.0;
  // Re[<a|O|b><b|rho|a>]; signed, since antiphase states give negative
  // components.
  double intensity = 0.0;
  // 1-based spin whose flip dominates the transition, or 0 if the dominant
  // basis states differ in more than one spin.
  int spin = 0;
  std::string assignment;
};

struct TransitionList {
  std::vector<SpectralLine> lines;

  // Sum of intensities of lines assigned to `spin`.
  double spin_total(int spin) const;
};

struct LineshapeParams {
  std::vector<double> t2star_ms;  // per spin, > 0

  void validate(int n_spins) const;
};

// Sum of sigma_minus over every spin.
OperatorMatrix default_observable(int n_spins);
// Sum of X over every spin: thermal Z magnetization after an ideal 90.
DensityState default_initial_state(int n_spins);

// Lines from the eigenbasis of Zeeman + dipolar (in `form`). For eigenpairs
// (a, b) with <a|O|b> != 0 the line sits at lambda_b - lambda_a, which puts a
// free spin with shift nu at +nu. Lines below 1e-9 of the largest |intensity|
// are dropped and lines within 1e-9 kHz of each other are merged.
TransitionList transition_spectrum(const SpinSystem& sys,
                                   const DensityState& initial,
                                   const OperatorMatrix& observable,
                                   const CouplingForm& form = CouplingForm::full());
TransitionList transition_spectrum(const SpinSystem& sys);

// Max over assigned spins of (largest / smallest) line intensity within that
// spin's multiplet, for lines with intensity above `floor` x the largest.
double multiplet_asymmetry(const TransitionList& lines, int spin,
                           double floor = 1e-6);

// Area-normalized Lorentzians with FWHM 1/(π T2*) of the assigned spin (the
// mean T2* for unassigned lines). Throws if a line falls outside the grid.
std::vector<double> broaden(const TransitionList& lines,
                            const LineshapeParams& params,
                            const std::vector<double>& freq_khz);

// Adds one uncoupled line per spin at its bare shift with weight
// 0.011 (1 - eta) / eta times that spin's multiplet total.
TransitionList natural_abundance_overlay(const SpinSystem& sys, double eta,
                                         const TransitionList& labelled);
TransitionList natural_abundance_overlay(const SpinSystem& sys, double eta);

// Parameters a spectral fit may vary; false freezes the entry.
struct SpectrumFitMask {
  std::vector<bool> zeeman;    // per spin
  std::vector<bool> coupling;  // packed upper triangle, row-major
  std::vector<bool> t2star;    // per spin

  static SpectrumFitMask all_free(int n_spins);
  static SpectrumFitMask all_frozen(int n_spins);
  void validate(int n_spins) const;
};

struct SpectrumFitOptions {
  int max_evaluations = 20000;
  // A fit whose residual exceeds this is reported as diverged.
  double residual_threshold = 0.05;
  // Natural-abundance fraction used in the model; 0 disables the overlay.
  double eta = 0.0;
};

struct SpectrumFitResult {
  SpinSystem system;
  LineshapeParams lineshape;
  SpectrumFitMask mask;
  // ||model - observed|| / ||observed||.
  double residual = 0.0;
  int evaluations = 0;
  bool diverged = false;
};

// Broadened model spectrum of sys + lineshape on the grid (initial state
// sum X, detection sum sigma_minus, optional natural-abundance overlay).
std::vector<double> model_spectrum(const SpinSystem& sys,
                                   const LineshapeParams& lineshape,
                                   const std::vector<double>& freq_khz,
                                   double eta = 0.0);

// Simplex least squares over the unfrozen shifts, couplings and T2* values.
SpectrumFitResult fit_spectrum(const std::vector<double>& freq_khz,
                               const std::vector<double>& observed,
                               const SpinSystem& guess,
                               const LineshapeParams& guess_lineshape,
                               const SpectrumFitMask& mask,
                               const SpectrumFitOptions& options = {});

nlohmann::json fit_report_json(const SpectrumFitResult& result);
void write_spectrum_csv(std::ostream& out, const std::vector<double>& freq_khz,
                        const std::vector<double>& amplitude);
void write_transitions_csv(std::ostream& out, const TransitionList& lines);

}  // namespace spinforge

#endif  // SPINFORGE_SPECTRA_HPP_
