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


#ifndef SPINFORGE_DEPHASING_HPP_
#define SPINFORGE_DEPHASING_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinforge/fitting.hpp"
#include "spinforge/spincore.hpp"

namespace spinforge {

// Couplings from a reference spin xi to one neighboring labelled molecule:
// alpha and beta are unlike spins (ZZ only), gamma is a like spin.
struct DipolarEnvironment {
  double d_alpha_khz = 0.0;
  double d_beta_khz = 0.0;
  double d_gamma_khz = 0.0;
};

// 16x16, spins ordered xi, alpha, beta, gamma:
// (da/2) Z Za + (db/2) Z Zb + (dg/4)(2 Z Zg - X Xg - Y Yg).
OperatorMatrix reference_hamiltonian(const DipolarEnvironment& env);

enum class KrausModel {
  // Equal-weight column sums A_m = 2^-3 sum_n U_mn over the environment
  // basis; eight operators.
  PaperLiteral,
  // A_mn = 2^-3/2 U_mn; 64 operators, exactly the partial trace against a
  // maximally mixed environment.
  ExactPartialTrace,
};

struct KrausSet {
  std::vector<CMatrix> operators;  // 2x2 each
  KrausModel model = KrausModel::ExactPartialTrace;

  // max |sum A^dagger A - I|.
  double completeness_error() const;
};

// Built from the blocks <klm| U(t) |n> of the reference-spin propagator.
KrausSet kraus_paper(const DipolarEnvironment& env, double t_ms);
// The printed closed form for A_klm with theta = 2π t d, transcribed term by
// term. With d_gamma = 0 it equals kraus_paper at -t; with flip-flops it
// matches neither sign of t.
KrausSet kraus_paper_closed_form(const DipolarEnvironment& env, double t_ms);
KrausSet kraus_exact(const DipolarEnvironment& env, double t_ms);

DensityState apply_kraus(const KrausSet& set, const DensityState& rho);

DensityState dephase_reference(const DensityState& rho,
                               const DipolarEnvironment& env, double t_ms,
                               KrausModel model = KrausModel::ExactPartialTrace);

// max |channel_paper(X) - channel_exact(X)|. Mostly the 1/8 trace loss: on
// X alone the rescaled paper channel is exact, on Z it is not.
double paper_kraus_discrepancy(const DipolarEnvironment& env, double t_ms);

enum class FrequencyFamilies {
  // Only ±da ± db ± 3dg/2.
  ThreeHalvesOnly,
  // Both ±da ± db ± dg/2 and ±da ± db ± 3dg/2.
  Both,
};

struct WeightedFrequency {
  double frequency_khz = 0.0;
  double weight = 0.0;
};

// Sign combinations with equal weights summing to one; coincident
// frequencies (within 1e-12 kHz) are merged. Sorted by frequency.
std::vector<WeightedFrequency> phase_spectrum_frequencies(
    const DipolarEnvironment& env,
    FrequencyFamilies families = FrequencyFamilies::Both);

// Exact transition frequencies of the X coherence of xi (kHz): for each
// alpha/beta configuration with h = (±da ± db)/2, the lines
// ±(h + dg ± sqrt(h^2 + dg^2/4)).
std::vector<double> exact_coherence_frequencies(const DipolarEnvironment& env);

struct CorrelationTrace {
  std::vector<double> times_ms;  // uniform, starting at 0
  std::vector<Complex> values;
  Complex normalization = 1.0;  // F_x(0) before normalizing
};

// 512 points spanning 10 / min nonzero |d| ms (1 ms if every d is zero).
std::vector<double> default_time_grid(
    const std::vector<DipolarEnvironment>& envs, int n_points = 512);

// Ensemble-averaged Tr(rho_xi(t) X) / Tr(X X) starting from rho_xi = X.
CorrelationTrace correlation_trace(
    const std::vector<DipolarEnvironment>& envs,
    const std::vector<double>& times_ms,
    KrausModel model = KrausModel::ExactPartialTrace);

struct Spectrum {
  std::vector<double> freq_hz;  // ascending, uniform
  std::vector<double> density;
  double bin_hz = 0.0;
};

// DFT of the Hermitian extension F(-t) = F(t)* over 2N - 1 samples, with
// kernel e^{+i 2π f t} and scaled by the time step so line areas are
// preserved.
Spectrum spectrum_of_trace(const CorrelationTrace& trace);

// Sum |S|^2 df and dt sum |F_ext|^2 for the same extension.
double spectrum_energy(const Spectrum& s);
double extended_trace_energy(const CorrelationTrace& trace);

// Local maxima above rel_threshold x the global maximum.
std::vector<double> spectrum_peaks_hz(const Spectrum& s,
                                      double rel_threshold = 0.05);

LorentzianFit lorentzian_fwhm(const Spectrum& s, double threshold = 0.5);

struct AdditivityResult {
  double rate_3q = 0.0;               // per ms
  std::array<double, 3> rates_1q{};   // per ms
  double ratio = 0.0;                 // rate_3q / sum(rates_1q)
};

// Draws of a 1Q frequency (kHz) whose ensemble-averaged cos(2π f t) decays
// as exp(-rate t): a Cauchy distribution with scale rate / 2π.
std::vector<double> cauchy_frequency_samples(double rate_per_ms, int n,
                                             std::uint64_t seed);

// Sample s gives the three spins frequencies f_i[s]; the 3Q phase is the sum
// of the three 1Q phases. Rates come from log-linear fits of each averaged
// signal up to the first time it falls below `floor`.
AdditivityResult tq_rate_additivity(
    const std::array<std::vector<double>, 3>& frequency_samples_khz,
    const std::vector<double>& times_ms, double floor = 0.1);

// 1 / sum(1 / t_i).
double predicted_3q_time(const std::array<double, 3>& times_1q_ms);

void write_trace_csv(std::ostream& out, const CorrelationTrace& trace);
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

}  // namespace spinforge

#endif  // SPINFORGE_DEPHASING_HPP_
