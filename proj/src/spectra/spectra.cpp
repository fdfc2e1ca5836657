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


#include "spinforge/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "spinforge/simplex.hpp"

namespace spinforge {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kNaturalAbundance = 0.011;

Eigen::Index dominant_state(const CMatrix& v, Eigen::Index col) {
  Eigen::Index best = 0;
  v.col(col).cwiseAbs2().maxCoeff(&best);
  return best;
}

int flipped_spin(Eigen::Index a, Eigen::Index b, int n_spins) {
  const Eigen::Index diff = a ^ b;
  if (diff == 0 || (diff & (diff - 1)) != 0) return 0;
  int bit = 0;
  while ((Eigen::Index{1} << bit) != diff) ++bit;
  return n_spins - bit;
}

}  // namespace

double TransitionList::spin_total(int spin) const {
  double t = 0.0;
  for (const auto& l : lines) {
    if (l.spin == spin) t += l.intensity;
  }
  return t;
}

void LineshapeParams::validate(int n_spins) const {
  if (static_cast<int>(t2star_ms.size()) != n_spins) {
    throw std::invalid_argument("need one T2* per spin");
  }
  for (double t : t2star_ms) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("T2* values must be finite and > 0");
    }
  }
}

OperatorMatrix default_observable(int n_spins) {
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  OperatorMatrix o = OperatorMatrix::Zero(dim, dim);
  for (int j = 1; j <= n_spins; ++j) {
    o += embed_pauli(PauliAxis::X, j, n_spins) -
         Complex(0.0, 1.0) * embed_pauli(PauliAxis::Y, j, n_spins);
  }
  return o;
}

DensityState default_initial_state(int n_spins) {
  return collective_pauli(PauliAxis::X, n_spins);
}

TransitionList transition_spectrum(const SpinSystem& sys,
                                   const DensityState& initial,
                                   const OperatorMatrix& observable,
                                   const CouplingForm& form) {
  sys.validate();
  if (initial.rows() != sys.dim() || observable.rows() != sys.dim()) {
    throw std::invalid_argument("transition_spectrum: dimension mismatch");
  }
  const int n = sys.n_spins();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(internal_hamiltonian(sys, form));
  const CMatrix& v = solver.eigenvectors();
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const CMatrix o = v.adjoint() * observable * v;
  const CMatrix rho = v.adjoint() * initial * v;

  std::vector<SpectralLine> raw;
  double top = 0.0;
  for (Eigen::Index a = 0; a < v.cols(); ++a) {
    for (Eigen::Index b = 0; b < v.cols(); ++b) {
      if (std::abs(o(a, b)) < 1e-12) continue;
      const double intensity = (o(a, b) * rho(b, a)).real();
      SpectralLine line;
      line.freq_khz = lambda(b) - lambda(a);
      line.intensity = intensity;
      line.spin = flipped_spin(dominant_state(v, a), dominant_state(v, b), n);
      line.assignment = line.spin > 0 ? sys.labels[line.spin - 1] : "combination";
      raw.push_back(line);
      top = std::max(top, std::abs(intensity));
    }
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const SpectralLine& x, const SpectralLine& y) {
                     return x.freq_khz < y.freq_khz;
                   });
  TransitionList out;
  for (const auto& line : raw) {
    if (!out.lines.empty() &&
        std::abs(out.lines.back().freq_khz - line.freq_khz) <= 1e-9) {
      out.lines.back().intensity += line.intensity;
    } else {
      out.lines.push_back(line);
    }
  }
  std::erase_if(out.lines, [&](const SpectralLine& l) {
    return std::abs(l.intensity) < 1e-9 * top;
  });
  return out;
}

TransitionList transition_spectrum(const SpinSystem& sys) {
  return transition_spectrum(sys, default_initial_state(sys.n_spins()),
                             default_observable(sys.n_spins()));
}

double multiplet_asymmetry(const TransitionList& lines, int spin,
                           double floor) {
  double top = 0.0;
  for (const auto& l : lines.lines) top = std::max(top, std::abs(l.intensity));
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& l : lines.lines) {
    if (l.spin != spin || std::abs(l.intensity) <= floor * top) continue;
    hi = std::max(hi, std::abs(l.intensity));
    lo = std::min(lo, std::abs(l.intensity));
  }
  if (hi == 0.0) {
    throw std::invalid_argument("multiplet_asymmetry: spin has no lines");
  }
  return hi / lo;
}

std::vector<double> broaden(const TransitionList& lines,
                            const LineshapeParams& params,
                            const std::vector<double>& freq_khz) {
  if (params.t2star_ms.empty()) {
    throw std::invalid_argument("broaden needs T2* values");
  }
  for (double t : params.t2star_ms) {
    if (!(t > 0.0)) throw std::invalid_argument("T2* values must be > 0");
  }
  std::vector<double> out(freq_khz.size(), 0.0);
  if (lines.lines.empty()) return out;
  if (freq_khz.size() < 2) throw std::invalid_argument("grid too small");
  const double lo = freq_khz.front();
  const double hi = freq_khz.back();
  const double mean_t2 =
      std::accumulate(params.t2star_ms.begin(), params.t2star_ms.end(), 0.0) /
      static_cast<double>(params.t2star_ms.size());
  for (const auto& l : lines.lines) {
    if (l.freq_khz < lo || l.freq_khz > hi) {
      throw std::invalid_argument("line at " + std::to_string(l.freq_khz) +
                                  " kHz lies outside the frequency grid");
    }
    if (l.spin > static_cast<int>(params.t2star_ms.size())) {
      throw std::invalid_argument("line assigned to a spin without T2*");
    }
    const double t2 = l.spin > 0 ? params.t2star_ms[l.spin - 1] : mean_t2;
    // FWHM in kHz for T2* in ms.
    const double hw = 0.5 / (kPi * t2);
    const double scale = l.intensity * hw / kPi;
    for (std::size_t k = 0; k < freq_khz.size(); ++k) {
      const double d = freq_khz[k] - l.freq_khz;
      out[k] += scale / (d * d + hw * hw);
    }
  }
  return out;
}

TransitionList natural_abundance_overlay(const SpinSystem& sys, double eta,
                                         const TransitionList& labelled) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("labelled fraction eta must lie in (0, 1]");
  }
  TransitionList out = labelled;
  const double ratio = kNaturalAbundance * (1.0 - eta) / eta;
  for (int j = 1; j <= sys.n_spins(); ++j) {
    SpectralLine l;
    l.freq_khz = sys.zeeman_khz[j - 1];
    l.intensity = ratio * labelled.spin_total(j);
    l.spin = j;
    l.assignment = sys.labels[j - 1] + " natural abundance";
    out.lines.push_back(l);
  }
  std::stable_sort(out.lines.begin(), out.lines.end(),
                   [](const SpectralLine& x, const SpectralLine& y) {
                     return x.freq_khz < y.freq_khz;
                   });
  return out;
}

TransitionList natural_abundance_overlay(const SpinSystem& sys, double eta) {
  return natural_abundance_overlay(sys, eta, transition_spectrum(sys));
}

SpectrumFitMask SpectrumFitMask::all_free(int n_spins) {
  const int pairs = n_spins * (n_spins - 1) / 2;
  return {std::vector<bool>(n_spins, true), std::vector<bool>(pairs, true),
          std::vector<bool>(n_spins, true)};
}

SpectrumFitMask SpectrumFitMask::all_frozen(int n_spins) {
  const int pairs = n_spins * (n_spins - 1) / 2;
  return {std::vector<bool>(n_spins, false), std::vector<bool>(pairs, false),
          std::vector<bool>(n_spins, false)};
}

void SpectrumFitMask::validate(int n_spins) const {
  if (static_cast<int>(zeeman.size()) != n_spins ||
      static_cast<int>(t2star.size()) != n_spins ||
      static_cast<int>(coupling.size()) != n_spins * (n_spins - 1) / 2) {
    throw std::invalid_argument("fit mask sizes do not match the system");
  }
}

std::vector<double> model_spectrum(const SpinSystem& sys,
                                   const LineshapeParams& lineshape,
                                   const std::vector<double>& freq_khz,
                                   double eta) {
  lineshape.validate(sys.n_spins());
  TransitionList lines = transition_spectrum(sys);
  if (eta > 0.0) lines = natural_abundance_overlay(sys, eta, lines);
  return broaden(lines, lineshape, freq_khz);
}

namespace {

struct Packing {
  int n = 0;

  std::vector<double> pack(const SpinSystem& s, const LineshapeParams& l) const {
    std::vector<double> x(s.zeeman_khz);
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) x.push_back(s.dipolar_khz(a, b));
    }
    for (double t : l.t2star_ms) x.push_back(std::log(t));
    return x;
  }

  void unpack(const std::vector<double>& x, SpinSystem& s,
              LineshapeParams& l) const {
    std::size_t k = 0;
    for (int j = 0; j < n; ++j) s.zeeman_khz[j] = x[k++];
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        s.dipolar_khz(a, b) = s.dipolar_khz(b, a) = x[k++];
      }
    }
    for (int j = 0; j < n; ++j) l.t2star_ms[j] = std::exp(x[k++]);
  }
};

}  // namespace

SpectrumFitResult fit_spectrum(const std::vector<double>& freq_khz,
                               const std::vector<double>& observed,
                               const SpinSystem& guess,
                               const LineshapeParams& guess_lineshape,
                               const SpectrumFitMask& mask,
                               const SpectrumFitOptions& options) {
  guess.validate();
  const int n = guess.n_spins();
  guess_lineshape.validate(n);
  mask.validate(n);
  if (freq_khz.size() != observed.size() || freq_khz.size() < 4) {
    throw std::invalid_argument("fit_spectrum: grid and data sizes differ");
  }
  double norm2 = 0.0;
  for (double v : observed) norm2 += v * v;
  if (!(norm2 > 0.0)) {
    throw std::invalid_argument("fit_spectrum: observed spectrum is zero");
  }
  const Packing packing{n};
  SpinSystem sys = guess;
  LineshapeParams shape = guess_lineshape;
  const auto objective = [&](const std::vector<double>& x) {
    packing.unpack(x, sys, shape);
    std::vector<double> model;
    try {
      model = model_spectrum(sys, shape, freq_khz, options.eta);
    } catch (const std::invalid_argument&) {
      // Lines pushed off the grid.
      return std::numeric_limits<double>::infinity();
    }
    double s = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
      const double r = model[k] - observed[k];
      s += r * r;
    }
    return s / norm2;
  };

  const std::vector<double> x0 = packing.pack(guess, guess_lineshape);
  std::vector<double> steps;
  const double shift_step = 0.05;  // kHz
  for (int j = 0; j < n; ++j) steps.push_back(mask.zeeman[j] ? shift_step : 0.0);
  for (std::size_t p = 0; p < mask.coupling.size(); ++p) {
    steps.push_back(mask.coupling[p] ? shift_step : 0.0);
  }
  for (int j = 0; j < n; ++j) steps.push_back(mask.t2star[j] ? 0.1 : 0.0);

  NelderMeadOptions nm_options;
  nm_options.max_evaluations = options.max_evaluations;
  nm_options.convergence_tol = 1e-16;
  nm_options.rebuilds = 6;
  const NelderMeadResult nm = nelder_mead(objective, x0, steps, nm_options);

  SpectrumFitResult result;
  result.system = guess;
  result.lineshape = guess_lineshape;
  packing.unpack(nm.best_x, result.system, result.lineshape);
  result.mask = mask;
  result.residual = std::sqrt(nm.best_f);
  result.evaluations = nm.evaluations;
  result.diverged = !(result.residual <= options.residual_threshold);
  return result;
}

nlohmann::json fit_report_json(const SpectrumFitResult& result) {
  const int n = result.system.n_spins();
  nlohmann::json couplings = nlohmann::json::array();
  nlohmann::json frozen_couplings = nlohmann::json::array();
  std::size_t p = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b, ++p) {
      couplings.push_back({{"pair", {result.system.labels[a], result.system.labels[b]}},
                           {"d_khz", result.system.dipolar_khz(a, b)}});
      frozen_couplings.push_back(!result.mask.coupling[p]);
    }
  }
  nlohmann::json frozen_nu = nlohmann::json::array();
  nlohmann::json frozen_t2 = nlohmann::json::array();
  for (int j = 0; j < n; ++j) {
    frozen_nu.push_back(!result.mask.zeeman[j]);
    frozen_t2.push_back(!result.mask.t2star[j]);
  }
  return {{"params",
           {{"labels", result.system.labels},
            {"nu_khz", result.system.zeeman_khz},
            {"couplings", couplings},
            {"t2star_ms", result.lineshape.t2star_ms}}},
          {"frozen_mask",
           {{"nu_khz", frozen_nu},
            {"couplings", frozen_couplings},
            {"t2star_ms", frozen_t2}}},
          {"residual", result.residual},
          {"diverged", result.diverged},
          {"n_evaluations", result.evaluations}};
}

void write_spectrum_csv(std::ostream& out, const std::vector<double>& freq_khz,
                        const std::vector<double>& amplitude) {
  out << "freq_khz,amplitude\n" << std::setprecision(12);
  for (std::size_t k = 0; k < freq_khz.size(); ++k) {
    out << freq_khz[k] << ',' << amplitude[k] << '\n';
  }
}

void write_transitions_csv(std::ostream& out, const TransitionList& lines) {
  out << "freq_khz,intensity,spin,assignment\n" << std::setprecision(12);
  for (const auto& l : lines.lines) {
    out << l.freq_khz << ',' << l.intensity << ',' << l.spin << ','
        << l.assignment << '\n';
  }
}

}  // namespace spinforge
