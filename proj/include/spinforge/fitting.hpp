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

#ifndef SPINFORGE_FITTING_HPP_
#define SPINFORGE_FITTING_HPP_

#include <vector>

namespace spinforge {

// Least-squares Lorentzian line fit:
// L(x) = amplitude (w/2)^2 / ((x - center)^2 + (w/2)^2) + baseline.
struct LorentzianFit {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
  double baseline = 0.0;
  // ||y - L|| / ||y||.
  double residual = 0.0;
  int evaluations = 0;
  // False when the residual exceeds the threshold given to the fit.
  bool ok = false;
};

// Starts from the peak height and half-height crossings; x must be sorted.
LorentzianFit fit_lorentzian(const std::vector<double>& x,
                             const std::vector<double>& y,
                             double residual_threshold = 0.5);

double lorentzian_value(const LorentzianFit& fit, double x);

struct ExponentialFit {
  double rate = 0.0;       // per unit of t
  double amplitude = 0.0;  // value extrapolated to t = 0
  // RMS deviation of log(y) from the fitted line.
  double log_residual = 0.0;
  int points_used = 0;
};

// Log-linear least squares of y = A exp(-rate t) over the leading points
// with y > floor; the first point at or below the floor ends the window, so
// plateaus and recurrences after the initial decay are ignored. Throws std::invalid_argument with fewer than two usable points.
ExponentialFit fit_exponential_decay(const std::vector<double>& t,
                                     const std::vector<double>& y,
                                     double floor = 1e-3);

}  // namespace spinforge

#endif  // SPINFORGE_FITTING_HPP_
