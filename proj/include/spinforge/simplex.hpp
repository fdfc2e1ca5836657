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

#ifndef SPINFORGE_SIMPLEX_HPP_
#define SPINFORGE_SIMPLEX_HPP_

#include <functional>
#include <vector>

namespace spinforge {

// Nelder–Mead downhill simplex minimizer.
//
// Used for pulse design, Lorentzian line fits and spectral fits. The engine
// is unconstrained; callers fold bounds into the objective.
struct NelderMeadOptions {
  int max_evaluations = 10000;
  // Stop once max f - min f over the simplex drops below this.
  double convergence_tol = 1e-10;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  // After convergence, rebuild a fresh simplex around the best vertex this
  // many times (while budget remains). Each rebuild that fails to improve
  // the minimum by more than convergence_tol ends the run.
  int rebuilds = 0;
  // Optional early exit when f <= stop_below.
  double stop_below = -1e300;
};

struct NelderMeadResult {
  std::vector<double> best_x;
  double best_f = 0.0;
  int evaluations = 0;
  // Best objective seen after each evaluation (nonincreasing).
  std::vector<double> best_trace;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

// `steps` gives the initial simplex edge along each coordinate; a zero step
// freezes that coordinate.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0,
                             const std::vector<double>& steps,
                             const NelderMeadOptions& options);

}  // namespace spinforge

#endif  // SPINFORGE_SIMPLEX_HPP_
