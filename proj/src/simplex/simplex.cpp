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

#include "spinforge/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spinforge {

namespace {

class Runner {
 public:
  Runner(const Objective& f, std::vector<double> base,
         std::vector<std::size_t> free, const NelderMeadOptions& options,
         NelderMeadResult& result)
      : f_(f),
        base_(std::move(base)),
        free_(std::move(free)),
        options_(options),
        result_(result) {}

  bool exhausted() const {
    return result_.evaluations >= options_.max_evaluations;
  }

  bool stopped() const { return result_.best_f <= options_.stop_below; }

  // Evaluates a reduced point, updating the global best and trace.
  double eval(const std::vector<double>& y) {
    std::vector<double> x = base_;
    for (std::size_t k = 0; k < free_.size(); ++k) x[free_[k]] = y[k];
    double v = f_(x);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    ++result_.evaluations;
    if (result_.best_trace.empty() || v < result_.best_f) {
      result_.best_f = v;
      result_.best_x = x;
    }
    result_.best_trace.push_back(result_.best_f);
    return v;
  }

  // One Nelder–Mead descent from `start`; returns true on convergence.
  bool descend(const std::vector<double>& start,
               const std::vector<double>& steps) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> vals(n + 1);
    vals[0] = eval(start);
    for (std::size_t k = 0; k < n; ++k) {
      if (exhausted() || stopped()) return false;
      pts[k + 1][k] += steps[k];
      vals[k + 1] = eval(pts[k + 1]);
    }
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);

    while (!exhausted() && !stopped()) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return vals[a] < vals[b];
                       });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[n - 1];
      if (vals[worst] - vals[best] < options_.convergence_tol) return true;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t p = 0; p <= n; ++p) {
        if (p == worst) continue;
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[p][k];
      }
      for (double& c : centroid) c /= static_cast<double>(n);

      auto along = [&](double coef, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) {
          out[k] = centroid[k] + coef * (centroid[k] - pts[worst][k]);
        }
      };

      along(options_.reflection, trial);
      const double fr = eval(trial);
      if (fr < vals[best]) {
        if (exhausted()) {
          pts[worst] = trial;
          vals[worst] = fr;
          break;
        }
        along(options_.reflection * options_.expansion, trial2);
        const double fe = eval(trial2);
        if (fe < fr) {
          pts[worst] = trial2;
          vals[worst] = fe;
        } else {
          pts[worst] = trial;
          vals[worst] = fr;
        }
        continue;
      }
      if (fr < vals[second]) {
        pts[worst] = trial;
        vals[worst] = fr;
        continue;
      }
      if (exhausted()) break;
      // Outside contraction when the reflected point beats the worst,
      // inside contraction otherwise.
      const bool outside = fr < vals[worst];
      along(outside ? options_.reflection * options_.contraction
                    : -options_.contraction,
            trial2);
      const double fc = eval(trial2);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = trial2;
        vals[worst] = fc;
        continue;
      }
      for (std::size_t p = 0; p <= n; ++p) {
        if (p == best) continue;
        if (exhausted()) break;
        for (std::size_t k = 0; k < n; ++k) {
          pts[p][k] = pts[best][k] + options_.shrink * (pts[p][k] - pts[best][k]);
        }
        vals[p] = eval(pts[p]);
      }
    }
    return false;
  }

  std::vector<double> reduce(const std::vector<double>& x) const {
    std::vector<double> y(free_.size());
    for (std::size_t k = 0; k < free_.size(); ++k) y[k] = x[free_[k]];
    return y;
  }

 private:
  const Objective& f_;
  std::vector<double> base_;
  std::vector<std::size_t> free_;
  const NelderMeadOptions& options_;
  NelderMeadResult& result_;
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0,
                             const std::vector<double>& steps,
                             const NelderMeadOptions& options) {
  if (steps.size() != x0.size()) {
    throw std::invalid_argument("nelder_mead: steps and x0 differ in length");
  }
  NelderMeadResult result;
  result.best_x = x0;
  std::vector<std::size_t> free;
  std::vector<double> free_steps;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] != 0.0) {
      free.push_back(k);
      free_steps.push_back(steps[k]);
    }
  }
  Runner runner(f, x0, free, options, result);
  if (options.max_evaluations <= 0) return result;
  if (free.empty()) {
    runner.eval({});
    result.converged = true;
    return result;
  }
  std::vector<double> start = runner.reduce(x0);
  result.converged = runner.descend(start, free_steps);
  for (int r = 0; r < options.rebuilds && result.converged &&
                  !runner.exhausted() && !runner.stopped();
       ++r) {
    const double before = result.best_f;
    result.converged = runner.descend(runner.reduce(result.best_x), free_steps);
    if (before - result.best_f <= options.convergence_tol) break;
  }
  return result;
}

}  // namespace spinforge
