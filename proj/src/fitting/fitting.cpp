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

#include "spinforge/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinforge/simplex.hpp"

namespace spinforge {

namespace {

double lorentzian(double a, double c, double w, double b, double x) {
  const double hw2 = 0.25 * w * w;
  return a * hw2 / ((x - c) * (x - c) + hw2) + b;
}

}  // namespace

double lorentzian_value(const LorentzianFit& fit, double x) {
  return lorentzian(fit.amplitude, fit.center, fit.fwhm, fit.baseline, x);
}

LorentzianFit fit_lorentzian(const std::vector<double>& x,
                             const std::vector<double>& y,
                             double residual_threshold) {
  if (x.size() != y.size() || x.size() < 4) {
    throw std::invalid_argument("fit_lorentzian needs >= 4 matching samples");
  }
  const std::size_t n = x.size();
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(y.begin(), y.end()) - y.begin());
  const double base0 = std::min(y.front(), y.back());
  const double height = y[peak] - base0;
  const double half = base0 + 0.5 * height;
  std::size_t lo = peak;
  std::size_t hi = peak;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < n && y[hi] > half) ++hi;
  const double spacing = (x.back() - x.front()) / static_cast<double>(n - 1);
  double width0 = x[hi] - x[lo];
  if (!(width0 > 0.0)) width0 = spacing;

  double norm2 = 0.0;
  for (double v : y) norm2 += v * v;
  if (!(norm2 > 0.0)) {
    throw std::invalid_argument("fit_lorentzian: data are identically zero");
  }

  // Width is fitted through its logarithm so it stays positive.
  const Objective objective = [&](const std::vector<double>& p) {
    const double w = std::exp(p[2]);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = y[k] - lorentzian(p[0], p[1], w, p[3], x[k]);
      s += r * r;
    }
    return s / norm2;
  };
  std::vector<double> p0 = {height, x[peak], std::log(width0), base0};
  const double scale = std::max(std::abs(height), 1e-300);
  std::vector<double> steps = {0.1 * scale, 0.25 * width0, 0.2,
                               0.05 * scale};
  NelderMeadOptions options;
  options.max_evaluations = 20000;
  options.convergence_tol = 1e-16;
  options.rebuilds = 3;
  const NelderMeadResult nm = nelder_mead(objective, p0, steps, options);

  LorentzianFit fit;
  fit.amplitude = nm.best_x[0];
  fit.center = nm.best_x[1];
  fit.fwhm = std::exp(nm.best_x[2]);
  fit.baseline = nm.best_x[3];
  fit.residual = std::sqrt(nm.best_f);
  fit.evaluations = nm.evaluations;
  fit.ok = std::isfinite(fit.residual) && fit.residual <= residual_threshold;
  return fit;
}

ExponentialFit fit_exponential_decay(const std::vector<double>& t,
                                     const std::vector<double>& y,
                                     double floor) {
  if (t.size() != y.size()) {
    throw std::invalid_argument("fit_exponential_decay: size mismatch");
  }
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  int m = 0;
  std::size_t run = 0;
  while (run < t.size() && y[run] > floor) ++run;
  for (std::size_t k = 0; k < run; ++k) {
    const double l = std::log(y[k]);
    st += t[k];
    sl += l;
    stt += t[k] * t[k];
    stl += t[k] * l;
    ++m;
  }
  if (m < 2) {
    throw std::invalid_argument(
        "fit_exponential_decay: fewer than two leading points above the floor");
  }
  const double denom = m * stt - st * st;
  if (!(std::abs(denom) > 0.0)) {
    throw std::invalid_argument("fit_exponential_decay: degenerate times");
  }
  const double slope = (m * stl - st * sl) / denom;
  const double intercept = (sl - slope * st) / m;
  ExponentialFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.points_used = m;
  double ss = 0.0;
  for (std::size_t k = 0; k < run; ++k) {
    const double r = std::log(y[k]) - (intercept + slope * t[k]);
    ss += r * r;
  }
  fit.log_residual = std::sqrt(ss / m);
  return fit;
}

}  // namespace spinforge
