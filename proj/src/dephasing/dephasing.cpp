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


#include "spinforge/dephasing.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "spinforge/parallel.hpp"

namespace spinforge {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr int kEnvDim = 8;

void check_env(const DipolarEnvironment& env) {
  if (!std::isfinite(env.d_alpha_khz) || !std::isfinite(env.d_beta_khz) ||
      !std::isfinite(env.d_gamma_khz)) {
    throw std::invalid_argument("dipolar environment must be finite");
  }
}

void check_time(double t_ms) {
  if (!(t_ms >= 0.0) || !std::isfinite(t_ms)) {
    throw std::invalid_argument("time must be finite and >= 0");
  }
}

UnitaryMatrix reference_propagator(const DipolarEnvironment& env, double t) {
  return expm_hermitian_signed(reference_hamiltonian(env), t);
}

KrausSet paper_from_propagator(const UnitaryMatrix& u) {
  KrausSet set;
  set.model = KrausModel::PaperLiteral;
  for (int m = 0; m < kEnvDim; ++m) {
    CMatrix a = CMatrix::Zero(2, 2);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        for (int n = 0; n < kEnvDim; ++n) {
          a(r, c) += u(r * kEnvDim + m, c * kEnvDim + n);
        }
      }
    }
    set.operators.push_back(a / 8.0);
  }
  return set;
}

}  // namespace

double KrausSet::completeness_error() const {
  CMatrix sum = CMatrix::Zero(2, 2);
  for (const auto& a : operators) sum += a.adjoint() * a;
  return max_abs(sum - CMatrix::Identity(2, 2));
}

OperatorMatrix reference_hamiltonian(const DipolarEnvironment& env) {
  check_env(env);
  const auto op = [](std::vector<std::string> s) {
    return product_operator(s);
  };
  return env.d_alpha_khz / 2.0 * op({"Z", "Z", "I", "I"}) +
         env.d_beta_khz / 2.0 * op({"Z", "I", "Z", "I"}) +
         env.d_gamma_khz / 4.0 *
             (2.0 * op({"Z", "I", "I", "Z"}) - op({"X", "I", "I", "X"}) -
              op({"Y", "I", "I", "Y"}));
}

KrausSet kraus_paper(const DipolarEnvironment& env, double t_ms) {
  check_time(t_ms);
  return paper_from_propagator(reference_propagator(env, t_ms));
}

KrausSet kraus_paper_closed_form(const DipolarEnvironment& env, double t_ms) {
  check_env(env);
  check_time(t_ms);
  const double ta = kTwoPi * t_ms * env.d_alpha_khz;
  const double tb = kTwoPi * t_ms * env.d_beta_khz;
  const double tg = kTwoPi * t_ms * env.d_gamma_khz;
  const Complex i(0.0, 1.0);
  const auto e = [&](double x) { return std::exp(i * x); };
  KrausSet set;
  set.model = KrausModel::PaperLiteral;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      for (int m = 0; m < 2; ++m) {
        const double sk = k == 0 ? 1.0 : -1.0;
        const double sl = l == 0 ? 1.0 : -1.0;
        const double sm = m == 0 ? 1.0 : -1.0;
        const double d_m1 = m == 1 ? 1.0 : 0.0;
        const double d_m0 = m == 0 ? 1.0 : 0.0;
        const double common = ta / 2 * sk + tb / 2 * sl;
        CMatrix a = CMatrix::Zero(2, 2);
        a(0, 0) = e(common + tg / 2 * sm) *
                  (e(tg / 2 * d_m1) + e(-tg / 2 * d_m1)) / 2.0;
        a(1, 1) = e(-common - tg / 2 * sm) *
                  (e(tg / 2 * d_m0) + e(-tg / 2 * d_m0)) / 2.0;
        const Complex flip = e(common - tg / 2) * (-e(tg / 2) + e(-tg / 2)) / 2.0;
        a(1, 0) = d_m0 * flip;
        a(0, 1) = d_m1 * flip;
        set.operators.push_back(a / 8.0);
      }
    }
  }
  return set;
}

KrausSet kraus_exact(const DipolarEnvironment& env, double t_ms) {
  check_time(t_ms);
  const UnitaryMatrix u = reference_propagator(env, t_ms);
  KrausSet set;
  set.model = KrausModel::ExactPartialTrace;
  const double scale = 1.0 / std::sqrt(8.0);
  for (int m = 0; m < kEnvDim; ++m) {
    for (int n = 0; n < kEnvDim; ++n) {
      CMatrix a(2, 2);
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
          a(r, c) = scale * u(r * kEnvDim + m, c * kEnvDim + n);
        }
      }
      set.operators.push_back(a);
    }
  }
  return set;
}

DensityState apply_kraus(const KrausSet& set, const DensityState& rho) {
  if (rho.rows() != 2 || rho.cols() != 2) {
    throw std::invalid_argument("apply_kraus: reference state must be 2x2");
  }
  DensityState out = DensityState::Zero(2, 2);
  for (const auto& a : set.operators) out += a * rho * a.adjoint();
  return out;
}

DensityState dephase_reference(const DensityState& rho,
                               const DipolarEnvironment& env, double t_ms,
                               KrausModel model) {
  const KrausSet set = model == KrausModel::PaperLiteral
                           ? kraus_paper(env, t_ms)
                           : kraus_exact(env, t_ms);
  return apply_kraus(set, rho);
}

double paper_kraus_discrepancy(const DipolarEnvironment& env, double t_ms) {
  const DensityState x = single_spin_matrix(PauliSymbol::X);
  return max_abs(dephase_reference(x, env, t_ms, KrausModel::PaperLiteral) -
                 dephase_reference(x, env, t_ms, KrausModel::ExactPartialTrace));
}

std::vector<WeightedFrequency> phase_spectrum_frequencies(
    const DipolarEnvironment& env, FrequencyFamilies families) {
  check_env(env);
  std::vector<double> gamma_factors = {1.5};
  if (families == FrequencyFamilies::Both) gamma_factors.insert(gamma_factors.begin(), 0.5);
  std::vector<double> raw;
  for (double g : gamma_factors) {
    for (int sa : {1, -1}) {
      for (int sb : {1, -1}) {
        for (int sg : {1, -1}) {
          raw.push_back(sa * env.d_alpha_khz + sb * env.d_beta_khz +
                        sg * g * env.d_gamma_khz);
        }
      }
    }
  }
  std::sort(raw.begin(), raw.end());
  const double w = 1.0 / static_cast<double>(raw.size());
  std::vector<WeightedFrequency> out;
  for (double f : raw) {
    if (!out.empty() && std::abs(out.back().frequency_khz - f) <= 1e-12) {
      out.back().weight += w;
    } else {
      out.push_back({f, w});
    }
  }
  return out;
}

std::vector<double> exact_coherence_frequencies(const DipolarEnvironment& env) {
  check_env(env);
  std::vector<double> out;
  const double g = env.d_gamma_khz;
  for (int sa : {1, -1}) {
    for (int sb : {1, -1}) {
      const double h = 0.5 * (sa * env.d_alpha_khz + sb * env.d_beta_khz);
      const double s = std::sqrt(h * h + 0.25 * g * g);
      for (double v : {h + g + s, h + g - s}) {
        out.push_back(v);
        out.push_back(-v);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> default_time_grid(
    const std::vector<DipolarEnvironment>& envs, int n_points) {
  if (n_points < 2) throw std::invalid_argument("time grid needs >= 2 points");
  double dmin = 0.0;
  for (const auto& e : envs) {
    for (double d : {e.d_alpha_khz, e.d_beta_khz, e.d_gamma_khz}) {
      const double a = std::abs(d);
      if (a > 0.0 && (dmin == 0.0 || a < dmin)) dmin = a;
    }
  }
  const double span = dmin > 0.0 ? 10.0 / dmin : 1.0;
  std::vector<double> t(n_points);
  for (int k = 0; k < n_points; ++k) {
    t[k] = span * k / static_cast<double>(n_points - 1);
  }
  return t;
}

CorrelationTrace correlation_trace(
    const std::vector<DipolarEnvironment>& envs,
    const std::vector<double>& times_ms, KrausModel model) {
  if (envs.empty()) {
    throw std::invalid_argument("correlation_trace: empty ensemble");
  }
  if (times_ms.size() < 2 || times_ms.front() != 0.0) {
    throw std::invalid_argument(
        "correlation_trace: need >= 2 times starting at 0");
  }
  const double dt = times_ms[1] - times_ms[0];
  for (std::size_t k = 1; k < times_ms.size(); ++k) {
    if (std::abs(times_ms[k] - k * dt) > 1e-9 * std::max(1.0, times_ms.back())) {
      throw std::invalid_argument("correlation_trace: time grid not uniform");
    }
  }
  const std::size_t nt = times_ms.size();
  const DensityState x = single_spin_matrix(PauliSymbol::X);
  std::vector<std::vector<Complex>> per_env(envs.size());
  parallel_for(envs.size(), [&](std::size_t j) {
    const OperatorMatrix h = reference_hamiltonian(envs[j]);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    const CMatrix& v = solver.eigenvectors();
    const Eigen::VectorXd& w = solver.eigenvalues();
    auto& out = per_env[j];
    out.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
      CVector ph(w.size());
      for (Eigen::Index q = 0; q < w.size(); ++q) {
        ph(q) = std::polar(1.0, -kTwoPi * w(q) * times_ms[k]);
      }
      const UnitaryMatrix u = v * ph.asDiagonal() * v.adjoint();
      const KrausSet set = model == KrausModel::PaperLiteral
                               ? paper_from_propagator(u)
                               : KrausSet{};
      DensityState rho;
      if (model == KrausModel::PaperLiteral) {
        rho = apply_kraus(set, x);
      } else {
        // Tr_env[U (X (x) I/8) U^dagger] without forming 64 operators.
        const DensityState full =
            u * kron(x, CMatrix::Identity(kEnvDim, kEnvDim) / 8.0) *
            u.adjoint();
        rho = DensityState::Zero(2, 2);
        for (int r = 0; r < 2; ++r) {
          for (int c = 0; c < 2; ++c) {
            for (int m = 0; m < kEnvDim; ++m) {
              rho(r, c) += full(r * kEnvDim + m, c * kEnvDim + m);
            }
          }
        }
      }
      out[k] = (rho * x).trace() / 2.0;
    }
  });
  CorrelationTrace trace;
  trace.times_ms = times_ms;
  trace.values.assign(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    Complex s = 0.0;
    for (const auto& e : per_env) s += e[k];
    trace.values[k] = s / static_cast<double>(envs.size());
  }
  trace.normalization = trace.values[0];
  if (std::abs(trace.normalization) > 0.0) {
    for (auto& v : trace.values) v /= trace.normalization;
  }
  return trace;
}

namespace {

std::vector<Complex> hermitian_extension(const CorrelationTrace& trace) {
  const std::size_t n = trace.values.size();
  const std::size_t m = 2 * n - 1;
  std::vector<Complex> g(m);
  g[0] = trace.values[0];
  for (std::size_t k = 1; k < n; ++k) {
    g[k] = trace.values[k];
    g[m - k] = std::conj(trace.values[k]);
  }
  return g;
}

double trace_step(const CorrelationTrace& trace) {
  return trace.times_ms[1] - trace.times_ms[0];
}

}  // namespace

Spectrum spectrum_of_trace(const CorrelationTrace& trace) {
  const std::size_t n = trace.values.size();
  if (n < 16 || trace.times_ms.size() != n) {
    throw std::invalid_argument("spectrum_of_trace needs >= 16 samples");
  }
  const double dt_s = trace_step(trace) * 1e-3;
  if (!(dt_s > 0.0)) {
    throw std::invalid_argument("spectrum_of_trace: nonpositive time step");
  }
  std::vector<Complex> g = hermitian_extension(trace);
  const int m = static_cast<int>(g.size());
  std::vector<Complex> out(m);
  fftw_plan plan = fftw_plan_dft_1d(
      m, reinterpret_cast<fftw_complex*>(g.data()),
      reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
      FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  // m is odd: bins -(m-1)/2 .. (m-1)/2.
  Spectrum s;
  s.bin_hz = 1.0 / (m * dt_s);
  const int half = (m - 1) / 2;
  for (int j = -half; j <= half; ++j) {
    const int idx = j < 0 ? j + m : j;
    s.freq_hz.push_back(j * s.bin_hz);
    s.density.push_back(out[idx].real() * dt_s);
  }
  return s;
}

double spectrum_energy(const Spectrum& s) {
  double e = 0.0;
  for (double v : s.density) e += v * v;
  return e * s.bin_hz;
}

double extended_trace_energy(const CorrelationTrace& trace) {
  const std::vector<Complex> g = hermitian_extension(trace);
  double e = 0.0;
  for (const auto& v : g) e += std::norm(v);
  return e * trace_step(trace) * 1e-3;
}

std::vector<double> spectrum_peaks_hz(const Spectrum& s, double rel_threshold) {
  std::vector<double> peaks;
  if (s.density.size() < 3) return peaks;
  const double top = *std::max_element(s.density.begin(), s.density.end());
  for (std::size_t k = 1; k + 1 < s.density.size(); ++k) {
    const double v = s.density[k];
    if (v > rel_threshold * top && v >= s.density[k - 1] &&
        v > s.density[k + 1]) {
      peaks.push_back(s.freq_hz[k]);
    }
  }
  return peaks;
}

LorentzianFit lorentzian_fwhm(const Spectrum& s, double threshold) {
  return fit_lorentzian(s.freq_hz, s.density, threshold);
}

std::vector<double> cauchy_frequency_samples(double rate_per_ms, int n,
                                             std::uint64_t seed) {
  if (!(rate_per_ms >= 0.0) || n < 1) {
    throw std::invalid_argument("cauchy samples need rate >= 0 and n >= 1");
  }
  std::vector<double> out(n, 0.0);
  if (rate_per_ms == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::cauchy_distribution<double> dist(0.0, rate_per_ms / kTwoPi);
  for (auto& f : out) f = dist(rng);
  return out;
}

namespace {

double fitted_rate(const std::vector<double>& t, const std::vector<double>& y,
                   double floor) {
  std::vector<double> tt, yy;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(y[k] > floor)) break;
    tt.push_back(t[k]);
    yy.push_back(y[k]);
  }
  if (tt.size() < 3) {
    throw std::invalid_argument(
        "tq_rate_additivity: too few samples above the fit floor; use a "
        "finer time grid");
  }
  return fit_exponential_decay(tt, yy, 0.0).rate;
}

}  // namespace

AdditivityResult tq_rate_additivity(
    const std::array<std::vector<double>, 3>& frequency_samples_khz,
    const std::vector<double>& times_ms, double floor) {
  const std::size_t n = frequency_samples_khz[0].size();
  if (n < 2 || frequency_samples_khz[1].size() != n ||
      frequency_samples_khz[2].size() != n) {
    throw std::invalid_argument(
        "tq_rate_additivity: need equal, nonempty sample sets");
  }
  std::array<std::vector<double>, 4> signals;
  for (auto& s : signals) s.assign(times_ms.size(), 0.0);
  for (std::size_t k = 0; k < times_ms.size(); ++k) {
    const double w = kTwoPi * times_ms[k];
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t s = 0; s < n; ++s) {
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double f = frequency_samples_khz[i][s];
        acc[i] += std::cos(w * f);
        sum += f;
      }
      acc[3] += std::cos(w * sum);
    }
    for (int i = 0; i < 4; ++i) signals[i][k] = acc[i] / static_cast<double>(n);
  }
  AdditivityResult r;
  for (int i = 0; i < 3; ++i) r.rates_1q[i] = fitted_rate(times_ms, signals[i], floor);
  r.rate_3q = fitted_rate(times_ms, signals[3], floor);
  const double sum = r.rates_1q[0] + r.rates_1q[1] + r.rates_1q[2];
  r.ratio = sum == 0.0 ? (r.rate_3q == 0.0 ? 1.0 : INFINITY) : r.rate_3q / sum;
  return r;
}

double predicted_3q_time(const std::array<double, 3>& times_1q_ms) {
  double rate = 0.0;
  for (double t : times_1q_ms) {
    if (!(t > 0.0)) throw std::invalid_argument("1Q times must be > 0");
    rate += 1.0 / t;
  }
  return 1.0 / rate;
}

void write_trace_csv(std::ostream& out, const CorrelationTrace& trace) {
  out << "t_ms,re_fx,im_fx\n" << std::setprecision(12);
  for (std::size_t k = 0; k < trace.values.size(); ++k) {
    out << trace.times_ms[k] << ',' << trace.values[k].real() << ','
        << trace.values[k].imag() << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "freq_hz,density\n" << std::setprecision(12);
  for (std::size_t k = 0; k < s.density.size(); ++k) {
    out << s.freq_hz[k] << ',' << s.density[k] << '\n';
  }
}

}  // namespace spinforge
