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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "support/oracles.hpp"

namespace spinforge {
namespace {

constexpr double kPi = oracle::kPi;

oracle::M reference_oracle(const DipolarEnvironment& e) {
  return e.d_alpha_khz / 2 * oracle::pauli_string("ZZII") +
         e.d_beta_khz / 2 * oracle::pauli_string("ZIZI") +
         e.d_gamma_khz / 4 *
             (2.0 * oracle::pauli_string("ZIIZ") - oracle::pauli_string("XIIX") -
              oracle::pauli_string("YIIY"));
}

// Reference spin state after evolving rho (x) I/8 and tracing out the rest.
oracle::M reduced_oracle(const DipolarEnvironment& e, double t, const oracle::M& rho) {
  const oracle::M u = oracle::taylor_expm(reference_oracle(e), t);
  const oracle::M full = oracle::kron(rho, oracle::M::Identity(8, 8) / 8.0);
  return oracle::partial_trace(u * full * u.adjoint(), {1}, 4);
}

DipolarEnvironment random_env(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  return {u(rng), u(rng), u(rng)};
}

std::vector<double> dedupe(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  return out;
}

TEST(ReferenceHamiltonianTest, MatchesOracle) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 5; ++k) {
    const auto e = random_env(rng);
    EXPECT_LT(oracle::max_abs_diff(reference_hamiltonian(e), reference_oracle(e)), 1e-15);
  }
}

TEST(KrausTest, ExactMatchesPartialTrace) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> ut(0.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const auto e = random_env(rng);
    const double t = ut(rng);
    const KrausSet set = kraus_exact(e, t);
    EXPECT_LT(set.completeness_error(), 1e-10);
    const oracle::M rho = oracle::random_hermitian(2, rng);
    EXPECT_LT(oracle::max_abs_diff(apply_kraus(set, rho), reduced_oracle(e, t, rho)), 1e-12);
  }
}

TEST(KrausTest, PaperClosedFormIsTimeReversedWithoutFlipFlop) {
  std::mt19937_64 rng(53);
  for (int k = 0; k < 5; ++k) {
    auto e = random_env(rng);
    e.d_gamma_khz = 0.0;
    const KrausSet closed = kraus_paper_closed_form(e, 0.3);
    const KrausSet built = kraus_paper(e, 0.3);
    ASSERT_EQ(closed.operators.size(), built.operators.size());
    // H is real in this basis, so U(-t) is the elementwise conjugate of U(t).
    for (std::size_t j = 0; j < closed.operators.size(); ++j) {
      EXPECT_LT(oracle::max_abs_diff(closed.operators[j], built.operators[j].conjugate()), 1e-12);
    }
  }
  const DipolarEnvironment full{1.0, 2.0, 4.0};
  EXPECT_GT(oracle::max_abs_diff(kraus_paper_closed_form(full, 0.1).operators[0],
                                 kraus_paper(full, 0.1).operators[0].conjugate()),
            1e-3);
}

TEST(KrausTest, PaperModelUpToNormalizationWithoutFlipFlop) {
  // Eight column sums each scaled by 1/8 keep only 1/8 of the trace.
  const DipolarEnvironment ising{1.3, -0.7, 0.0};
  EXPECT_NEAR(kraus_paper(ising, 0.4).completeness_error(), 0.875, 1e-12);
  const oracle::M x = oracle::pauli('X');
  const auto paper = [&](const DipolarEnvironment& e) {
    return 8.0 * dephase_reference(x, e, 0.4, KrausModel::PaperLiteral);
  };
  EXPECT_LT(oracle::max_abs_diff(paper(ising), dephase_reference(x, ising, 0.4)), 1e-12);
  // With flip-flops the rescaled channel still gets the X coherence right
  // but not the populations.
  const DipolarEnvironment full{1.0, 2.0, 4.0};
  const oracle::M z = oracle::pauli('Z');
  EXPECT_LT(oracle::max_abs_diff(paper(full), dephase_reference(x, full, 0.4)), 1e-12);
  EXPECT_GT(oracle::max_abs_diff(8.0 * dephase_reference(z, full, 0.07, KrausModel::PaperLiteral),
                                 dephase_reference(z, full, 0.07)),
            1e-3);
  EXPECT_GT(paper_kraus_discrepancy(full, 0.1), 1e-3);
}

TEST(KrausTest, ZCommutesOnlyWithoutFlipFlop) {
  const oracle::M z = oracle::pauli('Z');
  EXPECT_LT(oracle::max_abs_diff(dephase_reference(z, {1.0, 2.0, 0.0}, 0.7), z), 1e-13);
  EXPECT_GT(oracle::max_abs_diff(dephase_reference(z, {1.0, 2.0, 4.0}, 0.07), z), 1e-3);
}

TEST(FrequencyTest, EnumeratedFamilies) {
  const DipolarEnvironment e{1.0, 2.0, 4.0};
  const auto both = phase_spectrum_frequencies(e);
  std::vector<double> f;
  double total = 0.0;
  for (const auto& w : both) {
    f.push_back(w.frequency_khz);
    total += w.weight;
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_EQ(f, (std::vector<double>{-9, -7, -5, -3, -1, 1, 3, 5, 7, 9}));
  EXPECT_NEAR(both[4].weight, 2.0 / 16.0, 1e-15);
  EXPECT_NEAR(both[0].weight, 1.0 / 16.0, 1e-15);
  const auto three = phase_spectrum_frequencies(e, FrequencyFamilies::ThreeHalvesOnly);
  EXPECT_EQ(three.size(), 8u);
  EXPECT_EQ(three.front().frequency_khz, -9.0);
}

TEST(FrequencyTest, ExactLinesAreEigenvalueDifferences) {
  std::mt19937_64 rng(54);
  for (int k = 0; k < 10; ++k) {
    const auto e = random_env(rng);
    Eigen::SelfAdjointEigenSolver<oracle::M> es(reference_oracle(e));
    const oracle::M xv = es.eigenvectors().adjoint() * oracle::pauli_string("XIII") * es.eigenvectors();
    std::vector<double> expect;
    for (int a = 0; a < 16; ++a) {
      for (int b = 0; b < 16; ++b) {
        if (std::abs(xv(a, b)) > 1e-8) expect.push_back(es.eigenvalues()(a) - es.eigenvalues()(b));
      }
    }
    const auto want = dedupe(expect, 1e-9);
    const auto got = dedupe(exact_coherence_frequencies(e), 1e-9);
    for (double w : want) {
      const bool found = std::any_of(got.begin(), got.end(), [w](double g) { return std::abs(g - w) < 1e-9; });
      EXPECT_TRUE(found) << w;
    }
  }
}

TEST(TraceTest, MatchesReducedDynamicsAndNormalizes) {
  const std::vector<DipolarEnvironment> envs{{1.0, 2.0, 4.0}, {0.5, -1.0, 0.3}};
  const std::vector<double> times{0.0, 0.05, 0.1, 0.15};
  const CorrelationTrace tr = correlation_trace(envs, times);
  const oracle::M x = oracle::pauli('X');
  for (std::size_t k = 0; k < times.size(); ++k) {
    oracle::C want = 0.0;
    for (const auto& e : envs) want += (reduced_oracle(e, times[k], x) * x).trace() / 2.0 / 2.0;
    EXPECT_LT(std::abs(tr.values[k] - want), 1e-12) << k;
  }
  EXPECT_NEAR(tr.values[0].real(), 1.0, 1e-15);
  EXPECT_THROW(correlation_trace({}, times), std::invalid_argument);
}

TEST(TraceTest, DefaultGrid) {
  const auto g = default_time_grid({{0.5, 2.0, 0.0}});
  ASSERT_EQ(g.size(), 512u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_NEAR(g.back(), 20.0, 0.05);
  EXPECT_NEAR(default_time_grid({{0.0, 0.0, 0.0}}).back(), 1.0, 0.01);
}

TEST(SpectrumTest, ParsevalAndPeaks) {
  const DipolarEnvironment e{1.0, 2.0, 4.0};
  const auto times = default_time_grid({e}, 2048);
  const CorrelationTrace tr = correlation_trace({e}, times);
  const Spectrum s = spectrum_of_trace(tr);
  EXPECT_NEAR(spectrum_energy(s) / extended_trace_energy(tr), 1.0, 1e-10);
  // Every peak sits on an exact line.
  const auto exact = exact_coherence_frequencies(e);
  const auto peaks = spectrum_peaks_hz(s);
  ASSERT_FALSE(peaks.empty());
  for (double p : peaks) {
    double best = 1e300;
    for (double f : exact) best = std::min(best, std::abs(p - 1e3 * f));
    EXPECT_LE(best, s.bin_hz) << p;
  }
  // The density is even in frequency because F_x is real here.
  const std::size_t n = s.density.size();
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(s.density[k], s.density[n - 1 - k], 1e-9);
}

TEST(SpectrumTest, LorentzianFromExponentialDecay) {
  // Hand-built trace exp(-t/T): Lorentzian of FWHM 1/(π T).
  CorrelationTrace tr;
  const double t2 = 5.0;
  for (int k = 0; k < 4096; ++k) {
    tr.times_ms.push_back(0.02 * k);
    tr.values.push_back(std::exp(-tr.times_ms.back() / t2));
  }
  const Spectrum s = spectrum_of_trace(tr);
  const LorentzianFit fit = lorentzian_fwhm(s);
  EXPECT_TRUE(fit.ok);
  EXPECT_NEAR(fit.fwhm, 1e3 / (kPi * t2), 0.03 * 1e3 / (kPi * t2));
  EXPECT_NEAR(fit.center, 0.0, s.bin_hz);
}

TEST(AdditivityTest, CauchyRatesAdd) {
  const std::array<double, 3> rates{0.1, 0.2, 0.3};
  std::array<std::vector<double>, 3> f;
  for (int i = 0; i < 3; ++i) f[i] = cauchy_frequency_samples(rates[i], 10000, 100 + i);
  std::vector<double> t;
  for (int k = 0; k < 256; ++k) t.push_back(k * 10.0 / 255);
  const AdditivityResult r = tq_rate_additivity(f, t);
  EXPECT_NEAR(r.ratio, 1.0, 0.1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.rates_1q[i], rates[i], 0.2 * rates[i]);
  EXPECT_EQ(cauchy_frequency_samples(0.1, 5, 9), cauchy_frequency_samples(0.1, 5, 9));
}

TEST(AdditivityTest, PredictedTime) {
  EXPECT_NEAR(predicted_3q_time({5.37, 9.07, 8.66}),
              1.0 / (1.0 / 5.37 + 1.0 / 9.07 + 1.0 / 8.66), 1e-14);
  EXPECT_NEAR(predicted_3q_time({3.0, 3.0, 3.0}), 1.0, 1e-15);
  EXPECT_THROW(predicted_3q_time({0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(DephasingCsvTest, Headers) {
  CorrelationTrace tr;
  tr.times_ms = {0.0, 0.1};
  tr.values = {1.0, {0.5, 0.25}};
  std::ostringstream os;
  write_trace_csv(os, tr);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')).find("t_ms"), 0u);
}

}  // namespace
}  // namespace spinforge
