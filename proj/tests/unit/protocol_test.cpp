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


#include "spinforge/protocol.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

namespace spinforge {
namespace {

constexpr double kPi = oracle::kPi;

oracle::M ideal_pseudopure() {
  return (oracle::pauli_string("XII") + oracle::pauli_string("XZI") +
          oracle::pauli_string("XIZ") + oracle::pauli_string("XZZ")) /
         4.0;
}

// Order of element (a, b): half the difference of total Z eigenvalues.
int order_of(Eigen::Index a, Eigen::Index b, int n) {
  auto z = [n](Eigen::Index idx) {
    int s = 0;
    for (int j = 0; j < n; ++j) s += ((idx >> j) & 1) ? -1 : 1;
    return s;
  };
  return (z(a) - z(b)) / 2;
}

SpinSystem zeeman_only(std::vector<double> nu) {
  SpinSystem s;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    s.labels.push_back("S" + std::to_string(j + 1));
    s.species.push_back("13C");
  }
  s.zeeman_khz = std::move(nu);
  s.dipolar_khz = Eigen::MatrixXd::Zero(s.n_spins(), s.n_spins());
  return s;
}

TEST(CoherenceTest, XXXHasOrdersOneAndThree) {
  const auto parts = coherence_decompose(oracle::pauli_string("XXX"));
  ASSERT_EQ(parts.size(), 7u);
  for (const auto& [n, part] : parts) {
    const double w = part.cwiseAbs().maxCoeff();
    if (std::abs(n) == 1 || std::abs(n) == 3) {
      EXPECT_GT(w, 0.1) << n;
    } else {
      EXPECT_EQ(w, 0.0) << n;
    }
  }
  const oracle::M tq = (oracle::pauli_string("+++") + oracle::pauli_string("---")) / 8.0;
  EXPECT_LT(oracle::max_abs_diff(parts.at(3) + parts.at(-3), tq), 1e-15);
  const double total = oracle::pauli_string("XXX").squaredNorm();
  EXPECT_NEAR(tq.squaredNorm() / total, 0.25, 1e-15);
}

TEST(CoherenceTest, ZZZIsOrderZero) {
  const auto parts = coherence_decompose(oracle::pauli_string("ZZZ"));
  EXPECT_LT(oracle::max_abs_diff(parts.at(0), oracle::pauli_string("ZZZ")), 1e-15);
}

TEST(CoherenceTest, RandomStateSplitsByOrder) {
  std::mt19937_64 rng(41);
  const oracle::M rho = oracle::random_hermitian(8, rng);
  const auto parts = coherence_decompose(rho);
  oracle::M sum = oracle::M::Zero(8, 8);
  const double phi = kPi / 7.0;
  const UnitaryMatrix rz = collective_rz(3, phi);
  for (const auto& [n, part] : parts) {
    sum += part;
    for (Eigen::Index a = 0; a < 8; ++a) {
      for (Eigen::Index b = 0; b < 8; ++b) {
        if (part(a, b) != oracle::C(0.0)) EXPECT_EQ(order_of(a, b, 3), n);
      }
    }
    const oracle::M rotated = rz * part * rz.adjoint();
    EXPECT_LT(oracle::max_abs_diff(rotated, std::polar(1.0, -n * phi) * part), 1e-14);
  }
  EXPECT_LT(oracle::max_abs_diff(sum, rho), 1e-15);
}

TEST(PhaseShiftTest, Identities) {
  std::mt19937_64 rng(42);
  const UnitaryMatrix u = oracle::random_unitary(8, rng);
  EXPECT_LT(oracle::max_abs_diff(phase_shifted_unitary(u, 0.0), u), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(phase_shifted_unitary(u, 2.0 * kPi), u), 1e-13);
  // R_z(2π) itself is -I for three spins.
  EXPECT_LT(oracle::max_abs_diff(collective_rz(3, 2.0 * kPi), -oracle::M::Identity(8, 8)), 1e-14);
  UnitaryMatrix diag = UnitaryMatrix::Zero(8, 8);
  for (int k = 0; k < 8; ++k) diag(k, k) = std::polar(1.0, 0.3 * k);
  EXPECT_LT(oracle::max_abs_diff(phase_shifted_unitary(diag, 1.1), diag), 1e-15);
}

TEST(PhaseCycleTest, RawAlternatingSum) {
  const PhaseCycle c = PhaseCycle::three_quantum();
  EXPECT_EQ(c.n_steps, 6);
  // Literal Σ_{k=1..6} (-1)^{k-1} e^{i 3 k π/3}.
  const Complex s3 = phase_cycle_sum(c, 3);
  EXPECT_EQ(s3.real(), -6.0);
  EXPECT_NEAR(s3.imag(), 0.0, 1e-14);
  for (int n : {0, 1, 2, -1, -2}) EXPECT_NEAR(std::abs(phase_cycle_sum(c, n)), 0.0, 1e-14) << n;
  EXPECT_NEAR(phase_cycle_sum(c, -3).real(), -6.0, 1e-14);
}

TEST(PhaseCycleTest, PassesOnlyTripleQuantum) {
  std::mt19937_64 rng(43);
  const oracle::M rho = oracle::random_hermitian(8, rng);
  const auto parts = coherence_decompose(rho);
  const oracle::M tq = parts.at(3) + parts.at(-3);
  const oracle::M sq = parts.at(1) + parts.at(-1);
  const PhaseCycle c = PhaseCycle::three_quantum();
  const UnitaryMatrix id = UnitaryMatrix::Identity(8, 8);
  EXPECT_LT(oracle::max_abs_diff(phase_cycle_filter(id, tq, c), tq), 1e-14);
  UnitaryMatrix diag = UnitaryMatrix::Zero(8, 8);
  for (int k = 0; k < 8; ++k) diag(k, k) = std::polar(1.0, 0.7 * k * k);
  EXPECT_LT(phase_cycle_filter(diag, sq, c).cwiseAbs().maxCoeff(), 1e-12);
  // A generic gate: whatever comes out is built only from the ±3 part of
  // the input.
  const UnitaryMatrix g = oracle::random_unitary(8, rng);
  EXPECT_LT(oracle::max_abs_diff(phase_cycle_filter(g, rho, c), phase_cycle_filter(g, tq, c)), 1e-12);
}

TEST(PseudopureTest, IdealGatesGiveExactState) {
  const oracle::M zzz = oracle::pauli_string("ZZZ");
  EXPECT_LT(oracle::max_abs_diff(conjugate(iiz_to_zzz_target().unitary, oracle::pauli_string("IIZ")), zzz), 1e-15);
  const oracle::M xxx = conjugate(collective_y90(3), zzz);
  EXPECT_LT(oracle::max_abs_diff(xxx, oracle::pauli_string("XXX")), 1e-14);
  const DensityState out = phase_cycle_filter(tqpp_target().unitary, xxx, PhaseCycle::three_quantum());
  EXPECT_LT(oracle::max_abs_diff(out, ideal_pseudopure()), 1e-14);
  EXPECT_LT(oracle::max_abs_diff(pseudopure_ideal_state(), ideal_pseudopure()), 1e-15);

  PseudopureInputs in;
  in.iiz_to_zzz = iiz_to_zzz_target().unitary;
  in.tqpp = tqpp_target().unitary;
  const PseudopureResult r = pseudopure_protocol(malonic_system(), in);
  EXPECT_NEAR(r.correlation, 1.0, 1e-12);
  EXPECT_LT(oracle::max_abs_diff(r.state, ideal_pseudopure()), 1e-12);
}

TEST(PseudopureTest, TqppCompletionMapsTheCatPair) {
  const UnitaryMatrix u = tqpp_target().unitary;
  EXPECT_TRUE(is_unitary(u));
  EXPECT_NEAR(std::abs(u(0, 0)), 1.0, 1e-15);  // |000> -> |000>
  EXPECT_NEAR(std::abs(u(4, 7)), 1.0, 1e-15);  // |111> -> |100>
  const DensityState tq = (oracle::pauli_string("+++") + oracle::pauli_string("---")) / 8.0;
  const DensityState mapped = conjugate(u, tq);
  // |000><111| + |111><000| -> |000><100| + |100><000| = X(1+Z)(1+Z)/4.
  EXPECT_LT(oracle::max_abs_diff(mapped, ideal_pseudopure()), 1e-14);
}

TEST(PseudopureTest, FreeEvolutionCannotPrepareState) {
  ShapedPulse idle;
  idle.segments = {{0.1, 0.0, 0.0, 0.0}};
  PseudopureInputs in;
  in.iiz_to_zzz = idle;
  in.tqpp = idle;
  const PseudopureResult r = pseudopure_protocol(malonic_system(), in);
  EXPECT_LT(std::abs(r.correlation), 1e-10);
  PseudopureInputs missing;
  EXPECT_THROW(pseudopure_protocol(malonic_system(), missing), std::invalid_argument);
}

TEST(PseudopureTest, SkippingTheCycleLeavesSingleQuantumResidue) {
  PseudopureInputs in;
  in.iiz_to_zzz = iiz_to_zzz_target().unitary;
  in.tqpp = tqpp_target().unitary;
  in.cycle = PhaseCycle::none();
  const PseudopureResult r = pseudopure_protocol(malonic_system(), in);
  EXPECT_LT(r.correlation, 0.9);
  const DensityState expect = conjugate(tqpp_target().unitary, oracle::pauli_string("XXX"));
  EXPECT_LT(oracle::max_abs_diff(r.state, expect), 1e-13);
}

TEST(CorrelationTest, Definition) {
  const oracle::M ideal = ideal_pseudopure();
  EXPECT_NEAR(state_correlation(ideal, ideal), 1.0, 1e-15);
  EXPECT_NEAR(state_correlation(oracle::pauli_string("XII"), oracle::pauli_string("IXI")), 0.0, 1e-15);
  const oracle::M rho = ideal + 0.1 * oracle::pauli_string("ZZZ");
  const double num = (rho * ideal).trace().real();
  const double den = std::sqrt((rho * rho).trace().real() * (ideal * ideal).trace().real());
  EXPECT_NEAR(state_correlation(rho, ideal), num / den, 1e-15);
  EXPECT_THROW(state_correlation(rho, oracle::M::Zero(8, 8)), std::invalid_argument);
}

TEST(TransferTest, ExchangeTiming) {
  EXPECT_NEAR(transfer_time(0.75), 1.0, 1e-15);
  EXPECT_NEAR(transfer_time(-0.75), 1.0, 1e-15);
  EXPECT_NEAR(transfer_time(18.7) * 1e3, 40.1, 0.1);
  EXPECT_THROW(transfer_time(0.0), std::invalid_argument);
  // rho_H (x) rho_C -> rho_C (x) rho_H.
  const double d = 18.7;
  const UnitaryMatrix u = expm_hermitian(exchange_hamiltonian(2, {{1, 2, d}}), transfer_time(d));
  const oracle::M before = oracle::pauli_string("ZI") + 0.3 * oracle::pauli_string("XI") + 0.1 * oracle::pauli_string("IY");
  const oracle::M after = oracle::pauli_string("IZ") + 0.3 * oracle::pauli_string("IX") + 0.1 * oracle::pauli_string("YI");
  EXPECT_LT(oracle::max_abs_diff(conjugate(u, before), after), 1e-12);
}

TEST(SequenceTest, HahnEchoRefocusesZeeman) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const SpinSystem sys = zeeman_only({2.3, -1.1, 0.4});
  const oracle::M x2 = oracle::pauli_string("IXI");
  for (int k = 0; k < 10; ++k) {
    const DensityState out = run_sequence(sys, hahn_echo_elements(u(rng)), x2);
    EXPECT_NEAR(std::abs(state_correlation(out, x2)), 1.0, 1e-12);
  }
  EXPECT_LT(oracle::max_abs_diff(run_sequence(sys, {}, x2), x2), 1e-15);
}

TEST(SequenceTest, MatchesDirectPropagatorOnMalonic) {
  const SpinSystem sys = malonic_system();
  const oracle::M h = oracle::spin_hamiltonian(sys.zeeman_khz, sys.dipolar_khz);
  const double t = 0.37;
  // π about y on every spin is exp(-i π/2 ΣY) = (-i)^3 YYY.
  const oracle::M py = oracle::C(0, 1) * oracle::pauli_string("YYY");
  const oracle::M u = oracle::taylor_expm(h, t / 2) * py * oracle::taylor_expm(h, t / 2);
  const oracle::M tq = oracle::pauli_string("+++") + oracle::pauli_string("---");
  const DensityState out = run_sequence(sys, hahn_echo_elements(t), tq);
  EXPECT_LT(oracle::max_abs_diff(out, u * tq * u.adjoint()), 1e-11);
  EXPECT_LT(hermiticity_error(out), 1e-13);
  EXPECT_NEAR(out.trace().real(), tq.trace().real(), 1e-13);
}

TEST(SequenceTest, IdealPulseOnSubset) {
  const SpinSystem sys = zeeman_only({0.0, 0.0});
  const std::vector<SequenceElement> seq{IdealPulse{PauliAxis::X, kPi / 2, {2}}};
  const DensityState out = run_sequence(sys, seq, oracle::pauli_string("ZZ"));
  // A 90 degree x pulse takes Z to -Y.
  EXPECT_LT(oracle::max_abs_diff(out, -oracle::pauli_string("ZY")), 1e-14);
  EXPECT_THROW(run_sequence(sys, {IdealPulse{PauliAxis::X, 1.0, {3}}}, oracle::pauli_string("ZZ")), std::invalid_argument);
  EXPECT_THROW(validate_element(Delay{-1.0}, 2), std::invalid_argument);
}

TEST(Mrev8Test, CycleStructure) {
  const auto cyc = mrev8_cycle_elements(0.01);
  EXPECT_NEAR(sequence_duration_ms(cyc), 0.12, 1e-15);
  int pulses = 0;
  for (const auto& e : cyc) {
    if (const auto* p = std::get_if<IdealPulse>(&e)) {
      ++pulses;
      EXPECT_NEAR(std::abs(p->angle_rad), kPi / 2, 1e-15);
    }
  }
  EXPECT_EQ(pulses, 8);
  const SequenceElement first = cyc.front();
  EXPECT_TRUE(std::holds_alternative<Delay>(first));
  // With no internal Hamiltonian the pulses compose to the identity.
  const UnitaryMatrix u = sequence_propagator(zeeman_only({0.0, 0.0}), cyc);
  EXPECT_NEAR(std::abs(u.trace()) / 4.0, 1.0, 1e-12);
}

TEST(Mrev8Test, AveragesAwayLikeSpinCoupling) {
  // Two like spins, pure coupling d, one cycle with 2π d t_c = 0.1.
  SpinSystem sys = zeeman_only({0.0, 0.0});
  const double tc = 0.12;
  const double d = 0.1 / (2.0 * kPi * tc);
  sys.dipolar_khz(0, 1) = sys.dipolar_khz(1, 0) = d;
  const UnitaryMatrix u = sequence_propagator(sys, mrev8_cycle_elements(tc / 12.0));
  const double f = gate_fidelity(UnitaryMatrix::Identity(4, 4), u);
  const double x = 2.0 * kPi * d * tc;
  EXPECT_GE(f, 1.0 - 10.0 * x * x);
  // Free evolution over the same time is visibly worse.
  const UnitaryMatrix free = expm_hermitian(internal_hamiltonian(sys), tc);
  EXPECT_LT(gate_fidelity(UnitaryMatrix::Identity(4, 4), free), f);
}

TEST(Mrev8Test, ZeemanScalingIsBelowOne) {
  // Measured, not assumed: the textbook value is sqrt(2)/3 for δ pulses.
  const double s = mrev8_zeeman_scaling(0.005, 0.2);
  EXPECT_NEAR(s, std::sqrt(2.0) / 3.0, 0.01);
  EXPECT_THROW(mrev8_zeeman_scaling(0.005, 0.0), std::invalid_argument);
}

TEST(DecayTest, ZeemanOnlyHahnIsFlat) {
  const SpinSystem sys = zeeman_only({1.3, -2.2});
  const DensityState x = collective_pauli(PauliAxis::X, 2);
  const DecayCurve c = repeated_block_decay({sys}, hahn_echo_elements(0.5), 10, x, x);
  ASSERT_EQ(c.signal.size(), 11u);
  for (std::size_t k = 0; k < c.signal.size(); ++k) {
    EXPECT_NEAR(std::abs(c.signal[k]), 1.0, 1e-12);
    EXPECT_NEAR(c.times_ms[k], 0.5 * k, 1e-12);
  }
}

TEST(DecayTest, ClustersAreSeededAndScaled) {
  const auto a = random_like_spin_clusters(4, 200, 1.5, 7);
  const auto b = random_like_spin_clusters(4, 200, 1.5, 7);
  ASSERT_EQ(a.size(), 200u);
  double sum2 = 0.0;
  int count = 0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ((a[m].dipolar_khz - b[m].dipolar_khz).cwiseAbs().maxCoeff(), 0.0);
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(a[m].zeeman_khz[i], 0.0);
      for (int j = i + 1; j < 4; ++j) {
        sum2 += a[m].dipolar_khz(i, j) * a[m].dipolar_khz(i, j);
        ++count;
      }
    }
  }
  EXPECT_NEAR(std::sqrt(sum2 / count), 1.5, 1e-12);
}

TEST(SequenceJsonTest, RoundTripAndErrors) {
  const auto cyc = mrev8_cycle_elements(0.01);
  const auto back = sequence_from_json(sequence_to_json(cyc));
  EXPECT_EQ(sequence_to_json(back).dump(), sequence_to_json(cyc).dump());
  EXPECT_THROW(sequence_from_json(nlohmann::json::object()), std::invalid_argument);
  EXPECT_THROW(sequence_from_json(nlohmann::json::parse(R"([{"type":"wait"}])")), std::invalid_argument);
  EXPECT_THROW(sequence_from_json(nlohmann::json::parse(R"([{"type":"delay","duration_ms":1,"x":2}])")), std::invalid_argument);
}

}  // namespace
}  // namespace spinforge
