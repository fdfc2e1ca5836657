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


#include "spinforge/spinsys.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

namespace spinforge {
namespace {

TEST(MalonicTest, TableValues) {
  const SpinSystem sys = malonic_system();
  ASSERT_EQ(sys.n_spins(), 3);
  EXPECT_EQ(sys.labels, (std::vector<std::string>{"C1", "C2", "Cm"}));
  EXPECT_DOUBLE_EQ(sys.zeeman_khz[0], 5.893);
  EXPECT_DOUBLE_EQ(sys.zeeman_khz[1], 1.057);
  EXPECT_DOUBLE_EQ(sys.zeeman_khz[2], -3.445);
  EXPECT_DOUBLE_EQ(sys.dipolar_khz(0, 1), 0.227);
  EXPECT_DOUBLE_EQ(sys.dipolar_khz(0, 2), 0.935);
  EXPECT_DOUBLE_EQ(sys.dipolar_khz(1, 2), 1.070);
  EXPECT_EQ(malonic_t2star_ms(), (std::vector<double>{2.4, 2.0, 1.5}));
  EXPECT_NO_THROW(sys.validate());
  EXPECT_EQ(sys.index_of("Cm"), 3);
  EXPECT_THROW(sys.index_of("nope"), std::invalid_argument);
}

TEST(HamiltonianTest, MatchesProductOperatorOracle) {
  const SpinSystem sys = malonic_system();
  const auto h = internal_hamiltonian(sys);
  EXPECT_LT(oracle::max_abs_diff(h, oracle::spin_hamiltonian(sys.zeeman_khz, sys.dipolar_khz)), 1e-14);
  EXPECT_LT(hermiticity_error(h), 1e-15);
}

TEST(HamiltonianTest, TruncatedFormKeepsOnlyZZ) {
  SpinSystem sys = malonic_system();
  const auto h = dipolar_hamiltonian(sys, CouplingForm::heteronuclear());
  oracle::M expect = oracle::M::Zero(8, 8);
  expect += 0.227 / 2.0 * oracle::pauli_string("ZZI");
  expect += 0.935 / 2.0 * oracle::pauli_string("ZIZ");
  expect += 1.070 / 2.0 * oracle::pauli_string("IZZ");
  EXPECT_LT(oracle::max_abs_diff(h, expect), 1e-15);
  // Diagonal, so it commutes with every Z.
  EXPECT_LT(max_abs(commutator(h, embed_pauli(PauliAxis::Z, 2, 3))), 1e-15);
}

TEST(HamiltonianTest, MixedFormTruncatesSelectedPairs) {
  const SpinSystem sys = malonic_system();
  // Pairs in packed order (1,2), (1,3), (2,3); truncate only (1,3).
  const CouplingForm form = CouplingForm::mixed(3, {false, true, false});
  const auto h = dipolar_hamiltonian(sys, form);
  oracle::M expect = oracle::M::Zero(8, 8);
  expect += 0.227 / 4.0 * (2.0 * oracle::pauli_string("ZZI") - oracle::pauli_string("XXI") - oracle::pauli_string("YYI"));
  expect += 0.935 / 2.0 * oracle::pauli_string("ZIZ");
  expect += 1.070 / 4.0 * (2.0 * oracle::pauli_string("IZZ") - oracle::pauli_string("IXX") - oracle::pauli_string("IYY"));
  EXPECT_LT(oracle::max_abs_diff(h, expect), 1e-15);
  EXPECT_THROW(CouplingForm::mixed(3, {true}), std::invalid_argument);
}

TEST(HamiltonianTest, BySpeciesTruncatesUnlikePairs) {
  SpinSystem sys = malonic_system();
  sys.species[2] = "1H";
  const CouplingForm form = CouplingForm::by_species(sys);
  EXPECT_FALSE(form.truncated(0, 1, 3));
  EXPECT_TRUE(form.truncated(0, 2, 3));
  EXPECT_TRUE(form.truncated(1, 2, 3));
}

TEST(HamiltonianTest, FlipFlopConservesTotalZ) {
  const auto h = internal_hamiltonian(malonic_system());
  EXPECT_LT(max_abs(commutator(h, collective_pauli(PauliAxis::Z, 3))), 1e-14);
}

TEST(InternalNormTest, MalonicValue) {
  // sqrt(Tr H^2 / N) with H built by the oracle.
  const SpinSystem sys = malonic_system();
  const oracle::M h = oracle::spin_hamiltonian(sys.zeeman_khz, sys.dipolar_khz);
  const double expect = std::sqrt((h.adjoint() * h).trace().real() / 8.0);
  EXPECT_NEAR(internal_norm(sys), expect, 1e-12);
  EXPECT_NEAR(internal_norm(sys), 3.564362, 5e-7);
}

TEST(ExchangeTest, SwapsProductStatesAtThreeQuarterPeriod) {
  std::mt19937_64 rng(21);
  const double d = 2.5;
  const auto h = exchange_hamiltonian(2, {{1, 2, d}});
  const auto u = expm_hermitian(h, 3.0 / (4.0 * d));
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXcd a = oracle::random_state(2, rng);
    const Eigen::VectorXcd b = oracle::random_state(2, rng);
    const Eigen::VectorXcd in = oracle::kron(a, b);
    const Eigen::VectorXcd out = u * in;
    const Eigen::VectorXcd swapped = oracle::kron(b, a);
    EXPECT_NEAR(std::abs(swapped.dot(out)), 1.0, 1e-12);
  }
}

TEST(ExchangeTest, RejectsBadPairs) {
  EXPECT_THROW(exchange_hamiltonian(2, {{1, 1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(exchange_hamiltonian(2, {{1, 3, 1.0}}), std::invalid_argument);
  EXPECT_THROW(exchange_hamiltonian(3, {{1, 2, 1.0}, {2, 1, 1.0}}), std::invalid_argument);
}

TEST(ValidationTest, RejectsMalformedSystems) {
  SpinSystem sys = malonic_system();
  sys.dipolar_khz(0, 1) = 1.0;  // asymmetric
  EXPECT_THROW(sys.validate(), std::invalid_argument);
  sys = malonic_system();
  sys.dipolar_khz(1, 1) = 0.5;
  EXPECT_THROW(sys.validate(), std::invalid_argument);
  sys = malonic_system();
  sys.labels.pop_back();
  EXPECT_THROW(sys.validate(), std::invalid_argument);
  sys = malonic_system();
  sys.zeeman_khz[0] = std::nan("");
  EXPECT_THROW(sys.validate(), std::invalid_argument);
}

TEST(JsonTest, RoundTripAndUnknownKeys) {
  const SpinSystem sys = malonic_system();
  const auto doc = spin_system_to_json(sys);
  const SpinSystem back = spin_system_from_json(doc);
  EXPECT_EQ(back.labels, sys.labels);
  EXPECT_EQ(back.zeeman_khz, sys.zeeman_khz);
  EXPECT_EQ((back.dipolar_khz - sys.dipolar_khz).cwiseAbs().maxCoeff(), 0.0);
  auto bad = doc;
  bad["extra"] = 1;
  EXPECT_THROW(spin_system_from_json(bad), std::invalid_argument);
  auto missing = doc;
  missing.erase("nu_khz");
  EXPECT_THROW(spin_system_from_json(missing), std::invalid_argument);
}

}  // namespace
}  // namespace spinforge
