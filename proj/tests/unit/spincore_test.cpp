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


#include "spinforge/spincore.hpp"

#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "spinforge/parallel.hpp"
#include "support/oracles.hpp"

namespace spinforge {
namespace {

TEST(PauliTest, SingleSpinMatricesMatchDefinitions) {
  EXPECT_LT(oracle::max_abs_diff(single_spin_matrix(PauliSymbol::X), oracle::pauli('X')), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(single_spin_matrix(PauliSymbol::Y), oracle::pauli('Y')), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(single_spin_matrix(PauliSymbol::Z), oracle::pauli('Z')), 1e-15);
  // sigma+- = X +- iY, so sigma+ has a single entry 2.
  EXPECT_LT(oracle::max_abs_diff(single_spin_matrix(PauliSymbol::SigmaPlus), oracle::pauli('+')), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(single_spin_matrix(PauliSymbol::SigmaMinus), oracle::pauli('-')), 1e-15);
}

TEST(PauliTest, EmbeddingIsBigEndian) {
  for (int n = 1; n <= 4; ++n) {
    for (int j = 1; j <= n; ++j) {
      EXPECT_LT(oracle::max_abs_diff(embed_pauli(PauliAxis::X, j, n), oracle::on_spin('X', j, n)), 1e-15);
      EXPECT_LT(oracle::max_abs_diff(embed_pauli(PauliAxis::Y, j, n), oracle::on_spin('Y', j, n)), 1e-15);
      EXPECT_LT(oracle::max_abs_diff(embed_pauli(PauliAxis::Z, j, n), oracle::on_spin('Z', j, n)), 1e-15);
    }
  }
  // Spin 1 owns the most significant bit: |100> is basis index 4 and has
  // Z1 = -1.
  const OperatorMatrix z1 = embed_pauli(PauliAxis::Z, 1, 3);
  EXPECT_DOUBLE_EQ(z1(4, 4).real(), -1.0);
  EXPECT_DOUBLE_EQ(z1(3, 3).real(), 1.0);
}

TEST(PauliTest, ProductOperatorMatchesKronecker) {
  const OperatorMatrix p = product_operator(std::vector<std::string>{"X", "I", "Z"});
  EXPECT_LT(oracle::max_abs_diff(p, oracle::pauli_string("XIZ")), 1e-15);
  const OperatorMatrix q = product_operator(std::vector<std::string>{"+", "-"});
  EXPECT_LT(oracle::max_abs_diff(q, oracle::pauli_string("+-")), 1e-15);
  EXPECT_THROW(parse_pauli_symbol("Q"), std::invalid_argument);
  EXPECT_THROW(product_operator(std::vector<std::string>{}), std::invalid_argument);
}

TEST(PauliTest, KronMatchesOracle) {
  std::mt19937_64 rng(5);
  const CMatrix a = oracle::random_hermitian(2, rng);
  const CMatrix b = oracle::random_hermitian(4, rng);
  EXPECT_LT(oracle::max_abs_diff(kron(a, b), oracle::kron(a, b)), 1e-14);
}

TEST(PauliTest, CollectiveOperators) {
  const OperatorMatrix sx = collective_pauli(PauliAxis::X, 3);
  EXPECT_LT(oracle::max_abs_diff(sx, oracle::pauli_string("XII") + oracle::pauli_string("IXI") +
                                         oracle::pauli_string("IIX")),
            1e-15);
  const std::vector<int> some{1, 3};
  const OperatorMatrix sz = collective_pauli(PauliAxis::Z, 3, some);
  EXPECT_LT(oracle::max_abs_diff(sz, oracle::pauli_string("ZII") + oracle::pauli_string("IIZ")), 1e-15);
  const Eigen::VectorXd tz = total_z_diagonal(3);
  EXPECT_DOUBLE_EQ(tz(0), 3.0);
  EXPECT_DOUBLE_EQ(tz(7), -3.0);
  EXPECT_DOUBLE_EQ(tz(5), -1.0);
}

TEST(PauliTest, DimensionHelpers) {
  EXPECT_TRUE(is_power_of_two_dim(8));
  EXPECT_FALSE(is_power_of_two_dim(6));
  EXPECT_EQ(spin_count_for_dim(16), 4);
  EXPECT_THROW(spin_count_for_dim(12), std::invalid_argument);
  EXPECT_THROW(embed_pauli(PauliAxis::X, 4, 3), std::invalid_argument);
  EXPECT_THROW(embed_pauli(PauliAxis::X, 1, 9), std::invalid_argument);
}

TEST(ExpmTest, MatchesTaylorOracle) {
  std::mt19937_64 rng(11);
  for (Eigen::Index dim : {2, 4, 8, 16}) {
    for (int trial = 0; trial < 5; ++trial) {
      const CMatrix h = oracle::random_hermitian(dim, rng, 3.0);
      const double t = 0.05 * (trial + 1);
      const UnitaryMatrix u = expm_hermitian(h, t);
      EXPECT_LT(oracle::max_abs_diff(u, oracle::taylor_expm(h, t)), 1e-11);
      EXPECT_LT(unitarity_error(u), 1e-12);
    }
  }
}

TEST(ExpmTest, SignedTimeGivesInverse) {
  std::mt19937_64 rng(12);
  const CMatrix h = oracle::random_hermitian(8, rng, 2.0);
  const UnitaryMatrix u = expm_hermitian(h, 0.3);
  const UnitaryMatrix v = expm_hermitian_signed(h, -0.3);
  EXPECT_LT(oracle::max_abs_diff(v * u, CMatrix::Identity(8, 8)), 1e-12);
  EXPECT_THROW(expm_hermitian(h, -0.1), std::invalid_argument);
}

TEST(ExpmTest, RejectsNonHermitian) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(expm_hermitian(a, 1.0), std::invalid_argument);
  EXPECT_THROW(expm_hermitian(CMatrix::Zero(2, 3), 1.0), std::invalid_argument);
}

TEST(PartialTraceTest, MatchesIndexSumOracle) {
  std::mt19937_64 rng(13);
  const CMatrix rho = oracle::random_hermitian(16, rng);
  for (const std::vector<int>& keep :
       {std::vector<int>{1}, std::vector<int>{2, 4}, std::vector<int>{1, 3, 4},
        std::vector<int>{3, 1}, std::vector<int>{1, 2, 3, 4}}) {
    const DensityState mine = partial_trace(rho, keep);
    std::vector<int> ascending = keep;
    std::sort(ascending.begin(), ascending.end());
    EXPECT_LT(oracle::max_abs_diff(mine, oracle::partial_trace(rho, ascending, 4)), 1e-13);
  }
}

TEST(PartialTraceTest, ProductStateFactorizes) {
  // Tr_2 (A (x) B) = Tr(B) A.
  const CMatrix a = oracle::pauli('X') + 0.5 * oracle::pauli('I');
  const CMatrix b = oracle::pauli('Z') + 2.0 * oracle::pauli('I');
  const std::vector<int> keep{1};
  EXPECT_LT(oracle::max_abs_diff(partial_trace(oracle::kron(a, b), keep), 4.0 * a), 1e-14);
}

TEST(PartialTraceTest, RejectsBadKeepSets) {
  const CMatrix rho = CMatrix::Identity(8, 8);
  EXPECT_THROW(partial_trace(rho, std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(partial_trace(rho, std::vector<int>{1, 1}), std::invalid_argument);
  EXPECT_THROW(partial_trace(rho, std::vector<int>{4}), std::invalid_argument);
}

TEST(MatrixHelpersTest, CommutatorAndInner) {
  const CMatrix x = oracle::pauli('X');
  const CMatrix y = oracle::pauli('Y');
  EXPECT_LT(oracle::max_abs_diff(commutator(x, y), oracle::C(0, 2) * oracle::pauli('Z')), 1e-15);
  EXPECT_NEAR(frobenius_inner(x, x).real(), 2.0, 1e-15);
  EXPECT_NEAR(std::abs(frobenius_inner(x, y)), 0.0, 1e-15);
  EXPECT_TRUE(is_hermitian(y));
  EXPECT_TRUE(is_unitary(y));
  EXPECT_FALSE(is_unitary(2.0 * y));
}

TEST(ParallelTest, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_GE(worker_count(), 1);
}

TEST(ParallelTest, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

}  // namespace
}  // namespace spinforge
