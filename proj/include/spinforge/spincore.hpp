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

#ifndef SPINFORGE_SPINCORE_HPP_
#define SPINFORGE_SPINCORE_HPP_

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spinforge {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Dense operators on the 2^n spin Hilbert space. Spin 1 is the leftmost
// Kronecker factor; basis index bit (n - j) holds spin j, with |0> the
// Z = +1 state.
using OperatorMatrix = CMatrix;
using UnitaryMatrix = CMatrix;
// Deviation density matrix: Hermitian, not necessarily unit trace.
using DensityState = CMatrix;

inline constexpr int kMaxSpins = 8;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class PauliAxis { X, Y, Z };

enum class PauliSymbol { I, X, Y, Z, SigmaPlus, SigmaMinus };

// Parses "I", "X", "Y", "Z", "+"/"s+"/"sigma+" and "-"/"s-"/"sigma-".
PauliSymbol parse_pauli_symbol(const std::string& text);

// 2x2 single-spin matrix for a symbol; sigma± = X ± iY.
CMatrix single_spin_matrix(PauliSymbol symbol);

// I ⊗ ... ⊗ sigma_axis ⊗ ... ⊗ I with the Pauli at 1-based spin_index.
OperatorMatrix embed_pauli(PauliAxis axis, int spin_index, int n_spins);

// Kronecker product of the listed single-spin symbols, in order.
OperatorMatrix product_operator(std::span<const PauliSymbol> symbols);
OperatorMatrix product_operator(const std::vector<std::string>& symbols);

OperatorMatrix kron(const CMatrix& a, const CMatrix& b);

// Sum over all spins of sigma_axis, restricted to the listed 1-based spins
// (all spins when empty).
OperatorMatrix collective_pauli(PauliAxis axis, int n_spins,
                                std::span<const int> spins = {});

// Diagonal of Z' = sum_j Z^j for n spins.
Eigen::VectorXd total_z_diagonal(int n_spins);

bool is_power_of_two_dim(Eigen::Index dim);
int spin_count_for_dim(Eigen::Index dim);

double max_abs(const CMatrix& m);
double hermiticity_error(const CMatrix& m);
double unitarity_error(const CMatrix& u);
bool is_hermitian(const CMatrix& m, double tol = 1e-12);
bool is_unitary(const CMatrix& u, double tol = 1e-10);

CMatrix commutator(const CMatrix& a, const CMatrix& b);

// exp(-i 2π H t) for Hermitian H in kHz and t in ms, through a Hermitian
// eigendecomposition. Throws std::invalid_argument for non-Hermitian H or
// negative t.
UnitaryMatrix expm_hermitian(const OperatorMatrix& hamiltonian, double t_ms);

// Same as expm_hermitian but allows negative times; used where a propagator
// inverse is wanted explicitly.
UnitaryMatrix expm_hermitian_signed(const OperatorMatrix& hamiltonian,
                                    double t_ms);

// Reduced state over the kept 1-based spins, in ascending spin order. Every
// subsystem is a qubit.
DensityState partial_trace(const DensityState& rho, std::span<const int> keep);

// Frobenius inner product Tr(A† B).
Complex frobenius_inner(const CMatrix& a, const CMatrix& b);

}  // namespace spinforge

#endif  // SPINFORGE_SPINCORE_HPP_
