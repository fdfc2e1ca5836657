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
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace spinforge {

namespace {

const Complex kI(0.0, 1.0);

void check_spin_count(int n_spins) {
  if (n_spins < 1 || n_spins > kMaxSpins) {
    throw std::invalid_argument("spin count must be in [1, 8], got " +
                                std::to_string(n_spins));
  }
}

PauliSymbol axis_symbol(PauliAxis axis) {
  switch (axis) {
    case PauliAxis::X:
      return PauliSymbol::X;
    case PauliAxis::Y:
      return PauliSymbol::Y;
    case PauliAxis::Z:
      return PauliSymbol::Z;
  }
  return PauliSymbol::I;
}

}  // namespace

PauliSymbol parse_pauli_symbol(const std::string& text) {
  if (text == "I" || text == "1" || text == "1l") return PauliSymbol::I;
  if (text == "X") return PauliSymbol::X;
  if (text == "Y") return PauliSymbol::Y;
  if (text == "Z") return PauliSymbol::Z;
  if (text == "+" || text == "s+" || text == "sigma+") {
    return PauliSymbol::SigmaPlus;
  }
  if (text == "-" || text == "s-" || text == "sigma-") {
    return PauliSymbol::SigmaMinus;
  }
  throw std::invalid_argument("unknown product-operator symbol '" + text +
                              "'");
}

CMatrix single_spin_matrix(PauliSymbol symbol) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (symbol) {
    case PauliSymbol::I:
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      break;
    case PauliSymbol::X:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case PauliSymbol::Y:
      m(0, 1) = -kI;
      m(1, 0) = kI;
      break;
    case PauliSymbol::Z:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case PauliSymbol::SigmaPlus:
      m(0, 1) = 2.0;
      break;
    case PauliSymbol::SigmaMinus:
      m(1, 0) = 2.0;
      break;
  }
  return m;
}

OperatorMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

OperatorMatrix embed_pauli(PauliAxis axis, int spin_index, int n_spins) {
  check_spin_count(n_spins);
  if (spin_index < 1 || spin_index > n_spins) {
    throw std::invalid_argument("spin index " + std::to_string(spin_index) +
                                " outside [1, " + std::to_string(n_spins) +
                                "]");
  }
  std::vector<PauliSymbol> symbols(n_spins, PauliSymbol::I);
  symbols[spin_index - 1] = axis_symbol(axis);
  return product_operator(symbols);
}

OperatorMatrix product_operator(std::span<const PauliSymbol> symbols) {
  if (symbols.empty() || symbols.size() > kMaxSpins) {
    throw std::invalid_argument("product operator needs 1-8 symbols");
  }
  CMatrix out = single_spin_matrix(symbols[0]);
  for (std::size_t k = 1; k < symbols.size(); ++k) {
    out = kron(out, single_spin_matrix(symbols[k]));
  }
  return out;
}

OperatorMatrix product_operator(const std::vector<std::string>& symbols) {
  std::vector<PauliSymbol> parsed;
  parsed.reserve(symbols.size());
  for (const auto& s : symbols) parsed.push_back(parse_pauli_symbol(s));
  return product_operator(parsed);
}

OperatorMatrix collective_pauli(PauliAxis axis, int n_spins,
                                std::span<const int> spins) {
  check_spin_count(n_spins);
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  OperatorMatrix out = OperatorMatrix::Zero(dim, dim);
  if (spins.empty()) {
    for (int j = 1; j <= n_spins; ++j) out += embed_pauli(axis, j, n_spins);
  } else {
    for (int j : spins) out += embed_pauli(axis, j, n_spins);
  }
  return out;
}

Eigen::VectorXd total_z_diagonal(int n_spins) {
  check_spin_count(n_spins);
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  Eigen::VectorXd diag(dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    int ones = 0;
    for (int j = 0; j < n_spins; ++j) ones += static_cast<int>((b >> j) & 1);
    diag(b) = static_cast<double>(n_spins - 2 * ones);
  }
  return diag;
}

bool is_power_of_two_dim(Eigen::Index dim) {
  return dim >= 2 && (dim & (dim - 1)) == 0;
}

int spin_count_for_dim(Eigen::Index dim) {
  if (!is_power_of_two_dim(dim)) {
    throw std::invalid_argument("dimension " + std::to_string(dim) +
                                " is not a power of two >= 2");
  }
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  return n;
}

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_error(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

double unitarity_error(const CMatrix& u) {
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()));
}

bool is_hermitian(const CMatrix& m, double tol) {
  return m.rows() == m.cols() && hermiticity_error(m) < tol;
}

bool is_unitary(const CMatrix& u, double tol) {
  return u.rows() == u.cols() && unitarity_error(u) < tol;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  return a * b - b * a;
}

UnitaryMatrix expm_hermitian_signed(const OperatorMatrix& hamiltonian,
                                    double t_ms) {
  if (hamiltonian.rows() != hamiltonian.cols()) {
    throw std::invalid_argument("expm_hermitian: matrix is not square");
  }
  const double scale = std::max(1.0, max_abs(hamiltonian));
  if (hermiticity_error(hamiltonian) > 1e-12 * scale) {
    throw std::invalid_argument("expm_hermitian: matrix is not Hermitian");
  }
  // Symmetrize so the solver sees an exactly Hermitian matrix.
  const CMatrix h = 0.5 * (hamiltonian + hamiltonian.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const Eigen::VectorXd& w = solver.eigenvalues();
  const CMatrix& v = solver.eigenvectors();
  CVector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    phases(k) = std::polar(1.0, -kTwoPi * w(k) * t_ms);
  }
  return v * phases.asDiagonal() * v.adjoint();
}

UnitaryMatrix expm_hermitian(const OperatorMatrix& hamiltonian, double t_ms) {
  if (!(t_ms >= 0.0)) {
    throw std::invalid_argument("expm_hermitian: time must be >= 0");
  }
  return expm_hermitian_signed(hamiltonian, t_ms);
}

DensityState partial_trace(const DensityState& rho, std::span<const int> keep) {
  const int n = spin_count_for_dim(rho.rows());
  if (rho.rows() != rho.cols()) {
    throw std::invalid_argument("partial_trace: matrix is not square");
  }
  if (keep.empty()) {
    throw std::invalid_argument("partial_trace: keep set is empty");
  }
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw std::invalid_argument("partial_trace: duplicate spin in keep set");
  }
  for (int s : kept) {
    if (s < 1 || s > n) {
      throw std::invalid_argument("partial_trace: spin " + std::to_string(s) +
                                  " outside [1, " + std::to_string(n) + "]");
    }
  }
  std::vector<int> traced;
  for (int s = 1; s <= n; ++s) {
    if (!std::binary_search(kept.begin(), kept.end(), s)) traced.push_back(s);
  }
  // Bit position of spin s in a full basis index.
  auto bit = [n](int s) { return n - s; };
  const int nk = static_cast<int>(kept.size());
  const int nt = static_cast<int>(traced.size());
  const Eigen::Index dk = Eigen::Index{1} << nk;
  const Eigen::Index dt = Eigen::Index{1} << nt;

  auto compose = [&](Eigen::Index k_idx, Eigen::Index t_idx) {
    Eigen::Index full = 0;
    for (int q = 0; q < nk; ++q) {
      if ((k_idx >> (nk - 1 - q)) & 1) full |= Eigen::Index{1} << bit(kept[q]);
    }
    for (int q = 0; q < nt; ++q) {
      if ((t_idx >> (nt - 1 - q)) & 1) {
        full |= Eigen::Index{1} << bit(traced[q]);
      }
    }
    return full;
  };

  DensityState out = DensityState::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a) {
    for (Eigen::Index b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      for (Eigen::Index e = 0; e < dt; ++e) {
        acc += rho(compose(a, e), compose(b, e));
      }
      out(a, b) = acc;
    }
  }
  return out;
}

Complex frobenius_inner(const CMatrix& a, const CMatrix& b) {
  return a.conjugate().cwiseProduct(b).sum();
}

}  // namespace spinforge
