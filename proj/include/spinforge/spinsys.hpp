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

#ifndef SPINFORGE_SPINSYS_HPP_
#define SPINFORGE_SPINSYS_HPP_

#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinforge/spincore.hpp"

namespace spinforge {

// A small coupled spin system in the rotating frame.
//
// Frequencies are signed and in kHz. `dipolar_khz` is symmetric with an
// exactly zero diagonal.
struct SpinSystem {
  std::vector<std::string> labels;
  std::vector<std::string> species;
  std::vector<double> zeeman_khz;
  Eigen::MatrixXd dipolar_khz;

  int n_spins() const { return static_cast<int>(zeeman_khz.size()); }
  Eigen::Index dim() const { return Eigen::Index{1} << n_spins(); }

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;

  // 1-based indices of spins whose species matches `tag`.
  std::vector<int> spins_of_species(const std::string& tag) const;
  int index_of(const std::string& label) const;
};

// How each spin pair's dipolar coupling is written.
//
// Full keeps the flip-flop terms; Heteronuclear keeps only ZZ. Mixed picks
// per pair: `heteronuclear_pair(m, n)` (0-based, m < n) selects truncation.
struct CouplingForm {
  enum class Kind { Full, Heteronuclear, Mixed };
  Kind kind = Kind::Full;
  // Row-major upper triangle flags for Mixed, one per pair (m < n).
  std::vector<bool> truncate_pair;

  static CouplingForm full() { return {Kind::Full, {}}; }
  static CouplingForm heteronuclear() { return {Kind::Heteronuclear, {}}; }
  static CouplingForm mixed(int n_spins, std::vector<bool> truncate_pair);
  // Truncate exactly the pairs whose species differ.
  static CouplingForm by_species(const SpinSystem& sys);

  bool truncated(int m, int n, int n_spins) const;
};

// Three-carbon system (C1, C2, Cm) with rotating-frame Zeeman shifts and
// intramolecular couplings for the reference crystal orientation.
SpinSystem malonic_system();

// Free-induction dephasing times T2* (ms) for C1, C2, Cm in that orientation.
std::vector<double> malonic_t2star_ms();

OperatorMatrix zeeman_hamiltonian(const SpinSystem& sys);
OperatorMatrix dipolar_hamiltonian(const SpinSystem& sys,
                                   const CouplingForm& form);
// Zeeman plus dipolar in the given form.
OperatorMatrix internal_hamiltonian(
    const SpinSystem& sys, const CouplingForm& form = CouplingForm::full());

struct ExchangePair {
  int first = 0;   // 1-based
  int second = 0;  // 1-based
  double coupling_khz = 0.0;
};

// Isotropic exchange sum over pairs of (d/3)(ZZ + YY + XX)/2.
OperatorMatrix exchange_hamiltonian(int n_spins,
                                    const std::vector<ExchangePair>& pairs);

// sqrt(Tr(H^2) / 2^n) of Zeeman + full dipolar, in kHz.
double internal_norm(const SpinSystem& sys);

nlohmann::json spin_system_to_json(const SpinSystem& sys);
SpinSystem spin_system_from_json(const nlohmann::json& doc);

}  // namespace spinforge

#endif  // SPINFORGE_SPINSYS_HPP_
