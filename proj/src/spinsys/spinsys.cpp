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
#include <set>
#include <stdexcept>
#include <utility>

namespace spinforge {

void SpinSystem::validate() const {
  const int n = n_spins();
  if (n < 1 || n > kMaxSpins) {
    throw std::invalid_argument("spin system must have 1-8 spins");
  }
  if (static_cast<int>(labels.size()) != n ||
      static_cast<int>(species.size()) != n) {
    throw std::invalid_argument(
        "spin system labels/species length does not match spin count");
  }
  if (dipolar_khz.rows() != n || dipolar_khz.cols() != n) {
    throw std::invalid_argument("dipolar matrix must be n x n");
  }
  for (int m = 0; m < n; ++m) {
    if (!std::isfinite(zeeman_khz[m])) {
      throw std::invalid_argument("Zeeman frequency must be finite");
    }
    if (dipolar_khz(m, m) != 0.0) {
      throw std::invalid_argument("dipolar matrix diagonal must be zero");
    }
    for (int k = 0; k < n; ++k) {
      if (!std::isfinite(dipolar_khz(m, k))) {
        throw std::invalid_argument("dipolar coupling must be finite");
      }
      if (dipolar_khz(m, k) != dipolar_khz(k, m)) {
        throw std::invalid_argument("dipolar matrix must be symmetric");
      }
    }
  }
}

std::vector<int> SpinSystem::spins_of_species(const std::string& tag) const {
  std::vector<int> out;
  for (int j = 0; j < n_spins(); ++j) {
    if (species[j] == tag) out.push_back(j + 1);
  }
  return out;
}

int SpinSystem::index_of(const std::string& label) const {
  for (int j = 0; j < n_spins(); ++j) {
    if (labels[j] == label) return j + 1;
  }
  throw std::invalid_argument("no spin labelled '" + label + "'");
}

CouplingForm CouplingForm::mixed(int n_spins, std::vector<bool> truncate_pair) {
  const std::size_t pairs =
      static_cast<std::size_t>(n_spins) * (n_spins - 1) / 2;
  if (truncate_pair.size() != pairs) {
    throw std::invalid_argument("mixed coupling form needs one flag per pair");
  }
  return {Kind::Mixed, std::move(truncate_pair)};
}

CouplingForm CouplingForm::by_species(const SpinSystem& sys) {
  std::vector<bool> flags;
  for (int m = 0; m < sys.n_spins(); ++m) {
    for (int k = m + 1; k < sys.n_spins(); ++k) {
      flags.push_back(sys.species[m] != sys.species[k]);
    }
  }
  return mixed(sys.n_spins(), std::move(flags));
}

bool CouplingForm::truncated(int m, int n, int n_spins) const {
  switch (kind) {
    case Kind::Full:
      return false;
    case Kind::Heteronuclear:
      return true;
    case Kind::Mixed: {
      if (m > n) std::swap(m, n);
      // Offset of row m in the packed upper triangle.
      const int offset = m * n_spins - m * (m + 1) / 2;
      return truncate_pair.at(offset + (n - m - 1));
    }
  }
  return false;
}

SpinSystem malonic_system() {
  SpinSystem sys;
  sys.labels = {"C1", "C2", "Cm"};
  sys.species = {"13C", "13C", "13C"};
  sys.zeeman_khz = {5.893, 1.057, -3.445};
  sys.dipolar_khz = Eigen::MatrixXd::Zero(3, 3);
  sys.dipolar_khz(0, 1) = sys.dipolar_khz(1, 0) = 0.227;
  sys.dipolar_khz(0, 2) = sys.dipolar_khz(2, 0) = 0.935;
  sys.dipolar_khz(1, 2) = sys.dipolar_khz(2, 1) = 1.070;
  return sys;
}

std::vector<double> malonic_t2star_ms() { return {2.4, 2.0, 1.5}; }

OperatorMatrix zeeman_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const int n = sys.n_spins();
  const Eigen::Index dim = sys.dim();
  OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    double e = 0.0;
    for (int j = 1; j <= n; ++j) {
      const bool down = (b >> (n - j)) & 1;
      e += 0.5 * sys.zeeman_khz[j - 1] * (down ? -1.0 : 1.0);
    }
    h(b, b) = e;
  }
  return h;
}

OperatorMatrix dipolar_hamiltonian(const SpinSystem& sys,
                                   const CouplingForm& form) {
  sys.validate();
  const int n = sys.n_spins();
  const Eigen::Index dim = sys.dim();
  OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
  for (int m = 1; m <= n; ++m) {
    for (int k = m + 1; k <= n; ++k) {
      const double d = sys.dipolar_khz(m - 1, k - 1);
      if (d == 0.0) continue;
      const OperatorMatrix zz = embed_pauli(PauliAxis::Z, m, n) *
                                embed_pauli(PauliAxis::Z, k, n);
      if (form.truncated(m - 1, k - 1, n)) {
        h += (d / 2.0) * zz;
      } else {
        const OperatorMatrix xx = embed_pauli(PauliAxis::X, m, n) *
                                  embed_pauli(PauliAxis::X, k, n);
        const OperatorMatrix yy = embed_pauli(PauliAxis::Y, m, n) *
                                  embed_pauli(PauliAxis::Y, k, n);
        h += (d / 4.0) * (2.0 * zz - yy - xx);
      }
    }
  }
  return h;
}

OperatorMatrix internal_hamiltonian(const SpinSystem& sys,
                                    const CouplingForm& form) {
  return zeeman_hamiltonian(sys) + dipolar_hamiltonian(sys, form);
}

OperatorMatrix exchange_hamiltonian(int n_spins,
                                    const std::vector<ExchangePair>& pairs) {
  if (n_spins < 1 || n_spins > kMaxSpins) {
    throw std::invalid_argument("exchange Hamiltonian needs 1-8 spins");
  }
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
  std::set<std::pair<int, int>> seen;
  for (const auto& p : pairs) {
    if (p.first < 1 || p.first > n_spins || p.second < 1 ||
        p.second > n_spins || p.first == p.second) {
      throw std::invalid_argument("invalid exchange pair (" +
                                  std::to_string(p.first) + ", " +
                                  std::to_string(p.second) + ")");
    }
    const auto key = std::minmax(p.first, p.second);
    if (!seen.insert(key).second) {
      throw std::invalid_argument("duplicate exchange pair (" +
                                  std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + ")");
    }
    OperatorMatrix iso = OperatorMatrix::Zero(dim, dim);
    for (PauliAxis axis : {PauliAxis::Z, PauliAxis::Y, PauliAxis::X}) {
      iso += embed_pauli(axis, p.first, n_spins) *
             embed_pauli(axis, p.second, n_spins);
    }
    h += (p.coupling_khz / 3.0) * iso / 2.0;
  }
  return h;
}

double internal_norm(const SpinSystem& sys) {
  const OperatorMatrix h = internal_hamiltonian(sys, CouplingForm::full());
  const double tr_h2 = frobenius_inner(h, h).real();
  return std::sqrt(tr_h2 / static_cast<double>(sys.dim()));
}

nlohmann::json spin_system_to_json(const SpinSystem& sys) {
  sys.validate();
  nlohmann::json d = nlohmann::json::array();
  for (int m = 0; m < sys.n_spins(); ++m) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < sys.n_spins(); ++k) row.push_back(sys.dipolar_khz(m, k));
    d.push_back(row);
  }
  return {{"labels", sys.labels},
          {"species", sys.species},
          {"nu_khz", sys.zeeman_khz},
          {"d_khz", d}};
}

SpinSystem spin_system_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw std::invalid_argument("spin system document must be an object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "labels" && key != "species" && key != "nu_khz" &&
        key != "d_khz") {
      throw std::invalid_argument("unknown spin system key '" + key + "'");
    }
  }
  SpinSystem sys;
  try {
    sys.labels = doc.at("labels").get<std::vector<std::string>>();
    sys.species = doc.at("species").get<std::vector<std::string>>();
    sys.zeeman_khz = doc.at("nu_khz").get<std::vector<double>>();
    const auto rows = doc.at("d_khz").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(rows.size());
    sys.dipolar_khz = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
      if (static_cast<Eigen::Index>(rows[m].size()) != n) {
        throw std::invalid_argument("d_khz must be square");
      }
      for (Eigen::Index k = 0; k < n; ++k) sys.dipolar_khz(m, k) = rows[m][k];
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spin system document: ") +
                                e.what());
  }
  sys.validate();
  return sys;
}

}  // namespace spinforge
