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


#ifndef SPINFORGE_LATTICE_HPP_
#define SPINFORGE_LATTICE_HPP_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spinforge/dephasing.hpp"
#include "spinforge/fitting.hpp"

namespace spinforge {

struct CrystalAtom {
  std::string label;
  std::string species;
  Eigen::Vector3d frac;
};

struct CrystalMolecule {
  std::string id;
  std::vector<CrystalAtom> atoms;
};

// Unit cell, molecules in fractional coordinates, and the field direction.
//
// With InversionPair symmetry the file lists one molecule and the loader
// adds its image under inversion through the cell origin, shifted by a
// lattice vector so the image centroid lies inside the cell.
struct CrystalStructure {
  enum class Symmetry { InversionPair, Explicit };

  Eigen::Matrix3d cell;  // rows are the A, B, C vectors in Angstrom
  std::vector<CrystalMolecule> molecules;
  Eigen::Vector3d field_direction = Eigen::Vector3d::UnitZ();
  Symmetry symmetry = Symmetry::Explicit;

  Eigen::Vector3d cartesian(const Eigen::Vector3d& frac) const;
  void validate() const;
};

// Parses the JSON structure format. Errors carry the line number for syntax
// problems and the offending field otherwise.
CrystalStructure load_structure(const std::string& text);
CrystalStructure load_structure_file(const std::string& path);
nlohmann::json structure_to_json(const CrystalStructure& s);

// Every cell vector multiplied by `factor`.
CrystalStructure scaled_structure(const CrystalStructure& s, double factor);

// Gyromagnetic ratio of 13C in rad s^-1 T^-1.
inline constexpr double kGamma13C = 6.728284e7;

// Secular dipolar coupling in Hz between two 13C nuclei r Angstrom apart at
// angle theta to the field, with the SI mu0/4π factor.
double dipolar_coupling(double r_angstrom, double theta_rad);

struct LatticeSite {
  Eigen::Vector3d position;  // Angstrom
  std::string label;
  std::string species;
  int molecule = 0;  // index into the enumerated molecule list
  double r_angstrom = 0.0;
  double theta_rad = 0.0;
  double d_hz = 0.0;
};

struct SiteEnumeration {
  std::vector<LatticeSite> sites;
  int n_molecules = 0;
};

// Sites of the reference species on every molecule in the (2 shells + 1)^3
// block of cells around the home cell, except the reference molecule itself.
SiteEnumeration enumerate_sites(const CrystalStructure& s, int ref_molecule,
                                const std::string& ref_label, int shells);

enum class SpinRole { Alpha, Beta, Gamma };

// Gamma for atoms sharing the reference label, then Alpha and Beta for the
// two other labels in file order.
std::map<std::string, SpinRole> reference_assignment(
    const CrystalStructure& s, const std::string& ref_label);

// One (d_alpha, d_beta, d_gamma) triple per enumerated molecule, in kHz.
// `exclude_like_spins` forces d_gamma to zero.
std::vector<DipolarEnvironment> molecule_environments(
    const SiteEnumeration& sites,
    const std::map<std::string, SpinRole>& assignment,
    bool exclude_like_spins = false);

struct HistogramBins {
  int n_bins = 256;
  // Half-width of the binned range in Hz; 0 picks 5 x the RMS frequency.
  double half_width_hz = 0.0;
};

struct CouplingHistogram {
  std::vector<double> edges_hz;  // n_bins + 1, uniform
  std::vector<double> weights;
  double outside_weight = 0.0;
  FrequencyFamilies mode = FrequencyFamilies::ThreeHalvesOnly;

  double bin_width_hz() const { return edges_hz[1] - edges_hz[0]; }
  double total_weight() const;
  std::vector<double> centers_hz() const;
};

// Unit weight for every sign combination of every molecule.
CouplingHistogram frequency_histogram(
    const std::vector<DipolarEnvironment>& envs, FrequencyFamilies mode,
    const HistogramBins& bins = {});

// Lorentzian fit in bin-index units, converted back to Hz, so the width
// follows any uniform rescaling of the couplings exactly.
LorentzianFit histogram_fwhm(const CouplingHistogram& hist,
                             double threshold = 0.5);

// frequency_histogram with like-spin couplings removed.
CouplingHistogram simulation_one_mode(
    const SiteEnumeration& sites,
    const std::map<std::string, SpinRole>& assignment,
    const HistogramBins& bins = {});

// Linear rescaling from the simulated labelled fraction to eta plus natural
// abundance: (eta + 0.011) / sim_concentration. Valid for 0 < eta < 0.1.
double concentration_factor(double eta, double sim_concentration = 0.019);

// Sum over shells k of k^-2.
double shell_factor();

struct LinewidthRow {
  std::string reference;
  int n_sites = 0;
  int n_molecules = 0;
  LorentzianFit without_like_spins;  // like-spin couplings excluded
  LorentzianFit with_like_spins;
  double adjusted_without_hz = 0.0;
  double adjusted_with_hz = 0.0;
};

struct LinewidthReport {
  std::vector<LinewidthRow> rows;
  double shell = 0.0;
  double concentration = 0.0;
  double eta = 0.0;
};

// One row per atom label of the first molecule, each used as the reference.
LinewidthReport linewidth_report(const CrystalStructure& s, int shells,
                                 double eta, FrequencyFamilies mode,
                                 const HistogramBins& bins = {});

nlohmann::json linewidth_report_json(const LinewidthReport& report);
void write_histogram_csv(std::ostream& out, const CouplingHistogram& hist);

}  // namespace spinforge

#endif  // SPINFORGE_LATTICE_HPP_
