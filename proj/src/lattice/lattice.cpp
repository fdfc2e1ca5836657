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


#include "spinforge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spinforge {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kHbar = 1.054571817e-34;  // J s
constexpr double kMu0Over4Pi = 1e-7;       // T m / A

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

Eigen::Vector3d read_vec3(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(where + ": expected an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) {
      throw std::invalid_argument(where + ": expected numbers");
    }
    v(k) = j[k].get<double>();
  }
  return v;
}

void reject_unknown(const nlohmann::json& obj,
                    std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) {
    throw std::invalid_argument(where + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

Eigen::Vector3d CrystalStructure::cartesian(const Eigen::Vector3d& frac) const {
  return cell.transpose() * frac;
}

void CrystalStructure::validate() const {
  if (!cell.allFinite() || std::abs(cell.determinant()) < 1e-9) {
    throw std::invalid_argument("cell vectors must be finite and independent");
  }
  if (std::abs(field_direction.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("field direction must be a unit vector");
  }
  if (molecules.empty()) {
    throw std::invalid_argument("structure has no molecules");
  }
  for (const auto& m : molecules) {
    if (m.atoms.empty()) {
      throw std::invalid_argument("molecule '" + m.id + "' has no atoms");
    }
    for (const auto& a : m.atoms) {
      if (!a.frac.allFinite()) {
        throw std::invalid_argument("atom '" + a.label + "' in molecule '" +
                                    m.id + "' has non-finite coordinates");
      }
    }
  }
}

CrystalStructure load_structure(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("structure parse error at line " +
                                std::to_string(line_of_offset(text, e.byte)) +
                                ": " + e.what());
  }
  reject_unknown(doc, {"cell_angstrom", "field_direction", "molecules",
                       "symmetry", "comment"},
                 "structure");
  CrystalStructure s;
  try {
    const auto& cell = doc.at("cell_angstrom");
    if (!cell.is_array() || cell.size() != 3) {
      throw std::invalid_argument("cell_angstrom: expected 3 vectors");
    }
    for (int r = 0; r < 3; ++r) {
      s.cell.row(r) =
          read_vec3(cell[r], "cell_angstrom[" + std::to_string(r) + "]");
    }
    const Eigen::Vector3d field =
        read_vec3(doc.at("field_direction"), "field_direction");
    if (!(field.norm() > 0.0)) {
      throw std::invalid_argument("field_direction: zero vector");
    }
    s.field_direction = field.normalized();
    const std::string sym = doc.value("symmetry", std::string("explicit"));
    if (sym == "P-1") {
      s.symmetry = CrystalStructure::Symmetry::InversionPair;
    } else if (sym == "explicit") {
      s.symmetry = CrystalStructure::Symmetry::Explicit;
    } else {
      throw std::invalid_argument("symmetry: expected \"P-1\" or \"explicit\"");
    }
    const auto& mols = doc.at("molecules");
    if (!mols.is_array()) {
      throw std::invalid_argument("molecules: expected an array");
    }
    for (std::size_t mi = 0; mi < mols.size(); ++mi) {
      const std::string where = "molecules[" + std::to_string(mi) + "]";
      reject_unknown(mols[mi], {"id", "atoms"}, where);
      CrystalMolecule m;
      m.id = mols[mi].value("id", std::to_string(mi));
      for (std::size_t ai = 0; ai < mols[mi].at("atoms").size(); ++ai) {
        const auto& aj = mols[mi]["atoms"][ai];
        const std::string aw = where + ".atoms[" + std::to_string(ai) + "]";
        reject_unknown(aj, {"label", "species", "frac"}, aw);
        CrystalAtom a;
        a.label = aj.at("label").get<std::string>();
        a.species = aj.value("species", std::string("13C"));
        a.frac = read_vec3(aj.at("frac"), aw + ".frac");
        for (int k = 0; k < 3; ++k) {
          if (!(a.frac(k) >= 0.0 && a.frac(k) < 1.0)) {
            std::ostringstream msg;
            msg << aw << ".frac: coordinate " << a.frac(k)
                << " outside [0, 1)";
            throw std::invalid_argument(msg.str());
          }
        }
        m.atoms.push_back(a);
      }
      s.molecules.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("structure: ") + e.what());
  }
  if (s.symmetry == CrystalStructure::Symmetry::InversionPair) {
    if (s.molecules.size() != 1) {
      throw std::invalid_argument(
          "symmetry P-1 expects exactly one listed molecule");
    }
    CrystalMolecule image = s.molecules[0];
    image.id += "'";
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (auto& a : image.atoms) {
      a.frac = -a.frac;
      centroid += a.frac;
    }
    centroid /= static_cast<double>(image.atoms.size());
    const Eigen::Vector3d shift = -centroid.array().floor().matrix();
    for (auto& a : image.atoms) a.frac += shift;
    s.molecules.push_back(image);
  }
  s.validate();
  return s;
}

CrystalStructure load_structure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open structure file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return load_structure(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

nlohmann::json structure_to_json(const CrystalStructure& s) {
  nlohmann::json doc;
  for (int r = 0; r < 3; ++r) {
    doc["cell_angstrom"].push_back({s.cell(r, 0), s.cell(r, 1), s.cell(r, 2)});
  }
  doc["field_direction"] = {s.field_direction(0), s.field_direction(1),
                            s.field_direction(2)};
  doc["symmetry"] = "explicit";
  doc["molecules"] = nlohmann::json::array();
  for (const auto& m : s.molecules) {
    nlohmann::json mj = {{"id", m.id}, {"atoms", nlohmann::json::array()}};
    for (const auto& a : m.atoms) {
      mj["atoms"].push_back({{"label", a.label},
                             {"species", a.species},
                             {"frac", {a.frac(0), a.frac(1), a.frac(2)}}});
    }
    doc["molecules"].push_back(mj);
  }
  return doc;
}

CrystalStructure scaled_structure(const CrystalStructure& s, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  CrystalStructure out = s;
  out.cell *= factor;
  return out;
}

double dipolar_coupling(double r_angstrom, double theta_rad) {
  if (!(r_angstrom > 0.0)) {
    throw std::invalid_argument("dipolar_coupling: r must be > 0");
  }
  const double r = r_angstrom * 1e-10;
  const double c = std::cos(theta_rad);
  const double angular = kMu0Over4Pi * kGamma13C * kGamma13C * kHbar *
                         (1.0 - 3.0 * c * c) / (2.0 * r * r * r);
  return angular / (2.0 * kPi);
}

SiteEnumeration enumerate_sites(const CrystalStructure& s, int ref_molecule,
                                const std::string& ref_label, int shells) {
  s.validate();
  if (shells < 1) throw std::invalid_argument("shells must be >= 1");
  if (ref_molecule < 0 || ref_molecule >= static_cast<int>(s.molecules.size())) {
    throw std::invalid_argument("reference molecule index out of range");
  }
  const CrystalMolecule& home = s.molecules[ref_molecule];
  const auto ref_it =
      std::find_if(home.atoms.begin(), home.atoms.end(),
                   [&](const CrystalAtom& a) { return a.label == ref_label; });
  if (ref_it == home.atoms.end()) {
    throw std::invalid_argument("reference label '" + ref_label +
                                "' not found in molecule '" + home.id + "'");
  }
  const Eigen::Vector3d origin = s.cartesian(ref_it->frac);
  const std::string& species = ref_it->species;

  SiteEnumeration out;
  for (int i = -shells; i <= shells; ++i) {
    for (int j = -shells; j <= shells; ++j) {
      for (int k = -shells; k <= shells; ++k) {
        const Eigen::Vector3d shift(i, j, k);
        for (int mi = 0; mi < static_cast<int>(s.molecules.size()); ++mi) {
          if (i == 0 && j == 0 && k == 0 && mi == ref_molecule) continue;
          bool any = false;
          for (const auto& a : s.molecules[mi].atoms) {
            if (a.species != species) continue;
            LatticeSite site;
            site.position = s.cartesian(a.frac + shift);
            site.label = a.label;
            site.species = a.species;
            site.molecule = out.n_molecules;
            const Eigen::Vector3d v = site.position - origin;
            site.r_angstrom = v.norm();
            if (!(site.r_angstrom > 1e-9)) {
              throw std::invalid_argument(
                  "two sites coincide with the reference spin");
            }
            site.theta_rad = std::acos(
                std::clamp(v.dot(s.field_direction) / site.r_angstrom, -1.0, 1.0));
            site.d_hz = dipolar_coupling(site.r_angstrom, site.theta_rad);
            out.sites.push_back(site);
            any = true;
          }
          if (any) ++out.n_molecules;
        }
      }
    }
  }
  return out;
}

std::map<std::string, SpinRole> reference_assignment(
    const CrystalStructure& s, const std::string& ref_label) {
  std::map<std::string, SpinRole> out;
  int other = 0;
  for (const auto& a : s.molecules.at(0).atoms) {
    if (out.count(a.label)) continue;
    if (a.label == ref_label) {
      out[a.label] = SpinRole::Gamma;
    } else {
      out[a.label] = other++ == 0 ? SpinRole::Alpha : SpinRole::Beta;
    }
  }
  if (!out.count(ref_label) || other > 2) {
    throw std::invalid_argument(
        "reference assignment needs the reference label plus at most two "
        "other labels");
  }
  return out;
}

std::vector<DipolarEnvironment> molecule_environments(
    const SiteEnumeration& sites,
    const std::map<std::string, SpinRole>& assignment,
    bool exclude_like_spins) {
  std::vector<DipolarEnvironment> envs(sites.n_molecules);
  for (const auto& site : sites.sites) {
    const auto it = assignment.find(site.label);
    if (it == assignment.end()) {
      throw std::invalid_argument("site label '" + site.label +
                                  "' has no alpha/beta/gamma assignment");
    }
    const double d_khz = site.d_hz * 1e-3;
    auto& env = envs.at(site.molecule);
    switch (it->second) {
      case SpinRole::Alpha:
        env.d_alpha_khz = d_khz;
        break;
      case SpinRole::Beta:
        env.d_beta_khz = d_khz;
        break;
      case SpinRole::Gamma:
        env.d_gamma_khz = exclude_like_spins ? 0.0 : d_khz;
        break;
    }
  }
  return envs;
}

double CouplingHistogram::total_weight() const {
  double t = outside_weight;
  for (double w : weights) t += w;
  return t;
}

std::vector<double> CouplingHistogram::centers_hz() const {
  std::vector<double> c(weights.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = 0.5 * (edges_hz[k] + edges_hz[k + 1]);
  }
  return c;
}

namespace {

std::vector<double> combination_frequencies_hz(const DipolarEnvironment& e,
                                               FrequencyFamilies mode) {
  std::vector<double> out;
  std::vector<double> factors = {1.5};
  if (mode == FrequencyFamilies::Both) factors.push_back(0.5);
  for (double g : factors) {
    for (int sa : {1, -1}) {
      for (int sb : {1, -1}) {
        for (int sg : {1, -1}) {
          out.push_back(1e3 * (sa * e.d_alpha_khz + sb * e.d_beta_khz +
                               sg * g * e.d_gamma_khz));
        }
      }
    }
  }
  return out;
}

}  // namespace

CouplingHistogram frequency_histogram(
    const std::vector<DipolarEnvironment>& envs, FrequencyFamilies mode,
    const HistogramBins& bins) {
  if (envs.empty()) throw std::invalid_argument("histogram needs molecules");
  if (bins.n_bins < 2 || !(bins.half_width_hz >= 0.0)) {
    throw std::invalid_argument("histogram needs >= 2 bins, half-width >= 0");
  }
  std::vector<double> freqs;
  for (const auto& e : envs) {
    const auto f = combination_frequencies_hz(e, mode);
    freqs.insert(freqs.end(), f.begin(), f.end());
  }
  double half = bins.half_width_hz;
  if (half == 0.0) {
    double ss = 0.0;
    for (double f : freqs) ss += f * f;
    half = 5.0 * std::sqrt(ss / static_cast<double>(freqs.size()));
    if (!(half > 0.0)) half = 1.0;
  }
  CouplingHistogram h;
  h.mode = mode;
  h.weights.assign(bins.n_bins, 0.0);
  for (int k = 0; k <= bins.n_bins; ++k) {
    h.edges_hz.push_back(-half + 2.0 * half * k / bins.n_bins);
  }
  const double width = 2.0 * half / bins.n_bins;
  for (double f : freqs) {
    // Frequencies come in ± pairs; binning by the magnitude keeps the
    // histogram mirror-symmetric to the last bit.
    const double pos = std::abs(f) / width;
    const int half_bins = bins.n_bins / 2;
    if (bins.n_bins % 2 == 0) {
      const int idx = static_cast<int>(std::floor(pos));
      if (idx >= half_bins) {
        h.outside_weight += 1.0;
        continue;
      }
      h.weights[f >= 0.0 ? half_bins + idx : half_bins - 1 - idx] += 1.0;
    } else {
      const int idx = static_cast<int>(std::floor(pos + 0.5));
      if (idx > half_bins) {
        h.outside_weight += 1.0;
        continue;
      }
      h.weights[f >= 0.0 ? half_bins + idx : half_bins - idx] += 1.0;
    }
  }
  return h;
}

LorentzianFit histogram_fwhm(const CouplingHistogram& hist, double threshold) {
  const std::size_t n = hist.weights.size();
  if (n < 4) throw std::invalid_argument("histogram_fwhm needs >= 4 bins");
  double total = 0.0;
  for (double w : hist.weights) total += w;
  if (!(total > 0.0)) {
    throw std::invalid_argument("histogram_fwhm: histogram is empty");
  }
  std::vector<double> x(n), y(n);
  const double mid = 0.5 * static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = static_cast<double>(k) + 0.5 - mid;
    y[k] = hist.weights[k];
  }
  LorentzianFit fit = fit_lorentzian(x, y, threshold);
  const double w = hist.bin_width_hz();
  fit.center *= w;
  fit.fwhm *= w;
  return fit;
}

CouplingHistogram simulation_one_mode(
    const SiteEnumeration& sites,
    const std::map<std::string, SpinRole>& assignment,
    const HistogramBins& bins) {
  return frequency_histogram(molecule_environments(sites, assignment, true),
                             FrequencyFamilies::ThreeHalvesOnly, bins);
}

double concentration_factor(double eta, double sim_concentration) {
  if (!(eta > 0.0 && eta < 0.10)) {
    throw std::invalid_argument(
        "concentration_factor: eta must lie in (0, 0.1); the correction "
        "assumes linewidth is linear in spin concentration, which only holds "
        "in the dilute regime");
  }
  if (!(sim_concentration > 0.0)) {
    throw std::invalid_argument("simulated concentration must be > 0");
  }
  return (eta + 0.011) / sim_concentration;
}

double shell_factor() { return kPi * kPi / 6.0; }

LinewidthReport linewidth_report(const CrystalStructure& s, int shells,
                                 double eta, FrequencyFamilies mode,
                                 const HistogramBins& bins) {
  LinewidthReport report;
  report.eta = eta;
  report.shell = shell_factor();
  report.concentration = concentration_factor(eta);
  const double scale = report.shell * report.concentration;
  for (const auto& atom : s.molecules.at(0).atoms) {
    const SiteEnumeration sites = enumerate_sites(s, 0, atom.label, shells);
    const auto assignment = reference_assignment(s, atom.label);
    LinewidthRow row;
    row.reference = atom.label;
    row.n_sites = static_cast<int>(sites.sites.size());
    row.n_molecules = sites.n_molecules;
    row.without_like_spins =
        histogram_fwhm(simulation_one_mode(sites, assignment, bins));
    row.with_like_spins = histogram_fwhm(frequency_histogram(
        molecule_environments(sites, assignment), mode, bins));
    row.adjusted_without_hz = row.without_like_spins.fwhm * scale;
    row.adjusted_with_hz = row.with_like_spins.fwhm * scale;
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json linewidth_report_json(const LinewidthReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    const auto fit_json = [](const LorentzianFit& f, double adjusted) {
      return nlohmann::json{{"fwhm_hz", f.fwhm},
                            {"residual", f.residual},
                            {"fit_ok", f.ok},
                            {"adjusted_fwhm_hz", adjusted}};
    };
    rows.push_back(
        {{"reference", r.reference},
         {"n_sites", r.n_sites},
         {"n_molecules", r.n_molecules},
         {"simulation_I", fit_json(r.without_like_spins, r.adjusted_without_hz)},
         {"simulation_II", fit_json(r.with_like_spins, r.adjusted_with_hz)}});
  }
  return {{"eta", report.eta},
          {"corrections",
           {{"shell", report.shell}, {"concentration", report.concentration}}},
          {"references", rows}};
}

void write_histogram_csv(std::ostream& out, const CouplingHistogram& hist) {
  out << "freq_hz,weight\n" << std::setprecision(12);
  const auto centers = hist.centers_hz();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    out << centers[k] << ',' << hist.weights[k] << '\n';
  }
}

}  // namespace spinforge
