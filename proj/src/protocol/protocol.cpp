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
#include <stdexcept>

#include "spinforge/parallel.hpp"

namespace spinforge {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

UnitaryMatrix ideal_pulse_unitary(const IdealPulse& p, int n_spins) {
  OperatorMatrix sum;
  if (p.spins.empty()) {
    sum = collective_pauli(p.axis, n_spins);
  } else {
    sum = collective_pauli(p.axis, n_spins, p.spins);
  }
  // exp(-i (angle/2) S) = exp(-i 2π S t) with t = angle / (4π).
  return expm_hermitian_signed(sum, p.angle_rad / (2.0 * kTwoPi));
}

ShapedPulse phase_shifted_pulse(const ShapedPulse& pulse, double phi) {
  ShapedPulse out = pulse;
  for (auto& s : out.segments) s.phase_rad += phi;
  return out;
}

std::string axis_name(PauliAxis axis) {
  switch (axis) {
    case PauliAxis::X:
      return "x";
    case PauliAxis::Y:
      return "y";
    case PauliAxis::Z:
      return "z";
  }
  return "?";
}

PauliAxis axis_from_name(const std::string& name) {
  if (name == "x" || name == "X") return PauliAxis::X;
  if (name == "y" || name == "Y") return PauliAxis::Y;
  if (name == "z" || name == "Z") return PauliAxis::Z;
  throw std::invalid_argument("unknown pulse axis '" + name + "'");
}

void reject_unknown(const nlohmann::json& obj,
                    std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

DensityState conjugate(const UnitaryMatrix& u, const DensityState& rho) {
  return u * rho * u.adjoint();
}

UnitaryMatrix collective_rz(int n_spins, double phi) {
  const Eigen::VectorXd z = total_z_diagonal(n_spins);
  CVector d(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    d(k) = std::polar(1.0, -0.5 * phi * z(k));
  }
  return d.asDiagonal();
}

std::map<int, DensityState> coherence_decompose(const DensityState& rho) {
  if (rho.rows() != rho.cols() || !is_power_of_two_dim(rho.rows())) {
    throw std::invalid_argument("coherence_decompose: bad state dimension");
  }
  const int n = spin_count_for_dim(rho.rows());
  const Eigen::VectorXd z = total_z_diagonal(n);
  std::map<int, DensityState> parts;
  for (int order = -n; order <= n; ++order) {
    parts[order] = DensityState::Zero(rho.rows(), rho.cols());
  }
  for (Eigen::Index a = 0; a < rho.rows(); ++a) {
    for (Eigen::Index b = 0; b < rho.cols(); ++b) {
      const int order = static_cast<int>(std::lround(0.5 * (z(a) - z(b))));
      parts[order](a, b) = rho(a, b);
    }
  }
  return parts;
}

UnitaryMatrix phase_shifted_unitary(const UnitaryMatrix& u, double phi) {
  const int n = spin_count_for_dim(u.rows());
  return collective_rz(n, phi) * u * collective_rz(n, -phi);
}

void PhaseCycle::validate() const {
  if (n_steps < 1) throw std::invalid_argument("phase cycle needs >= 1 step");
  if (static_cast<int>(signs.size()) != n_steps ||
      static_cast<int>(receiver_phases.size()) != n_steps) {
    throw std::invalid_argument(
        "phase cycle needs one sign and one receiver phase per step");
  }
  for (int s : signs) {
    if (s != 1 && s != -1) {
      throw std::invalid_argument("phase cycle signs must be +1 or -1");
    }
  }
  if (!std::isfinite(phase_increment)) {
    throw std::invalid_argument("phase increment must be finite");
  }
}

PhaseCycle PhaseCycle::none() { return {1, 0.0, {1}, {0.0}}; }

PhaseCycle PhaseCycle::three_quantum() {
  PhaseCycle c;
  c.n_steps = 6;
  c.phase_increment = kPi / 3.0;
  for (int k = 1; k <= 6; ++k) {
    c.signs.push_back(k % 2 == 1 ? 1 : -1);
    c.receiver_phases.push_back(k * c.phase_increment + kPi);
  }
  return c;
}

Complex phase_cycle_sum(const PhaseCycle& cycle, int order) {
  cycle.validate();
  Complex s = 0.0;
  for (int k = 1; k <= cycle.n_steps; ++k) {
    s += static_cast<double>(cycle.signs[k - 1]) *
         std::polar(1.0, order * k * cycle.phase_increment);
  }
  return s;
}

namespace {

template <typename GateAt>
DensityState filter_with(const GateAt& gate_at, const DensityState& rho,
                         const PhaseCycle& cycle) {
  cycle.validate();
  const int n = spin_count_for_dim(rho.rows());
  DensityState acc = DensityState::Zero(rho.rows(), rho.cols());
  for (int k = 1; k <= cycle.n_steps; ++k) {
    const UnitaryMatrix u = gate_at(k * cycle.phase_increment);
    const double psi = cycle.receiver_phases[k - 1];
    const DensityState out =
        conjugate(collective_rz(n, -psi), conjugate(u, rho));
    acc += static_cast<double>(cycle.signs[k - 1]) * out;
  }
  return acc / static_cast<double>(cycle.n_steps);
}

}  // namespace

DensityState phase_cycle_filter(const UnitaryMatrix& gate,
                                const DensityState& rho,
                                const PhaseCycle& cycle) {
  if (gate.rows() != rho.rows()) {
    throw std::invalid_argument("phase_cycle_filter: dimension mismatch");
  }
  return filter_with(
      [&](double phi) { return phase_shifted_unitary(gate, phi); }, rho,
      cycle);
}

double state_correlation(const DensityState& rho, const DensityState& ideal) {
  if (rho.rows() != ideal.rows() || rho.cols() != ideal.cols()) {
    throw std::invalid_argument("state_correlation: dimension mismatch");
  }
  const double ii = frobenius_inner(ideal, ideal).real();
  if (!(ii > 0.0)) {
    throw std::invalid_argument("state_correlation: ideal state is zero");
  }
  const double rr = frobenius_inner(rho, rho).real();
  if (!(rr > 0.0)) return 0.0;
  // Tr(rho ideal) = <rho^dagger, ideal> and rho is Hermitian.
  return frobenius_inner(rho, ideal).real() / std::sqrt(rr * ii);
}

double transfer_time(double d_ch_khz) {
  if (d_ch_khz == 0.0 || !std::isfinite(d_ch_khz)) {
    throw std::invalid_argument("transfer_time: coupling must be nonzero");
  }
  return 3.0 / (4.0 * std::abs(d_ch_khz));
}

GateTarget iiz_to_zzz_target() {
  const UnitaryMatrix u = controlled_not_target(3, 2, {3}).unitary *
                          controlled_not_target(3, 1, {3}).unitary;
  return {u, "IIZ_to_ZZZ"};
}

GateTarget tqpp_target() {
  // Columns fixed by the 3Q map, then the standard basis in order, with
  // Gram-Schmidt against everything already placed.
  const Eigen::Index dim = 8;
  UnitaryMatrix u = UnitaryMatrix::Zero(dim, dim);
  std::vector<bool> filled(dim, false);
  u(0, 0) = 1.0;
  u(4, 7) = 1.0;
  filled[0] = filled[7] = true;
  std::vector<CVector> placed = {u.col(0), u.col(7)};
  Eigen::Index candidate = 0;
  for (Eigen::Index col = 0; col < dim; ++col) {
    if (filled[col]) continue;
    while (true) {
      CVector v = CVector::Unit(dim, candidate++);
      for (const auto& p : placed) v -= p.dot(v) * p;
      if (v.norm() > 1e-8) {
        v.normalize();
        u.col(col) = v;
        placed.push_back(v);
        break;
      }
    }
  }
  return {u, "TQPP_completion"};
}

UnitaryMatrix collective_y90(int n_spins) {
  return ideal_pulse_unitary({PauliAxis::Y, kPi / 2.0, {}}, n_spins);
}

DensityState pseudopure_ideal_state() {
  return product_operator(std::vector<std::string>{"X", "I", "I"}) *
         (product_operator(std::vector<std::string>{"I", "I", "I"}) +
          product_operator(std::vector<std::string>{"I", "Z", "I"})) *
         (product_operator(std::vector<std::string>{"I", "I", "I"}) +
          product_operator(std::vector<std::string>{"I", "I", "Z"})) /
         4.0;
}

PseudopureResult pseudopure_protocol(const SpinSystem& sys,
                                     const PseudopureInputs& inputs,
                                     double rf_scale,
                                     double zeeman_offset_khz) {
  if (sys.n_spins() != 3) {
    throw std::invalid_argument("pseudopure protocol needs a 3-spin system");
  }
  if (!inputs.iiz_to_zzz || !inputs.tqpp) {
    throw std::invalid_argument(
        "pseudopure protocol needs both the IIZ->ZZZ and TQPP stages");
  }
  std::optional<PropagationContext> ctx;
  auto stage_unitary = [&](const ProtocolStage& stage, double phi) {
    if (const auto* u = std::get_if<UnitaryMatrix>(&stage)) {
      if (u->rows() != sys.dim() || !is_unitary(*u)) {
        throw std::invalid_argument("protocol stage is not a 3-spin unitary");
      }
      return phase_shifted_unitary(*u, phi);
    }
    const auto& pulse = std::get<ShapedPulse>(stage);
    if (!ctx) ctx.emplace(sys, pulse.target_species);
    return pulse_propagator(*ctx, phase_shifted_pulse(pulse, phi), rf_scale,
                            zeeman_offset_khz);
  };

  DensityState rho = product_operator(std::vector<std::string>{"I", "I", "Z"});
  rho = conjugate(stage_unitary(*inputs.iiz_to_zzz, 0.0), rho);
  rho = conjugate(collective_y90(3), rho);
  PseudopureResult result;
  result.state = filter_with(
      [&](double phi) { return stage_unitary(*inputs.tqpp, phi); }, rho,
      inputs.cycle);
  result.correlation =
      state_correlation(result.state, pseudopure_ideal_state());
  return result;
}

void validate_element(const SequenceElement& element, int n_spins) {
  if (const auto* p = std::get_if<IdealPulse>(&element)) {
    if (!std::isfinite(p->angle_rad)) {
      throw std::invalid_argument("ideal pulse angle must be finite");
    }
    for (int s : p->spins) {
      if (s < 1 || s > n_spins) {
        throw std::invalid_argument("ideal pulse spin " + std::to_string(s) +
                                    " outside 1.." + std::to_string(n_spins));
      }
    }
  } else if (const auto* d = std::get_if<Delay>(&element)) {
    if (!(d->duration_ms >= 0.0) || !std::isfinite(d->duration_ms)) {
      throw std::invalid_argument("delay must be finite and >= 0");
    }
  } else {
    std::get<ShapedPulseRef>(element).pulse.validate();
  }
}

UnitaryMatrix sequence_propagator(const SpinSystem& sys,
                                  const std::vector<SequenceElement>& elements,
                                  const CouplingForm& form) {
  sys.validate();
  const int n = sys.n_spins();
  const OperatorMatrix h = internal_hamiltonian(sys, form);
  UnitaryMatrix u = UnitaryMatrix::Identity(sys.dim(), sys.dim());
  for (const auto& e : elements) {
    validate_element(e, n);
    if (const auto* p = std::get_if<IdealPulse>(&e)) {
      u = ideal_pulse_unitary(*p, n) * u;
    } else if (const auto* d = std::get_if<Delay>(&e)) {
      u = expm_hermitian(h, d->duration_ms) * u;
    } else {
      const auto& ref = std::get<ShapedPulseRef>(e);
      const PropagationContext ctx(sys, ref.pulse.target_species, form);
      u = pulse_propagator(ctx, ref.pulse, ref.rf_scale,
                           ref.zeeman_offset_khz) *
          u;
    }
  }
  return u;
}

DensityState run_sequence(const SpinSystem& sys,
                          const std::vector<SequenceElement>& elements,
                          const DensityState& rho, const CouplingForm& form) {
  if (rho.rows() != sys.dim() || rho.cols() != sys.dim()) {
    throw std::invalid_argument("run_sequence: state dimension mismatch");
  }
  if (elements.empty()) return rho;
  return conjugate(sequence_propagator(sys, elements, form), rho);
}

double sequence_duration_ms(const std::vector<SequenceElement>& elements) {
  double total = 0.0;
  for (const auto& e : elements) {
    if (const auto* d = std::get_if<Delay>(&e)) {
      total += d->duration_ms;
    } else if (const auto* s = std::get_if<ShapedPulseRef>(&e)) {
      total += s->pulse.total_duration_ms();
    }
  }
  return total;
}

std::vector<SequenceElement> mrev8_cycle_elements(double tau_ms) {
  if (!(tau_ms > 0.0)) {
    throw std::invalid_argument("MREV-8 spacing must be > 0");
  }
  const double q = kPi / 2.0;
  const auto pulse = [](PauliAxis axis, double angle) -> SequenceElement {
    return IdealPulse{axis, angle, {}};
  };
  const auto wait = [](double t) -> SequenceElement { return Delay{t}; };
  const double t = tau_ms;
  return {wait(t),     pulse(PauliAxis::X, -q), wait(t),
          pulse(PauliAxis::Y, q), wait(2 * t), pulse(PauliAxis::Y, -q),
          wait(t),     pulse(PauliAxis::X, q),  wait(2 * t),
          pulse(PauliAxis::X, q), wait(t),     pulse(PauliAxis::Y, q),
          wait(2 * t), pulse(PauliAxis::Y, -q), wait(t),
          pulse(PauliAxis::X, -q), wait(t)};
}

std::vector<SequenceElement> hahn_echo_elements(double total_ms) {
  if (!(total_ms >= 0.0)) {
    throw std::invalid_argument("Hahn echo duration must be >= 0");
  }
  return {Delay{0.5 * total_ms}, IdealPulse{PauliAxis::Y, kPi, {}},
          Delay{0.5 * total_ms}};
}

double mrev8_zeeman_scaling(double tau_ms, double nu_khz) {
  if (nu_khz == 0.0) {
    throw std::invalid_argument("mrev8_zeeman_scaling needs nu != 0");
  }
  SpinSystem single;
  single.labels = {"S"};
  single.species = {"13C"};
  single.zeeman_khz = {nu_khz};
  single.dipolar_khz = Eigen::MatrixXd::Zero(1, 1);
  const UnitaryMatrix u =
      sequence_propagator(single, mrev8_cycle_elements(tau_ms));
  // A 2x2 unitary e^{i chi} exp(-i theta n.sigma / 2) has
  // |tr U| = 2 |cos(theta / 2)|.
  const double c = std::min(1.0, 0.5 * std::abs(u.trace()));
  const double theta = 2.0 * std::acos(c);
  return theta / (kTwoPi * std::abs(nu_khz) * 12.0 * tau_ms);
}

DecayCurve repeated_block_decay(const std::vector<SpinSystem>& ensemble,
                                const std::vector<SequenceElement>& block,
                                int n_blocks, const DensityState& rho0,
                                const OperatorMatrix& observable,
                                const CouplingForm& form) {
  if (ensemble.empty()) {
    throw std::invalid_argument("repeated_block_decay: empty ensemble");
  }
  if (n_blocks < 0) {
    throw std::invalid_argument("repeated_block_decay: n_blocks < 0");
  }
  const Complex norm = frobenius_inner(observable, rho0);
  if (std::abs(norm) < 1e-300) {
    throw std::invalid_argument(
        "repeated_block_decay: observable has no overlap with rho0");
  }
  const double period = sequence_duration_ms(block);
  std::vector<std::vector<double>> per_member(ensemble.size());
  parallel_for(ensemble.size(), [&](std::size_t m) {
    const UnitaryMatrix u = sequence_propagator(ensemble[m], block, form);
    std::vector<double>& out = per_member[m];
    out.reserve(n_blocks + 1);
    DensityState rho = rho0;
    out.push_back(1.0);
    for (int k = 1; k <= n_blocks; ++k) {
      rho = conjugate(u, rho);
      out.push_back((frobenius_inner(observable, rho) / norm).real());
    }
  });
  DecayCurve curve;
  for (int k = 0; k <= n_blocks; ++k) {
    curve.times_ms.push_back(k * period);
    double s = 0.0;
    for (const auto& m : per_member) s += m[k];
    curve.signal.push_back(s / static_cast<double>(ensemble.size()));
  }
  return curve;
}

std::vector<SpinSystem> random_like_spin_clusters(int n_spins, int n_members,
                                                  double rms_coupling_khz,
                                                  std::uint64_t seed) {
  if (n_spins < 2 || n_spins > kMaxSpins || n_members < 1) {
    throw std::invalid_argument("random clusters need 2..8 spins, >= 1 member");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, rms_coupling_khz);
  std::vector<SpinSystem> out;
  out.reserve(n_members);
  for (int m = 0; m < n_members; ++m) {
    SpinSystem s;
    for (int j = 1; j <= n_spins; ++j) {
      s.labels.push_back("S" + std::to_string(j));
      s.species.push_back("13C");
      s.zeeman_khz.push_back(0.0);
    }
    s.dipolar_khz = Eigen::MatrixXd::Zero(n_spins, n_spins);
    for (int a = 0; a < n_spins; ++a) {
      for (int b = a + 1; b < n_spins; ++b) {
        s.dipolar_khz(a, b) = s.dipolar_khz(b, a) = gauss(rng);
      }
    }
    out.push_back(std::move(s));
  }
  // Rescale the draws so the ensemble RMS is exactly the requested value.
  double ss = 0.0;
  for (const auto& s : out) ss += s.dipolar_khz.squaredNorm() / 2.0;
  const double pairs = n_members * n_spins * (n_spins - 1) / 2.0;
  const double rms = std::sqrt(ss / pairs);
  if (rms > 0.0) {
    for (auto& s : out) s.dipolar_khz *= rms_coupling_khz / rms;
  }
  return out;
}

nlohmann::json sequence_to_json(const std::vector<SequenceElement>& elements) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : elements) {
    if (const auto* p = std::get_if<IdealPulse>(&e)) {
      nlohmann::json j = {{"type", "pulse"},
                          {"axis", axis_name(p->axis)},
                          {"angle_rad", p->angle_rad}};
      if (!p->spins.empty()) j["spins"] = p->spins;
      out.push_back(j);
    } else if (const auto* d = std::get_if<Delay>(&e)) {
      out.push_back({{"type", "delay"}, {"duration_ms", d->duration_ms}});
    } else {
      const auto& s = std::get<ShapedPulseRef>(e);
      out.push_back({{"type", "shaped"},
                     {"pulse", pulse_to_json(s.pulse)},
                     {"rf_scale", s.rf_scale},
                     {"offset_khz", s.zeeman_offset_khz}});
    }
  }
  return out;
}

std::vector<SequenceElement> sequence_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) {
    throw std::invalid_argument("sequence must be a JSON array");
  }
  std::vector<SequenceElement> out;
  try {
    for (std::size_t k = 0; k < doc.size(); ++k) {
      const auto& j = doc[k];
      const std::string where = "sequence element " + std::to_string(k);
      const std::string type = j.at("type").get<std::string>();
      if (type == "pulse") {
        reject_unknown(j, {"type", "axis", "angle_rad", "spins"}, where);
        IdealPulse p;
        p.axis = axis_from_name(j.at("axis").get<std::string>());
        p.angle_rad = j.at("angle_rad").get<double>();
        if (j.contains("spins")) p.spins = j["spins"].get<std::vector<int>>();
        out.emplace_back(p);
      } else if (type == "delay") {
        reject_unknown(j, {"type", "duration_ms"}, where);
        out.emplace_back(Delay{j.at("duration_ms").get<double>()});
      } else if (type == "shaped") {
        reject_unknown(j, {"type", "pulse", "rf_scale", "offset_khz"}, where);
        out.emplace_back(ShapedPulseRef{pulse_from_json(j.at("pulse")),
                                        j.value("rf_scale", 1.0),
                                        j.value("offset_khz", 0.0)});
      } else {
        throw std::invalid_argument(where + ": unknown type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("sequence document: ") + e.what());
  }
  return out;
}

}  // namespace spinforge
