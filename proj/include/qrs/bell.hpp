// Copyright 2026 The qrs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Two spin-1/2 particles, one measuring device on each, and optionally a third
// device recording the first particle's initial internal state. Every table is
// computed twice: through the generic state pipeline and from closed-form
// amplitude sums over the Schmidt data, and the two must agree.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrs/core.hpp"
#include "qrs/hilbert.hpp"
#include "qrs/measurement.hpp"
#include "qrs/reference_systems.hpp"
#include "qrs/schmidt.hpp"

namespace qrs {

struct BellScenario {
  Complex a = std::numbers::sqrt2 / 2;
  Complex b = std::numbers::sqrt2 / 2;
  double theta1 = 0.0;
  double theta2 = 0.0;
  bool include_m3 = true;
  /// Numerical value of outcome 0 (along the axis) and outcome 1.
  std::array<double, 2> outcome_values{+1.0, -1.0};

  void validate() const {
    const double norm2 = std::norm(a) + std::norm(b);
    if (std::abs(norm2 - 1.0) > tol::kInvariant) {
      throw Error(Errc::unnormalized, "|a|^2 + |b|^2 = " + std::to_string(norm2));
    }
    if (!std::isfinite(theta1) || !std::isfinite(theta2)) throw Error(Errc::invalid_argument, "angles must be finite");
  }
};

/// a|up,down> - b|down,up> on (P1, P2).
inline PureState build_bell_state(Complex a, Complex b) {
  const double norm2 = std::norm(a) + std::norm(b);
  if (std::abs(norm2 - 1.0) > tol::kInvariant) {
    throw Error(Errc::unnormalized, "|a|^2 + |b|^2 = " + std::to_string(norm2));
  }
  Vector v = Vector::Zero(4);
  v(1) = a;
  v(2) = -b;
  return PureState(CompositeSystem{{"P1", 2}, {"P2", 2}}, std::move(v));
}

/// Schmidt data of the two-particle state: coefficients (a, -b) paired with
/// (up, down) on P1 and (down, up) on P2.
struct BellSchmidtData {
  std::array<Complex, 2> c;
  std::array<Vector, 2> p1;
  std::array<Vector, 2> p2;

  explicit BellSchmidtData(const BellScenario& s) : c{s.a, -s.b} {
    Vector up(2), down(2);
    up << 1.0, 0.0;
    down << 0.0, 1.0;
    p1 = {up, down};
    p2 = {down, up};
  }
};

namespace closed_form {

/// <xi(P1, j)|phi_{P1, l}> and <xi(P2, k)|phi_{P2, l}>.
struct Overlaps {
  std::array<std::array<Complex, 2>, 2> x;  // [j][l]
  std::array<std::array<Complex, 2>, 2> y;  // [k][l]
  std::array<Complex, 2> c;

  explicit Overlaps(const BellScenario& s) {
    const BellSchmidtData data(s);
    const auto xi1 = spin_basis(s.theta1);
    const auto xi2 = spin_basis(s.theta2);
    c = data.c;
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t l = 0; l < 2; ++l) {
        x[j][l] = xi1[j].dot(data.p1[l]);
        y[j][l] = xi2[j].dot(data.p2[l]);
      }
    }
  }

  Complex amplitude(std::size_t j, std::size_t k) const {
    return c[0] * x[j][0] * y[k][0] + c[1] * x[j][1] * y[k][1];
  }
};

/// P(M1, j) = sum_l |c_l|^2 |<xi_j|phi_l>|^2.
inline std::array<double, 2> marginal1(const BellScenario& s) {
  const Overlaps o(s);
  std::array<double, 2> out{};
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t l = 0; l < 2; ++l) out[j] += std::norm(o.c[l]) * std::norm(o.x[j][l]);
  }
  return out;
}

/// P(M2, k) = sum_l |c_l|^2 |<xi_k|phi_l>|^2.
inline std::array<double, 2> marginal2(const BellScenario& s) {
  const Overlaps o(s);
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < 2; ++l) out[k] += std::norm(o.c[l]) * std::norm(o.y[k][l]);
  }
  return out;
}

/// P(M1, j, M2, k) = |sum_l c_l <xi_j|phi_l><xi_k|phi_l>|^2, row-major (j, k).
inline std::array<double, 4> quantum_joint(const BellScenario& s) {
  const Overlaps o(s);
  std::array<double, 4> out{};
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < 2; ++k) out[j * 2 + k] = std::norm(o.amplitude(j, k));
  }
  return out;
}

/// P(M3, l, M1, j, M2, k) = |c_l|^2 |x_jl|^2 |y_kl|^2, row-major (l, j, k).
inline std::array<double, 8> hidden_joint3(const BellScenario& s) {
  const Overlaps o(s);
  std::array<double, 8> out{};
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 2; ++k) {
        out[l * 4 + j * 2 + k] = std::norm(o.c[l]) * std::norm(o.x[j][l]) * std::norm(o.y[k][l]);
      }
    }
  }
  return out;
}

/// The three-device table summed over the recorded initial state, row-major (j, k).
inline std::array<double, 4> hidden_joint(const BellScenario& s) {
  const auto three = hidden_joint3(s);
  std::array<double, 4> out{};
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t f = 0; f < 4; ++f) out[f] += three[l * 4 + f];
  }
  return out;
}

/// Formal joint for (P1+M1, l1), (M1, j), (M2, k), row-major (l1, j, k):
/// sum_j' <xi_j'|phi_l1><phi_l1|xi_j> A_jk conj(A_j'k).
inline std::array<Complex, 8> quasi_joint(const BellScenario& s) {
  const Overlaps o(s);
  std::array<Complex, 8> out{};
  for (std::size_t l1 = 0; l1 < 2; ++l1) {
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 2; ++k) {
        Complex sum = 0.0;
        for (std::size_t jp = 0; jp < 2; ++jp) {
          sum += o.x[jp][l1] * std::conj(o.x[j][l1]) * o.amplitude(j, k) * std::conj(o.amplitude(jp, k));
        }
        out[l1 * 4 + j * 2 + k] = sum;
      }
    }
  }
  return out;
}

}  // namespace closed_form

enum class CorrelatorModel { quantum, hidden };

inline std::string_view to_string(CorrelatorModel m) {
  return m == CorrelatorModel::quantum ? "quantum" : "hidden";
}

/// Devices and evolved states of one scenario.
struct BellPipeline {
  BellScenario scenario;
  MeasurementDevice m1;
  MeasurementDevice m2;
  PureState final_state;  // on P1, P2, M1, M2

  explicit BellPipeline(const BellScenario& s)
      : scenario(s),
        m1(MeasurementDevice::standard("M1", {spin_basis(s.theta1)[0], spin_basis(s.theta1)[1]})),
        m2(MeasurementDevice::standard("M2", {spin_basis(s.theta2)[0], spin_basis(s.theta2)[1]})),
        final_state(evolve(s, m1, m2)) {}

  /// Pointer states of `device` for its outcomes, in outcome order.
  static std::vector<Vector> pointer_basis(const MeasurementDevice& device) {
    std::vector<Vector> out;
    for (const auto& b : device.outcomes) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(device.pointer_dim));
      e(static_cast<Eigen::Index>(b.pointer_index)) = 1.0;
      out.push_back(std::move(e));
    }
    return out;
  }

  /// Ensemble of `device`'s outcome pointer states relative to `psi`.
  static InternalStateEnsemble pointer_ensemble(const MeasurementDevice& device, const PureState& psi) {
    const auto rho = state_of(SubsystemSet(psi.system(), {device.label}), SubsystemSet::all(psi.system()), psi);
    return ensemble_from_basis(rho, pointer_basis(device));
  }

  /// U1(|phi_{P1,l}>|m_r>) on P1+M1, for every l and pointer r, ready pointer first.
  std::vector<Vector> p1m1_basis(const CompositeSystem& system) const {
    const BellSchmidtData data(scenario);
    const auto u1 = build_measurement_unitary(m1, SubsystemSet(system, {"P1"}));
    std::vector<std::size_t> pointers{m1.ready_index};
    for (std::size_t r = 0; r < m1.pointer_dim; ++r) {
      if (r != m1.ready_index) pointers.push_back(r);
    }
    std::vector<Vector> out;
    for (auto r : pointers) {
      for (const auto& phi : data.p1) {
        Vector e = Vector::Zero(static_cast<Eigen::Index>(m1.pointer_dim));
        e(static_cast<Eigen::Index>(r)) = 1.0;
        Vector product(2 * e.size());
        for (Eigen::Index p = 0; p < 2; ++p) product.segment(p * e.size(), e.size()) = phi(p) * e;
        out.push_back(u1.matrix() * product);
      }
    }
    return out;
  }

 private:
  static PureState evolve(const BellScenario& s, const MeasurementDevice& m1, const MeasurementDevice& m2) {
    s.validate();
    PureState psi = build_bell_state(s.a, s.b);
    psi = measure(psi, m1, "P1");
    return measure(psi, m2, "P2");
  }
};

struct BellResult {
  BellScenario scenario;
  std::vector<double> marginal1;  // P(M1, j)
  std::vector<double> marginal2;  // P(M2, k)
  JointDistribution quantum_joint;                  // (M1, M2)
  std::optional<JointDistribution> hidden_joint3;   // (M3, M1, M2)
  std::optional<std::vector<double>> hidden_joint;  // (M1, M2), summed over M3
  QuasiDistribution quasi;                          // (P1+M1, M1, M2)
  double e_quantum = 0.0;
  std::optional<double> e_hidden;
};

namespace detail {

inline double correlator_from(const std::vector<double>& joint, const std::array<double, 2>& values) {
  double e = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < 2; ++k) e += values[j] * values[k] * joint[j * 2 + k];
  }
  return e;
}

template <typename A, typename B>
void require_close(const A& computed, const B& expected, double tolerance, const std::string& what) {
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (std::abs(computed[i] - expected[i]) > tolerance) {
      throw Error(Errc::numerical, what + " deviates from its closed form at entry " + std::to_string(i));
    }
  }
}

inline JointDistribution bell_quantum_joint(const BellPipeline& p) {
  auto joint = joint_probability(
      {BellPipeline::pointer_ensemble(p.m1, p.final_state), BellPipeline::pointer_ensemble(p.m2, p.final_state)},
      p.final_state);
  require_close(joint.values(), closed_form::quantum_joint(p.scenario), 1e-10, "P(M1,j,M2,k)");
  return joint;
}

/// Records P1+M1 in the basis U1(|phi_l>|m_r>) with a third device, then
/// takes the three-device joint table.
inline JointDistribution bell_hidden_joint3(const BellPipeline& p) {
  const auto basis = p.p1m1_basis(p.final_state.system());
  const auto m3 = MeasurementDevice::standard("M3", basis);
  const PureState recorded = measure(p.final_state, m3, "P1+M1");
  // Only the ready-pointer branches of P1+M1 carry weight.
  MeasurementDevice m3_outcomes = m3;
  m3_outcomes.outcomes.resize(2);
  auto joint = joint_probability({BellPipeline::pointer_ensemble(m3_outcomes, recorded),
                                  BellPipeline::pointer_ensemble(p.m1, recorded),
                                  BellPipeline::pointer_ensemble(p.m2, recorded)},
                                 recorded);
  require_close(joint.values(), closed_form::hidden_joint3(p.scenario), 1e-10, "P(M3,l,M1,j,M2,k)");
  return joint;
}

inline std::vector<double> sum_first_axis(const JointDistribution& three) {
  std::vector<double> out(4, 0.0);
  for (std::size_t f = 0; f < three.values().size(); ++f) out[f % 4] += three.values()[f];
  return out;
}

}  // namespace detail

/// Formal joint over (P1+M1, M1, M2) on the two-device final state, with P1+M1
/// indexed by the evolved initial internal states of P1.
inline QuasiDistribution bell_quasi(const BellPipeline& p) {
  const auto& psi = p.final_state;
  const auto all = SubsystemSet::all(psi.system());
  auto basis = p.p1m1_basis(psi.system());
  basis.resize(2);
  const auto rho = state_of(SubsystemSet(psi.system(), {"P1", "M1"}), all, psi);
  auto quasi = formal_joint({ensemble_from_basis(rho, basis), BellPipeline::pointer_ensemble(p.m1, psi),
                             BellPipeline::pointer_ensemble(p.m2, psi)},
                            psi);
  detail::require_close(quasi.values(), closed_form::quasi_joint(p.scenario), 1e-10, "quasi joint");
  return quasi;
}

/// Runs the full experiment: marginals, the two-device joint, the formal
/// joint and, if requested, the three-device run.
inline BellResult run_bell(const BellScenario& scenario) {
  const BellPipeline p(scenario);
  auto quantum = detail::bell_quantum_joint(p);
  auto m1 = quantum.marginal(0);
  auto m2 = quantum.marginal(1);
  detail::require_close(m1, closed_form::marginal1(scenario), 1e-10, "P(M1,j)");
  detail::require_close(m2, closed_form::marginal2(scenario), 1e-10, "P(M2,k)");
  const double eq = detail::correlator_from(quantum.values(), scenario.outcome_values);
  BellResult out{scenario, std::move(m1), std::move(m2), std::move(quantum), std::nullopt, std::nullopt,
                 bell_quasi(p), eq, std::nullopt};
  if (scenario.include_m3) {
    out.hidden_joint3 = detail::bell_hidden_joint3(p);
    out.hidden_joint = detail::sum_first_axis(*out.hidden_joint3);
    detail::require_close(*out.hidden_joint, closed_form::hidden_joint(scenario), 1e-10, "P(M1,j,M2,k) with M3");
    out.e_hidden = detail::correlator_from(*out.hidden_joint, scenario.outcome_values);
  }
  return out;
}

/// E(theta1, theta2) for one model, running only the pipeline that model needs.
inline double correlator(BellScenario scenario, double theta1, double theta2, CorrelatorModel model) {
  scenario.theta1 = theta1;
  scenario.theta2 = theta2;
  const BellPipeline p(scenario);
  if (model == CorrelatorModel::quantum) {
    return detail::correlator_from(detail::bell_quantum_joint(p).values(), scenario.outcome_values);
  }
  return detail::correlator_from(detail::sum_first_axis(detail::bell_hidden_joint3(p)), scenario.outcome_values);
}

struct ChshAngles {
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
};

/// S = E(a1,b1) - E(a1,b2) + E(a2,b1) + E(a2,b2).
inline double chsh(const BellScenario& base, const ChshAngles& angles, CorrelatorModel model) {
  for (double t : {angles.a1, angles.a2, angles.b1, angles.b2}) {
    if (!std::isfinite(t)) throw Error(Errc::invalid_argument, "CHSH angles must be finite");
  }
  return correlator(base, angles.a1, angles.b1, model) - correlator(base, angles.a1, angles.b2, model) +
         correlator(base, angles.a2, angles.b1, model) + correlator(base, angles.a2, angles.b2, model);
}

}  // namespace qrs
