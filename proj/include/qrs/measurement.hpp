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

// Perfect (von Neumann) measurement couplings and seeded readout of internal states.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrs/core.hpp"
#include "qrs/hilbert.hpp"
#include "qrs/schmidt.hpp"

namespace qrs {

struct OutcomeBranch {
  Vector basis_vector;  // on the measured subsystem
  std::size_t pointer_index = 0;
};

/// A measuring device: a pointer subsystem with a ready state and one pointer
/// state per measured-basis vector. The pointer for an outcome may coincide
/// with the ready state; distinct outcomes never share a pointer.
struct MeasurementDevice {
  std::string label;
  std::size_t pointer_dim = 0;
  std::size_t ready_index = 0;
  std::vector<OutcomeBranch> outcomes;

  /// Ready state 0, outcome k on pointer k + 1, pointer_dim = outcomes + 1.
  static MeasurementDevice standard(std::string label, const std::vector<Vector>& basis) {
    MeasurementDevice d{std::move(label), basis.size() + 1, 0, {}};
    for (std::size_t k = 0; k < basis.size(); ++k) d.outcomes.push_back({basis[k], k + 1});
    return d;
  }

  Subsystem subsystem() const { return {label, pointer_dim}; }

  PureState ready_state() const { return PureState::basis(CompositeSystem({subsystem()}), ready_index); }

  /// Checks the basis against a target of dimension `target_dim` and the pointer map.
  void validate(std::size_t target_dim) const {
    if (outcomes.size() != target_dim) {
      throw Error(Errc::non_orthonormal_basis, "device " + label + " has " + std::to_string(outcomes.size()) +
                                                   " basis vectors for a target of dim " + std::to_string(target_dim));
    }
    if (pointer_dim < outcomes.size() || pointer_dim < 2) {
      throw Error(Errc::invalid_argument, "device " + label + " needs pointer_dim >= " +
                                              std::to_string(std::max<std::size_t>(outcomes.size(), 2)));
    }
    if (ready_index >= pointer_dim) throw Error(Errc::invalid_argument, "ready index out of range on " + label);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& b = outcomes[i].basis_vector;
      if (static_cast<std::size_t>(b.size()) != target_dim) {
        throw Error(Errc::non_orthonormal_basis, "basis vector " + std::to_string(i) + " of " + label +
                                                     " has the wrong length");
      }
      if (outcomes[i].pointer_index >= pointer_dim) {
        throw Error(Errc::invalid_argument, "pointer index out of range on " + label);
      }
      for (std::size_t j = 0; j <= i; ++j) {
        const Complex g = outcomes[j].basis_vector.dot(b);
        if (std::abs(g - (i == j ? 1.0 : 0.0)) > tol::kInvariant) {
          throw Error(Errc::non_orthonormal_basis, "measured basis of " + label + " is not orthonormal");
        }
        if (j < i && outcomes[j].pointer_index == outcomes[i].pointer_index) {
          throw Error(Errc::pointer_collision, "outcomes " + std::to_string(j) + " and " + std::to_string(i) +
                                                   " of " + label + " share pointer " +
                                                   std::to_string(outcomes[i].pointer_index));
        }
      }
    }
  }
};

/// The unitary |b_k>|m_ready> -> |b_k>|m_{pointer_k}> on target + device.
///
/// Each branch k acts on the pointer by the cyclic shift taking the ready
/// index to pointer_k, so U = sum_k |b_k><b_k| ⊗ shift_k is exactly unitary.
/// `target`'s parent must contain the device's label.
inline LocalOperator build_measurement_unitary(const MeasurementDevice& device, const SubsystemSet& target) {
  if (target.empty()) throw Error(Errc::empty_subsystem, "measurement target is empty");
  const auto& parent = target.parent();
  const auto device_pos = parent.position(device.label);
  if (parent[device_pos].dim != device.pointer_dim) {
    throw Error(Errc::invalid_argument, "device " + device.label + " has dim " + std::to_string(parent[device_pos].dim) +
                                            " in " + parent.name() + ", expected " + std::to_string(device.pointer_dim));
  }
  if (std::find(target.positions().begin(), target.positions().end(), device_pos) != target.positions().end()) {
    throw Error(Errc::invalid_argument, "device " + device.label + " cannot measure itself");
  }
  device.validate(target.dim());

  const auto dt = static_cast<Eigen::Index>(target.dim());
  const auto dp = static_cast<Eigen::Index>(device.pointer_dim);
  Matrix logical = Matrix::Zero(dt * dp, dt * dp);
  for (const auto& branch : device.outcomes) {
    const Matrix proj = branch.basis_vector * branch.basis_vector.adjoint();
    const auto shift = static_cast<Eigen::Index>((branch.pointer_index + device.pointer_dim - device.ready_index) %
                                                 device.pointer_dim);
    for (Eigen::Index i = 0; i < dp; ++i) {
      const Eigen::Index to = (i + shift) % dp;
      for (Eigen::Index r = 0; r < dt; ++r) {
        for (Eigen::Index c = 0; c < dt; ++c) logical(r * dp + to, c * dp + i) += proj(r, c);
      }
    }
  }

  const SubsystemSet support = target.united(SubsystemSet(parent, {device.label}));
  const auto layout = support.layout();
  std::vector<std::size_t> order;
  for (const auto& l : target.labels()) order.push_back(layout.position(l));
  order.push_back(layout.position(device.label));
  const auto map = detail::offsets(layout, order);
  Matrix canonical(logical.rows(), logical.cols());
  for (std::size_t r = 0; r < map.size(); ++r) {
    for (std::size_t c = 0; c < map.size(); ++c) {
      canonical(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c])) =
          logical(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return LocalOperator(support, std::move(canonical), OperatorKind::unitary);
}

/// Appends the device in its ready state.
inline PureState attach_device(const PureState& state, const MeasurementDevice& device) {
  return tensor(state, device.ready_state());
}

/// Attaches `device` if absent, then applies its coupling to `target`
/// (labels joined by '+').
inline PureState measure(const PureState& state, const MeasurementDevice& device, std::string_view target) {
  PureState joint = state.system().find(device.label) ? state : attach_device(state, device);
  const auto t = SubsystemSet::parse(joint.system(), target);
  return apply(build_measurement_unitary(device, t), joint);
}

/// Spin eigenbasis along an axis at angle theta from z in the x-z plane:
/// (cos θ/2, sin θ/2) and (-sin θ/2, cos θ/2) in the (up, down) basis.
inline std::array<Vector, 2> spin_basis(double theta) {
  if (!std::isfinite(theta)) throw Error(Errc::invalid_argument, "angle must be finite");
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Vector up(2), down(2);
  up << c, s;
  down << -s, c;
  return {up, down};
}

inline constexpr std::string_view kSamplerAlgorithm = "mt19937_64/inverse-cdf/53-bit-uniform";

/// Draws indices from probability vectors. The uniform variate is the top 53
/// bits of std::mt19937_64, so streams are identical across standard libraries.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t draw(std::span<const double> probabilities) {
    const double u = uniform();
    double cumulative = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      if (probabilities[i] <= 0.0) continue;
      cumulative += probabilities[i];
      last_nonzero = i;
      if (u < cumulative) return i;
    }
    return last_nonzero;
  }

 private:
  std::mt19937_64 engine_;
};

struct MeasurementRecord {
  std::string device;
  std::size_t outcome = 0;
  double probability = 0.0;
  std::uint64_t seed = 0;
  std::string algorithm{kSamplerAlgorithm};
  bool degeneracy_warning = false;
};

/// Picks which possible internal state is the actual one, with probability
/// equal to its eigenvalue.
inline MeasurementRecord sample_internal_state(const InternalStateEnsemble& ensemble, std::uint64_t seed) {
  if (ensemble.states.empty()) throw Error(Errc::invalid_argument, "empty ensemble");
  OutcomeSampler sampler(seed);
  const auto probs = ensemble.probabilities();
  const auto j = sampler.draw(probs);
  return {ensemble.subsystem.name(), j, probs[j], seed, std::string(kSamplerAlgorithm), ensemble.degenerate};
}

/// Empirical frequencies of `draws` samples from one seeded stream.
inline std::vector<double> sample_frequencies(std::span<const double> probabilities, std::uint64_t seed,
                                              std::size_t draws) {
  if (draws == 0) throw Error(Errc::invalid_argument, "need at least one draw");
  OutcomeSampler sampler(seed);
  std::vector<std::size_t> counts(probabilities.size(), 0);
  for (std::size_t n = 0; n < draws; ++n) ++counts[sampler.draw(probabilities)];
  std::vector<double> out;
  out.reserve(counts.size());
  for (auto c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(draws));
  return out;
}

}  // namespace qrs
