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

// Relative states, joint probabilities of possible internal states, the formal
// (quasi) joint for overlapping systems, and the comparability analysis.

#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qrs/core.hpp"
#include "qrs/hilbert.hpp"
#include "qrs/schmidt.hpp"

namespace qrs {

namespace detail {

inline std::set<std::string> label_set(const std::vector<std::string>& labels) {
  return {labels.begin(), labels.end()};
}

/// Row-major multi-index bookkeeping for probability tables.
class TableShape {
 public:
  TableShape() = default;
  explicit TableShape(std::vector<std::size_t> extents) : extents_(std::move(extents)) {
    strides_.assign(extents_.size(), 1);
    for (std::size_t i = extents_.size(); i-- > 1;) strides_[i - 1] = strides_[i] * extents_[i];
    size_ = 1;
    for (auto e : extents_) size_ *= e;
  }

  const std::vector<std::size_t>& extents() const { return extents_; }
  std::size_t rank() const { return extents_.size(); }
  std::size_t size() const { return size_; }

  std::size_t flat(std::span<const std::size_t> index) const {
    if (index.size() != extents_.size()) throw Error(Errc::invalid_argument, "index rank mismatch");
    std::size_t f = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index[i] >= extents_[i]) throw Error(Errc::invalid_argument, "table index out of range");
      f += index[i] * strides_[i];
    }
    return f;
  }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> out(extents_.size());
    for (std::size_t i = 0; i < extents_.size(); ++i) {
      out[i] = flat / strides_[i];
      flat %= strides_[i];
    }
    return out;
  }

  /// Sums `values` over every axis except `axis`.
  template <typename T>
  std::vector<T> marginal(const std::vector<T>& values, std::size_t axis) const {
    std::vector<T> out(extents_.at(axis), T{});
    for (std::size_t f = 0; f < size_; ++f) out[(f / strides_[axis]) % extents_[axis]] += values[f];
    return out;
  }

  /// Sums `values` over `axis`, returning a table over the remaining axes.
  template <typename T>
  std::vector<T> sum_over(const std::vector<T>& values, std::size_t axis) const {
    std::vector<std::size_t> rest = extents_;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(axis));
    TableShape reduced(rest);
    std::vector<T> out(reduced.size(), T{});
    for (std::size_t f = 0; f < size_; ++f) {
      auto idx = unflatten(f);
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(axis));
      out[reduced.flat(idx)] += values[f];
    }
    return out;
  }

 private:
  std::vector<std::size_t> extents_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// <psi| pi_1 pi_2 ... pi_n |psi> for every index tuple, projectors taken from
/// the ensembles in the order given.
inline std::vector<Complex> formal_table(const std::vector<InternalStateEnsemble>& ensembles, const PureState& psi) {
  std::vector<std::size_t> extents;
  std::vector<std::vector<std::size_t>> positions;
  for (const auto& e : ensembles) {
    extents.push_back(e.size());
    positions.push_back(support_positions(e.subsystem, psi.system()));
  }
  const TableShape shape(extents);
  std::vector<Complex> table(shape.size());
  std::vector<std::size_t> index(ensembles.size(), 0);

  // Right-to-left: the vector at depth k is pi_k ... pi_n |psi>.
  std::function<void(std::size_t, const Vector&)> descend = [&](std::size_t axis, const Vector& v) {
    for (std::size_t j = 0; j < extents[axis]; ++j) {
      index[axis] = j;
      Vector projected = project_local(ensembles[axis].states[j].vector, psi.system(), positions[axis], v);
      if (axis == 0) {
        table[shape.flat(index)] = psi.amplitudes().dot(projected);
      } else {
        descend(axis - 1, projected);
      }
    }
  };
  descend(ensembles.size() - 1, psi.amplitudes());
  return table;
}

inline void require_pairwise_disjoint(const std::vector<SubsystemSet>& sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (sets[i].intersects(sets[j])) {
        throw Error(Errc::overlapping_systems, sets[i].name() + " and " + sets[j].name() + " share subsystems");
      }
    }
  }
}

}  // namespace detail

/// The state of `target` with respect to `reference`, computed from the
/// reference's internal state `psi_ref`. With target == reference this is |psi><psi|.
inline DensityMatrix state_of(const SubsystemSet& target, const SubsystemSet& reference, const PureState& psi_ref) {
  const auto ref_labels = detail::label_set(reference.labels());
  if (ref_labels != detail::label_set(psi_ref.system().labels())) {
    throw Error(Errc::invalid_argument, "internal state lives on " + psi_ref.system().name() + ", reference is " +
                                            reference.name());
  }
  for (const auto& l : target.labels()) {
    if (!ref_labels.contains(l)) {
      throw Error(Errc::containment, target.name() + " is not a subsystem of " + reference.name());
    }
  }
  return partial_trace(psi_ref, target.rebased(psi_ref.system()));
}

/// Possible internal states of `target` relative to the isolated system carrying `psi_isolated`.
inline InternalStateEnsemble possible_internal_states(const SubsystemSet& target, const PureState& psi_isolated,
                                                      double tolerance = tol::kEigen) {
  return possible_internal_states(
      state_of(target, SubsystemSet::all(psi_isolated.system()), psi_isolated), tolerance);
}

/// Joint probabilities that each system's internal state is a given possible internal state.
class JointDistribution {
 public:
  /// Validates and clips `raw` (row-major over the ensembles' indices).
  JointDistribution(std::vector<InternalStateEnsemble> ensembles, const std::vector<Complex>& raw)
      : ensembles_(std::move(ensembles)) {
    std::vector<std::size_t> extents;
    for (const auto& e : ensembles_) extents.push_back(e.size());
    shape_ = detail::TableShape(extents);
    if (raw.size() != shape_.size()) throw Error(Errc::invalid_argument, "table size does not match ensembles");
    values_.reserve(raw.size());
    double total = 0.0;
    for (const auto& z : raw) {
      if (std::abs(z.imag()) > tol::kInvariant) {
        throw Error(Errc::numerical, "joint probability has imaginary part " + std::to_string(z.imag()));
      }
      if (z.real() < -tol::kTable || z.real() > 1.0 + tol::kTable) {
        throw Error(Errc::numerical, "joint probability " + std::to_string(z.real()) + " outside [0, 1]");
      }
      values_.push_back(std::clamp(z.real(), 0.0, 1.0));
      total += values_.back();
    }
    if (std::abs(total - 1.0) > tol::kTable) {
      throw Error(Errc::numerical, "joint table sums to " + std::to_string(total));
    }
    for (std::size_t axis = 0; axis < ensembles_.size(); ++axis) {
      const auto m = marginal(axis);
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (std::abs(m[j] - ensembles_[axis].states[j].probability) > tol::kTable) {
          throw Error(Errc::numerical, "marginal of " + ensembles_[axis].subsystem.name() +
                                           " disagrees with its eigenvalue at index " + std::to_string(j));
        }
      }
    }
  }

  const std::vector<InternalStateEnsemble>& ensembles() const { return ensembles_; }
  const std::vector<std::size_t>& shape() const { return shape_.extents(); }
  const std::vector<double>& values() const { return values_; }
  std::size_t rank() const { return shape_.rank(); }

  std::vector<SubsystemSet> systems() const {
    std::vector<SubsystemSet> out;
    for (const auto& e : ensembles_) out.push_back(e.subsystem);
    return out;
  }

  double at(std::span<const std::size_t> index) const { return values_[shape_.flat(index)]; }
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  std::vector<std::size_t> unflatten(std::size_t flat) const { return shape_.unflatten(flat); }
  std::vector<double> marginal(std::size_t axis) const { return shape_.marginal(values_, axis); }

 private:
  std::vector<InternalStateEnsemble> ensembles_;
  detail::TableShape shape_;
  std::vector<double> values_;
};

/// The formal joint expression evaluated on systems that may overlap. Entries
/// may be complex or negative; nothing is clipped.
class QuasiDistribution {
 public:
  QuasiDistribution(std::vector<InternalStateEnsemble> ensembles, std::vector<Complex> values)
      : ensembles_(std::move(ensembles)), values_(std::move(values)) {
    std::vector<std::size_t> extents;
    for (const auto& e : ensembles_) extents.push_back(e.size());
    shape_ = detail::TableShape(extents);
    if (values_.size() != shape_.size()) throw Error(Errc::invalid_argument, "table size does not match ensembles");
    for (const auto& z : values_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw Error(Errc::numerical, "non-finite entry");
      max_imag_ = std::max(max_imag_, std::abs(z.imag()));
      min_real_ = std::min(min_real_, z.real());
    }
  }

  const std::vector<InternalStateEnsemble>& ensembles() const { return ensembles_; }
  const std::vector<std::size_t>& shape() const { return shape_.extents(); }
  const std::vector<Complex>& values() const { return values_; }
  std::size_t rank() const { return shape_.rank(); }
  /// Largest |Im| over all entries.
  double max_imag() const { return max_imag_; }
  /// Smallest real part over all entries.
  double min_real() const { return min_real_; }

  /// System names in projector order (leftmost projector first).
  std::vector<std::string> order() const {
    std::vector<std::string> out;
    for (const auto& e : ensembles_) out.push_back(e.subsystem.name());
    return out;
  }

  Complex at(std::span<const std::size_t> index) const { return values_[shape_.flat(index)]; }
  Complex at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  std::vector<std::size_t> unflatten(std::size_t flat) const { return shape_.unflatten(flat); }

  /// The table summed over one system's index, as a table over the others.
  QuasiDistribution sum_over(std::size_t axis) const {
    if (axis >= ensembles_.size() || ensembles_.size() < 2) {
      throw Error(Errc::invalid_argument, "cannot sum out axis " + std::to_string(axis));
    }
    auto rest = ensembles_;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(axis));
    return QuasiDistribution(std::move(rest), shape_.sum_over(values_, axis));
  }

 private:
  std::vector<InternalStateEnsemble> ensembles_;
  detail::TableShape shape_;
  std::vector<Complex> values_;
  double max_imag_ = 0.0;
  double min_real_ = std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::vector<InternalStateEnsemble> rebased_ensembles(std::vector<InternalStateEnsemble> ensembles,
                                                            const PureState& psi) {
  if (ensembles.empty()) throw Error(Errc::invalid_argument, "at least one system is required");
  for (auto& e : ensembles) {
    if (e.subsystem.empty()) throw Error(Errc::empty_subsystem, "system list contains the empty set");
    e.subsystem.rebased(psi.system());
  }
  return ensembles;
}

inline std::vector<InternalStateEnsemble> ensembles_for(const std::vector<SubsystemSet>& systems,
                                                        const PureState& psi) {
  if (systems.empty()) throw Error(Errc::invalid_argument, "at least one system is required");
  std::vector<InternalStateEnsemble> out;
  for (const auto& s : systems) {
    if (s.empty()) throw Error(Errc::empty_subsystem, "system list contains the empty set");
    out.push_back(possible_internal_states(s.rebased(psi.system()), psi));
  }
  return out;
}

inline std::vector<SubsystemSet> rebased_systems(const std::vector<InternalStateEnsemble>& ensembles,
                                                 const PureState& psi) {
  std::vector<SubsystemSet> out;
  for (const auto& e : ensembles) out.push_back(e.subsystem.rebased(psi.system()));
  return out;
}

}  // namespace detail

/// Joint probabilities over pairwise disjoint systems from the given ensembles.
inline JointDistribution joint_probability(std::vector<InternalStateEnsemble> ensembles, const PureState& psi_isolated) {
  ensembles = detail::rebased_ensembles(std::move(ensembles), psi_isolated);
  detail::require_pairwise_disjoint(detail::rebased_systems(ensembles, psi_isolated));
  auto raw = detail::formal_table(ensembles, psi_isolated);
  return JointDistribution(std::move(ensembles), raw);
}

/// Joint probabilities over pairwise disjoint systems, each using its possible
/// internal states. Overlapping systems are refused: use formal_joint.
inline JointDistribution joint_probability(const std::vector<SubsystemSet>& systems, const PureState& psi_isolated) {
  std::vector<SubsystemSet> rebased;
  for (const auto& s : systems) rebased.push_back(s.rebased(psi_isolated.system()));
  detail::require_pairwise_disjoint(rebased);
  return joint_probability(detail::ensembles_for(rebased, psi_isolated), psi_isolated);
}

/// P(other axes | axis `given_axis` is in state `given_index`), row-major over
/// the remaining axes.
inline std::vector<double> conditional_probability(const JointDistribution& dist, std::size_t given_axis,
                                                   std::size_t given_index) {
  if (given_axis >= dist.rank() || given_index >= dist.shape()[given_axis]) {
    throw Error(Errc::invalid_argument, "conditioning index out of range");
  }
  if (dist.rank() < 2) throw Error(Errc::invalid_argument, "conditioning needs at least two systems");
  const double marginal = dist.marginal(given_axis)[given_index];
  const double floor = dist.ensembles()[given_axis].tolerance_used;
  if (marginal < floor) {
    throw Error(Errc::undefined_conditional, "P(" + dist.ensembles()[given_axis].subsystem.name() + "," +
                                                 std::to_string(given_index) + ") = " + std::to_string(marginal));
  }
  std::vector<std::size_t> rest = dist.shape();
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(given_axis));
  detail::TableShape reduced(rest);
  std::vector<double> out(reduced.size(), 0.0);
  for (std::size_t f = 0; f < dist.values().size(); ++f) {
    auto idx = dist.unflatten(f);
    if (idx[given_axis] != given_index) continue;
    idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(given_axis));
    out[reduced.flat(idx)] = dist.values()[f] / marginal;
  }
  return out;
}

/// <psi| pi_1 ... pi_n |psi> in argument order from the given ensembles. Overlaps allowed.
inline QuasiDistribution formal_joint(std::vector<InternalStateEnsemble> ensembles, const PureState& psi_isolated) {
  ensembles = detail::rebased_ensembles(std::move(ensembles), psi_isolated);
  auto values = detail::formal_table(ensembles, psi_isolated);
  return QuasiDistribution(std::move(ensembles), std::move(values));
}

inline QuasiDistribution formal_joint(const std::vector<SubsystemSet>& systems, const PureState& psi_isolated) {
  return formal_joint(detail::ensembles_for(systems, psi_isolated), psi_isolated);
}

enum class ComparabilityRoute { pairwise_disjoint, complement_reduction, none };

inline std::string_view to_string(ComparabilityRoute route) {
  switch (route) {
    case ComparabilityRoute::pairwise_disjoint: return "pairwise-disjoint";
    case ComparabilityRoute::complement_reduction: return "complement-reduction";
    case ComparabilityRoute::none: return "none";
  }
  return "none";
}

struct Substitution {
  std::size_t index;       // position in the caller's list
  SubsystemSet original;
  SubsystemSet replacement;  // complement of `original`
};

struct ComparabilityVerdict {
  bool comparable = false;
  ComparabilityRoute route = ComparabilityRoute::none;
  std::vector<Substitution> substitutions;
  /// The pairwise disjoint sets actually used (empty when not comparable).
  std::vector<SubsystemSet> effective;
};

/// Searches every pattern of replacing systems by their complements in
/// `parent` for one that makes the list pairwise disjoint. Patterns with fewer
/// replacements are tried first; empty complements are never used.
inline ComparabilityVerdict comparability(const std::vector<SubsystemSet>& systems, const CompositeSystem& parent) {
  if (systems.size() > 16) throw Error(Errc::invalid_argument, "comparability search is limited to 16 systems");
  std::vector<SubsystemSet> sets;
  std::vector<SubsystemSet> complements;
  for (const auto& s : systems) {
    if (s.empty()) throw Error(Errc::empty_subsystem, "system list contains the empty set");
    sets.push_back(s.rebased(parent));
    complements.push_back(sets.back().complement());
  }
  const std::size_t n = sets.size();
  std::vector<std::uint32_t> masks(std::size_t{1} << n);
  std::iota(masks.begin(), masks.end(), 0u);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });

  for (auto mask : masks) {
    std::vector<SubsystemSet> chosen;
    bool usable = true;
    for (std::size_t i = 0; i < n && usable; ++i) {
      const bool swap = (mask >> i) & 1u;
      if (swap && complements[i].empty()) usable = false;
      chosen.push_back(swap ? complements[i] : sets[i]);
    }
    if (!usable) continue;
    bool disjoint = true;
    for (std::size_t i = 0; i < n && disjoint; ++i) {
      for (std::size_t j = i + 1; j < n && disjoint; ++j) disjoint = !chosen[i].intersects(chosen[j]);
    }
    if (!disjoint) continue;
    ComparabilityVerdict verdict{true,
                                 mask == 0 ? ComparabilityRoute::pairwise_disjoint
                                           : ComparabilityRoute::complement_reduction,
                                 {},
                                 chosen};
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) verdict.substitutions.push_back({i, sets[i], complements[i]});
    }
    return verdict;
  }
  return {};
}

/// (<left_k| ⊗ 1)|psi> normalized, for each state with nonzero probability:
/// the partner of each possible internal state of `left` across the Schmidt cut.
/// Returns the partner vectors and the indices of `left` they belong to.
inline std::pair<std::vector<Vector>, std::vector<std::size_t>> schmidt_partners(const InternalStateEnsemble& left,
                                                                              const PureState& psi) {
  const auto l = left.subsystem.rebased(psi.system());
  const auto r = l.complement();
  if (r.empty()) throw Error(Errc::bipartition, l.name() + " has an empty complement");
  const auto lpos = detail::support_positions(left.subsystem, psi.system());
  const auto rows = detail::offsets(psi.system(), lpos);
  const auto cols = detail::offsets(psi.system(), r.positions());
  std::vector<Vector> partners;
  std::vector<std::size_t> owners;
  for (std::size_t k = 0; k < left.size(); ++k) {
    const auto& s = left.states[k];
    if (s.zero_probability) continue;
    Vector w = Vector::Zero(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t b = 0; b < cols.size(); ++b) {
      Complex acc = 0.0;
      for (std::size_t a = 0; a < rows.size(); ++a) {
        acc += std::conj(s.vector(static_cast<Eigen::Index>(a))) * psi[rows[a] + cols[b]];
      }
      w(static_cast<Eigen::Index>(b)) = acc;
    }
    w /= std::sqrt(s.probability);
    partners.push_back(std::move(w));
    owners.push_back(k);
  }
  return {std::move(partners), std::move(owners)};
}

/// Joint probabilities for comparable systems, indexed by each original
/// system's possible internal states. Systems the verdict replaces are measured
/// through their complements, with indices mapped back by the Schmidt pairing.
inline JointDistribution comparable_joint(const std::vector<SubsystemSet>& systems, const PureState& psi_isolated) {
  const auto verdict = comparability(systems, psi_isolated.system());
  if (!verdict.comparable) {
    throw Error(Errc::overlapping_systems, "systems are not comparable; use formal_joint");
  }
  auto originals = detail::ensembles_for(systems, psi_isolated);
  std::vector<InternalStateEnsemble> effective = originals;
  std::vector<std::vector<std::size_t>> owner(systems.size());
  for (std::size_t i = 0; i < systems.size(); ++i) {
    owner[i].resize(originals[i].size());
    std::iota(owner[i].begin(), owner[i].end(), 0);
  }
  for (const auto& sub : verdict.substitutions) {
    auto [partners, owners] = schmidt_partners(originals[sub.index], psi_isolated);
    const auto rho = state_of(sub.replacement, SubsystemSet::all(psi_isolated.system()), psi_isolated);
    effective[sub.index] = ensemble_from_basis(rho, partners, originals[sub.index].tolerance_used);
    owner[sub.index] = std::move(owners);
  }
  const auto inner = joint_probability(effective, psi_isolated);

  std::vector<std::size_t> extents;
  for (const auto& e : originals) extents.push_back(e.size());
  detail::TableShape shape(extents);
  std::vector<Complex> raw(shape.size(), 0.0);
  for (std::size_t f = 0; f < inner.values().size(); ++f) {
    auto idx = inner.unflatten(f);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = owner[i][idx[i]];
    raw[shape.flat(idx)] = inner.values()[f];
  }
  return JointDistribution(std::move(originals), raw);
}

}  // namespace qrs
