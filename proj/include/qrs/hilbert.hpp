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

// Dense state-vector algebra over labeled composite systems.
//
// Index layout: a joint basis index over subsystems (s_0, ..., s_{n-1}) is the
// row-major flattening of the per-subsystem digits, first-declared subsystem
// slowest. Every subsystem set is canonicalized to declaration order, so a
// reduced matrix on {B, A} is laid out exactly like one on {A, B}.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qrs/core.hpp"

namespace qrs {

inline constexpr std::size_t kDefaultMaxTotalDim = std::size_t{1} << 14;

/// The dense dimension cap. QRS_MAX_DIM may lower it; values above the default are ignored.
inline std::size_t max_total_dim() {
  const char* env = std::getenv("QRS_MAX_DIM");
  if (env == nullptr) return kDefaultMaxTotalDim;
  std::string_view text(env);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) return kDefaultMaxTotalDim;
  return std::min(value, kDefaultMaxTotalDim);
}

struct Subsystem {
  std::string label;
  std::size_t dim = 0;

  bool operator==(const Subsystem&) const = default;
};

class CompositeSystem {
 public:
  explicit CompositeSystem(std::vector<Subsystem> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw Error(Errc::invalid_argument, "a composite system needs at least one subsystem");
    const std::size_t cap = max_total_dim();
    total_dim_ = 1;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const auto& p = parts_[i];
      if (p.label.empty()) throw Error(Errc::invalid_argument, "subsystem labels must be non-empty");
      if (p.label.find_first_of("+ \t\n,") != std::string::npos) {
        throw Error(Errc::invalid_argument, "label '" + p.label + "' contains a reserved character");
      }
      if (p.dim < 2) {
        throw Error(Errc::invalid_argument,
                    "subsystem '" + p.label + "' has dim " + std::to_string(p.dim) + "; dims must be >= 2");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (parts_[j].label == p.label) throw Error(Errc::distinct_labels, "label '" + p.label + "' repeated");
      }
      if (total_dim_ > cap / p.dim) {
        throw Error(Errc::dimension_limit, "total dimension exceeds the cap of " + std::to_string(cap));
      }
      total_dim_ *= p.dim;
    }
  }

  CompositeSystem(std::initializer_list<Subsystem> parts) : CompositeSystem(std::vector<Subsystem>(parts)) {}

  const std::vector<Subsystem>& subsystems() const { return parts_; }
  const Subsystem& operator[](std::size_t i) const { return parts_[i]; }
  std::size_t size() const { return parts_.size(); }
  std::size_t total_dim() const { return total_dim_; }

  std::optional<std::size_t> find(std::string_view label) const {
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i].label == label) return i;
    }
    return std::nullopt;
  }

  std::size_t position(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw Error(Errc::unknown_label, "'" + std::string(label) + "' is not a subsystem of " + name());
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(parts_.size());
    for (const auto& p : parts_) out.push_back(p.label);
    return out;
  }

  /// "A+B+C" in declaration order.
  std::string name() const {
    std::string out;
    for (const auto& p : parts_) {
      if (!out.empty()) out += '+';
      out += p.label;
    }
    return out;
  }

  /// Row-major strides: stride of the last subsystem is 1.
  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(parts_.size(), 1);
    for (std::size_t i = parts_.size(); i-- > 1;) s[i - 1] = s[i] * parts_[i].dim;
    return s;
  }

  /// Subsystems at `positions` (any order), kept in the order given.
  CompositeSystem select(std::span<const std::size_t> positions) const {
    std::vector<Subsystem> parts;
    parts.reserve(positions.size());
    for (auto p : positions) parts.push_back(parts_.at(p));
    return CompositeSystem(std::move(parts));
  }

  bool operator==(const CompositeSystem& other) const { return parts_ == other.parts_; }

 private:
  std::vector<Subsystem> parts_;
  std::size_t total_dim_ = 1;
};

namespace detail {

/// Flat indices in `system` of every joint index over `positions`, enumerated
/// row-major in the order the positions are given. Empty positions yield {0}.
inline std::vector<std::size_t> offsets(const CompositeSystem& system, std::span<const std::size_t> positions) {
  const auto strides = system.strides();
  std::size_t count = 1;
  for (auto p : positions) count *= system[p].dim;
  std::vector<std::size_t> out(count, 0);
  std::vector<std::size_t> digit(positions.size(), 0);
  std::size_t flat = 0;
  for (std::size_t n = 0; n < count; ++n) {
    out[n] = flat;
    for (std::size_t k = positions.size(); k-- > 0;) {
      const auto p = positions[k];
      if (++digit[k] < system[p].dim) {
        flat += strides[p];
        break;
      }
      flat -= (digit[k] - 1) * strides[p];
      digit[k] = 0;
    }
  }
  return out;
}

/// Positions of `system` not listed in `positions`, ascending.
inline std::vector<std::size_t> complement_positions(const CompositeSystem& system,
                                                     std::span<const std::size_t> positions) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (std::find(positions.begin(), positions.end(), i) == positions.end()) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// A set of subsystems of a parent composite, stored as ascending positions.
class SubsystemSet {
 public:
  SubsystemSet(CompositeSystem parent, const std::vector<std::string>& labels) : parent_(std::move(parent)) {
    for (const auto& l : labels) positions_.push_back(parent_.position(l));
    canonicalize();
  }

  static SubsystemSet all(const CompositeSystem& parent) { return SubsystemSet(parent, parent.labels()); }
  static SubsystemSet none(const CompositeSystem& parent) { return SubsystemSet(parent, {}); }

  /// Parses "A+B+C". Whitespace around labels is ignored.
  static SubsystemSet parse(const CompositeSystem& parent, std::string_view text) {
    std::vector<std::string> labels;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('+', start);
      if (end == std::string_view::npos) end = text.size();
      auto token = text.substr(start, end - start);
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
      if (token.empty()) throw Error(Errc::invalid_argument, "empty label in '" + std::string(text) + "'");
      labels.emplace_back(token);
      start = end + 1;
    }
    return SubsystemSet(parent, labels);
  }

  const CompositeSystem& parent() const { return parent_; }
  const std::vector<std::size_t>& positions() const { return positions_; }
  bool empty() const { return positions_.empty(); }
  std::size_t size() const { return positions_.size(); }

  std::size_t dim() const {
    std::size_t d = 1;
    for (auto p : positions_) d *= parent_[p].dim;
    return d;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (auto p : positions_) out.push_back(parent_[p].label);
    return out;
  }

  std::string name() const {
    if (positions_.empty()) return "{}";
    std::string out;
    for (auto p : positions_) {
      if (!out.empty()) out += '+';
      out += parent_[p].label;
    }
    return out;
  }

  /// The set's own composite, members in declaration order.
  CompositeSystem layout() const {
    if (positions_.empty()) throw Error(Errc::empty_subsystem, "the empty set has no layout");
    return parent_.select(positions_);
  }

  SubsystemSet complement() const {
    SubsystemSet out = none(parent_);
    out.positions_ = detail::complement_positions(parent_, positions_);
    return out;
  }

  bool contains(const SubsystemSet& other) const {
    require_same_parent(other);
    return std::includes(positions_.begin(), positions_.end(), other.positions_.begin(), other.positions_.end());
  }

  bool intersects(const SubsystemSet& other) const {
    require_same_parent(other);
    for (auto p : other.positions_) {
      if (std::binary_search(positions_.begin(), positions_.end(), p)) return true;
    }
    return false;
  }

  SubsystemSet united(const SubsystemSet& other) const {
    require_same_parent(other);
    SubsystemSet out = *this;
    out.positions_.insert(out.positions_.end(), other.positions_.begin(), other.positions_.end());
    out.canonicalize();
    return out;
  }

  /// The same labels as a subset of another composite. Dims must agree.
  SubsystemSet rebased(const CompositeSystem& other) const {
    SubsystemSet out = none(other);
    for (auto p : positions_) {
      const auto q = other.position(parent_[p].label);
      if (other[q].dim != parent_[p].dim) {
        throw Error(Errc::invalid_argument, "subsystem '" + parent_[p].label + "' has dim " +
                                                std::to_string(other[q].dim) + " in " + other.name() +
                                                " but " + std::to_string(parent_[p].dim) + " in " + parent_.name());
      }
      out.positions_.push_back(q);
    }
    out.canonicalize();
    return out;
  }

  bool operator==(const SubsystemSet& other) const {
    return parent_ == other.parent_ && positions_ == other.positions_;
  }

 private:
  void canonicalize() {
    std::sort(positions_.begin(), positions_.end());
    positions_.erase(std::unique(positions_.begin(), positions_.end()), positions_.end());
  }

  void require_same_parent(const SubsystemSet& other) const {
    if (!(parent_ == other.parent_)) {
      throw Error(Errc::invalid_argument, "sets belong to different composites: " + parent_.name() + " vs " +
                                              other.parent_.name());
    }
  }

  CompositeSystem parent_;
  std::vector<std::size_t> positions_;
};

/// A normalized amplitude vector. Immutable.
class PureState {
 public:
  PureState(CompositeSystem system, Vector amplitudes) : system_(std::move(system)), amplitudes_(std::move(amplitudes)) {
    const auto n = static_cast<std::size_t>(amplitudes_.size());
    if (n != system_.total_dim()) {
      throw Error(Errc::invalid_argument, "expected " + std::to_string(system_.total_dim()) +
                                              " amplitudes for " + system_.name() + ", got " + std::to_string(n));
    }
    if (!amplitudes_.allFinite()) throw Error(Errc::invalid_argument, "amplitudes must be finite");
    const double norm = amplitudes_.norm();
    if (std::abs(norm - 1.0) > tol::kRenormalizeBand) {
      throw Error(Errc::unnormalized, "state norm is " + std::to_string(norm));
    }
    amplitudes_ /= norm;
  }

  static PureState basis(const CompositeSystem& system, std::size_t index) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(system.total_dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(system, std::move(v));
  }

  const CompositeSystem& system() const { return system_; }
  const Vector& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return system_.total_dim(); }
  Complex operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  /// <this|other>; systems must match.
  Complex inner(const PureState& other) const {
    if (!(system_ == other.system_)) throw Error(Errc::invalid_argument, "inner product across different systems");
    return amplitudes_.dot(other.amplitudes_);
  }

 private:
  CompositeSystem system_;
  Vector amplitudes_;
};

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// A relative state on a subsystem set: Hermitian, PSD, unit trace.
class DensityMatrix {
 public:
  DensityMatrix(SubsystemSet system, Matrix matrix) : system_(std::move(system)), matrix_(std::move(matrix)) {
    if (system_.empty()) throw Error(Errc::empty_subsystem, "density matrix on the empty set");
    const auto d = static_cast<Eigen::Index>(system_.dim());
    if (matrix_.rows() != d || matrix_.cols() != d) {
      throw Error(Errc::invalid_argument, "matrix for " + system_.name() + " must be " + std::to_string(d) + "x" +
                                              std::to_string(d));
    }
    if (!matrix_.allFinite()) throw Error(Errc::invalid_argument, "matrix entries must be finite");
    const double herm = hermiticity_defect(matrix_);
    if (herm > tol::kInvariant) {
      throw Error(Errc::not_hermitian, "hermiticity defect " + std::to_string(herm) + " on " + system_.name());
    }
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > tol::kInvariant) {
      throw Error(Errc::unnormalized, "trace is " + std::to_string(tr.real()) + " on " + system_.name());
    }
    const Matrix sym = 0.5 * (matrix_ + matrix_.adjoint());
    if (min_eigenvalue(sym) < -tol::kInvariant) {
      throw Error(Errc::invalid_argument, "density matrix on " + system_.name() + " is not positive semidefinite");
    }
  }

  const SubsystemSet& system() const { return system_; }
  const Matrix& matrix() const { return matrix_; }
  std::size_t dim() const { return system_.dim(); }
  CompositeSystem layout() const { return system_.layout(); }

 private:
  SubsystemSet system_;
  Matrix matrix_;
};

enum class OperatorKind { unitary, projector, general };

inline std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::unitary: return "unitary";
    case OperatorKind::projector: return "projector";
    case OperatorKind::general: return "general";
  }
  return "general";
}

/// A square matrix acting on `support`, laid out in the support's canonical order.
class LocalOperator {
 public:
  LocalOperator(SubsystemSet support, Matrix matrix, OperatorKind kind)
      : support_(std::move(support)), matrix_(std::move(matrix)), kind_(kind) {
    if (support_.empty()) throw Error(Errc::empty_subsystem, "operator with empty support");
    const auto d = static_cast<Eigen::Index>(support_.dim());
    if (matrix_.rows() != d || matrix_.cols() != d) {
      throw Error(Errc::invalid_argument, "operator on " + support_.name() + " must be " + std::to_string(d) + "x" +
                                              std::to_string(d));
    }
    if (kind_ == OperatorKind::unitary) {
      const double defect = max_abs_diff(matrix_.adjoint() * matrix_, Matrix::Identity(d, d));
      if (defect > tol::kInvariant) {
        throw Error(Errc::kind_mismatch, "U^dagger U deviates from identity by " + std::to_string(defect));
      }
    } else if (kind_ == OperatorKind::projector) {
      if (hermiticity_defect(matrix_) > tol::kInvariant || max_abs_diff(matrix_ * matrix_, matrix_) > tol::kInvariant) {
        throw Error(Errc::kind_mismatch, "projector must be Hermitian and idempotent");
      }
    }
  }

  static LocalOperator identity(const SubsystemSet& support) {
    const auto d = static_cast<Eigen::Index>(support.dim());
    return LocalOperator(support, Matrix::Identity(d, d), OperatorKind::unitary);
  }

  const SubsystemSet& support() const { return support_; }
  const Matrix& matrix() const { return matrix_; }
  OperatorKind kind() const { return kind_; }

 private:
  SubsystemSet support_;
  Matrix matrix_;
  OperatorKind kind_;
};

namespace detail {

/// Positions in `target` of the support's labels, in the support's canonical order.
inline std::vector<std::size_t> support_positions(const SubsystemSet& support, const CompositeSystem& target) {
  support.rebased(target);  // validates labels and dims
  std::vector<std::size_t> out;
  for (auto p : support.positions()) out.push_back(target.position(support.parent()[p].label));
  return out;
}

/// Applies `m` (laid out over `positions` in the given order) to `v` living on `system`.
inline Vector apply_local(const Matrix& m, const CompositeSystem& system, std::span<const std::size_t> positions,
                          const Vector& v) {
  const auto inner = offsets(system, positions);
  const auto env_pos = complement_positions(system, positions);
  const auto outer = offsets(system, env_pos);
  const auto d = static_cast<Eigen::Index>(inner.size());
  Vector out(v.size());
  Vector block(d);
  for (auto e : outer) {
    for (Eigen::Index a = 0; a < d; ++a) block(a) = v(static_cast<Eigen::Index>(e + inner[a]));
    Vector mapped = m * block;
    for (Eigen::Index a = 0; a < d; ++a) out(static_cast<Eigen::Index>(e + inner[a])) = mapped(a);
  }
  return out;
}

/// (|phi><phi| on `positions`) applied to `v`.
inline Vector project_local(const Vector& phi, const CompositeSystem& system, std::span<const std::size_t> positions,
                            const Vector& v) {
  const auto inner = offsets(system, positions);
  const auto env_pos = complement_positions(system, positions);
  const auto outer = offsets(system, env_pos);
  const auto d = static_cast<Eigen::Index>(inner.size());
  Vector out = Vector::Zero(v.size());
  for (auto e : outer) {
    Complex overlap = 0.0;
    for (Eigen::Index a = 0; a < d; ++a) overlap += std::conj(phi(a)) * v(static_cast<Eigen::Index>(e + inner[a]));
    if (overlap == Complex(0.0)) continue;
    for (Eigen::Index a = 0; a < d; ++a) out(static_cast<Eigen::Index>(e + inner[a])) = phi(a) * overlap;
  }
  return out;
}

}  // namespace detail

/// a ⊗ b on the concatenated label list.
inline PureState tensor(const PureState& a, const PureState& b) {
  std::vector<Subsystem> parts = a.system().subsystems();
  for (const auto& p : b.system().subsystems()) {
    if (a.system().find(p.label)) throw Error(Errc::distinct_labels, "label '" + p.label + "' appears in both factors");
    parts.push_back(p);
  }
  CompositeSystem joint(std::move(parts));
  const auto db = static_cast<Eigen::Index>(b.dim());
  Vector v(static_cast<Eigen::Index>(joint.total_dim()));
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) v.segment(i * db, db) = a.amplitudes()(i) * b.amplitudes();
  return PureState(std::move(joint), std::move(v));
}

/// Lifts `op` to all of `target` with identity on the remaining factors.
/// The result is dense: memory grows as target.total_dim()^2.
inline LocalOperator embed(const LocalOperator& op, const CompositeSystem& target) {
  const auto pos = detail::support_positions(op.support(), target);
  const auto inner = detail::offsets(target, pos);
  const auto outer = detail::offsets(target, detail::complement_positions(target, pos));
  const auto n = static_cast<Eigen::Index>(target.total_dim());
  Matrix full = Matrix::Zero(n, n);
  const auto& m = op.matrix();
  for (auto e : outer) {
    for (std::size_t r = 0; r < inner.size(); ++r) {
      for (std::size_t c = 0; c < inner.size(); ++c) {
        full(static_cast<Eigen::Index>(e + inner[r]), static_cast<Eigen::Index>(e + inner[c])) =
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  return LocalOperator(SubsystemSet::all(target), std::move(full), op.kind());
}

/// Discrete unitary evolution of `state` by `op` on its support.
inline PureState apply(const LocalOperator& op, const PureState& state) {
  if (op.kind() != OperatorKind::unitary) {
    throw Error(Errc::kind_mismatch, "apply needs a unitary, got " + std::string(to_string(op.kind())));
  }
  const auto pos = detail::support_positions(op.support(), state.system());
  return PureState(state.system(), detail::apply_local(op.matrix(), state.system(), pos, state.amplitudes()));
}

/// Reduced density matrix of `state` on `keep` (labels looked up in the state's system).
inline DensityMatrix partial_trace(const PureState& state, const SubsystemSet& keep) {
  if (keep.empty()) throw Error(Errc::empty_subsystem, "partial trace onto the empty set");
  const auto& system = state.system();
  const auto kept = keep.rebased(system);
  const auto inner = detail::offsets(system, kept.positions());
  const auto outer = detail::offsets(system, detail::complement_positions(system, kept.positions()));
  Matrix a(static_cast<Eigen::Index>(inner.size()), static_cast<Eigen::Index>(outer.size()));
  for (std::size_t r = 0; r < inner.size(); ++r) {
    for (std::size_t e = 0; e < outer.size(); ++e) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e)) =
          state.amplitudes()(static_cast<Eigen::Index>(inner[r] + outer[e]));
    }
  }
  Matrix rho = a * a.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(kept, std::move(rho));
}

/// Further reduction of a density matrix onto `keep` ⊆ its support.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemSet& keep) {
  if (keep.empty()) throw Error(Errc::empty_subsystem, "partial trace onto the empty set");
  const auto layout = rho.layout();
  const auto& parent = rho.system().parent();
  const auto kept = keep.rebased(parent);
  if (!rho.system().contains(kept)) {
    throw Error(Errc::containment, kept.name() + " is not contained in " + rho.system().name());
  }
  std::vector<std::size_t> pos;
  for (const auto& l : kept.labels()) pos.push_back(layout.position(l));
  const auto inner = detail::offsets(layout, pos);
  const auto outer = detail::offsets(layout, detail::complement_positions(layout, pos));
  const auto d = static_cast<Eigen::Index>(inner.size());
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      Complex s = 0.0;
      for (auto e : outer) {
        s += rho.matrix()(static_cast<Eigen::Index>(inner[r] + e), static_cast<Eigen::Index>(inner[c] + e));
      }
      out(r, c) = s;
    }
  }
  return DensityMatrix(kept, std::move(out));
}

}  // namespace qrs
