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

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace qrs {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

namespace tol {
// Construction-time checks on states and operators.
inline constexpr double kInvariant = 1e-10;
// Inputs whose norm is off by less than this are renormalized, others rejected.
inline constexpr double kRenormalizeBand = 1e-6;
// Eigenvalue clustering and zero-probability threshold.
inline constexpr double kEigen = 1e-9;
// Probability tables: normalization and marginal consistency.
inline constexpr double kTable = 1e-9;
}  // namespace tol

enum class Errc {
  invalid_argument,
  distinct_labels,
  unknown_label,
  dimension_limit,
  unnormalized,
  not_hermitian,
  kind_mismatch,
  empty_subsystem,
  containment,
  bipartition,
  overlapping_systems,
  undefined_conditional,
  non_orthonormal_basis,
  pointer_collision,
  not_an_eigenbasis,
  numerical,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::distinct_labels: return "distinct labels required";
    case Errc::unknown_label: return "unknown label";
    case Errc::dimension_limit: return "dimension limit exceeded";
    case Errc::unnormalized: return "unnormalized";
    case Errc::not_hermitian: return "not hermitian";
    case Errc::kind_mismatch: return "operator kind mismatch";
    case Errc::empty_subsystem: return "empty subsystem set";
    case Errc::containment: return "containment violated";
    case Errc::bipartition: return "invalid bipartition";
    case Errc::overlapping_systems: return "overlapping systems (use formal_joint)";
    case Errc::undefined_conditional: return "conditioning on a zero-probability entry";
    case Errc::non_orthonormal_basis: return "basis not orthonormal";
    case Errc::pointer_collision: return "pointer index collision";
    case Errc::not_an_eigenbasis: return "vectors are not eigenvectors of the reduced state";
    case Errc::numerical: return "numerical invariant violated";
  }
  return "unknown error";
}

/// Every failure raised by the library. `code()` tells callers which contract
/// was violated; `Errc::numerical` means an internal invariant drifted and is a bug.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Largest |A - A^dagger| entry.
inline double hermiticity_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Largest |A - B| entry.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

/// Phase-invariant overlap |<a|b>|.
inline double fidelity(const Vector& a, const Vector& b) { return std::abs(a.dot(b)); }

}  // namespace qrs
