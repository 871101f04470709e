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

// Eigenstructure of reduced states: possible internal states and the Schmidt
// representation across a bipartition.

#pragma once

#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qrs/core.hpp"
#include "qrs/hilbert.hpp"

namespace qrs {

struct InternalState {
  double probability = 0.0;
  Vector vector;
  bool zero_probability = false;
};

/// Eigenstates of a reduced density matrix with their probabilities.
///
/// Produced by possible_internal_states (descending probabilities, canonical
/// basis inside degenerate clusters) or ensemble_from_basis (caller order).
struct InternalStateEnsemble {
  SubsystemSet subsystem;
  std::vector<InternalState> states;
  double tolerance_used = tol::kEigen;
  bool degenerate = false;

  std::size_t size() const { return states.size(); }

  std::vector<double> probabilities() const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.probability);
    return out;
  }
};

/// Rotates `v` so its largest-magnitude component is real positive and returns
/// the unit phase it was multiplied by. Ties go to the lowest index.
inline Complex canonicalize_phase(Vector& v) {
  if (v.size() == 0) return 1.0;
  const double top = v.cwiseAbs().maxCoeff();
  if (top == 0.0) return 1.0;
  Eigen::Index i = 0;
  while (std::abs(v(i)) < top * (1.0 - 1e-9)) ++i;
  const Complex phase = std::conj(v(i)) / std::abs(v(i));
  v *= phase;
  v(i) = std::abs(v(i));
  return phase;
}

namespace detail {

inline void check_tolerance(double tolerance) {
  if (!(tolerance > 0.0 && tolerance <= 1e-3)) {
    throw Error(Errc::invalid_argument, "tolerance must lie in (0, 1e-3], got " + std::to_string(tolerance));
  }
}

inline double clip_probability(double p) {
  if (p < -tol::kInvariant || p > 1.0 + tol::kInvariant) {
    throw Error(Errc::numerical, "eigenvalue " + std::to_string(p) + " outside [0, 1]");
  }
  return std::clamp(p, 0.0, 1.0);
}

/// True if any cluster of eigenvalues (descending, gap < tolerance) of size > 1
/// sits at or above the zero-probability threshold.
inline bool has_degenerate_cluster(const Eigen::VectorXd& descending, double tolerance) {
  for (Eigen::Index i = 1; i < descending.size(); ++i) {
    if (descending(i - 1) - descending(i) < tolerance && descending(i - 1) >= tolerance) return true;
  }
  return false;
}

}  // namespace detail

/// Full eigendecomposition of `rho`.
///
/// Eigenvalues come out descending and clipped to [0, 1]; those below
/// `tolerance` stay in the list flagged zero_probability. Inside a cluster of
/// eigenvalues closer than `tolerance` the basis is made unique by
/// diagonalizing diag(1, 2, 3, ...) restricted to the cluster, and every
/// vector's phase is fixed by canonicalize_phase. A cluster with nonzero
/// probability sets `degenerate`.
inline InternalStateEnsemble possible_internal_states(const DensityMatrix& rho, double tolerance = tol::kEigen) {
  detail::check_tolerance(tolerance);
  const Matrix& m = rho.matrix();
  const double herm = hermiticity_defect(m);
  if (herm > tolerance) throw Error(Errc::not_hermitian, "defect " + std::to_string(herm));
  const Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error(Errc::numerical, "eigensolver did not converge");

  const Eigen::Index d = sym.rows();
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Matrix vectors = solver.eigenvectors().rowwise().reverse();

  Eigen::Index start = 0;
  while (start < d) {
    Eigen::Index end = start + 1;
    while (end < d && values(end - 1) - values(end) < tolerance) ++end;
    const Eigen::Index width = end - start;
    if (width > 1) {
      Matrix block = vectors.middleCols(start, width);
      Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(d, 1.0, static_cast<double>(d));
      Matrix projected = block.adjoint() * ramp.cast<Complex>().asDiagonal() * block;
      projected = 0.5 * (projected + projected.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> tiebreak(projected);
      vectors.middleCols(start, width) = block * tiebreak.eigenvectors();
      values.segment(start, width).setConstant(values.segment(start, width).mean());
    }
    start = end;
  }

  InternalStateEnsemble out{rho.system(), {}, tolerance, detail::has_degenerate_cluster(values, tolerance)};
  double total = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    Vector v = vectors.col(k);
    canonicalize_phase(v);
    const double p = detail::clip_probability(values(k));
    total += p;
    out.states.push_back({p, std::move(v), p < tolerance});
  }
  if (std::abs(total - 1.0) > tol::kTable) {
    throw Error(Errc::numerical, "eigenvalues sum to " + std::to_string(total));
  }
  return out;
}

/// An ensemble over caller-chosen eigenvectors of `rho`, kept in the given order.
///
/// Each vector must be a unit eigenvector of `rho` (residual below `tolerance`),
/// the set must be orthonormal, and the probabilities must add up to one, so
/// vectors spanning the zero eigenspace may be omitted.
inline InternalStateEnsemble ensemble_from_basis(const DensityMatrix& rho, const std::vector<Vector>& basis,
                                                 double tolerance = tol::kEigen) {
  detail::check_tolerance(tolerance);
  const Matrix& m = rho.matrix();
  const auto d = static_cast<Eigen::Index>(rho.dim());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != d) {
      throw Error(Errc::invalid_argument, "basis vector " + std::to_string(i) + " has length " +
                                              std::to_string(basis[i].size()) + ", expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex g = basis[j].dot(basis[i]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > tol::kEigen) {
        throw Error(Errc::non_orthonormal_basis, "<" + std::to_string(j) + "|" + std::to_string(i) + "> = " +
                                                     std::to_string(std::abs(g)));
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  InternalStateEnsemble out{rho.system(), {}, tolerance,
                            detail::has_degenerate_cluster(solver.eigenvalues().reverse(), tolerance)};
  double total = 0.0;
  for (const auto& v : basis) {
    const double rayleigh = v.dot(m * v).real();
    const double residual = (m * v - rayleigh * v).norm();
    if (residual > tolerance) {
      throw Error(Errc::not_an_eigenbasis, "residual " + std::to_string(residual) + " on " + rho.system().name());
    }
    const double p = detail::clip_probability(rayleigh);
    total += p;
    out.states.push_back({p, v, p < tolerance});
  }
  if (std::abs(total - 1.0) > tol::kTable) {
    throw Error(Errc::not_an_eigenbasis, "basis carries total probability " + std::to_string(total) +
                                             " on " + rho.system().name());
  }
  return out;
}

/// psi = sum_k c_k |left_k>|right_k>, c_k real, non-negative, descending.
struct SchmidtDecomposition {
  SubsystemSet left;
  SubsystemSet right;
  std::vector<double> coefficients;
  std::vector<Vector> left_basis;
  std::vector<Vector> right_basis;
  std::size_t rank = 0;
};

namespace detail {

/// psi reshaped to (dim left) x (dim right), both sides in canonical order.
inline Matrix bipartite_matrix(const PureState& psi, const SubsystemSet& left, const SubsystemSet& right) {
  const auto rows = offsets(psi.system(), left.positions());
  const auto cols = offsets(psi.system(), right.positions());
  Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = psi[rows[r] + cols[c]];
    }
  }
  return a;
}

}  // namespace detail

/// Schmidt representation of `psi` across (left, complement of left).
/// Left vectors get canonical phases; the compensating phase goes to the right vector.
inline SchmidtDecomposition schmidt_decompose(const PureState& psi, const SubsystemSet& left,
                                              double tolerance = tol::kEigen) {
  detail::check_tolerance(tolerance);
  const auto l = left.rebased(psi.system());
  if (l.empty() || l.size() == psi.system().size()) {
    throw Error(Errc::bipartition, "left side must be a proper non-empty subset, got " + l.name());
  }
  const auto r = l.complement();
  const Matrix a = detail::bipartite_matrix(psi, l, r);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SchmidtDecomposition out{l, r, {}, {}, {}, 0};
  double total = 0.0;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    const double c = svd.singularValues()(k);
    Vector u = svd.matrixU().col(k);
    Vector w = svd.matrixV().col(k).conjugate();
    w *= std::conj(canonicalize_phase(u));
    out.coefficients.push_back(c);
    out.left_basis.push_back(std::move(u));
    out.right_basis.push_back(std::move(w));
    if (c > tolerance) ++out.rank;
    total += c * c;
  }
  if (std::abs(total - 1.0) > tol::kTable) {
    throw Error(Errc::numerical, "squared Schmidt coefficients sum to " + std::to_string(total));
  }
  return out;
}

/// Reassembles sum_k c_k |left_k>|right_k> in the parent's canonical index order.
inline PureState reconstruct(const SchmidtDecomposition& sd) {
  const auto& parent = sd.left.parent();
  const auto rows = detail::offsets(parent, sd.left.positions());
  const auto cols = detail::offsets(parent, sd.right.positions());
  Vector v = Vector::Zero(static_cast<Eigen::Index>(parent.total_dim()));
  for (std::size_t k = 0; k < sd.coefficients.size(); ++k) {
    const Vector& lk = sd.left_basis[k];
    const Vector& rk = sd.right_basis[k];
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        v(static_cast<Eigen::Index>(rows[a] + cols[b])) +=
            sd.coefficients[k] * lk(static_cast<Eigen::Index>(a)) * rk(static_cast<Eigen::Index>(b));
      }
    }
  }
  return PureState(parent, std::move(v));
}

}  // namespace qrs
