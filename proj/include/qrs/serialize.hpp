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

// JSON and CSV encodings. JSON keys are emitted in a fixed order and doubles
// in shortest round-trip form, so identical inputs give byte-identical output.

#pragma once

#include <charconv>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrs/bell.hpp"
#include "qrs/hilbert.hpp"
#include "qrs/measurement.hpp"
#include "qrs/reference_systems.hpp"
#include "qrs/schmidt.hpp"

namespace qrs {

using Json = nlohmann::ordered_json;

namespace json {

/// [re, im]; negative zeros print as 0.
inline Json complex_pair(Complex z) { return Json::array({z.real() + 0.0, z.imag() + 0.0}); }

inline Json vector(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_pair(v(i)));
  return out;
}

inline Json matrix(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector(m.row(r).transpose()));
  return out;
}

/// Parses [[re, im], ...]; plain numbers are accepted as real amplitudes.
inline Vector parse_vector(const Json& j) {
  if (!j.is_array()) throw Error(Errc::invalid_argument, "expected an array of [re, im] pairs");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (e.is_number()) {
      v(static_cast<Eigen::Index>(i)) = e.get<double>();
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      v(static_cast<Eigen::Index>(i)) = Complex(e[0].get<double>(), e[1].get<double>());
    } else {
      throw Error(Errc::invalid_argument, "entry " + std::to_string(i) + " is not a [re, im] pair");
    }
  }
  return v;
}

inline Json labels(const std::vector<std::string>& l) { return Json(l); }

inline Json composite(const CompositeSystem& s) {
  Json out = Json::array();
  for (const auto& p : s.subsystems()) out.push_back(Json{{"label", p.label}, {"dim", p.dim}});
  return out;
}

inline Json state(const PureState& psi) {
  return Json{{"subsystems", composite(psi.system())}, {"amplitudes", vector(psi.amplitudes())}};
}

inline Json density(const DensityMatrix& rho) {
  return Json{{"system", rho.system().name()}, {"matrix", matrix(rho.matrix())}};
}

inline Json ensemble(const InternalStateEnsemble& e) {
  Json states = Json::array();
  for (const auto& s : e.states) {
    states.push_back(
        Json{{"probability", s.probability}, {"zero_probability", s.zero_probability}, {"vector", vector(s.vector)}});
  }
  return Json{{"system", e.subsystem.name()},
              {"degenerate", e.degenerate},
              {"tolerance", e.tolerance_used},
              {"eigenvalues", e.probabilities()},
              {"states", std::move(states)}};
}

inline Json schmidt(const SchmidtDecomposition& sd) {
  Json lb = Json::array();
  Json rb = Json::array();
  for (const auto& v : sd.left_basis) lb.push_back(vector(v));
  for (const auto& v : sd.right_basis) rb.push_back(vector(v));
  return Json{{"left", sd.left.name()},
              {"right", sd.right.name()},
              {"rank", sd.rank},
              {"coefficients", sd.coefficients},
              {"left_basis", std::move(lb)},
              {"right_basis", std::move(rb)}};
}

inline Json axes(const std::vector<InternalStateEnsemble>& ensembles) {
  Json out = Json::array();
  for (const auto& e : ensembles) {
    out.push_back(Json{{"system", e.subsystem.name()}, {"size", e.size()}, {"eigenvalues", e.probabilities()}});
  }
  return out;
}

inline Json joint(const JointDistribution& d) {
  return Json{{"kind", "joint"}, {"axes", axes(d.ensembles())}, {"shape", d.shape()}, {"values", d.values()}};
}

inline Json quasi(const QuasiDistribution& q) {
  Json values = Json::array();
  for (const auto& z : q.values()) values.push_back(complex_pair(z));
  return Json{{"kind", "quasi"},
              {"projector_order", q.order()},
              {"axes", axes(q.ensembles())},
              {"shape", q.shape()},
              {"values", std::move(values)},
              {"max_imag", q.max_imag()},
              {"min_real", q.min_real()}};
}

inline Json verdict(const ComparabilityVerdict& v) {
  Json subs = Json::array();
  for (const auto& s : v.substitutions) {
    subs.push_back(Json{{"index", s.index}, {"original", s.original.name()}, {"replacement", s.replacement.name()}});
  }
  Json eff = Json::array();
  for (const auto& s : v.effective) eff.push_back(s.name());
  return Json{{"comparable", v.comparable},
              {"route", std::string(to_string(v.route))},
              {"substitutions", std::move(subs)},
              {"effective", std::move(eff)}};
}

inline Json record(const MeasurementRecord& r) {
  return Json{{"device", r.device},
              {"outcome", r.outcome},
              {"probability", r.probability},
              {"seed", r.seed},
              {"algorithm", r.algorithm},
              {"degeneracy_warning", r.degeneracy_warning}};
}

inline Json scenario(const BellScenario& s) {
  return Json{{"a", complex_pair(s.a)},
              {"b", complex_pair(s.b)},
              {"theta1", s.theta1},
              {"theta2", s.theta2},
              {"include_m3", s.include_m3},
              {"outcome_values", s.outcome_values}};
}

inline Json bell(const BellResult& r, bool quantum = true, bool hidden = true, bool quasi_table = true) {
  Json out{{"scenario", scenario(r.scenario)}};
  if (quantum) {
    out["marginal1"] = r.marginal1;
    out["marginal2"] = r.marginal2;
    out["quantum_joint"] = r.quantum_joint.values();
    out["E_quantum"] = r.e_quantum;
  }
  if (hidden && r.hidden_joint) {
    out["hidden_joint"] = *r.hidden_joint;
    out["hidden_joint3"] = r.hidden_joint3->values();
    out["E_hidden"] = *r.e_hidden;
  }
  if (quasi_table) out["quasi"] = quasi(r.quasi);
  return out;
}

}  // namespace json

namespace csv {

/// Shortest round-trip decimal form.
inline std::string number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

inline std::string joint(const JointDistribution& d) {
  std::string out;
  for (std::size_t a = 0; a < d.rank(); ++a) out += "j" + std::to_string(a + 1) + ",";
  out += "probability\n";
  for (std::size_t f = 0; f < d.values().size(); ++f) {
    for (auto i : d.unflatten(f)) out += std::to_string(i) + ",";
    out += number(d.values()[f]) + "\n";
  }
  return out;
}

inline std::string quasi(const QuasiDistribution& q) {
  std::string out;
  for (std::size_t a = 0; a < q.rank(); ++a) out += "j" + std::to_string(a + 1) + ",";
  out += "re,im\n";
  for (std::size_t f = 0; f < q.values().size(); ++f) {
    for (auto i : q.unflatten(f)) out += std::to_string(i) + ",";
    out += number(q.values()[f].real()) + "," + number(q.values()[f].imag()) + "\n";
  }
  return out;
}

}  // namespace csv

}  // namespace qrs
