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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "qrs/qrs.hpp"

namespace {

using namespace qrs;
using std::numbers::pi;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) detail = what;
    ok = ok && condition;
  }
};

std::vector<double> grid16() {
  std::vector<double> out;
  for (int i = 0; i < 16; ++i) out.push_back(2.0 * pi * i / 16.0);
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

BellScenario bell(Complex a, Complex b, double t1, double t2, bool with_m3) {
  BellScenario s;
  s.a = a;
  s.b = b;
  s.theta1 = t1;
  s.theta2 = t2;
  s.include_m3 = with_m3;
  return s;
}

/// The same 200 random states feed criteria 2, 3 and 4.
std::vector<PureState> random_states() {
  std::mt19937_64 rng(20260101);
  std::vector<PureState> out;
  for (int i = 0; i < 200; ++i) out.push_back(oracle::random_state(rng, oracle::random_system(rng, 4, 3)));
  return out;
}

Check measurement_pipeline() {
  Check c;
  const double alpha = 0.6, beta = 0.8;
  Vector spin(2);
  spin << alpha, beta;
  Vector up(2), down(2);
  up << 1, 0;
  down << 0, 1;
  const auto device = MeasurementDevice::standard("M", {up, down});
  const PureState prepared(CompositeSystem{{"P", 2}}, spin);
  const auto coupled = apply(build_measurement_unitary(device, SubsystemSet(attach_device(prepared, device).system(), {"P"})),
                             attach_device(prepared, device));
  const auto ensemble = possible_internal_states(SubsystemSet(coupled.system(), {"M"}), coupled);
  // Match each possible internal state of M to the pointer it is.
  double p_up = -1.0, p_down = -1.0;
  std::size_t i_down = 0;
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    const auto& s = ensemble.states[k];
    if (fidelity(s.vector, Vector::Unit(3, 1)) > 1 - 1e-12) p_up = s.probability;
    if (fidelity(s.vector, Vector::Unit(3, 2)) > 1 - 1e-12) {
      p_down = s.probability;
      i_down = k;
    }
  }
  c.expect(std::abs(p_up - alpha * alpha) <= 1e-12, "P(m_up) = " + fmt(p_up));
  c.expect(std::abs(p_down - beta * beta) <= 1e-12, "P(m_down) = " + fmt(p_down));
  const auto freq = sample_frequencies(ensemble.probabilities(), 8, 100000);
  c.expect(std::abs(freq[i_down] - beta * beta) <= 0.01, "sampled m_down frequency " + fmt(freq[i_down]));
  c.expect(std::abs(1.0 - freq[i_down] - alpha * alpha) <= 0.01, "sampled m_up frequency");
  c.detail = c.ok ? "P = (" + fmt(p_up) + ", " + fmt(p_down) + "), sampled m_down " + fmt(freq[i_down]) : c.detail;
  return c;
}

Check schmidt_oracle(const std::vector<PureState>& states) {
  Check c;
  double worst_trace = 0.0, worst_fid = 0.0, worst_spec = 0.0;
  for (const auto& psi : states) {
    const auto& system = psi.system();
    const auto dims = oracle::dims_of(system);
    const unsigned full = (1u << system.size()) - 1;
    for (unsigned mask = 1; mask <= full; ++mask) {
      const auto keep = oracle::positions_from_mask(mask, system.size());
      const auto set = oracle::set_from_positions(system, keep);
      const auto rho = partial_trace(psi, set);
      worst_trace = std::max(worst_trace, max_abs_diff(rho.matrix(), oracle::partial_trace(psi.amplitudes(), dims, keep)));
      if (mask == full) continue;
      const auto sd = schmidt_decompose(psi, set);
      worst_fid = std::max(worst_fid, 1.0 - fidelity(reconstruct(sd).amplitudes(), psi.amplitudes()));
      const auto left = possible_internal_states(rho).probabilities();
      const auto right = possible_internal_states(partial_trace(psi, set.complement())).probabilities();
      for (std::size_t k = 0; k < std::min(left.size(), right.size()); ++k) {
        worst_spec = std::max(worst_spec, std::abs(left[k] - right[k]));
      }
      for (std::size_t k = std::min(left.size(), right.size()); k < std::max(left.size(), right.size()); ++k) {
        worst_spec = std::max(worst_spec, k < left.size() ? left[k] : right[k]);
      }
    }
  }
  c.expect(worst_trace <= 1e-12, "partial trace differs from oracle by " + fmt(worst_trace));
  c.expect(worst_fid <= 1e-12, "reconstruction infidelity " + fmt(worst_fid));
  c.expect(worst_spec <= 1e-9, "reduced spectra differ by " + fmt(worst_spec));
  if (c.ok) {
    c.detail = "max trace err " + fmt(worst_trace) + ", max infidelity " + fmt(worst_fid) + ", max spectrum gap " +
               fmt(worst_spec);
  }
  return c;
}

Check joint_invariants(const std::vector<PureState>& states) {
  Check c;
  std::mt19937_64 rng(77);
  double worst_norm = 0.0, worst_marginal = 0.0, worst_order = 0.0, worst_oracle = 0.0, lowest = 1.0;
  for (const auto& psi : states) {
    const auto sets = oracle::random_disjoint_sets(rng, psi.system(), 3);
    const auto d = joint_probability(sets, psi);
    double total = 0.0;
    for (double v : d.values()) {
      lowest = std::min(lowest, v);
      total += v;
    }
    worst_norm = std::max(worst_norm, std::abs(total - 1.0));
    const auto dims = oracle::dims_of(psi.system());
    for (std::size_t axis = 0; axis < d.rank(); ++axis) {
      const auto m = d.marginal(axis);
      const auto spectrum =
          oracle::spectrum(oracle::partial_trace(psi.amplitudes(), dims, d.ensembles()[axis].subsystem.positions()));
      for (std::size_t j = 0; j < m.size(); ++j) worst_marginal = std::max(worst_marginal, std::abs(m[j] - spectrum[j]));
    }
    for (std::size_t f = 0; f < d.values().size(); ++f) {
      const auto idx = d.unflatten(f);
      std::vector<Matrix> projectors;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        projectors.push_back(oracle::full_projector(d.ensembles()[i].states[idx[i]].vector, dims,
                                                    d.ensembles()[i].subsystem.positions()));
      }
      worst_oracle = std::max(worst_oracle, std::abs(oracle::projector_chain(psi.amplitudes(), projectors) - d.values()[f]));
    }
    std::vector<std::size_t> perm(sets.size());
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<SubsystemSet> permuted;
      for (auto p : perm) permuted.push_back(sets[p]);
      const auto r = joint_probability(permuted, psi);
      for (std::size_t f = 0; f < d.values().size(); ++f) {
        const auto idx = d.unflatten(f);
        std::vector<std::size_t> moved;
        for (auto p : perm) moved.push_back(idx[p]);
        worst_order = std::max(worst_order, std::abs(r.at(moved) - d.values()[f]));
      }
    }
  }
  c.expect(lowest >= 0.0, "negative entry " + fmt(lowest));
  c.expect(worst_norm <= 1e-9, "normalization off by " + fmt(worst_norm));
  c.expect(worst_marginal <= 1e-9, "marginal off by " + fmt(worst_marginal));
  c.expect(worst_order <= 1e-12, "order dependence " + fmt(worst_order));
  c.expect(worst_oracle <= 1e-12, "projector oracle differs by " + fmt(worst_oracle));
  if (c.ok) {
    c.detail = "min entry " + fmt(lowest) + ", norm err " + fmt(worst_norm) + ", marginal err " + fmt(worst_marginal) +
               ", order err " + fmt(worst_order);
  }
  return c;
}

Check schmidt_cut_diagonal(const std::vector<PureState>& states) {
  Check c;
  double worst = 0.0;
  std::size_t cuts = 0;
  for (const auto& psi : states) {
    const auto& system = psi.system();
    for (unsigned mask = 1; mask + 1 < (1u << system.size()); ++mask) {
      const auto left = oracle::set_from_positions(system, oracle::positions_from_mask(mask, system.size()));
      const auto d = joint_probability({left, left.complement()}, psi);
      ++cuts;
      for (std::size_t f = 0; f < d.values().size(); ++f) {
        const auto idx = d.unflatten(f);
        if (idx[0] != idx[1]) worst = std::max(worst, d.values()[f]);
      }
    }
  }
  c.expect(worst <= 1e-9, "off-diagonal mass " + fmt(worst));
  if (c.ok) c.detail = std::to_string(cuts) + " bipartitions, max off-diagonal " + fmt(worst);
  return c;
}

Check quantum_correlator() {
  Check c;
  double worst = 0.0;
  for (double t1 : grid16()) {
    for (double t2 : grid16()) {
      const auto r = run_bell(bell(std::sqrt(0.5), std::sqrt(0.5), t1, t2, false));
      worst = std::max(worst, std::abs(r.e_quantum + std::cos(t1 - t2)));
    }
  }
  const double s = chsh(BellScenario{}, {0, pi / 2, pi / 4, 3 * pi / 4}, CorrelatorModel::quantum);
  c.expect(worst <= 1e-10, "E_quantum off by " + fmt(worst));
  c.expect(std::abs(std::abs(s) - 2 * std::sqrt(2.0)) <= 1e-9, "|S| = " + fmt(std::abs(s)));
  c.expect(std::abs(s) > 2.0, "no violation");
  if (c.ok) c.detail = "max E err " + fmt(worst) + ", S = " + std::to_string(s);
  return c;
}

/// Runs f(i) for i in [0, n) on a few threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  const std::size_t threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

Check hidden_run() {
  Check c;
  double worst = 0.0;
  for (double t1 : grid16()) {
    for (double t2 : grid16()) {
      const auto r = run_bell(bell(std::sqrt(0.5), std::sqrt(0.5), t1, t2, true));
      worst = std::max(worst, std::abs(*r.e_hidden + std::cos(t1) * std::cos(t2)));
    }
  }
  std::mt19937_64 rng(4096);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
  std::vector<ChshAngles> quads(16 * 16 * 16);
  for (auto& q : quads) q = {angle(rng), angle(rng), angle(rng), angle(rng)};
  std::vector<double> s(quads.size());
  parallel_for(quads.size(), [&](std::size_t i) { s[i] = chsh(BellScenario{}, quads[i], CorrelatorModel::hidden); });
  double max_s = 0.0;
  for (double v : s) max_s = std::max(max_s, std::abs(v));
  c.expect(worst <= 1e-10, "E_hidden off by " + fmt(worst));
  c.expect(max_s <= 2.0 + 1e-9, "|S_hidden| reached " + std::to_string(max_s));
  if (c.ok) c.detail = "max E err " + fmt(worst) + ", max |S_hidden| over 4096 quadruples " + std::to_string(max_s);
  return c;
}

Check quasi_witness() {
  Check c;
  const auto g = grid16();
  const BellScenario singlet;
  double worst_sum = 0.0;
  std::size_t violating = 0, witnessed = 0;
  for (double t1 : g) {
    for (double t2 : g) {
      const double a[2] = {t1, t1 + pi / 2};
      const double b[2] = {t2, t2 + pi / 2};
      double e[2][2];
      bool nonclassical = false;
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
          const auto r = run_bell(bell(singlet.a, singlet.b, a[i], b[k], false));
          e[i][k] = r.e_quantum;
          nonclassical = nonclassical || r.quasi.max_imag() > 1e-6 || r.quasi.min_real() < -1e-6;
          const auto summed = r.quasi.sum_over(0);
          for (std::size_t f = 0; f < 4; ++f) {
            worst_sum = std::max(worst_sum, std::abs(summed.values()[f] - r.quantum_joint.values()[f]));
            // Independent evaluation of the two-device table.
            const double ci = std::cos(a[i] / 2), si = std::sin(a[i] / 2);
            const double ck = std::cos(b[k] / 2), sk = std::sin(b[k] / 2);
            const double x[2][2] = {{ci, si}, {-si, ci}};
            const double y[2][2] = {{ck, sk}, {-sk, ck}};
            const std::size_t j = f / 2, l = f % 2;
            const double amp = std::sqrt(0.5) * (x[j][0] * y[l][1] - x[j][1] * y[l][0]);
            worst_sum = std::max(worst_sum, std::abs(summed.values()[f] - amp * amp));
          }
        }
      }
      const double s = e[0][0] - e[0][1] + e[1][0] + e[1][1];
      if (std::abs(s) > 2.0 + 1e-9) {
        ++violating;
        witnessed += nonclassical;
      }
    }
  }
  c.expect(violating > 0, "no violating grid point");
  c.expect(witnessed == violating, std::to_string(violating - witnessed) + " violating points without a witness");
  c.expect(worst_sum <= 1e-12, "l1-marginal off by " + fmt(worst_sum));
  if (c.ok) {
    c.detail = std::to_string(witnessed) + "/" + std::to_string(violating) + " violating points witnessed, sum err " +
               fmt(worst_sum);
  }
  return c;
}

Check marginal_locality() {
  Check c;
  double worst = 0.0;
  for (const auto& [a, b] : {std::pair<Complex, Complex>{std::sqrt(0.5), std::sqrt(0.5)}, {0.6, Complex(0, 0.8)}}) {
    for (double t1 : grid16()) {
      std::vector<double> first;
      for (double t2 : grid16()) {
        const auto r = run_bell(bell(a, b, t1, t2, false));
        if (first.empty()) first = r.marginal1;
        for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(r.marginal1[j] - first[j]));
      }
    }
  }
  c.expect(worst <= 1e-12, "P(M1,j) varies by " + fmt(worst));
  if (c.ok) c.detail = "max variation over theta2 " + fmt(worst);
  return c;
}

Check comparability_cases(double elapsed_before) {
  Check c;
  const CompositeSystem three{{"S1", 2}, {"S2", 2}, {"S3", 2}};
  const auto v3 = comparability({SubsystemSet::parse(three, "S1+S2"), SubsystemSet::parse(three, "S2+S3")}, three);
  c.expect(v3.comparable && v3.route == ComparabilityRoute::complement_reduction, "3-part case not comparable");
  c.expect(v3.effective.size() == 2 && v3.effective[0].name() == "S3" && v3.effective[1].name() == "S1",
           "3-part case uses the wrong complements");
  const CompositeSystem four{{"S1", 2}, {"S2", 2}, {"S3", 2}, {"S4", 2}};
  const auto v4 = comparability({SubsystemSet::parse(four, "S1+S2"), SubsystemSet::parse(four, "S2+S3")}, four);
  c.expect(!v4.comparable && v4.route == ComparabilityRoute::none, "4-part case reported comparable");
  c.expect(elapsed_before < 60.0, "suite took " + std::to_string(elapsed_before) + " s");
  if (c.ok) c.detail = "3-part via (S3, S1), 4-part none; suite runtime " + fmt(elapsed_before) + " s";
  return c;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const auto states = random_states();
  int failed = 0;
  auto report = [&](int id, const char* name, const Check& c) {
    std::printf("[%s] %d %s: %s\n", c.ok ? "PASS" : "FAIL", id, name, c.detail.c_str());
    std::fflush(stdout);
    failed += !c.ok;
  };
  auto guarded = [&](int id, const char* name, const std::function<Check()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, Check{false, std::string("threw: ") + e.what()});
    }
  };
  guarded(1, "measurement objectification", measurement_pipeline);
  guarded(2, "partial trace and Schmidt oracle", [&] { return schmidt_oracle(states); });
  guarded(3, "joint probability invariants", [&] { return joint_invariants(states); });
  guarded(4, "Schmidt-cut determinism", [&] { return schmidt_cut_diagonal(states); });
  guarded(5, "quantum correlator and CHSH", quantum_correlator);
  guarded(6, "hidden run correlator and CHSH bound", hidden_run);
  guarded(7, "quasi-distribution witness", quasi_witness);
  guarded(8, "locality of marginals", marginal_locality);
  guarded(9, "comparability verdicts and runtime", [&] {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return comparability_cases(elapsed);
  });
  std::printf("%d of 9 criteria failed\n", failed);
  return failed;
}
