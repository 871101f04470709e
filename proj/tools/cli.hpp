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

// Command-line front end. `run` takes the arguments after the program name and
// writes data to `out`, diagnostics to `err`. Nothing reaches `out` unless the
// whole command succeeds.
//
// Exit codes: 0 success, 2 validation error, 3 internal numerical invariant violated.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qrs/qrs.hpp"

namespace qrs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_source(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

/// "re" or "re,im".
inline Complex parse_complex(const std::string& text, const std::string& what) {
  const auto parts = parse_numbers(text, what);
  if (parts.size() == 1) return parts[0];
  if (parts.size() == 2) return {parts[0], parts[1]};
  throw UsageError(what + " must be 're' or 're,im'");
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_source(path)); }

// ---------------------------------------------------------------------------
// schmidt

struct SchmidtArgs {
  std::string scenario;
  std::string bell;
  std::string cut;
};

inline PureState schmidt_source(const SchmidtArgs& args) {
  if (args.scenario.empty() == args.bell.empty()) throw UsageError("give exactly one of SCENARIO or --bell a,b");
  if (!args.scenario.empty()) return load_scenario(args.scenario).final_state;
  const auto ab = parse_numbers(args.bell, "--bell");
  if (ab.size() != 2) throw UsageError("--bell expects 'a,b'");
  const std::string text = "{\"state\": {\"bell\": {\"a\": " + csv::number(ab[0]) + ", \"b\": " + csv::number(ab[1]) + "}}}";
  return parse_scenario(text).final_state;
}

inline std::string cmd_schmidt(const SchmidtArgs& args) {
  const auto psi = schmidt_source(args);
  const auto left = SubsystemSet::parse(psi.system(), args.cut);
  const auto sd = schmidt_decompose(psi, left);
  const auto all = SubsystemSet::all(psi.system());
  const auto left_spectrum = possible_internal_states(state_of(sd.left, all, psi)).probabilities();
  const auto right_spectrum = possible_internal_states(state_of(sd.right, all, psi)).probabilities();
  Json out{{"cut", sd.left.name()},
           {"coefficients", sd.coefficients},
           {"rank", sd.rank},
           {"schmidt", json::schmidt(sd)},
           {"left_spectrum", left_spectrum},
           {"right_spectrum", right_spectrum}};
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// joint

struct JointArgs {
  std::string scenario;
  std::vector<std::string> systems;
  std::string format = "json";
};

struct JointOutcome {
  Json json;
  std::string csv;
  std::string banner;
};

inline JointOutcome evaluate_query(const PureState& psi, const std::vector<std::string>& specs) {
  std::vector<SubsystemSet> sets;
  for (const auto& s : specs) sets.push_back(SubsystemSet::parse(psi.system(), s));
  const auto verdict = comparability(sets, psi.system());
  JointOutcome out;
  Json j{{"systems", specs}, {"verdict", json::verdict(verdict)}};
  if (verdict.route == ComparabilityRoute::pairwise_disjoint) {
    const auto d = joint_probability(sets, psi);
    j["distribution"] = json::joint(d);
    out.csv = csv::joint(d);
  } else if (verdict.route == ComparabilityRoute::complement_reduction) {
    const auto d = comparable_joint(sets, psi);
    j["distribution"] = json::joint(d);
    out.csv = csv::joint(d);
  } else {
    const auto q = formal_joint(sets, psi);
    j["banner"] = "NOT COMPARABLE";
    j["distribution"] = json::quasi(q);
    out.csv = csv::quasi(q);
    std::string names;
    for (const auto& s : specs) names += (names.empty() ? "" : " ") + s;
    out.banner = "NOT COMPARABLE: " + names + " (max_imag=" + csv::number(q.max_imag()) +
                 ", min_real=" + csv::number(q.min_real()) + ")\n";
  }
  out.json = std::move(j);
  return out;
}

inline std::string cmd_joint(const JointArgs& args, std::string& diagnostics) {
  if (args.format != "json" && args.format != "csv") throw UsageError("--format must be json or csv");
  const auto scenario = load_scenario(args.scenario);
  std::vector<std::vector<std::string>> queries;
  if (!args.systems.empty()) {
    queries.push_back(args.systems);
  } else {
    queries = scenario.queries;
  }
  if (queries.empty()) throw UsageError("no systems given and the scenario has no queries");
  if (args.format == "csv" && queries.size() != 1) throw UsageError("csv output needs exactly one query");

  Json results = Json::array();
  std::string csv_text;
  for (const auto& q : queries) {
    auto outcome = evaluate_query(scenario.final_state, q);
    diagnostics += outcome.banner;
    results.push_back(std::move(outcome.json));
    csv_text = std::move(outcome.csv);
  }
  if (args.format == "csv") return csv_text;
  return Json{{"results", std::move(results)}}.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// bell

struct BellArgs {
  std::string a;
  std::string b;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::string model = "all";
  bool sweep = false;
  std::size_t grid = 16;
  std::string chsh_angles;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  bool degrees = false;
  std::size_t threads = 0;
};

inline BellScenario bell_base(const BellArgs& args) {
  BellScenario s;
  if (!args.a.empty() || !args.b.empty()) {
    Complex a = args.a.empty() ? Complex(0.0) : parse_complex(args.a, "--a");
    Complex b = args.b.empty() ? Complex(0.0) : parse_complex(args.b, "--b");
    if (args.b.empty()) b = std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
    if (args.a.empty()) a = std::sqrt(std::max(0.0, 1.0 - std::norm(b)));
    const double norm = std::sqrt(std::norm(a) + std::norm(b));
    if (std::abs(norm - 1.0) > tol::kRenormalizeBand) {
      throw UsageError("|a|^2 + |b|^2 must be 1, got " + csv::number(norm * norm));
    }
    s.a = a / norm;
    s.b = b / norm;
  }
  const double unit = args.degrees ? std::numbers::pi / 180.0 : 1.0;
  s.theta1 = args.theta1 * unit;
  s.theta2 = args.theta2 * unit;
  s.validate();
  return s;
}

struct SweepRow {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double e_quantum = 0.0;
  double e_hidden = 0.0;
  double s_quantum = 0.0;
  double s_hidden = 0.0;
  double max_imag = 0.0;
  double min_real = 0.0;
};

/// CHSH settings attached to grid point (t1, t2): a = (t1, t1 + pi/2), b = (t2, t2 + pi/2).
inline ChshAngles grid_chsh_angles(double t1, double t2) {
  return {t1, t1 + std::numbers::pi / 2, t2, t2 + std::numbers::pi / 2};
}

inline SweepRow sweep_point(const BellScenario& base, double t1, double t2) {
  BellScenario s = base;
  s.theta1 = t1;
  s.theta2 = t2;
  const auto r = run_bell(s);
  const auto angles = grid_chsh_angles(t1, t2);
  return {t1,
          t2,
          r.e_quantum,
          *r.e_hidden,
          chsh(base, angles, CorrelatorModel::quantum),
          chsh(base, angles, CorrelatorModel::hidden),
          r.quasi.max_imag(),
          r.quasi.min_real()};
}

/// Rows in grid order (theta1 major), however many threads computed them.
inline std::vector<SweepRow> sweep(const BellScenario& base, std::size_t grid, std::size_t threads) {
  const std::size_t n = grid * grid;
  std::vector<SweepRow> rows(n);
  std::vector<std::exception_ptr> errors(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  auto work = [&](std::size_t first) {
    for (std::size_t i = first; i < n; i += threads) {
      try {
        const double t1 = 2.0 * std::numbers::pi * static_cast<double>(i / grid) / static_cast<double>(grid);
        const double t2 = 2.0 * std::numbers::pi * static_cast<double>(i % grid) / static_cast<double>(grid);
        rows[i] = sweep_point(base, t1, t2);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "theta1,theta2,E_quantum,E_hidden,S_quantum,S_hidden,max_imag,min_real\n";
  for (const auto& r : rows) {
    for (double v : {r.theta1, r.theta2, r.e_quantum, r.e_hidden, r.s_quantum, r.s_hidden, r.max_imag}) {
      out += csv::number(v) + ",";
    }
    out += csv::number(r.min_real) + "\n";
  }
  return out;
}

inline std::string cmd_bell(const BellArgs& args) {
  static const std::vector<std::string> models{"quantum", "hidden", "quasi", "all"};
  if (std::find(models.begin(), models.end(), args.model) == models.end()) {
    throw UsageError("invalid model '" + args.model + "'; valid models: quantum, hidden, quasi, all");
  }
  if (args.sweep && !args.chsh_angles.empty()) throw UsageError("--sweep and --chsh-angles are exclusive");
  if (args.grid == 0) throw UsageError("--grid must be positive");
  const BellScenario base = bell_base(args);
  const bool want_quantum = args.model == "quantum" || args.model == "all";
  const bool want_hidden = args.model == "hidden" || args.model == "all";

  if (args.sweep) return sweep_csv(sweep(base, args.grid, args.threads));

  if (!args.chsh_angles.empty()) {
    if (args.model == "quasi") throw UsageError("--chsh-angles needs model quantum, hidden or all");
    auto v = parse_numbers(args.chsh_angles, "--chsh-angles");
    if (v.size() != 4) throw UsageError("--chsh-angles expects a1,a2,b1,b2");
    if (args.degrees) {
      for (auto& x : v) x *= std::numbers::pi / 180.0;
    }
    const ChshAngles angles{v[0], v[1], v[2], v[3]};
    Json out{{"angles", v}};
    if (want_quantum) out["S_quantum"] = chsh(base, angles, CorrelatorModel::quantum);
    if (want_hidden) out["S_hidden"] = chsh(base, angles, CorrelatorModel::hidden);
    return out.dump(2) + "\n";
  }

  BellScenario s = base;
  s.include_m3 = want_hidden;
  const auto result = run_bell(s);
  Json out = json::bell(result, want_quantum, want_hidden, args.model == "quasi" || args.model == "all");
  if (args.samples > 0) {
    Json samples{{"draws", args.samples}, {"seed", args.seed}, {"algorithm", std::string(kSamplerAlgorithm)}};
    auto block = [&](const std::vector<double>& exact) {
      return Json{{"exact", exact}, {"empirical", sample_frequencies(exact, args.seed, args.samples)}};
    };
    if (want_quantum) samples["quantum_joint"] = block(result.quantum_joint.values());
    if (want_hidden) samples["hidden_joint"] = block(*result.hidden_joint);
    out["samples"] = std::move(samples);
  }
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relative states, joint probabilities and Bell tests on small composite systems."};
  app.require_subcommand(1);

  SchmidtArgs schmidt_args;
  auto* schmidt = app.add_subcommand("schmidt", "Schmidt decomposition across a cut");
  schmidt->add_option("scenario", schmidt_args.scenario, "Scenario file ('-' for stdin)");
  schmidt->add_option("--bell", schmidt_args.bell, "Use a|up,down> - b|down,up> given as 'a,b'");
  schmidt->add_option("--cut", schmidt_args.cut, "Left side of the cut, labels joined by '+'")->required();

  JointArgs joint_args;
  auto* joint = app.add_subcommand("joint", "Joint (or formal quasi-) probabilities of possible internal states");
  joint->add_option("scenario", joint_args.scenario, "Scenario file ('-' for stdin)")->required();
  joint->add_option("systems", joint_args.systems, "Systems such as 'S1+S2 S2+S3'; default: the file's queries");
  joint->add_option("--format", joint_args.format, "json or csv");

  BellArgs bell_args;
  auto* bell = app.add_subcommand("bell", "Two-particle spin correlation experiment");
  bell->add_option("--a", bell_args.a, "Coefficient a ('re' or 're,im')");
  bell->add_option("--b", bell_args.b, "Coefficient b ('re' or 're,im')");
  bell->add_option("--theta1", bell_args.theta1, "Axis angle of the first device");
  bell->add_option("--theta2", bell_args.theta2, "Axis angle of the second device");
  bell->add_option("--model", bell_args.model, "quantum, hidden, quasi or all");
  bell->add_flag("--sweep", bell_args.sweep, "Emit the CSV angle grid");
  bell->add_option("--grid", bell_args.grid, "Points per angle in the sweep");
  bell->add_option("--chsh-angles", bell_args.chsh_angles, "a1,a2,b1,b2");
  bell->add_option("--seed", bell_args.seed, "Seed for --samples");
  bell->add_option("--samples", bell_args.samples, "Number of sampled outcome pairs");
  bell->add_flag("--degrees", bell_args.degrees, "Angles are in degrees");
  bell->add_option("--threads", bell_args.threads, "Sweep worker threads (0: hardware)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  std::string data;
  std::string diagnostics;
  try {
    if (schmidt->parsed()) {
      data = cmd_schmidt(schmidt_args);
    } else if (joint->parsed()) {
      data = cmd_joint(joint_args, diagnostics);
    } else {
      data = cmd_bell(bell_args);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::numerical ? kExitNumerical : kExitValidation;
  }
  err << diagnostics;
  out << data;
  return kExitOk;
}

}  // namespace qrs::cli
