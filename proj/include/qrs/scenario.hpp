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

// Scenario files: subsystems, an initial state, measuring devices applied in
// order, and subsystem-set queries. Every validation error names the line of
// the offending JSON value.
//
//   {
//     "subsystems": [{"label": "P1", "dim": 2}, {"label": "P2", "dim": 2}],
//     "state": {"amplitudes": [[0, 0], [0.7071067811865476, 0], ...]}
//           | {"bell": {"a": 0.6, "b": [0.8, 0]}},
//     "devices": [{"label": "M1", "target": "P1", "theta": 0.5}, ...],
//     "queries": [["P1", "P2"], ["P1+M1", "M1", "M2"]]
//   }

#pragma once

#include <map>
#include <type_traits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrs/bell.hpp"
#include "qrs/hilbert.hpp"
#include "qrs/measurement.hpp"
#include "qrs/serialize.hpp"

namespace qrs {

/// A validation failure located in the scenario text.
class ScenarioError : public Error {
 public:
  ScenarioError(std::size_t line, std::string pointer, const std::string& message)
      : Error(Errc::invalid_argument, "line " + std::to_string(line) + ": " + (pointer.empty() ? "/" : pointer) +
                                          ": " + message),
        line_(line),
        pointer_(std::move(pointer)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::size_t line_;
  std::string pointer_;
};

namespace detail {

/// Line on which each JSON value starts, keyed by JSON pointer. Assumes the
/// text already parsed successfully.
class JsonLineIndex {
 public:
  explicit JsonLineIndex(std::string_view text) : text_(text) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  /// Line of `pointer`, or of its nearest recorded ancestor.
  std::size_t line(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') {
        out += "~0";
      } else if (c == '/') {
        out += "~1";
      } else {
        out += c;
      }
    }
    return out;
  }

  void value(const std::string& path) {
    lines_[path] = line_;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const auto key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(path + "/" + escape(key));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      std::size_t i = 0;
      while (pos_ < text_.size() && text_[pos_] != ']') {
        value(path + "/" + std::to_string(i++));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && std::string_view(",]} \t\r\n").find(text_[pos_]) == std::string_view::npos) ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
};

}  // namespace detail

struct ScenarioDevice {
  MeasurementDevice device;
  std::string target;  // "A+B"
};

struct Scenario {
  PureState initial;
  std::vector<ScenarioDevice> devices;
  std::vector<std::vector<std::string>> queries;
  PureState final_state;  // initial with every device attached and applied in order
};

namespace detail {

class ScenarioParser {
 public:
  explicit ScenarioParser(std::string_view text) : text_(text), index_(text) {}

  Scenario parse() {
    Json root;
    try {
      root = Json::parse(text_);
    } catch (const nlohmann::json::parse_error& e) {
      throw ScenarioError(line_of_byte(e.byte), "", std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) fail("", "scenario must be a JSON object");
    for (const auto& [key, _] : root.items()) {
      if (key != "subsystems" && key != "state" && key != "devices" && key != "queries") {
        fail("/" + key, "unknown key '" + key + "'");
      }
    }
    if (!root.contains("state")) fail("", "missing 'state'");
    PureState initial = parse_state(root);

    std::vector<ScenarioDevice> devices;
    PureState current = initial;
    if (root.contains("devices")) {
      const auto& list = root["devices"];
      if (!list.is_array()) fail("/devices", "expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "/devices/" + std::to_string(i);
        auto dev = parse_device(list[i], where, current.system());
        current = guarded(where, [&] { return measure(current, dev.device, dev.target); });
        devices.push_back(std::move(dev));
      }
    }

    std::vector<std::vector<std::string>> queries;
    if (root.contains("queries")) {
      const auto& list = root["queries"];
      if (!list.is_array()) fail("/queries", "expected an array of arrays of subsystem sets");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "/queries/" + std::to_string(i);
        const auto& q = list[i];
        if (!q.is_array() || q.empty()) fail(where, "expected a non-empty array of subsystem sets");
        std::vector<std::string> sets;
        for (std::size_t k = 0; k < q.size(); ++k) {
          const std::string item = where + "/" + std::to_string(k);
          if (!q[k].is_string()) fail(item, "expected a string like \"A+B\"");
          const auto spec = q[k].get<std::string>();
          guarded(item, [&] { return SubsystemSet::parse(current.system(), spec); });
          sets.push_back(spec);
        }
        queries.push_back(std::move(sets));
      }
    }
    return Scenario{std::move(initial), std::move(devices), std::move(queries), std::move(current)};
  }

 private:
  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ScenarioError(index_.line(pointer), pointer, message);
  }

  template <typename F>
  std::invoke_result_t<F> guarded(const std::string& pointer, F&& f) const {
    try {
      return f();
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      fail(pointer, e.what());
    }
  }

  std::size_t line_of_byte(std::size_t byte) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text_.size(); ++i) line += text_[i] == '\n';
    return line;
  }

  double number(const Json& j, const std::string& where) const {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
  }

  std::size_t count(const Json& j, const std::string& where) const {
    if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return j.get<std::size_t>();
  }

  Complex complex_number(const Json& j, const std::string& where) const {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
      return {j[0].get<double>(), j[1].get<double>()};
    }
    fail(where, "expected a number or [re, im]");
  }

  std::optional<CompositeSystem> parse_subsystems(const Json& root) const {
    if (!root.contains("subsystems")) return std::nullopt;
    const auto& list = root["subsystems"];
    if (!list.is_array() || list.empty()) fail("/subsystems", "expected a non-empty array of {label, dim}");
    std::vector<Subsystem> parts;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "/subsystems/" + std::to_string(i);
      const auto& s = list[i];
      if (!s.is_object() || !s.contains("label") || !s.contains("dim")) fail(where, "expected {label, dim}");
      if (!s["label"].is_string()) fail(where + "/label", "expected a string");
      parts.push_back({s["label"].get<std::string>(), count(s["dim"], where + "/dim")});
      guarded(where, [&] { return CompositeSystem(parts); });
    }
    return CompositeSystem(std::move(parts));
  }

  PureState parse_state(const Json& root) const {
    const auto& state = root["state"];
    auto system = parse_subsystems(root);
    if (!state.is_object()) fail("/state", "expected an object");
    if (state.contains("amplitudes") == state.contains("bell")) {
      fail("/state", "give exactly one of 'amplitudes' or 'bell'");
    }
    if (state.contains("amplitudes")) {
      if (!system) fail("", "'subsystems' is required with explicit amplitudes");
      const auto& amps = state["amplitudes"];
      const Vector v = guarded("/state/amplitudes", [&] { return json::parse_vector(amps); });
      if (static_cast<std::size_t>(v.size()) != system->total_dim()) {
        fail("/state/amplitudes", "expected " + std::to_string(system->total_dim()) + " amplitudes, got " +
                                      std::to_string(v.size()));
      }
      return guarded("/state/amplitudes", [&] { return PureState(*system, v); });
    }
    const auto& bell = state["bell"];
    if (!bell.is_object() || !bell.contains("a") || !bell.contains("b")) fail("/state/bell", "expected {a, b}");
    Complex a = complex_number(bell["a"], "/state/bell/a");
    Complex b = complex_number(bell["b"], "/state/bell/b");
    const double norm = std::sqrt(std::norm(a) + std::norm(b));
    if (std::abs(norm - 1.0) > tol::kRenormalizeBand) {
      fail("/state/bell", "|a|^2 + |b|^2 must be 1, got " + std::to_string(norm * norm));
    }
    a /= norm;
    b /= norm;
    const CompositeSystem pair{{"P1", 2}, {"P2", 2}};
    if (system && !(*system == pair)) fail("/subsystems", "the bell constructor lives on [{P1, 2}, {P2, 2}]");
    return guarded("/state/bell", [&] { return build_bell_state(a, b); });
  }

  ScenarioDevice parse_device(const Json& d, const std::string& where, const CompositeSystem& system) const {
    if (!d.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : d.items()) {
      if (key != "label" && key != "target" && key != "theta" && key != "basis" && key != "pointer_dim" &&
          key != "ready_index" && key != "pointers") {
        fail(where + "/" + key, "unknown device key '" + key + "'");
      }
    }
    if (!d.contains("label") || !d["label"].is_string()) fail(where, "device needs a string 'label'");
    if (!d.contains("target") || !d["target"].is_string()) fail(where, "device needs a string 'target'");
    const auto label = d["label"].get<std::string>();
    const auto target_spec = d["target"].get<std::string>();
    if (system.find(label)) fail(where + "/label", "label '" + label + "' is already in use");
    const auto target = guarded(where + "/target", [&] { return SubsystemSet::parse(system, target_spec); });

    std::vector<Vector> basis;
    if (d.contains("theta") == d.contains("basis")) fail(where, "give exactly one of 'theta' or 'basis'");
    if (d.contains("theta")) {
      if (target.dim() != 2) fail(where + "/theta", "'theta' needs a qubit target, " + target.name() + " is not");
      const auto pair = guarded(where + "/theta", [&] { return spin_basis(number(d["theta"], where + "/theta")); });
      basis = {pair[0], pair[1]};
    } else {
      const auto& list = d["basis"];
      if (!list.is_array()) fail(where + "/basis", "expected an array of vectors");
      for (std::size_t k = 0; k < list.size(); ++k) {
        basis.push_back(guarded(where + "/basis/" + std::to_string(k), [&] { return json::parse_vector(list[k]); }));
      }
    }

    auto device = MeasurementDevice::standard(label, basis);
    if (d.contains("pointer_dim")) device.pointer_dim = count(d["pointer_dim"], where + "/pointer_dim");
    if (d.contains("ready_index")) device.ready_index = count(d["ready_index"], where + "/ready_index");
    if (d.contains("pointers")) {
      const auto& p = d["pointers"];
      if (!p.is_array() || p.size() != basis.size()) {
        fail(where + "/pointers", "expected one pointer index per basis vector");
      }
      for (std::size_t k = 0; k < p.size(); ++k) {
        device.outcomes[k].pointer_index = count(p[k], where + "/pointers/" + std::to_string(k));
      }
    }
    guarded(where, [&] {
      device.validate(target.dim());
      return 0;
    });
    return {std::move(device), target.name()};
  }

  std::string_view text_;
  JsonLineIndex index_;
};

}  // namespace detail

/// Parses and fully validates a scenario, including running its devices.
inline Scenario parse_scenario(std::string_view text) { return detail::ScenarioParser(text).parse(); }

}  // namespace qrs
