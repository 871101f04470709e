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

#include <gtest/gtest.h>

#include <string>

#include "qrs/qrs.hpp"

#define EXPECT_ERRC(statement, expected)                                                          \
  do {                                                                                            \
    try {                                                                                         \
      statement;                                                                                  \
      ADD_FAILURE() << "expected qrs::Error " << qrs::to_string(expected) << ", nothing thrown";  \
    } catch (const qrs::Error& e) {                                                               \
      EXPECT_EQ(e.code(), expected) << e.what();                                                  \
    }                                                                                             \
  } while (0)

namespace testing_util {

inline qrs::Vector ket(std::initializer_list<qrs::Complex> values) {
  qrs::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (auto x : values) v(i++) = x;
  return v;
}

inline qrs::Vector up() { return ket({1.0, 0.0}); }
inline qrs::Vector down() { return ket({0.0, 1.0}); }

inline qrs::CompositeSystem qubits(std::initializer_list<const char*> labels) {
  std::vector<qrs::Subsystem> parts;
  for (const char* l : labels) parts.push_back({l, 2});
  return qrs::CompositeSystem(parts);
}

}  // namespace testing_util
