// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "senseflow/value.hpp"

namespace senseflow {

/// A named, typed, unit-bearing piece of context (e.g. airTemperature in C).
struct ContextAttribute {
  std::string name;
  std::string unit;
  ValueKind kind = ValueKind::number;

  friend bool operator==(const ContextAttribute&, const ContextAttribute&) = default;
};

}  // namespace senseflow
