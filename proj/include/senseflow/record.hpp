// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/value.hpp"

namespace senseflow {

enum class Quality { measured, derived, unknown };

std::string_view to_string(Quality q);
std::optional<Quality> parse_quality(std::string_view text);

struct RecordAnnotations {
  /// Location label per contributing source sensor.
  std::map<std::string, std::string> geographical_location;
  std::vector<std::string> source_sensor_ids;
  std::map<std::string, Quality> quality;

  friend bool operator==(const RecordAnnotations&, const RecordAnnotations&) = default;
};

/// Timestamped bundle of fused attribute values.
struct DataRecord {
  std::int64_t timestamp_ms = 0;
  std::map<std::string, Value> values;
  RecordAnnotations annotations;

  friend bool operator==(const DataRecord&, const DataRecord&) = default;
};

}  // namespace senseflow
