// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

// Internal helpers shared by the document loaders.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "senseflow/error.hpp"
#include "senseflow/value.hpp"

namespace senseflow::detail {

using json = nlohmann::json;

inline json parse_json(std::string_view document, ErrorCode code, std::string_view what) {
  try {
    return json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(code, std::string(what) + ": " + e.what());
  }
}

/// JSON scalar to Value: numbers, booleans, strings, {lat, lon} objects, null.
inline std::optional<Value> value_from_json(const json& j) {
  if (j.is_null()) return Value::unknown();
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number()) return Value(j.get<double>());
  if (j.is_string()) return Value(j.get<std::string>());
  if (j.is_object() && j.contains("lat") && j.contains("lon") && j["lat"].is_number() &&
      j["lon"].is_number()) {
    return Value(GeoPoint{j["lat"].get<double>(), j["lon"].get<double>()});
  }
  return std::nullopt;
}

template <class Json>
Json value_to_json(const Value& v) {
  if (v.is_unknown()) return Json(nullptr);
  if (v.is_boolean()) return Json(v.as_boolean());
  if (v.is_number()) return Json(v.as_number());
  if (v.is_string()) return Json(v.as_string());
  Json geo = Json::object();
  geo["lat"] = v.as_geo().latitude;
  geo["lon"] = v.as_geo().longitude;
  return geo;
}

inline std::string describe_type(const json& j) { return j.type_name(); }

}  // namespace senseflow::detail
