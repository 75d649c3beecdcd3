// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace senseflow {

/// Stable error codes. The string form (see to_string) is part of the
/// external interface: the CLI and the HTTP endpoint report it verbatim.
enum class ErrorCode {
  malformed_sdd,
  invalid_sdd,
  unsupported_driver,
  wrapper_unavailable,
  sensor_fault,
  invalid_descriptor,
  duplicate_sensor_id,
  unknown_provider,
  malformed_domain,
  cyclic_dependency,
  unknown_attribute,
  duplicate_operator_id,
  signature_mismatch,
  no_operator_found,
  arity_mismatch,
  kind_mismatch,
  unsatisfiable_attribute,
  state_violation,
  schema_violation,
  unsupported_format,
  invalid_interval,
  sink_unavailable,
  unknown_subscription,
  config_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace senseflow
