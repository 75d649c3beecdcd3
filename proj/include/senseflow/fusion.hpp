// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/knowledge.hpp"
#include "senseflow/value.hpp"

namespace senseflow {

enum class Capability {
  compare,
  logical_and,
  logical_or,
  rule_eval,
  window_average,
  latest_value,
  impute_linear,
};

std::string_view to_string(Capability capability);
std::optional<Capability> parse_capability(std::string_view text);

struct ParamSpec {
  std::string name;
  ValueKind kind = ValueKind::any;
  bool required = false;
};

struct Signature {
  std::vector<ValueKind> inputs;
  ValueKind output = ValueKind::any;
};

struct OperatorDescriptor {
  std::string id;
  Capability capability = Capability::compare;
  /// Fixed input count; nullopt means variadic (inputs[0] repeats).
  std::optional<std::size_t> arity;
  std::vector<ValueKind> input_kinds;
  ValueKind output_kind = ValueKind::any;
  std::vector<ParamSpec> params;
  std::string description;
};

/// Parameters handed to an operator invocation.
struct OperatorParams {
  std::map<std::string, Value, std::less<>> values;
  /// rule-eval: the attribute bound to each input position.
  std::vector<std::string> bindings;
  /// rule-eval: rules in document order.
  std::vector<Rule> rules;

  const Value* find(std::string_view key) const {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  }
};

using OperatorFn = std::function<Value(std::span<const TimedValue>, const OperatorParams&)>;

/// Data fusion operator repository. Operators are pure; registration is
/// serialized, lookups and application run concurrently.
class OperatorRepository {
 public:
  OperatorRepository() = default;
  OperatorRepository(const OperatorRepository&) = delete;
  OperatorRepository& operator=(const OperatorRepository&) = delete;

  /// Repository pre-populated with the built-in operator set.
  static std::unique_ptr<OperatorRepository> with_builtins();

  std::string register_operator(OperatorDescriptor descriptor, OperatorFn implementation);

  /// Lowest-id operator with the capability whose signature accepts
  /// `signature` (when given). Throws Error{no_operator_found}.
  OperatorDescriptor find_operator(Capability capability,
                                   const std::optional<Signature>& signature = std::nullopt) const;

  /// Throws Error{arity_mismatch}, Error{kind_mismatch}, Error{no_operator_found}.
  Value apply(std::string_view operator_id, std::span<const TimedValue> inputs,
              const OperatorParams& params = {}) const;
  Value apply(std::string_view operator_id, std::span<const Value> inputs,
              const OperatorParams& params = {}) const;

  std::optional<OperatorDescriptor> descriptor(std::string_view operator_id) const;
  std::vector<OperatorDescriptor> list() const;

 private:
  struct Entry {
    OperatorDescriptor descriptor;
    OperatorFn fn;
  };

  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> operators_;
};

/// Checks that a descriptor's signature is consistent with its capability.
/// Throws Error{signature_mismatch}.
void validate_descriptor(const OperatorDescriptor& descriptor);

/// Three-valued rule evaluation, document order, first definite match wins.
/// ELSE applies only when every rule is definitely false.
Value evaluate_rules(std::span<const Rule> rules,
                     const std::map<std::string, Value, std::less<>>& bindings);

/// Mean of values within (now - window_ms, now]; `now` defaults to the
/// newest timestamp in the series. Unknown on an empty window or any
/// unknown sample.
Value window_average(std::span<const TimedValue> series, std::int64_t window_ms,
                     std::optional<std::int64_t> now = std::nullopt);

/// Linear interpolation between the readings bracketing `at`; unknown
/// outside the observed range.
Value impute_linear(std::span<const TimedValue> series, std::int64_t at);

}  // namespace senseflow
