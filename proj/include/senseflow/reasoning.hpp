// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "senseflow/fusion.hpp"
#include "senseflow/knowledge.hpp"
#include "senseflow/registry.hpp"

namespace senseflow {

enum class OutputFormat { json_lines, csv };

std::string_view to_string(OutputFormat format);
std::optional<OutputFormat> parse_output_format(std::string_view text);

struct Request {
  std::string request_id;
  std::set<std::string> requested_attributes;
  std::optional<std::string> location_constraint;
  OutputFormat output_format = OutputFormat::json_lines;
  std::int64_t delivery_interval_ms = 1000;
  std::optional<std::int64_t> duration_ms;
  bool include_context_annotations = false;
};

/// Throws Error{invalid_interval} or Error{schema_violation}.
void validate_request(const Request& request);

/// Closure of the requested attributes under kb.dependencies, including the
/// requested attributes. Throws Error{unknown_attribute} for an attribute
/// known to neither the knowledge base nor the registry.
std::set<std::string> required_context(const Request& request, const KnowledgeBase& kb,
                                       const ProviderRegistry& registry);

struct Classification {
  std::set<std::string> primary;
  std::set<std::string> secondary;
};

/// Direct acquisition wins; otherwise an attribute with rules is secondary.
/// Throws Error{unsatisfiable_attribute}.
Classification classify(const std::set<std::string>& attributes, const ProviderRegistry& registry,
                        const KnowledgeBase& kb, const ProviderConstraints& constraints = {});

struct SourceNode {
  ProviderId provider_id;
  std::string sensor_id;
  std::string model_id;
  std::string location_label;
  /// Attributes this source is selected for, sorted.
  std::vector<std::string> attributes;
};

struct DeriveNode {
  std::string attribute;
  std::string operator_id;
  std::vector<Rule> rules;
  /// Dependency attributes, sorted.
  std::vector<std::string> inputs;
};

using PlanNode = std::variant<SourceNode, DeriveNode>;

struct PlanEdge {
  std::string attribute;  ///< value carried along the edge
  std::size_t from = 0;   ///< producing node index
  std::size_t to = 0;     ///< consuming node index
};

struct PlanSpec {
  std::string plan_id;
  std::string canonical_key;
  std::vector<PlanNode> nodes;
  std::vector<PlanEdge> edges;
  /// Attributes carried in delivered records.
  std::vector<std::string> outputs;
  std::int64_t delivery_interval_ms = 1000;

  std::size_t source_count() const;
  std::size_t derive_count() const;
  /// Index of the node producing `attribute`, if any.
  std::optional<std::size_t> producer_of(std::string_view attribute) const;
};

/// Checks the structural invariants (DAG, single producer per attribute,
/// every requested attribute produced, leaves are online sources).
/// Throws Error{state_violation} naming the broken invariant.
void validate_plan(const PlanSpec& plan, const ProviderRegistry* registry = nullptr);

/// Node indices in a deterministic topological order (Kahn, lowest index first).
std::vector<std::size_t> topological_order(const PlanSpec& plan);

PlanSpec build_plan(const Request& request, const ProviderRegistry& registry, const KnowledgeBase& kb,
                    const OperatorRepository& operators);

/// Key identifying requests that can share one pipeline.
std::string canonical_key(const Request& request);

}  // namespace senseflow
