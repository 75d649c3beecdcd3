// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/attribute.hpp"
#include "senseflow/value.hpp"

namespace senseflow {

enum class Comparator { less, less_equal, greater, greater_equal, equal, not_equal };

std::string_view to_string(Comparator op);
/// Accepts "<", "<=", ">", ">=", "=", "==", "!=", and the unicode forms.
std::optional<Comparator> parse_comparator(std::string_view text);
bool is_ordering(Comparator op);

/// Three-valued comparison. Unknown operands, or operands whose kinds do not
/// support the comparator, yield nullopt.
std::optional<bool> compare_values(const Value& lhs, Comparator op, const Value& rhs);

struct Condition {
  std::string attribute;
  Comparator op = Comparator::equal;
  Value threshold;
};

struct Consequent {
  std::string attribute;
  Value value;
};

/// IF c1 AND c2 ... THEN consequent [ELSE else_value].
struct Rule {
  std::string id;
  std::vector<Condition> conditions;
  Consequent consequent;
  std::optional<Value> else_value;
};

struct DomainPlugin {
  std::string domain_id;
  std::vector<Rule> rules;
  std::vector<ContextAttribute> declared_attributes;
};

/// Parse and validate a rule document (JSON). Checks per-rule invariants and
/// acyclicity of the document on its own.
/// Throws Error{malformed_domain} or Error{cyclic_dependency}.
DomainPlugin parse_domain(std::string_view document);

/// Context knowledge base: the union of loaded domain plugins.
///
/// Loading is serialized and atomic: a plugin that would break acyclicity or
/// kind agreement leaves the base unchanged.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  /// Parse `document` and install it.
  DomainPlugin load_domain(std::string_view document);
  /// Install an already parsed plugin.
  void add_plugin(DomainPlugin plugin);

  /// Condition attributes over all rules deriving `attribute`.
  /// Throws Error{unknown_attribute} when the base has never heard of it.
  std::set<std::string> dependencies(std::string_view attribute) const;

  /// Rules whose consequent is `attribute`, in load/document order.
  std::vector<Rule> rules_for(std::string_view attribute) const;

  /// True when the attribute is declared by a plugin or mentioned by a rule.
  bool knows(std::string_view attribute) const;
  bool derivable(std::string_view attribute) const;

  std::optional<ContextAttribute> attribute_info(std::string_view attribute) const;
  std::vector<ContextAttribute> attributes() const;
  std::vector<std::string> derived_attributes() const;
  std::vector<std::string> domain_ids() const;
  std::size_t rule_count() const;

  /// A topological order of every known attribute, dependencies first.
  std::vector<std::string> topological_order() const;

 private:
  struct State {
    std::vector<DomainPlugin> plugins;
    std::map<std::string, ContextAttribute, std::less<>> attributes;
    std::map<std::string, std::vector<Rule>, std::less<>> rules_by_consequent;
  };

  static void merge_into(State& state, const DomainPlugin& plugin);
  static void check_acyclic(const State& state);

  mutable std::shared_mutex mutex_;
  State state_;
};

}  // namespace senseflow
