// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/knowledge.hpp"

#include <algorithm>
#include <functional>
#include <mutex>

#include "json_util.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

std::string_view to_string(Comparator op) {
  switch (op) {
    case Comparator::less: return "<";
    case Comparator::less_equal: return "<=";
    case Comparator::greater: return ">";
    case Comparator::greater_equal: return ">=";
    case Comparator::equal: return "=";
    case Comparator::not_equal: return "!=";
  }
  return "?";
}

std::optional<Comparator> parse_comparator(std::string_view text) {
  if (text == "<" || text == "lt") return Comparator::less;
  if (text == "<=" || text == "≤" || text == "le") return Comparator::less_equal;
  if (text == ">" || text == "gt") return Comparator::greater;
  if (text == ">=" || text == "≥" || text == "ge") return Comparator::greater_equal;
  if (text == "=" || text == "==" || text == "eq") return Comparator::equal;
  if (text == "!=" || text == "≠" || text == "ne") return Comparator::not_equal;
  return std::nullopt;
}

bool is_ordering(Comparator op) {
  return op == Comparator::less || op == Comparator::less_equal || op == Comparator::greater ||
         op == Comparator::greater_equal;
}

std::optional<bool> compare_values(const Value& lhs, Comparator op, const Value& rhs) {
  if (lhs.is_unknown() || rhs.is_unknown()) return std::nullopt;
  if (is_ordering(op)) {
    if (!lhs.is_number() || !rhs.is_number()) return std::nullopt;
    const double a = lhs.as_number();
    const double b = rhs.as_number();
    switch (op) {
      case Comparator::less: return a < b;
      case Comparator::less_equal: return a <= b;
      case Comparator::greater: return a > b;
      case Comparator::greater_equal: return a >= b;
      default: break;
    }
  }
  if (lhs.kind() != rhs.kind()) return std::nullopt;
  const bool eq = lhs == rhs;
  return op == Comparator::equal ? eq : !eq;
}

namespace {

using detail::json;

[[noreturn]] void malformed(const std::string& message) {
  throw Error(ErrorCode::malformed_domain, message);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(where + ": missing '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string() || v.get<std::string>().empty()) {
    malformed(where + ": '" + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

Value require_value(const json& obj, const char* key, const std::string& where) {
  auto v = detail::value_from_json(require(obj, key, where));
  if (!v || v->is_unknown()) malformed(where + ": '" + key + "' must be a scalar value");
  return *v;
}

Condition parse_condition(const json& j, const std::string& where) {
  if (!j.is_object()) malformed(where + ": condition must be an object");
  Condition c;
  c.attribute = require_string(j, "attribute", where);
  auto op_text = require_string(j, "op", where);
  auto op = parse_comparator(op_text);
  if (!op) malformed(where + ": unknown comparator '" + op_text + "'");
  c.op = *op;
  c.threshold = require_value(j, "value", where);
  if (is_ordering(c.op) && !c.threshold.is_number()) {
    malformed(where + ": ordering comparator '" + op_text + "' requires a numeric threshold");
  }
  return c;
}

Rule parse_rule(const json& j, std::size_t index) {
  std::string where = "rules[" + std::to_string(index) + "]";
  if (!j.is_object()) malformed(where + ": rule must be an object");
  Rule r;
  r.id = require_string(j, "id", where);
  where += " (" + r.id + ")";
  const json& conds = require(j, "if", where);
  if (!conds.is_array() || conds.empty()) malformed(where + ": 'if' must be a non-empty list");
  for (const auto& c : conds) r.conditions.push_back(parse_condition(c, where));
  const json& then = require(j, "then", where);
  if (!then.is_object()) malformed(where + ": 'then' must be an object");
  r.consequent.attribute = require_string(then, "attribute", where);
  r.consequent.value = require_value(then, "value", where);
  if (auto it = j.find("else"); it != j.end() && !it->is_null()) {
    auto v = detail::value_from_json(*it);
    if (!v) malformed(where + ": 'else' must be a scalar value");
    r.else_value = *v;
  }
  for (const auto& c : r.conditions) {
    if (c.attribute == r.consequent.attribute) {
      malformed(where + ": consequent '" + c.attribute + "' appears in its own conditions");
    }
  }
  return r;
}

}  // namespace

DomainPlugin parse_domain(std::string_view document) {
  json doc = detail::parse_json(document, ErrorCode::malformed_domain, "rule document");
  if (!doc.is_object()) malformed("rule document must be an object");
  DomainPlugin plugin;
  plugin.domain_id = require_string(doc, "domain_id", "domain");
  if (auto it = doc.find("attributes"); it != doc.end()) {
    if (!it->is_array()) malformed("'attributes' must be a list");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& a = (*it)[i];
      std::string where = "attributes[" + std::to_string(i) + "]";
      if (!a.is_object()) malformed(where + ": must be an object");
      ContextAttribute attr;
      attr.name = require_string(a, "name", where);
      if (auto u = a.find("unit"); u != a.end()) {
        if (!u->is_string()) malformed(where + ": 'unit' must be a string");
        attr.unit = u->get<std::string>();
      }
      auto kind_text = a.value("kind", std::string("number"));
      auto kind = parse_value_kind(kind_text);
      if (!kind || *kind == ValueKind::any) malformed(where + ": unknown kind '" + kind_text + "'");
      attr.kind = *kind;
      if (!seen.insert(attr.name).second) malformed(where + ": duplicate attribute '" + attr.name + "'");
      plugin.declared_attributes.push_back(std::move(attr));
    }
  }
  if (auto it = doc.find("rules"); it != doc.end()) {
    if (!it->is_array()) malformed("'rules' must be a list");
    for (std::size_t i = 0; i < it->size(); ++i) plugin.rules.push_back(parse_rule((*it)[i], i));
  }

  // Validate the document in isolation: kinds agree and no cycles.
  KnowledgeBase scratch;
  scratch.add_plugin(plugin);
  return plugin;
}

void KnowledgeBase::merge_into(State& state, const DomainPlugin& plugin) {
  for (const auto& attr : plugin.declared_attributes) {
    auto [it, inserted] = state.attributes.try_emplace(attr.name, attr);
    if (!inserted && it->second.kind != attr.kind) {
      malformed("attribute '" + attr.name + "' declared as " + std::string(to_string(attr.kind)) +
                " but already known as " + std::string(to_string(it->second.kind)));
    }
  }

  auto kind_of = [&](const std::string& name) -> std::optional<ValueKind> {
    if (auto it = state.attributes.find(name); it != state.attributes.end()) return it->second.kind;
    return std::nullopt;
  };

  for (const auto& rule : plugin.rules) {
    const std::string where = "rule '" + rule.id + "'";
    for (const auto& c : rule.conditions) {
      auto k = kind_of(c.attribute);
      if (is_ordering(c.op) && k && *k != ValueKind::number) {
        malformed(where + ": ordering comparator on non-numeric attribute '" + c.attribute + "'");
      }
      if (k && c.threshold.kind() != *k) {
        malformed(where + ": threshold kind does not match attribute '" + c.attribute + "'");
      }
    }
    const auto& target = rule.consequent.attribute;
    auto value_kind = *rule.consequent.value.kind();
    auto declared = kind_of(target);
    if (declared && *declared != value_kind) {
      malformed(where + ": consequent value kind disagrees with attribute '" + target + "'");
    }
    if (rule.else_value && !rule.else_value->is_unknown() && rule.else_value->kind() != value_kind) {
      malformed(where + ": else value kind disagrees with consequent");
    }
    auto& bucket = state.rules_by_consequent[target];
    if (!bucket.empty() && bucket.front().consequent.value.kind() != value_kind) {
      malformed(where + ": rules deriving '" + target + "' disagree on value kind");
    }
    if (!declared) {
      state.attributes.emplace(target, ContextAttribute{target, "", value_kind});
    }
    bucket.push_back(rule);
  }
  state.plugins.push_back(plugin);
}

void KnowledgeBase::check_acyclic(const State& state) {
  // Edges consequent -> condition attribute. Colors: 0 white, 1 grey, 2 black.
  std::map<std::string, int, std::less<>> color;
  std::vector<std::string> path;

  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    color[node] = 1;
    path.push_back(node);
    if (auto it = state.rules_by_consequent.find(node); it != state.rules_by_consequent.end()) {
      std::set<std::string> deps;
      for (const auto& r : it->second)
        for (const auto& c : r.conditions) deps.insert(c.attribute);
      for (const auto& dep : deps) {
        int& col = color[dep];
        if (col == 1) {
          std::string cycle;
          auto start = std::find(path.begin(), path.end(), dep);
          for (auto p = start; p != path.end(); ++p) cycle += *p + " -> ";
          cycle += dep;
          throw Error(ErrorCode::cyclic_dependency, cycle);
        }
        if (col == 0) visit(dep);
      }
    }
    path.pop_back();
    color[node] = 2;
  };

  for (const auto& [name, rules] : state.rules_by_consequent) {
    if (color[name] == 0) visit(name);
  }
}

void KnowledgeBase::add_plugin(DomainPlugin plugin) {
  std::unique_lock lock(mutex_);
  State next = state_;
  merge_into(next, plugin);
  check_acyclic(next);
  state_ = std::move(next);
}

DomainPlugin KnowledgeBase::load_domain(std::string_view document) {
  DomainPlugin plugin = parse_domain(document);
  add_plugin(plugin);
  return plugin;
}

bool KnowledgeBase::knows(std::string_view attribute) const {
  std::shared_lock lock(mutex_);
  if (state_.attributes.find(attribute) != state_.attributes.end()) return true;
  for (const auto& [name, rules] : state_.rules_by_consequent)
    for (const auto& r : rules)
      for (const auto& c : r.conditions)
        if (c.attribute == attribute) return true;
  return false;
}

bool KnowledgeBase::derivable(std::string_view attribute) const {
  std::shared_lock lock(mutex_);
  auto it = state_.rules_by_consequent.find(attribute);
  return it != state_.rules_by_consequent.end() && !it->second.empty();
}

std::set<std::string> KnowledgeBase::dependencies(std::string_view attribute) const {
  if (!knows(attribute)) {
    throw Error(ErrorCode::unknown_attribute, "'" + std::string(attribute) + "' is not known");
  }
  std::set<std::string> out;
  for (const auto& r : rules_for(attribute))
    for (const auto& c : r.conditions) out.insert(c.attribute);
  return out;
}

std::vector<Rule> KnowledgeBase::rules_for(std::string_view attribute) const {
  std::shared_lock lock(mutex_);
  auto it = state_.rules_by_consequent.find(attribute);
  if (it == state_.rules_by_consequent.end()) return {};
  return it->second;
}

std::optional<ContextAttribute> KnowledgeBase::attribute_info(std::string_view attribute) const {
  std::shared_lock lock(mutex_);
  if (auto it = state_.attributes.find(attribute); it != state_.attributes.end()) return it->second;
  return std::nullopt;
}

std::vector<ContextAttribute> KnowledgeBase::attributes() const {
  std::shared_lock lock(mutex_);
  std::vector<ContextAttribute> out;
  for (const auto& [name, attr] : state_.attributes) out.push_back(attr);
  return out;
}

std::vector<std::string> KnowledgeBase::derived_attributes() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, rules] : state_.rules_by_consequent)
    if (!rules.empty()) out.push_back(name);
  return out;
}

std::vector<std::string> KnowledgeBase::domain_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& p : state_.plugins) out.push_back(p.domain_id);
  return out;
}

std::size_t KnowledgeBase::rule_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [name, rules] : state_.rules_by_consequent) n += rules.size();
  return n;
}

std::vector<std::string> KnowledgeBase::topological_order() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> nodes;
  for (const auto& [name, attr] : state_.attributes) nodes.insert(name);
  for (const auto& [name, rules] : state_.rules_by_consequent) {
    nodes.insert(name);
    for (const auto& r : rules)
      for (const auto& c : r.conditions) nodes.insert(c.attribute);
  }
  std::vector<std::string> order;
  std::set<std::string> done;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    if (!done.insert(n).second) return;
    if (auto it = state_.rules_by_consequent.find(n); it != state_.rules_by_consequent.end())
      for (const auto& r : it->second)
        for (const auto& c : r.conditions) visit(c.attribute);
    order.push_back(n);
  };
  for (const auto& n : nodes) visit(n);
  return order;
}

}  // namespace senseflow
