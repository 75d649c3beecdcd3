// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/reasoning.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>

#include "json.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

std::string_view to_string(OutputFormat format) {
  return format == OutputFormat::json_lines ? "json-lines" : "csv";
}

std::optional<OutputFormat> parse_output_format(std::string_view text) {
  if (text == "json-lines" || text == "jsonl" || text == "json") return OutputFormat::json_lines;
  if (text == "csv") return OutputFormat::csv;
  return std::nullopt;
}

void validate_request(const Request& r) {
  if (r.requested_attributes.empty()) {
    throw Error(ErrorCode::schema_violation, "request.attributes must not be empty");
  }
  if (r.delivery_interval_ms < 1) throw Error(ErrorCode::invalid_interval, "interval_ms must be >= 1");
  if (r.duration_ms && *r.duration_ms < r.delivery_interval_ms) {
    throw Error(ErrorCode::invalid_interval, "duration_ms must be >= interval_ms");
  }
}

std::set<std::string> required_context(const Request& request, const KnowledgeBase& kb,
                                       const ProviderRegistry& registry) {
  for (const auto& a : request.requested_attributes) {
    if (!kb.knows(a) && !registry.mentions(a)) {
      throw Error(ErrorCode::unknown_attribute, "'" + a + "' is not provided or derivable");
    }
  }
  std::set<std::string> closure;
  std::deque<std::string> work(request.requested_attributes.begin(), request.requested_attributes.end());
  while (!work.empty()) {
    std::string a = std::move(work.front());
    work.pop_front();
    if (!closure.insert(a).second) continue;
    if (!kb.knows(a)) continue;  // registry-only attribute: primary, no dependencies
    for (const auto& dep : kb.dependencies(a)) {
      if (!closure.count(dep)) work.push_back(dep);
    }
  }
  return closure;
}

Classification classify(const std::set<std::string>& attributes, const ProviderRegistry& registry,
                        const KnowledgeBase& kb, const ProviderConstraints& constraints) {
  std::map<std::string, bool> satisfiable;
  std::map<std::string, bool> direct;

  std::function<bool(const std::string&)> check = [&](const std::string& a) -> bool {
    if (auto it = satisfiable.find(a); it != satisfiable.end()) return it->second;
    satisfiable[a] = false;  // acyclic KB; guards against malformed input
    bool ok = false;
    if (!registry.find_providers(a, constraints).empty()) {
      direct[a] = true;
      ok = true;
    } else if (kb.derivable(a)) {
      direct[a] = false;
      ok = true;
      for (const auto& dep : kb.dependencies(a)) ok = check(dep) && ok;
    }
    satisfiable[a] = ok;
    return ok;
  };

  for (const auto& a : attributes) check(a);

  // Report the deepest unsatisfiable attribute: a derived one whose
  // dependencies fail for reasons other than another derived failure, or a
  // plain attribute with no provider at all.
  std::vector<std::string> failed;
  for (const auto& [a, ok] : satisfiable)
    if (!ok) failed.push_back(a);
  if (!failed.empty()) {
    for (const auto& a : failed) {
      if (!kb.derivable(a) || direct.count(a) == 0) continue;
      std::vector<std::string> missing;
      bool deeper = false;
      for (const auto& dep : kb.dependencies(a)) {
        if (satisfiable[dep]) continue;
        if (kb.derivable(dep)) deeper = true;
        missing.push_back(dep);
      }
      if (deeper) continue;
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw Error(ErrorCode::unsatisfiable_attribute,
                  a + " (no online provider for dependency " + list + ")");
    }
    throw Error(ErrorCode::unsatisfiable_attribute, failed.front() + " (no online provider and no rule)");
  }

  Classification out;
  for (const auto& a : attributes) {
    (direct[a] ? out.primary : out.secondary).insert(a);
  }
  // Dependencies pulled in transitively (when callers pass a partial set).
  for (const auto& [a, is_direct] : direct) {
    if (attributes.count(a)) continue;
    (is_direct ? out.primary : out.secondary).insert(a);
  }
  return out;
}

std::size_t PlanSpec::source_count() const {
  return std::count_if(nodes.begin(), nodes.end(),
                       [](const PlanNode& n) { return std::holds_alternative<SourceNode>(n); });
}

std::size_t PlanSpec::derive_count() const {
  return std::count_if(nodes.begin(), nodes.end(),
                       [](const PlanNode& n) { return std::holds_alternative<DeriveNode>(n); });
}

std::optional<std::size_t> PlanSpec::producer_of(std::string_view attribute) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (const auto* s = std::get_if<SourceNode>(&nodes[i])) {
      if (std::find(s->attributes.begin(), s->attributes.end(), attribute) != s->attributes.end()) return i;
    } else if (std::get<DeriveNode>(nodes[i]).attribute == attribute) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> topological_order(const PlanSpec& plan) {
  const std::size_t n = plan.nodes.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& e : plan.edges) {
    if (e.from >= n || e.to >= n) throw Error(ErrorCode::state_violation, "edge references missing node");
    out[e.from].push_back(e.to);
    ++indegree[e.to];
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.insert(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (auto j : out[i])
      if (--indegree[j] == 0) ready.insert(j);
  }
  if (order.size() != n) throw Error(ErrorCode::state_violation, "plan graph has a cycle");
  return order;
}

void validate_plan(const PlanSpec& plan, const ProviderRegistry* registry) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::state_violation, "plan " + plan.plan_id + ": " + why);
  };
  std::map<std::string, int> producers;
  for (const auto& node : plan.nodes) {
    if (const auto* s = std::get_if<SourceNode>(&node)) {
      if (s->attributes.empty()) fail("source node without attributes");
      for (const auto& a : s->attributes) ++producers[a];
      if (registry && !registry->is_online(s->provider_id)) {
        fail("source " + s->sensor_id + " is not a registered online provider");
      }
    } else {
      ++producers[std::get<DeriveNode>(node).attribute];
    }
  }
  for (const auto& [a, count] : producers)
    if (count != 1) fail("attribute " + a + " has " + std::to_string(count) + " producers");

  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const auto* d = std::get_if<DeriveNode>(&plan.nodes[i]);
    if (!d) continue;
    if (d->inputs.empty()) fail("derive node " + d->attribute + " has no inputs");
    for (const auto& in : d->inputs) {
      auto p = plan.producer_of(in);
      if (!p) fail("input " + in + " of " + d->attribute + " has no producer");
      bool wired = std::any_of(plan.edges.begin(), plan.edges.end(), [&](const PlanEdge& e) {
        return e.from == *p && e.to == i && e.attribute == in;
      });
      if (!wired) fail("input " + in + " of " + d->attribute + " is not wired");
    }
  }
  for (const auto& o : plan.outputs)
    if (!producers.count(o)) fail("output " + o + " is not produced");
  topological_order(plan);
}

namespace {

std::string hex_digest(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string canonical_key(const Request& request) {
  nlohmann::ordered_json key;
  key["attributes"] = request.requested_attributes;  // std::set: already sorted
  key["location"] = request.location_constraint ? nlohmann::ordered_json(*request.location_constraint)
                                                : nlohmann::ordered_json(nullptr);
  key["interval_ms"] = request.delivery_interval_ms;
  key["annotations"] = request.include_context_annotations;
  return key.dump();
}

PlanSpec build_plan(const Request& request, const ProviderRegistry& registry, const KnowledgeBase& kb,
                    const OperatorRepository& operators) {
  validate_request(request);
  ProviderConstraints constraints;
  constraints.location_label = request.location_constraint;

  const auto required = required_context(request, kb, registry);
  const auto cls = classify(required, registry, kb, constraints);

  PlanSpec plan;
  plan.canonical_key = canonical_key(request);
  plan.plan_id = "plan-" + hex_digest(plan.canonical_key).substr(0, 12);
  plan.delivery_interval_ms = request.delivery_interval_ms;

  // One source node per selected provider, in sensor id order.
  std::map<std::string, SourceNode> sources;
  for (const auto& a : cls.primary) {
    const auto best = registry.find_providers(a, constraints).front();
    auto& node = sources[best.descriptor.sensor_id];
    node.provider_id = best.provider_id;
    node.sensor_id = best.descriptor.sensor_id;
    node.model_id = best.descriptor.model_id;
    node.location_label = best.descriptor.location.label;
    node.attributes.push_back(a);
  }
  for (auto& [id, node] : sources) {
    std::sort(node.attributes.begin(), node.attributes.end());
    plan.nodes.push_back(std::move(node));
  }

  auto kind_of = [&](const std::string& a) {
    if (auto info = kb.attribute_info(a)) return info->kind;
    for (const auto& e : registry.find_providers(a, constraints))
      for (const auto& attr : e.descriptor.provided_attributes)
        if (attr.name == a) return attr.kind;
    return ValueKind::any;
  };

  // Derive nodes in dependency order so inputs always precede consumers.
  for (const auto& a : kb.topological_order()) {
    if (!cls.secondary.count(a)) continue;
    DeriveNode node;
    node.attribute = a;
    node.rules = kb.rules_for(a);
    for (const auto& dep : kb.dependencies(a)) node.inputs.push_back(dep);
    Signature sig;
    for (const auto& in : node.inputs) sig.inputs.push_back(kind_of(in));
    sig.output = kind_of(a);
    node.operator_id = operators.find_operator(Capability::rule_eval, sig).id;
    plan.nodes.push_back(std::move(node));
  }

  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const auto* d = std::get_if<DeriveNode>(&plan.nodes[i]);
    if (!d) continue;
    for (const auto& in : d->inputs) {
      plan.edges.push_back({in, *plan.producer_of(in), i});
    }
  }

  std::set<std::string> outputs(request.requested_attributes.begin(), request.requested_attributes.end());
  if (request.include_context_annotations) outputs.insert(required.begin(), required.end());
  plan.outputs.assign(outputs.begin(), outputs.end());

  validate_plan(plan, &registry);
  return plan;
}

}  // namespace senseflow
