// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/fusion.hpp"

#include <algorithm>
#include <mutex>

#include "senseflow/error.hpp"

namespace senseflow {

std::string_view to_string(Capability capability) {
  switch (capability) {
    case Capability::compare: return "compare";
    case Capability::logical_and: return "logical-and";
    case Capability::logical_or: return "logical-or";
    case Capability::rule_eval: return "rule-eval";
    case Capability::window_average: return "window-average";
    case Capability::latest_value: return "latest-value";
    case Capability::impute_linear: return "impute-linear";
  }
  return "?";
}

std::optional<Capability> parse_capability(std::string_view text) {
  for (auto c : {Capability::compare, Capability::logical_and, Capability::logical_or,
                 Capability::rule_eval, Capability::window_average, Capability::latest_value,
                 Capability::impute_linear}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

namespace {

bool kind_accepts(ValueKind declared, ValueKind actual) {
  return declared == ValueKind::any || actual == ValueKind::any || declared == actual;
}

struct Shape {
  bool variadic;
  std::size_t fixed_arity;  // when !variadic
  ValueKind input;
  ValueKind output;
};

Shape expected_shape(Capability capability) {
  switch (capability) {
    case Capability::compare: return {false, 2, ValueKind::number, ValueKind::boolean};
    case Capability::logical_and:
    case Capability::logical_or: return {true, 0, ValueKind::boolean, ValueKind::boolean};
    case Capability::rule_eval: return {true, 0, ValueKind::any, ValueKind::any};
    case Capability::window_average: return {true, 0, ValueKind::number, ValueKind::number};
    case Capability::latest_value: return {true, 0, ValueKind::any, ValueKind::any};
    case Capability::impute_linear: return {true, 0, ValueKind::number, ValueKind::number};
  }
  return {true, 0, ValueKind::any, ValueKind::any};
}

[[noreturn]] void mismatch(const OperatorDescriptor& d, const std::string& why) {
  throw Error(ErrorCode::signature_mismatch, "operator '" + d.id + "' (" +
                                                 std::string(to_string(d.capability)) + "): " + why);
}

}  // namespace

void validate_descriptor(const OperatorDescriptor& d) {
  if (d.id.empty()) mismatch(d, "empty operator id");
  const Shape shape = expected_shape(d.capability);
  if (d.arity) {
    if (d.input_kinds.size() != *d.arity) mismatch(d, "arity does not match input kinds");
    if (!shape.variadic && *d.arity != shape.fixed_arity) {
      mismatch(d, "arity " + std::to_string(*d.arity) + ", expected " +
                      std::to_string(shape.fixed_arity));
    }
    if (shape.variadic && *d.arity == 0) mismatch(d, "arity must be positive");
  } else {
    if (!shape.variadic) mismatch(d, "capability requires a fixed arity");
    if (d.input_kinds.size() != 1) mismatch(d, "variadic operators declare exactly one input kind");
  }
  for (auto k : d.input_kinds) {
    if (shape.input != ValueKind::any && k != shape.input) mismatch(d, "input kind " + std::string(to_string(k)));
  }
  if (shape.output != ValueKind::any && d.output_kind != shape.output) {
    mismatch(d, "output kind " + std::string(to_string(d.output_kind)));
  }
}

std::string OperatorRepository::register_operator(OperatorDescriptor descriptor,
                                                  OperatorFn implementation) {
  validate_descriptor(descriptor);
  if (!implementation) mismatch(descriptor, "missing implementation");
  std::unique_lock lock(mutex_);
  if (operators_.count(descriptor.id)) {
    throw Error(ErrorCode::duplicate_operator_id, descriptor.id);
  }
  std::string id = descriptor.id;
  operators_.emplace(id, Entry{std::move(descriptor), std::move(implementation)});
  return id;
}

namespace {

bool accepts(const OperatorDescriptor& d, const Signature& sig) {
  if (!kind_accepts(d.output_kind, sig.output)) return false;
  if (d.arity) {
    if (sig.inputs.size() != *d.arity) return false;
    for (std::size_t i = 0; i < sig.inputs.size(); ++i)
      if (!kind_accepts(d.input_kinds[i], sig.inputs[i])) return false;
    return true;
  }
  for (auto k : sig.inputs)
    if (!kind_accepts(d.input_kinds.front(), k)) return false;
  return true;
}

}  // namespace

OperatorDescriptor OperatorRepository::find_operator(Capability capability,
                                                     const std::optional<Signature>& signature) const {
  std::shared_lock lock(mutex_);
  // std::map iterates in ascending id order, giving the lowest-id tie-break.
  for (const auto& [id, entry] : operators_) {
    if (entry.descriptor.capability != capability) continue;
    if (signature && !accepts(entry.descriptor, *signature)) continue;
    return entry.descriptor;
  }
  throw Error(ErrorCode::no_operator_found,
              "no operator with capability '" + std::string(to_string(capability)) + "'");
}

Value OperatorRepository::apply(std::string_view operator_id, std::span<const TimedValue> inputs,
                                const OperatorParams& params) const {
  OperatorFn fn;
  OperatorDescriptor d;
  {
    std::shared_lock lock(mutex_);
    auto it = operators_.find(operator_id);
    if (it == operators_.end()) {
      throw Error(ErrorCode::no_operator_found, "unknown operator '" + std::string(operator_id) + "'");
    }
    fn = it->second.fn;
    d = it->second.descriptor;
  }

  if (d.arity ? inputs.size() != *d.arity : inputs.empty()) {
    throw Error(ErrorCode::arity_mismatch,
                d.id + ": got " + std::to_string(inputs.size()) + " inputs");
  }
  if (d.capability == Capability::rule_eval && params.bindings.size() != inputs.size()) {
    throw Error(ErrorCode::arity_mismatch, d.id + ": bindings do not match inputs");
  }
  bool any_unknown = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto kind = inputs[i].value.kind();
    if (!kind) {
      any_unknown = true;
      continue;
    }
    const ValueKind want = d.arity ? d.input_kinds[i] : d.input_kinds.front();
    if (!kind_accepts(want, *kind)) {
      throw Error(ErrorCode::kind_mismatch, d.id + ": input " + std::to_string(i) + " is " +
                                                std::string(to_string(*kind)) + ", expected " +
                                                std::string(to_string(want)));
    }
  }
  for (const auto& p : d.params) {
    const Value* v = params.find(p.name);
    if (!v) {
      if (p.required) throw Error(ErrorCode::kind_mismatch, d.id + ": missing parameter '" + p.name + "'");
      continue;
    }
    if (!v->is_unknown() && !kind_accepts(p.kind, *v->kind())) {
      throw Error(ErrorCode::kind_mismatch, d.id + ": parameter '" + p.name + "' has wrong kind");
    }
  }
  if (any_unknown && d.capability != Capability::rule_eval) return Value::unknown();
  return fn(inputs, params);
}

Value OperatorRepository::apply(std::string_view operator_id, std::span<const Value> inputs,
                                const OperatorParams& params) const {
  std::vector<TimedValue> timed;
  timed.reserve(inputs.size());
  for (const auto& v : inputs) timed.push_back({0, v});
  return apply(operator_id, std::span<const TimedValue>(timed), params);
}

std::optional<OperatorDescriptor> OperatorRepository::descriptor(std::string_view operator_id) const {
  std::shared_lock lock(mutex_);
  auto it = operators_.find(operator_id);
  if (it == operators_.end()) return std::nullopt;
  return it->second.descriptor;
}

std::vector<OperatorDescriptor> OperatorRepository::list() const {
  std::shared_lock lock(mutex_);
  std::vector<OperatorDescriptor> out;
  for (const auto& [id, e] : operators_) out.push_back(e.descriptor);
  return out;
}

Value evaluate_rules(std::span<const Rule> rules,
                     const std::map<std::string, Value, std::less<>>& bindings) {
  for (const auto& rule : rules) {
    // Kleene conjunction: false dominates, then unknown.
    bool undecided = false;
    bool failed = false;
    for (const auto& c : rule.conditions) {
      auto it = bindings.find(c.attribute);
      const Value& bound = it == bindings.end() ? Value() : it->second;
      auto outcome = compare_values(bound, c.op, c.threshold);
      if (!outcome) {
        undecided = true;
      } else if (!*outcome) {
        failed = true;
        break;
      }
    }
    if (failed) continue;
    if (undecided) return Value::unknown();
    return rule.consequent.value;
  }
  for (const auto& rule : rules) {
    if (rule.else_value) return *rule.else_value;
  }
  return Value::unknown();
}

Value window_average(std::span<const TimedValue> series, std::int64_t window_ms,
                     std::optional<std::int64_t> now) {
  if (window_ms <= 0) throw Error(ErrorCode::kind_mismatch, "window_ms must be positive");
  if (series.empty()) return Value::unknown();
  for (const auto& s : series) {
    if (s.value.is_unknown()) return Value::unknown();
  }
  std::int64_t end = now.value_or(std::max_element(series.begin(), series.end(), [](auto& a, auto& b) {
                                    return a.timestamp_ms < b.timestamp_ms;
                                  })->timestamp_ms);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : series) {
    if (s.timestamp_ms > end - window_ms && s.timestamp_ms <= end) {
      sum += s.value.as_number();
      ++n;
    }
  }
  if (n == 0) return Value::unknown();
  return Value(sum / static_cast<double>(n));
}

Value impute_linear(std::span<const TimedValue> series, std::int64_t at) {
  std::vector<TimedValue> sorted(series.begin(), series.end());
  for (const auto& s : sorted) {
    if (s.value.is_unknown()) return Value::unknown();
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  for (const auto& s : sorted) {
    if (s.timestamp_ms == at) return s.value;
  }
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& lo = sorted[i - 1];
    const auto& hi = sorted[i];
    if (lo.timestamp_ms < at && at < hi.timestamp_ms) {
      const double frac = static_cast<double>(at - lo.timestamp_ms) /
                          static_cast<double>(hi.timestamp_ms - lo.timestamp_ms);
      const double a = lo.value.as_number();
      const double b = hi.value.as_number();
      return Value(a + (b - a) * frac);
    }
  }
  return Value::unknown();
}

namespace {

std::int64_t param_ms(const OperatorParams& p, std::string_view key) {
  const Value* v = p.find(key);
  return static_cast<std::int64_t>(v->as_number());
}

}  // namespace

std::unique_ptr<OperatorRepository> OperatorRepository::with_builtins() {
  auto repo = std::make_unique<OperatorRepository>();

  repo->register_operator(
      {"core.compare", Capability::compare, 2, {ValueKind::number, ValueKind::number},
       ValueKind::boolean, {{"op", ValueKind::string, true}}, "numeric comparison"},
      [](std::span<const TimedValue> in, const OperatorParams& p) -> Value {
        auto op = parse_comparator(p.find("op")->as_string());
        if (!op) throw Error(ErrorCode::kind_mismatch, "core.compare: bad op");
        auto r = compare_values(in[0].value, *op, in[1].value);
        return r ? Value(*r) : Value::unknown();
      });

  repo->register_operator(
      {"core.logical-and", Capability::logical_and, std::nullopt, {ValueKind::boolean},
       ValueKind::boolean, {}, "conjunction"},
      [](std::span<const TimedValue> in, const OperatorParams&) -> Value {
        return Value(std::all_of(in.begin(), in.end(), [](auto& v) { return v.value.as_boolean(); }));
      });

  repo->register_operator(
      {"core.logical-or", Capability::logical_or, std::nullopt, {ValueKind::boolean},
       ValueKind::boolean, {}, "disjunction"},
      [](std::span<const TimedValue> in, const OperatorParams&) -> Value {
        return Value(std::any_of(in.begin(), in.end(), [](auto& v) { return v.value.as_boolean(); }));
      });

  repo->register_operator(
      {"core.rule-eval", Capability::rule_eval, std::nullopt, {ValueKind::any}, ValueKind::any, {},
       "IF/THEN/ELSE rule evaluation"},
      [](std::span<const TimedValue> in, const OperatorParams& p) -> Value {
        std::map<std::string, Value, std::less<>> bindings;
        for (std::size_t i = 0; i < in.size(); ++i) bindings[p.bindings[i]] = in[i].value;
        return evaluate_rules(p.rules, bindings);
      });

  repo->register_operator(
      {"core.window-average", Capability::window_average, std::nullopt, {ValueKind::number},
       ValueKind::number, {{"window_ms", ValueKind::number, true}, {"now", ValueKind::number, false}},
       "trailing window mean"},
      [](std::span<const TimedValue> in, const OperatorParams& p) -> Value {
        std::optional<std::int64_t> now;
        if (p.find("now")) now = param_ms(p, "now");
        return window_average(in, param_ms(p, "window_ms"), now);
      });

  repo->register_operator(
      {"core.latest-value", Capability::latest_value, std::nullopt, {ValueKind::any}, ValueKind::any,
       {}, "newest sample"},
      [](std::span<const TimedValue> in, const OperatorParams&) -> Value {
        const TimedValue* best = &in.front();
        for (const auto& s : in)
          if (s.timestamp_ms >= best->timestamp_ms) best = &s;
        return best->value;
      });

  repo->register_operator(
      {"core.impute-linear", Capability::impute_linear, std::nullopt, {ValueKind::number},
       ValueKind::number, {{"at", ValueKind::number, true}}, "linear gap filling"},
      [](std::span<const TimedValue> in, const OperatorParams& p) -> Value {
        return impute_linear(in, param_ms(p, "at"));
      });

  return repo;
}

}  // namespace senseflow
