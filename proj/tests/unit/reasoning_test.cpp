#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "senseflow/error.hpp"
#include "senseflow/fusion.hpp"
#include "senseflow/reasoning.hpp"
#include "testing.hpp"

namespace senseflow {
namespace {

using testing::request_for;
using testing::sensor;

class ReasoningTest : public ::testing::Test {
 protected:
  void SetUp() override {
    kb.load_domain(testing::domain_text());
    reg.register_provider(sensor("tmp-01", "thermo", {"airTemperature"}));
    reg.register_provider(sensor("hum-01", "hygro", {"airHumidity"}));
    reg.register_provider(sensor("lwt-01", "leafwet", {"leafWetness"}));
  }

  ErrorCode code_of(const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      last_detail = e.detail();
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::config_error;
  }

  KnowledgeBase kb;
  ProviderRegistry reg;
  std::unique_ptr<OperatorRepository> ops = OperatorRepository::with_builtins();
  std::string last_detail;
};

std::set<std::string> closure_oracle(std::set<std::string> attrs, const KnowledgeBase& kb) {
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& a : std::set<std::string>(attrs)) {
      if (!kb.knows(a)) continue;
      for (const auto& r : kb.rules_for(a))
        for (const auto& c : r.conditions) changed |= attrs.insert(c.attribute).second;
    }
  }
  return attrs;
}

TEST_F(ReasoningTest, RequiredContextExamples) {
  EXPECT_EQ(required_context(request_for({"phytophtoraDiseaseStatus"}), kb, reg),
            (std::set<std::string>{"phytophtoraDiseaseStatus", "airStress", "leafWetness", "airTemperature",
                                   "airHumidity"}));
  EXPECT_EQ(required_context(request_for({"airTemperature"}), kb, reg), std::set<std::string>{"airTemperature"});
  EXPECT_EQ(code_of([&] { required_context(request_for({"cropYieldForecast"}), kb, reg); }),
            ErrorCode::unknown_attribute);
}

// Closure property: idempotent and equal to a naive fixed point.
TEST_F(ReasoningTest, RequiredContextIsClosureProperty) {
  const std::vector<std::string> all = {"airTemperature", "airHumidity", "leafWetness", "airStress",
                                        "phytophtoraDiseaseStatus"};
  for (unsigned mask = 1; mask < 32; ++mask) {
    std::set<std::string> attrs;
    for (unsigned i = 0; i < all.size(); ++i)
      if (mask & (1u << i)) attrs.insert(all[i]);
    auto once = required_context(request_for(attrs), kb, reg);
    EXPECT_EQ(once, closure_oracle(attrs, kb));
    EXPECT_EQ(required_context(request_for(once), kb, reg), once);
  }
}

TEST_F(ReasoningTest, ClassifyUseCase) {
  auto cls = classify(required_context(request_for({"phytophtoraDiseaseStatus"}), kb, reg), reg, kb);
  EXPECT_EQ(cls.primary, (std::set<std::string>{"airTemperature", "airHumidity", "leafWetness"}));
  EXPECT_EQ(cls.secondary, (std::set<std::string>{"airStress", "phytophtoraDiseaseStatus"}));
}

TEST_F(ReasoningTest, ClassifyPrefersDirectProvider) {
  reg.register_provider(sensor("stress-01", "stressometer", {"airStress"}));
  auto cls = classify({"airStress", "airTemperature", "airHumidity"}, reg, kb);
  EXPECT_TRUE(cls.primary.count("airStress"));
  EXPECT_TRUE(cls.secondary.empty());
}

TEST_F(ReasoningTest, ClassifyUnsatisfiableNamesDerivedAttribute) {
  reg.set_availability(reg.find_by_sensor("hum-01")->provider_id, Availability::offline);
  auto attrs = required_context(request_for({"phytophtoraDiseaseStatus"}), kb, reg);
  EXPECT_EQ(code_of([&] { classify(attrs, reg, kb); }), ErrorCode::unsatisfiable_attribute);
  EXPECT_EQ(last_detail.rfind("airStress", 0), 0u) << last_detail;
}

TEST_F(ReasoningTest, ClassifyPartitionProperty) {
  auto attrs = required_context(request_for({"phytophtoraDiseaseStatus"}), kb, reg);
  auto cls = classify(attrs, reg, kb);
  std::set<std::string> both;
  std::set_intersection(cls.primary.begin(), cls.primary.end(), cls.secondary.begin(), cls.secondary.end(),
                        std::inserter(both, both.end()));
  EXPECT_TRUE(both.empty());
  std::set<std::string> all = cls.primary;
  all.insert(cls.secondary.begin(), cls.secondary.end());
  EXPECT_EQ(all, attrs);
}

std::string label(const PlanSpec& plan, std::size_t i) {
  if (const auto* s = std::get_if<SourceNode>(&plan.nodes[i])) return "src:" + s->attributes.front();
  return "derive:" + std::get<DeriveNode>(plan.nodes[i]).attribute;
}

TEST_F(ReasoningTest, UseCasePlanGolden) {
  auto req = request_for({"phytophtoraDiseaseStatus"});
  auto plan = build_plan(req, reg, kb, *ops);
  EXPECT_EQ(plan.source_count(), 3u);
  EXPECT_EQ(plan.derive_count(), 2u);
  std::set<std::tuple<std::string, std::string, std::string>> edges;
  for (const auto& e : plan.edges) edges.emplace(label(plan, e.from), e.attribute, label(plan, e.to));
  const std::set<std::tuple<std::string, std::string, std::string>> expected = {
      {"src:airTemperature", "airTemperature", "derive:airStress"},
      {"src:airHumidity", "airHumidity", "derive:airStress"},
      {"derive:airStress", "airStress", "derive:phytophtoraDiseaseStatus"},
      {"src:leafWetness", "leafWetness", "derive:phytophtoraDiseaseStatus"},
  };
  EXPECT_EQ(edges, expected);
  auto disease = std::get<DeriveNode>(plan.nodes[*plan.producer_of("phytophtoraDiseaseStatus")]);
  EXPECT_EQ(disease.inputs, (std::vector<std::string>{"airStress", "leafWetness"}));
  EXPECT_EQ(disease.operator_id, "core.rule-eval");
  EXPECT_EQ(plan.outputs, std::vector<std::string>{"phytophtoraDiseaseStatus"});
  EXPECT_EQ(plan.plan_id.rfind("plan-", 0), 0u);
  EXPECT_EQ(plan.plan_id.size(), 17u);
}

TEST_F(ReasoningTest, SinglePrimaryPlan) {
  auto plan = build_plan(request_for({"airTemperature"}), reg, kb, *ops);
  EXPECT_EQ(plan.source_count(), 1u);
  EXPECT_EQ(plan.derive_count(), 0u);
  EXPECT_TRUE(plan.edges.empty());
}

TEST_F(ReasoningTest, CheapestProviderSelected) {
  reg.register_provider(sensor("tmp-00", "thermo", {"airTemperature"}, "plot-7", 2));
  reg.register_provider(sensor("tmp-99", "thermo", {"airTemperature"}, "plot-7", 0));
  auto plan = build_plan(request_for({"airTemperature"}), reg, kb, *ops);
  EXPECT_EQ(std::get<SourceNode>(plan.nodes[0]).sensor_id, "tmp-99");
}

TEST_F(ReasoningTest, AnnotationsExposeIntermediates) {
  auto req = request_for({"phytophtoraDiseaseStatus"});
  req.include_context_annotations = true;
  auto plan = build_plan(req, reg, kb, *ops);
  EXPECT_EQ(plan.outputs.size(), 5u);
}

TEST_F(ReasoningTest, LocationConstraintFiltersProviders) {
  auto req = request_for({"airTemperature"});
  req.location_constraint = "plot-9";
  EXPECT_EQ(code_of([&] { build_plan(req, reg, kb, *ops); }), ErrorCode::unsatisfiable_attribute);
}

TEST_F(ReasoningTest, CanonicalKeyExamples) {
  auto a = request_for({"airStress", "leafWetness"});
  auto b = request_for({"leafWetness", "airStress"});
  b.request_id = "someone-else";
  b.output_format = OutputFormat::csv;
  EXPECT_EQ(canonical_key(a), canonical_key(b));
  EXPECT_NE(canonical_key(request_for({"airStress"}, 1000)), canonical_key(request_for({"airStress"}, 2000)));
}

TEST_F(ReasoningTest, CanonicalKeyPermutationProperty) {
  std::vector<std::string> attrs = {"airTemperature", "airHumidity", "leafWetness", "airStress"};
  const auto reference = canonical_key(request_for({attrs.begin(), attrs.end()}));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(attrs.begin(), attrs.end(), rng);
    Request r;
    r.request_id = "req-" + std::to_string(rng());
    for (const auto& a : attrs) r.requested_attributes.insert(a);
    EXPECT_EQ(canonical_key(r), reference);
  }
}

TEST_F(ReasoningTest, EveryPlanValidatesAndDeriveCountMatchesSecondary) {
  const std::vector<std::string> all = {"airTemperature", "airHumidity", "leafWetness", "airStress",
                                        "phytophtoraDiseaseStatus"};
  for (unsigned mask = 1; mask < 32; ++mask) {
    std::set<std::string> attrs;
    for (unsigned i = 0; i < all.size(); ++i)
      if (mask & (1u << i)) attrs.insert(all[i]);
    auto req = request_for(attrs);
    auto plan = build_plan(req, reg, kb, *ops);
    EXPECT_NO_THROW(validate_plan(plan, &reg));
    auto cls = classify(required_context(req, kb, reg), reg, kb);
    EXPECT_EQ(plan.derive_count(), cls.secondary.size());
    auto order = topological_order(plan);
    EXPECT_EQ(order.size(), plan.nodes.size());
    std::vector<std::size_t> pos(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const auto& e : plan.edges) EXPECT_LT(pos[e.from], pos[e.to]);
  }
}

TEST_F(ReasoningTest, ValidatePlanRejectsBrokenGraphs) {
  auto plan = build_plan(request_for({"airStress"}), reg, kb, *ops);
  auto unwired = plan;
  unwired.edges.pop_back();
  EXPECT_EQ(code_of([&] { validate_plan(unwired); }), ErrorCode::state_violation);
  auto cyclic = plan;
  cyclic.edges.push_back({"airStress", *plan.producer_of("airStress"), 0});
  EXPECT_EQ(code_of([&] { validate_plan(cyclic); }), ErrorCode::state_violation);
  reg.set_availability(reg.find_by_sensor("tmp-01")->provider_id, Availability::offline);
  EXPECT_EQ(code_of([&] { validate_plan(plan, &reg); }), ErrorCode::state_violation);
}

TEST(RequestValidation, IntervalsAndAttributes) {
  Request r;
  EXPECT_THROW(validate_request(r), Error);
  r.requested_attributes = {"x"};
  r.delivery_interval_ms = 0;
  try {
    validate_request(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_interval);
  }
}

}  // namespace
}  // namespace senseflow
