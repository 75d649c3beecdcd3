#include <gtest/gtest.h>

#include <algorithm>

#include "json.hpp"
#include "senseflow/error.hpp"
#include "senseflow/knowledge.hpp"
#include "testing.hpp"

namespace senseflow {
namespace {

using testing::domain_text;

std::string two_rule_domain(const std::string& id, const std::string& a, const std::string& b) {
  nlohmann::json doc = {
      {"domain_id", id},
      {"rules",
       {{{"id", id + "-r1"},
         {"if", {{{"attribute", b}, {"op", ">"}, {"value", 1}}}},
         {"then", {{"attribute", a}, {"value", 2}}}}}}};
  return doc.dump();
}

TEST(KnowledgeBase, LoadsUseCaseDomain) {
  KnowledgeBase kb;
  auto plugin = kb.load_domain(domain_text());
  EXPECT_EQ(plugin.domain_id, "phytophthora");
  EXPECT_EQ(plugin.rules.size(), 3u);
  auto derived = kb.derived_attributes();
  std::sort(derived.begin(), derived.end());
  EXPECT_EQ(derived, (std::vector<std::string>{"airStress", "phytophtoraDiseaseStatus"}));
  EXPECT_EQ(kb.rule_count(), 3u);
  EXPECT_EQ(kb.domain_ids(), std::vector<std::string>{"phytophthora"});
}

TEST(KnowledgeBase, Dependencies) {
  KnowledgeBase kb;
  kb.load_domain(domain_text());
  EXPECT_EQ(kb.dependencies("airStress"), (std::set<std::string>{"airHumidity", "airTemperature"}));
  EXPECT_EQ(kb.dependencies("phytophtoraDiseaseStatus"), (std::set<std::string>{"airStress", "leafWetness"}));
  EXPECT_TRUE(kb.dependencies("airTemperature").empty());
  try {
    kb.dependencies("cropYieldForecast");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_attribute);
  }
}

TEST(KnowledgeBase, RulesForKeepsDocumentOrder) {
  KnowledgeBase kb;
  kb.load_domain(domain_text());
  auto stress = kb.rules_for("airStress");
  ASSERT_EQ(stress.size(), 2u);
  EXPECT_EQ(stress[0].id, "air-stress-low");
  EXPECT_EQ(stress[1].id, "air-stress-high");
  EXPECT_TRUE(kb.rules_for("leafWetness").empty());
  auto disease = kb.rules_for("phytophtoraDiseaseStatus");
  ASSERT_EQ(disease.size(), 1u);
  ASSERT_TRUE(disease[0].else_value.has_value());
  EXPECT_EQ(*disease[0].else_value, Value("not-infected"));
}

TEST(KnowledgeBase, CycleRejectedAtomically) {
  KnowledgeBase kb;
  kb.load_domain(two_rule_domain("first", "a", "b"));
  const auto before = kb.rule_count();
  try {
    kb.load_domain(two_rule_domain("second", "b", "a"));
    FAIL() << "cycle accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cyclic_dependency);
    EXPECT_NE(e.detail().find("->"), std::string::npos);
  }
  EXPECT_EQ(kb.rule_count(), before);
  EXPECT_EQ(kb.domain_ids(), std::vector<std::string>{"first"});
  EXPECT_EQ(kb.dependencies("a"), std::set<std::string>{"b"});
}

TEST(KnowledgeBase, SelfCycleInOneDocument) {
  nlohmann::json doc = nlohmann::json::parse(two_rule_domain("d", "a", "b"));
  doc["rules"].push_back({{"id", "back"},
                          {"if", {{{"attribute", "a"}, {"op", "="}, {"value", "yes"}}}},
                          {"then", {{"attribute", "b"}, {"value", 3}}}});
  KnowledgeBase kb;
  EXPECT_THROW(kb.load_domain(doc.dump()), Error);
  EXPECT_EQ(kb.rule_count(), 0u);
}

TEST(KnowledgeBase, VocabularyOnlyPlugin) {
  KnowledgeBase kb;
  auto p = kb.load_domain(R"({"domain_id":"vocab","attributes":[{"name":"soilPh","kind":"number"}],"rules":[]})");
  EXPECT_TRUE(p.rules.empty());
  EXPECT_TRUE(kb.knows("soilPh"));
  EXPECT_FALSE(kb.derivable("soilPh"));
}

TEST(KnowledgeBase, MalformedDocuments) {
  KnowledgeBase kb;
  auto code_of = [&](const std::string& doc) {
    try {
      kb.load_domain(doc);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::config_error;
  };
  EXPECT_EQ(code_of("{not json"), ErrorCode::malformed_domain);
  EXPECT_EQ(code_of(R"({"rules":[]})"), ErrorCode::malformed_domain);
  EXPECT_EQ(code_of(R"({"domain_id":"x","rules":[{"id":"r","if":[{"attribute":"t","op":"~","value":1}],
                      "then":{"attribute":"s","value":"v"}}]})"),
            ErrorCode::malformed_domain);
  // Ordering comparator on a string attribute.
  EXPECT_EQ(code_of(R"({"domain_id":"x","attributes":[{"name":"s","kind":"string"}],
                      "rules":[{"id":"r","if":[{"attribute":"s","op":"<","value":"a"}],
                      "then":{"attribute":"z","value":1}}]})"),
            ErrorCode::malformed_domain);
}

TEST(KnowledgeBase, TopologicalOrderPutsDependenciesFirst) {
  KnowledgeBase kb;
  kb.load_domain(domain_text());
  auto order = kb.topological_order();
  auto pos = [&](const std::string& a) { return std::find(order.begin(), order.end(), a) - order.begin(); };
  for (const auto& a : order) {
    if (!kb.derivable(a)) continue;
    for (const auto& d : kb.dependencies(a)) EXPECT_LT(pos(d), pos(a)) << d << " before " << a;
  }
}

// dependencies(a) equals the union of condition attributes over rules_for(a).
TEST(KnowledgeBaseProperty, DependenciesAgreeWithRules) {
  KnowledgeBase kb;
  kb.load_domain(domain_text());
  for (const auto& attr : kb.attributes()) {
    std::set<std::string> from_rules;
    for (const auto& r : kb.rules_for(attr.name))
      for (const auto& c : r.conditions) from_rules.insert(c.attribute);
    EXPECT_EQ(kb.dependencies(attr.name), from_rules) << attr.name;
  }
}

// Disjoint plugins load to the same view in either order.
TEST(KnowledgeBaseProperty, LoadOrderIndependence) {
  const std::string other = R"({"domain_id":"frost","rules":[
      {"id":"frost-risk","if":[{"attribute":"groundTemperature","op":"<","value":0}],
       "then":{"attribute":"frostRisk","value":true},"else":false}]})";
  KnowledgeBase ab, ba;
  ab.load_domain(domain_text());
  ab.load_domain(other);
  ba.load_domain(other);
  ba.load_domain(domain_text());
  ASSERT_EQ(ab.attributes().size(), ba.attributes().size());
  for (const auto& attr : ab.attributes()) {
    EXPECT_EQ(ab.dependencies(attr.name), ba.dependencies(attr.name));
    auto ra = ab.rules_for(attr.name), rb = ba.rules_for(attr.name);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].id, rb[i].id);
  }
}

TEST(Comparator, ParsesSymbolsAndWords) {
  EXPECT_EQ(parse_comparator("<"), Comparator::less);
  EXPECT_EQ(parse_comparator("≥"), Comparator::greater_equal);
  EXPECT_EQ(parse_comparator("ne"), Comparator::not_equal);
  EXPECT_FALSE(parse_comparator("approx").has_value());
}

TEST(Comparator, UnknownAndMismatchedKindsAreUndecided) {
  EXPECT_FALSE(compare_values(Value::unknown(), Comparator::less, Value(1)).has_value());
  EXPECT_FALSE(compare_values(Value("a"), Comparator::less, Value(1)).has_value());
  EXPECT_EQ(compare_values(Value("high"), Comparator::equal, Value("high")), true);
  EXPECT_EQ(compare_values(Value(12), Comparator::greater_equal, Value(12)), true);
}

}  // namespace
}  // namespace senseflow
