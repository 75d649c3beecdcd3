#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "senseflow/error.hpp"
#include "senseflow/knowledge.hpp"
#include "senseflow/registry.hpp"
#include "testing.hpp"

namespace senseflow {
namespace {

using testing::sensor;

std::vector<std::string> ids(const std::vector<ProviderEntry>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.descriptor.sensor_id);
  return out;
}

void register_use_case(ProviderRegistry& reg) {
  reg.register_provider(sensor("tmp-01", "thermo", {"airTemperature"}));
  reg.register_provider(sensor("hum-01", "hygro", {"airHumidity"}));
  reg.register_provider(sensor("lwt-01", "leafwet", {"leafWetness"}));
}

TEST(ProviderRegistry, RegisterAndFind) {
  ProviderRegistry reg;
  EXPECT_TRUE(reg.find_providers("leafWetness").empty());
  auto e = reg.register_provider(sensor("lwt-01", "leafwet", {"leafWetness"}), 42);
  EXPECT_EQ(to_string(e.provider_id), "prov-0001");
  EXPECT_EQ(e.registered_at_ms, 42);
  EXPECT_EQ(ids(reg.find_providers("leafWetness")), std::vector<std::string>{"lwt-01"});
  EXPECT_TRUE(reg.find_providers("airStress").empty());
}

TEST(ProviderRegistry, DuplicateAndInvalid) {
  ProviderRegistry reg;
  reg.register_provider(sensor("a", "m", {"x"}));
  try {
    reg.register_provider(sensor("a", "m", {"y"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::duplicate_sensor_id);
  }
  auto bad = sensor("b", "m", {"x"});
  bad.location.latitude = 91;
  EXPECT_THROW(reg.register_provider(bad), Error);
  EXPECT_THROW(reg.register_provider(sensor("c", "m", {})), Error);
  EXPECT_EQ(reg.size(), 1u);
}

TEST(ProviderRegistry, TwoAttributeSensorCountsBoth) {
  ProviderRegistry reg;
  reg.register_provider(sensor("t1", "m", {"airTemperature"}));
  auto before = reg.catalog();
  reg.register_provider(sensor("w1", "m", {"airTemperature", "airHumidity"}));
  std::map<std::string, std::size_t> counts;
  for (const auto& c : reg.catalog()) counts[c.attribute.name] = c.provider_count;
  EXPECT_EQ(counts["airTemperature"], 2u);
  EXPECT_EQ(counts["airHumidity"], 1u);
  EXPECT_EQ(before.size(), 1u);
}

TEST(ProviderRegistry, OrderingAndConstraints) {
  ProviderRegistry reg;
  reg.register_provider(sensor("tmp-b", "m", {"airTemperature"}, "plot-7", 2));
  reg.register_provider(sensor("tmp-a", "m", {"airTemperature"}, "plot-9", 1));
  EXPECT_EQ(ids(reg.find_providers("airTemperature")), (std::vector<std::string>{"tmp-a", "tmp-b"}));
  EXPECT_EQ(ids(reg.find_providers("airTemperature", {"plot-7", std::nullopt})), std::vector<std::string>{"tmp-b"});
  EXPECT_EQ(ids(reg.find_providers("airTemperature", {std::nullopt, 1})), std::vector<std::string>{"tmp-a"});
}

TEST(ProviderRegistry, AvailabilityRoundTrip) {
  ProviderRegistry reg;
  register_use_case(reg);
  auto hum = reg.find_by_sensor("hum-01")->provider_id;
  const auto before = ids(reg.find_providers("airHumidity"));
  reg.set_availability(hum, Availability::offline);
  EXPECT_TRUE(reg.find_providers("airHumidity").empty());
  EXPECT_FALSE(reg.is_online(hum));
  reg.set_availability(hum, Availability::online);
  EXPECT_EQ(ids(reg.find_providers("airHumidity")), before);
  try {
    reg.set_availability(ProviderId{999}, Availability::offline);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_provider);
  }
}

// Brute-force filter-and-sort oracle over a random registry.
TEST(ProviderRegistryProperty, FindProvidersSoundAndComplete) {
  std::mt19937_64 rng(21);
  const std::vector<std::string> attrs = {"a", "b", "c", "d"};
  const std::vector<std::string> labels = {"p1", "p2"};
  for (int round = 0; round < 20; ++round) {
    ProviderRegistry reg;
    std::vector<SensorDescriptor> all;
    for (int i = 0; i < 25; ++i) {
      std::vector<std::string> provided;
      for (const auto& a : attrs)
        if (rng() % 3 == 0) provided.push_back(a);
      if (provided.empty()) provided.push_back(attrs[rng() % attrs.size()]);
      auto d = sensor("s" + std::to_string(rng() % 1000) + "-" + std::to_string(i), "m", provided,
                      labels[rng() % 2], static_cast<int>(rng() % 4));
      d.availability = rng() % 5 == 0 ? Availability::offline : Availability::online;
      all.push_back(d);
      reg.register_provider(d);
    }
    for (const auto& a : attrs) {
      for (std::optional<std::string> label : {std::optional<std::string>{}, std::optional<std::string>{"p1"}}) {
        std::vector<SensorDescriptor> expect;
        for (const auto& d : all) {
          bool has = std::any_of(d.provided_attributes.begin(), d.provided_attributes.end(),
                                 [&](const ContextAttribute& c) { return c.name == a; });
          if (has && d.availability == Availability::online && (!label || d.location.label == *label))
            expect.push_back(d);
        }
        std::sort(expect.begin(), expect.end(), [](const auto& x, const auto& y) {
          return std::tie(x.cost_rank, x.sensor_id) < std::tie(y.cost_rank, y.sensor_id);
        });
        std::vector<std::string> want;
        for (const auto& d : expect) want.push_back(d.sensor_id);
        EXPECT_EQ(ids(reg.find_providers(a, {label, std::nullopt})), want);
      }
    }
  }
}

// Least fixed point computed by naive iteration over the raw rule list.
std::set<std::string> closure_oracle(const std::set<std::string>& direct, const KnowledgeBase& kb) {
  std::set<std::string> known = direct;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& attr : kb.derived_attributes()) {
      if (known.count(attr)) continue;
      for (const auto& r : kb.rules_for(attr)) {
        bool all = true;
        for (const auto& c : r.conditions) all = all && known.count(c.attribute);
        if (all) {
          known.insert(attr);
          changed = true;
          break;
        }
      }
    }
  }
  return known;
}

std::set<std::string> names(const std::vector<AttributeCatalogEntry>& entries) {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.attribute.name);
  return out;
}

TEST(CapturableAttributes, UseCase) {
  ProviderRegistry reg;
  KnowledgeBase kb;
  kb.load_domain(testing::domain_text());
  register_use_case(reg);
  auto entries = capturable_attributes(reg, kb);
  auto it = std::find_if(entries.begin(), entries.end(), [](auto& e) { return e.attribute.name == "airStress"; });
  ASSERT_NE(it, entries.end());
  EXPECT_TRUE(it->derivable);
  EXPECT_EQ(it->provider_count, 0u);
  EXPECT_EQ(names(entries), closure_oracle({"airTemperature", "airHumidity", "leafWetness"}, kb));
}

TEST(CapturableAttributes, EmptyAndPartial) {
  ProviderRegistry reg;
  KnowledgeBase empty_kb;
  EXPECT_TRUE(capturable_attributes(reg, empty_kb).empty());
  KnowledgeBase kb;
  kb.load_domain(testing::domain_text());
  reg.register_provider(sensor("tmp-01", "thermo", {"airTemperature"}));
  EXPECT_EQ(names(capturable_attributes(reg, kb)), std::set<std::string>{"airTemperature"});
}

TEST(CapturableAttributesProperty, MatchesFixedPointOracle) {
  KnowledgeBase kb;
  kb.load_domain(testing::domain_text());
  const std::vector<std::string> primaries = {"airTemperature", "airHumidity", "leafWetness"};
  for (unsigned mask = 0; mask < 8; ++mask) {
    ProviderRegistry reg;
    std::set<std::string> direct;
    for (unsigned i = 0; i < 3; ++i) {
      if (mask & (1u << i)) {
        reg.register_provider(sensor("s" + std::to_string(i), "m", {primaries[i]}));
        direct.insert(primaries[i]);
      }
    }
    EXPECT_EQ(names(capturable_attributes(reg, kb)), closure_oracle(direct, kb)) << "mask " << mask;
  }
}

}  // namespace
}  // namespace senseflow
