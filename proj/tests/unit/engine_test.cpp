#include <gtest/gtest.h>

#include "senseflow/engine.hpp"
#include "senseflow/error.hpp"
#include "testing.hpp"

namespace senseflow {
namespace {

using testing::phyto;
using testing::read_file;
using testing::request_json;
using testing::TempDir;
using testing::use_case_attributes;

std::unique_ptr<Engine> boot_use_case() {
  auto config = load_scenario_config(phyto() / "scenario.json");
  config.requests.clear();
  return Engine::boot(config);
}

TEST(ScenarioConfig, ResolvesAgainstConfigDirectory) {
  auto config = load_scenario_config(phyto() / "scenario_fault.json");
  EXPECT_EQ(config.fleet_file, phyto() / "fleet.json");
  EXPECT_EQ(config.requests.size(), 1u);
  EXPECT_EQ(config.run_for_ms, 60000);
  ASSERT_EQ(config.events.size(), 1u);
  EXPECT_EQ(config.events[0].sensor_id, "hum-01");
  EXPECT_EQ(config.events[0].availability, Availability::offline);
}

TEST(ScenarioConfig, MissingFileFailsFast) {
  try {
    parse_scenario_config(R"({"sdd_directory":"sdd","fleet_file":"nope.json","domain_files":[]})", phyto());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_error);
    EXPECT_NE(e.detail().find("nope.json"), std::string::npos);
  }
}

TEST(Engine, BootsUseCase) {
  auto engine = boot_use_case();
  EXPECT_EQ(engine->registry().entries().size(), 3u);
  EXPECT_EQ(engine->inspect(InspectKind::sensors).size(), 3u);
  EXPECT_EQ(engine->now_ms(), 1700000000000);
  auto attrs = engine->inspect(InspectKind::attributes);
  std::set<std::string> names;
  for (const auto& a : attrs) names.insert(a["name"].get<std::string>());
  for (const auto& a : use_case_attributes()) EXPECT_TRUE(names.count(a)) << a;
  EXPECT_TRUE(names.count("leafWetness"));
  EXPECT_TRUE(engine->inspect(InspectKind::plans).empty());
  EXPECT_FALSE(engine->inspect(InspectKind::operators).empty());
}

TEST(Engine, FleetWithUnknownModelNamesIt) {
  TempDir dir;
  testing::write_file(dir / "fleet.json",
                      R"({"sensors":[{"sensor_id":"x-1","model_id":"ghost-9","location":{"label":"plot-7"}}]})");
  ScenarioConfig config;
  config.sdd_directory = phyto() / "sdd";
  config.fleet_file = dir / "fleet.json";
  try {
    Engine::boot(config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_error);
    EXPECT_NE(e.detail().find("ghost-9"), std::string::npos);
  }
}

TEST(Engine, NoDomainsMeansOnlyPrimaryAttributes) {
  auto config = load_scenario_config(phyto() / "scenario.json");
  config.requests.clear();
  config.domain_files.clear();
  auto engine = Engine::boot(config);
  EXPECT_NO_THROW(engine->submit(request_json({"airTemperature"})));
  try {
    engine->submit(request_json({"airStress"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::unknown_attribute || e.code() == ErrorCode::unsatisfiable_attribute);
  }
}

TEST(Engine, SubmitAndReuse) {
  auto engine = boot_use_case();
  auto a = engine->submit(request_json(use_case_attributes(), "json-lines", 1000, "farmer"));
  EXPECT_EQ(a.sources, 3u);
  EXPECT_EQ(a.derived, 2u);
  EXPECT_FALSE(a.reused);
  EXPECT_EQ(a.plan_id.size(), 17u);
  auto b = engine->submit(request_json(use_case_attributes(), "csv", 1000, "agronomist"));
  EXPECT_TRUE(b.reused);
  EXPECT_EQ(a.plan_id, b.plan_id);
  EXPECT_NE(a.subscription_id, b.subscription_id);
  EXPECT_EQ(engine->discoverers().compilations(), 1u);
  auto plans = engine->inspect(InspectKind::plans);
  ASSERT_EQ(plans.size(), 1u);
  EXPECT_EQ(plans[0]["subscribers"], 2);
  EXPECT_EQ(engine->inspect(InspectKind::subscriptions).size(), 2u);
}

TEST(Engine, UnsatisfiableAfterOutage) {
  auto engine = boot_use_case();
  engine->set_availability("hum-01", Availability::offline);
  try {
    engine->submit(request_json({"airStress"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsatisfiable_attribute);
    EXPECT_NE(e.detail().find("airHumidity"), std::string::npos);
  }
  EXPECT_THROW(engine->set_availability("nobody", Availability::online), Error);
}

TEST(Engine, PlanDumpShowsRules) {
  auto engine = boot_use_case();
  auto r = engine->submit(request_json({"phytophtoraDiseaseStatus"}));
  auto dump = engine->plan_dump(r.plan_id);
  EXPECT_EQ(dump["plan_id"], r.plan_id);
  bool saw_rule = false;
  for (const auto& n : dump["nodes"]) {
    if (!n.contains("rules")) continue;
    for (const auto& text : n["rules"]) {
      if (text.get<std::string>().rfind("IF ", 0) == 0) saw_rule = true;
    }
  }
  EXPECT_TRUE(saw_rule);
  EXPECT_THROW(engine->plan_dump("plan-000000000000"), Error);
}

TEST(Engine, SimulatedDeliveriesAndUnsubscribe) {
  auto engine = boot_use_case();
  auto r = engine->submit(request_json(use_case_attributes(), "json-lines", 2000));
  engine->run_for(10000);
  auto records = parse_json_lines(engine->drain_stream(r.subscription_id));
  EXPECT_EQ(records.size(), 5u);
  for (const auto& rec : records) {
    std::set<std::string> keys;
    for (const auto& [k, v] : rec.values) keys.insert(k);
    EXPECT_EQ(keys, std::set<std::string>(use_case_attributes().begin(), use_case_attributes().end()));
  }
  engine->unsubscribe(r.subscription_id);
  engine->run_for(10000);
  EXPECT_TRUE(engine->drain_stream(r.subscription_id).empty());
  EXPECT_EQ(engine->subscriptions().get(r.subscription_id)->status, SubscriptionStatus::cancelled);
  EXPECT_THROW(engine->unsubscribe("sub-9999"), Error);
}

TEST(Engine, RealClockSmoke) {
  auto config = load_scenario_config(phyto() / "scenario.json");
  config.requests.clear();
  config.clock_mode = ClockMode::real;
  auto engine = Engine::boot(config);
  auto r = engine->submit(request_json({"airTemperature"}, "json-lines", 100));
  engine->start();
  engine->run_for(550);
  engine->shutdown();
  auto records = parse_json_lines(engine->drain_stream(r.subscription_id));
  EXPECT_GE(records.size(), 2u);
  EXPECT_LE(records.size(), 7u);
}

TEST(RunScenario, ZeroDurationDeliversNothing) {
  TempDir out;
  auto report = run_scenario(load_scenario_config(phyto() / "scenario.json"), out.path(), {.run_for_ms = 0});
  EXPECT_EQ(report.exit_status, 0);
  ASSERT_EQ(report.subscriptions.size(), 2u);
  for (const auto& s : report.subscriptions) EXPECT_EQ(s.deliveries, 0u);
}

TEST(RunScenario, UseCaseIsSelfConsistent) {
  TempDir out;
  auto report = run_scenario(load_scenario_config(phyto() / "scenario.json"), out.path());
  EXPECT_EQ(report.exit_status, 0) << report.error;
  ASSERT_EQ(report.subscriptions.size(), 2u);
  EXPECT_EQ(report.subscriptions[0].deliveries, 60u);
  EXPECT_EQ(report.subscriptions[1].deliveries, 12u);
  for (const auto& s : report.subscriptions) {
    EXPECT_GT(s.records_checked, 0u);
    EXPECT_EQ(s.consistency_mismatches, 0u);
  }
  auto doc = nlohmann::json::parse(read_file(report.report_file));
  EXPECT_EQ(doc["subscriptions"].size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(report.plans_file));
}

TEST(RunScenario, HumidityOutageGoesUnknown) {
  TempDir out;
  auto report = run_scenario(load_scenario_config(phyto() / "scenario_fault.json"), out.path());
  ASSERT_EQ(report.subscriptions.size(), 1u);
  auto records = parse_json_lines(read_file(report.subscriptions[0].file));
  ASSERT_EQ(records.size(), 60u);
  const std::int64_t t0 = 1700000000000;
  for (const auto& r : records) {
    if (r.timestamp_ms < t0 + 30000) {
      EXPECT_FALSE(r.values.at("airHumidity").is_unknown());
    } else {
      EXPECT_TRUE(r.values.at("airHumidity").is_unknown());
      EXPECT_TRUE(r.values.at("airStress").is_unknown());
      EXPECT_TRUE(r.values.at("phytophtoraDiseaseStatus").is_unknown());
      EXPECT_FALSE(r.values.at("airTemperature").is_unknown());
    }
  }
}

TEST(RunScenario, ReplayIsByteIdentical) {
  TempDir a, b;
  auto config = load_scenario_config(phyto() / "scenario.json");
  auto ra = run_scenario(config, a.path());
  auto rb = run_scenario(config, b.path());
  ASSERT_EQ(ra.subscriptions.size(), rb.subscriptions.size());
  for (std::size_t i = 0; i < ra.subscriptions.size(); ++i) {
    EXPECT_EQ(read_file(ra.subscriptions[i].file), read_file(rb.subscriptions[i].file));
  }
  EXPECT_EQ(read_file(ra.plans_file), read_file(rb.plans_file));
}

TEST(RunScenario, BadRequestExitsOne) {
  TempDir out;
  auto config = load_scenario_config(phyto() / "scenario.json");
  config.requests = {std::filesystem::path(SENSEFLOW_TEST_DATA_DIR) / "bad_format_request.json"};
  auto report = run_scenario(config, out.path());
  EXPECT_EQ(report.exit_status, 1);
  EXPECT_NE(report.error.find("UnsupportedFormat"), std::string::npos);
}

}  // namespace
}  // namespace senseflow
