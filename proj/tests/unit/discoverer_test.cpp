#include <gtest/gtest.h>

#include "senseflow/discoverer.hpp"
#include "senseflow/dissemination.hpp"
#include "senseflow/error.hpp"
#include "testing.hpp"

namespace senseflow {
namespace {

using testing::constant_sdd;
using testing::request_for;
using testing::sensor;

class DiscovererTest : public ::testing::Test {
 protected:
  void world(double t, double h, double w, bool humidity_faulted = false) {
    kb.load_domain(testing::domain_text());
    sdds.add(constant_sdd("thermo", "airTemperature", t));
    auto hum = constant_sdd("hygro", "airHumidity", h);
    if (humidity_faulted) hum.driver_kind = "external-stub";
    sdds.add(hum);
    sdds.add(constant_sdd("leafwet", "leafWetness", w));
    reg.register_provider(sensor("tmp-01", "thermo", {"airTemperature"}));
    reg.register_provider(sensor("hum-01", "hygro", {"airHumidity"}));
    reg.register_provider(sensor("lwt-01", "leafwet", {"leafWetness"}));
  }

  std::shared_ptr<Discoverer> compiled(Request req) {
    auto d = compile(build_plan(req, reg, kb, *ops), reg, wrappers, sdds, *ops);
    d->add_subscriber();
    d->start();
    return d;
  }

  Request use_case(bool annotations = true) {
    auto r = request_for({"phytophtoraDiseaseStatus", "airStress"});
    r.include_context_annotations = annotations;
    return r;
  }

  KnowledgeBase kb;
  ProviderRegistry reg;
  SddRepository sdds;
  WrapperRepository wrappers;
  std::unique_ptr<OperatorRepository> ops = OperatorRepository::with_builtins();
  SimulatedClock clock{1000};
};

TEST_F(DiscovererTest, HighStressInfected) {
  world(15, 30, 60);
  auto rec = compiled(use_case())->tick(clock);
  EXPECT_EQ(rec.timestamp_ms, 1000);
  EXPECT_EQ(rec.values.at("airStress"), Value("high"));
  EXPECT_EQ(rec.values.at("phytophtoraDiseaseStatus"), Value("infected"));
  EXPECT_EQ(rec.annotations.quality.at("airTemperature"), Quality::measured);
  EXPECT_EQ(rec.annotations.quality.at("airStress"), Quality::derived);
  EXPECT_EQ(rec.annotations.geographical_location.at("hum-01"), "plot-7");
  EXPECT_EQ(rec.annotations.source_sensor_ids, (std::vector<std::string>{"hum-01", "lwt-01", "tmp-01"}));
}

TEST_F(DiscovererTest, LowStressNotInfectedViaElse) {
  world(10, 20, 60);
  auto rec = compiled(use_case())->tick(clock);
  EXPECT_EQ(rec.values.at("airStress"), Value("low"));
  EXPECT_EQ(rec.values.at("phytophtoraDiseaseStatus"), Value("not-infected"));
}

TEST_F(DiscovererTest, FaultedHumidityPropagatesUnknown) {
  world(15, 30, 60, true);
  auto rec = compiled(use_case())->tick(clock);
  EXPECT_TRUE(rec.values.at("airHumidity").is_unknown());
  EXPECT_TRUE(rec.values.at("airStress").is_unknown());
  EXPECT_TRUE(rec.values.at("phytophtoraDiseaseStatus").is_unknown());
  EXPECT_EQ(rec.annotations.quality.at("airHumidity"), Quality::unknown);
  EXPECT_EQ(rec.annotations.quality.at("phytophtoraDiseaseStatus"), Quality::unknown);
  EXPECT_EQ(rec.values.at("airTemperature"), Value(15));
}

TEST_F(DiscovererTest, OfflineProviderReadsUnknownThenRecovers) {
  world(15, 30, 60);
  auto d = compiled(use_case());
  const auto hum = reg.find_by_sensor("hum-01")->provider_id;
  reg.set_availability(hum, Availability::offline);
  EXPECT_TRUE(d->tick(clock).values.at("airStress").is_unknown());
  reg.set_availability(hum, Availability::online);
  clock.advance(1000);
  EXPECT_EQ(d->tick(clock).values.at("airStress"), Value("high"));
}

TEST_F(DiscovererTest, EvaluationOrderIsTopological) {
  world(15, 30, 60);
  auto d = compiled(use_case());
  const auto& plan = d->plan();
  const auto& order = d->evaluation_order();
  ASSERT_EQ(order.size(), 5u);
  std::vector<std::size_t> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (const auto& e : plan.edges) EXPECT_LT(pos[e.from], pos[e.to]);
  EXPECT_EQ(d->tick_interval_ms(), 1000);
}

TEST_F(DiscovererTest, SingleSourcePlan) {
  world(15, 30, 60);
  auto d = compiled(request_for({"airTemperature"}));
  EXPECT_EQ(d->evaluation_order().size(), 1u);
  EXPECT_EQ(d->tick(clock).values.at("airTemperature"), Value(15));
}

TEST_F(DiscovererTest, DeregisteredProviderUnavailable) {
  world(15, 30, 60);
  auto plan = build_plan(use_case(), reg, kb, *ops);
  ProviderRegistry other;
  try {
    compile(plan, other, wrappers, sdds, *ops);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::wrapper_unavailable);
  }
}

TEST_F(DiscovererTest, StopRejectsTickAndLastSubscriberStops) {
  world(15, 30, 60);
  auto d = compiled(use_case());
  d->add_subscriber();
  EXPECT_EQ(d->remove_subscriber(), 1u);
  EXPECT_EQ(d->state(), DiscovererState::running);
  EXPECT_EQ(d->remove_subscriber(), 0u);
  EXPECT_EQ(d->state(), DiscovererState::stopped);
  try {
    d->tick(clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::state_violation);
  }
  d->stop();
  EXPECT_EQ(d->state(), DiscovererState::stopped);
}

TEST_F(DiscovererTest, RepositoryReuseByCanonicalKey) {
  world(15, 30, 60);
  DiscovererRepository repo;
  EXPECT_EQ(repo.lookup_or_register("anything"), nullptr);
  auto req = use_case();
  auto d = compile(build_plan(req, reg, kb, *ops), reg, wrappers, sdds, *ops);
  repo.insert(d);
  auto again = repo.lookup_or_register(canonical_key(req));
  ASSERT_EQ(again, d);
  EXPECT_EQ(d->subscriber_count(), 2u);
  EXPECT_EQ(repo.compilations(), 1u);
  auto other = req;
  other.delivery_interval_ms = 2000;
  EXPECT_EQ(repo.lookup_or_register(canonical_key(other)), nullptr);
}

TEST_F(DiscovererTest, SamplingIntervalHoldsLatestValue) {
  kb.load_domain(testing::domain_text());
  SensorDeviceDefinition ramp = constant_sdd("ramp", "airTemperature", 0, 3000);
  ramp.driver_params = {{"waveform", Value("ramp")}, {"amplitude", Value(100)}, {"period_ms", Value(100000)}};
  sdds.add(ramp);
  reg.register_provider(sensor("r", "ramp", {"airTemperature"}));
  auto d = compiled(request_for({"airTemperature"}, 1000));
  EXPECT_EQ(d->tick_interval_ms(), 1000);
  std::vector<Value> seen;
  for (int i = 0; i < 4; ++i) {
    seen.push_back(d->tick(clock).values.at("airTemperature"));
    clock.advance(1000);
  }
  EXPECT_EQ(seen[0], seen[1]);
  EXPECT_EQ(seen[1], seen[2]);
  EXPECT_NE(seen[2], seen[3]);
}

// Offline re-evaluation of every derive node from the record's measured values.
TEST_F(DiscovererTest, SelfConsistencyProperty) {
  kb.load_domain(testing::domain_text());
  SddRepository fixture({testing::phyto() / "sdd"});
  fixture.preload();
  for (const auto& id : fixture.model_ids()) sdds.add(*fixture.find(id));
  reg.register_provider(sensor("tmp-01", "thermo-t100", {"airTemperature"}));
  reg.register_provider(sensor("hum-01", "hygro-h200", {"airHumidity"}));
  reg.register_provider(sensor("lwt-01", "leafwet-lw3", {"leafWetness"}));
  auto d = compiled(use_case(true));
  std::set<std::string> seen_stress;
  for (int i = 0; i < 120; ++i) {
    auto rec = d->tick(clock);
    std::map<std::string, Value> measured;
    for (const auto& [a, q] : rec.annotations.quality)
      if (q == Quality::measured || (q == Quality::unknown && !kb.derivable(a))) measured[a] = rec.values.at(a);
    for (const auto& [a, v] : reevaluate(d->plan(), measured)) EXPECT_EQ(rec.values.at(a), v) << a << " @" << i;
    seen_stress.insert(to_display(rec.values.at("airStress")));
    clock.advance(1000);
  }
  EXPECT_EQ(seen_stress, (std::set<std::string>{"high", "low", "unknown"}));
}

TEST_F(DiscovererTest, DeterministicReplayProperty) {
  kb.load_domain(testing::domain_text());
  SddRepository fixture({testing::phyto() / "sdd"});
  fixture.preload();
  for (const auto& id : fixture.model_ids()) sdds.add(*fixture.find(id));
  reg.register_provider(sensor("tmp-01", "thermo-t100", {"airTemperature"}));
  reg.register_provider(sensor("hum-01", "hygro-h200", {"airHumidity"}));
  reg.register_provider(sensor("lwt-01", "leafwet-lw3", {"leafWetness"}));
  auto run = [&] {
    auto d = compiled(use_case(true));
    SimulatedClock c(0);
    std::string out;
    for (int i = 0; i < 50; ++i) {
      out += format_record(d->tick(c), OutputFormat::json_lines);
      c.advance(1000);
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST_F(DiscovererTest, ListenersReceiveEveryTick) {
  world(15, 30, 60);
  auto d = compiled(use_case());
  int a = 0, b = 0;
  d->add_listener("a", [&](const DataRecord&) { ++a; });
  d->add_listener("b", [&](const DataRecord&) { ++b; });
  d->tick(clock);
  d->remove_listener("b");
  d->tick(clock);
  EXPECT_EQ(a, 2);
  EXPECT_EQ(b, 1);
  EXPECT_EQ(d->ticks(), 2u);
  ASSERT_TRUE(d->latest().has_value());
}

}  // namespace
}  // namespace senseflow
