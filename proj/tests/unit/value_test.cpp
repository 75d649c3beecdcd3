#include <gtest/gtest.h>

#include <cmath>

#include "senseflow/clock.hpp"
#include "senseflow/error.hpp"
#include "senseflow/value.hpp"

namespace senseflow {
namespace {

TEST(Value, DefaultIsUnknown) {
  Value v;
  EXPECT_TRUE(v.is_unknown());
  EXPECT_FALSE(v.kind().has_value());
  EXPECT_EQ(Value::unknown(), v);
}

TEST(Value, KindsAndAccessors) {
  EXPECT_EQ(Value(3).kind(), ValueKind::number);
  EXPECT_DOUBLE_EQ(Value(3).as_number(), 3.0);
  EXPECT_EQ(Value(true).kind(), ValueKind::boolean);
  EXPECT_EQ(Value("high").kind(), ValueKind::string);
  EXPECT_EQ(Value(GeoPoint{1, 2}).kind(), ValueKind::geo);
  EXPECT_NE(Value(1), Value(true));
  EXPECT_NE(Value("1"), Value(1));
}

TEST(Value, FormatNumberRoundTrips) {
  EXPECT_EQ(format_number(14.0), "14");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.1), "0.1");
  for (double d : {1e-9, 123456.789, -42.5, 1.0 / 3.0}) {
    EXPECT_EQ(std::stod(format_number(d)), d);
  }
}

TEST(Value, ParseByKind) {
  EXPECT_EQ(parse_value("12.5", ValueKind::number), Value(12.5));
  EXPECT_EQ(parse_value(" 7 ", ValueKind::number), Value(7));
  EXPECT_FALSE(parse_value("abc", ValueKind::number).has_value());
  EXPECT_EQ(parse_value("true", ValueKind::boolean), Value(true));
  EXPECT_EQ(parse_value("0", ValueKind::boolean), Value(false));
  EXPECT_EQ(parse_value("high", ValueKind::string), Value("high"));
  EXPECT_EQ(parse_value("53.2,-9.1", ValueKind::geo), Value(GeoPoint{53.2, -9.1}));
  EXPECT_EQ(parse_value("", ValueKind::number), Value::unknown());
  EXPECT_EQ(parse_value("5", ValueKind::any), Value(5));
  EXPECT_EQ(parse_value("low", ValueKind::any), Value("low"));
}

TEST(Value, DisplayForms) {
  EXPECT_EQ(to_display(Value::unknown()), "unknown");
  EXPECT_EQ(to_display(Value(false)), "false");
  EXPECT_EQ(to_display(Value(GeoPoint{1.5, -2})), "1.5,-2");
}

TEST(ErrorCodes, StableNames) {
  EXPECT_EQ(to_string(ErrorCode::unsatisfiable_attribute), "UnsatisfiableAttribute");
  EXPECT_EQ(to_string(ErrorCode::cyclic_dependency), "CyclicDependency");
  Error e(ErrorCode::invalid_sdd, "sampling_interval_ms must be positive");
  EXPECT_EQ(e.code(), ErrorCode::invalid_sdd);
  EXPECT_NE(std::string(e.what()).find("InvalidSdd"), std::string::npos);
}

TEST(SimulatedClock, OnlyMovesForward) {
  SimulatedClock c(100);
  c.advance(50);
  EXPECT_EQ(c.now_ms(), 150);
  c.set(120);
  EXPECT_EQ(c.now_ms(), 150);
  c.advance(-10);
  EXPECT_EQ(c.now_ms(), 150);
  c.set(1000);
  EXPECT_EQ(c.now_ms(), 1000);
}

}  // namespace
}  // namespace senseflow
