#include "lobefit/units.hpp"
#include "lobefit/error.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace lobefit;

TEST(Units, HertzToRadPerSecond) {
  EXPECT_NEAR(convert_units(903.0, Unit::hertz, Unit::rad_per_s), 5673.7163, 1e-4);
  EXPECT_DOUBLE_EQ(convert_units(903.0, "Hz", "rad/s"), 2.0 * std::numbers::pi * 903.0);
}

TEST(Units, StiffnessAndLength) {
  EXPECT_DOUBLE_EQ(convert_units(12.53, "MN/m", "N/m"), 1.253e7);
  EXPECT_DOUBLE_EQ(convert_units(2.5, "mm", "m"), 2.5e-3);
  EXPECT_DOUBLE_EQ(convert_units(556.31, "N/mm2", "N/m2"), 556.31e6);
}

TEST(Units, Angles) {
  EXPECT_DOUBLE_EQ(convert_units(180.0, "deg", "rad"), std::numbers::pi);
  EXPECT_DOUBLE_EQ(rad_to_deg(deg_to_rad(126.9)), 126.9);
}

TEST(Units, SpindleSpeed) {
  EXPECT_DOUBLE_EQ(convert_units(60.0, "rev/min", "rad/s"), 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(tooth_period(6000.0, 4), 60.0 / (4 * 6000.0));
  EXPECT_DOUBLE_EQ(speed_from_tooth_period(tooth_period(12345.0, 3), 3), 12345.0);
}

TEST(Units, RoundTripIsIdentity) {
  const std::pair<const char*, const char*> pairs[] = {
      {"Hz", "rad/s"}, {"MN/m", "N/m"}, {"mm", "m"}, {"deg", "rad"}, {"N/mm2", "Pa"}, {"rpm", "rad/s"}};
  for (auto [a, b] : pairs)
    for (double v : {1e-3, 0.404, 903.0, 12.53e6}) {
      const double back = convert_units(convert_units(v, a, b), b, a);
      EXPECT_NEAR(back, v, 4e-16 * v) << a << " <-> " << b;
    }
}

TEST(Units, IncompatiblePairRejected) {
  EXPECT_THROW(convert_units(1.0, "Hz", "mm"), UnitError);
  EXPECT_THROW(convert_units(1.0, "deg", "N/m"), UnitError);
  EXPECT_THROW(parse_unit("furlong"), UnitError);
}
