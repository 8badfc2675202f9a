#pragma once

#include "lobefit/error.hpp"

#include <numbers>
#include <string>
#include <string_view>

namespace lobefit {

enum class Unit {
  hertz,
  rad_per_s,
  newton_per_m,
  meganewton_per_m,
  millimetre,
  metre,
  degree,
  radian,
  newton_per_mm2,
  newton_per_m2,
  rev_per_min,
};

inline Unit parse_unit(std::string_view name) {
  if (name == "Hz") return Unit::hertz;
  if (name == "rad/s") return Unit::rad_per_s;
  if (name == "N/m") return Unit::newton_per_m;
  if (name == "MN/m") return Unit::meganewton_per_m;
  if (name == "mm") return Unit::millimetre;
  if (name == "m") return Unit::metre;
  if (name == "deg") return Unit::degree;
  if (name == "rad") return Unit::radian;
  if (name == "N/mm2" || name == "N/mm^2" || name == "MPa") return Unit::newton_per_mm2;
  if (name == "N/m2" || name == "N/m^2" || name == "Pa") return Unit::newton_per_m2;
  if (name == "rev/min" || name == "rpm") return Unit::rev_per_min;
  throw UnitError("unknown unit '" + std::string(name) + "'");
}

namespace detail {

enum class Dimension { frequency, stiffness, length, angle, pressure };

struct UnitInfo {
  Dimension dim;
  double to_base; // multiply to reach the SI base of the dimension
};

constexpr UnitInfo unit_info(Unit u) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (u) {
  case Unit::hertz: return {Dimension::frequency, two_pi};
  case Unit::rad_per_s: return {Dimension::frequency, 1.0};
  case Unit::rev_per_min: return {Dimension::frequency, two_pi / 60.0};
  case Unit::newton_per_m: return {Dimension::stiffness, 1.0};
  case Unit::meganewton_per_m: return {Dimension::stiffness, 1e6};
  case Unit::millimetre: return {Dimension::length, 1e-3};
  case Unit::metre: return {Dimension::length, 1.0};
  case Unit::degree: return {Dimension::angle, std::numbers::pi / 180.0};
  case Unit::radian: return {Dimension::angle, 1.0};
  case Unit::newton_per_mm2: return {Dimension::pressure, 1e6};
  case Unit::newton_per_m2: return {Dimension::pressure, 1.0};
  }
  return {Dimension::frequency, 0.0};
}

} // namespace detail

/// Converts between the supported engineering and SI units.
/// Rev/min converts to the spindle's angular velocity in rad/s.
inline double convert_units(double value, Unit from, Unit to) {
  const auto a = detail::unit_info(from);
  const auto b = detail::unit_info(to);
  if (a.dim != b.dim) throw UnitError("incompatible unit pair");
  if (from == to) return value;
  return value * a.to_base / b.to_base;
}

inline double convert_units(double value, std::string_view from, std::string_view to) {
  return convert_units(value, parse_unit(from), parse_unit(to));
}

inline constexpr double hz_to_rad_s(double hz) { return 2.0 * std::numbers::pi * hz; }
inline constexpr double rad_s_to_hz(double w) { return w / (2.0 * std::numbers::pi); }
inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Tooth-passing period in seconds at the given spindle speed.
inline constexpr double tooth_period(double spindle_rpm, int flutes) {
  return 60.0 / (flutes * spindle_rpm);
}

/// Spindle speed whose tooth-passing period is `period_s`.
inline constexpr double speed_from_tooth_period(double period_s, int flutes) {
  return 60.0 / (flutes * period_s);
}

} // namespace lobefit
