#pragma once

#include "lobefit/lobefit.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fixtures {

struct Example {
  std::string name;
  lobefit::DirectionalDynamics dynamics;
  lobefit::CuttingParams cutting;
  double speed_min;
  double speed_max;
};

inline lobefit::DirectionalDynamics pair(lobefit::Mode x, lobefit::Mode y) {
  lobefit::DirectionalDynamics d;
  d.x_modes = {x};
  d.y_modes = {y};
  return d;
}

// Synthetic reference cases; stiffness in N/m.
inline Example ex1() { return {"ex1", pair({903, 12.53e6, 0.03}, {903, 12.53e6, 0.03}), {556.31, 0.404, 2, 0, 180}, 5000, 25000}; }
inline Example ex2() { return {"ex2", pair({500, 8e6, 0.02}, {500, 8e6, 0.02}), {695, 0.404, 4, 0, 180}, 2500, 12500}; }
inline Example ex3() {
  return {"ex3", pair({900, 9e6, 0.02}, {950, 10e6, 0.01}), {2173, 0.268, 3, 126.9, 180}, 5000, 25000};
}
inline std::vector<Example> examples() { return {ex1(), ex2(), ex3()}; }

inline lobefit::SldOptions sld_for(const Example& e) {
  lobefit::SldOptions o;
  o.speed_min = e.speed_min;
  o.speed_max = e.speed_max;
  return o;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace fixtures

namespace fixtures {

// Ex.1 parameters as identified from its boundary, used as the sensitivity base.
inline lobefit::DirectionalDynamics ex1_predicted() { return pair({910.4, 13.44e6, 0.0287}, {910.4, 13.44e6, 0.0286}); }

} // namespace fixtures
