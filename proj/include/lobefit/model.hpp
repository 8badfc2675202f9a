#pragma once

#include "lobefit/error.hpp"
#include "lobefit/units.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lobefit {

/// One structural vibration mode. Frequency in Hz, stiffness in N/m.
struct Mode {
  double natural_frequency = 0.0;
  double stiffness = 0.0;
  double damping_ratio = 0.0;

  double omega() const { return hz_to_rad_s(natural_frequency); }

  bool valid() const {
    return std::isfinite(natural_frequency) && std::isfinite(stiffness) && std::isfinite(damping_ratio) &&
           natural_frequency > 0.0 && stiffness > 0.0 && damping_ratio > 0.0 && damping_ratio < 1.0;
  }

  void validate() const {
    if (!(natural_frequency > 0.0) || !std::isfinite(natural_frequency))
      throw InvalidArgument("mode natural frequency must be positive");
    if (!(stiffness > 0.0) || !std::isfinite(stiffness)) throw InvalidArgument("mode stiffness must be positive");
    if (!(damping_ratio > 0.0 && damping_ratio < 1.0)) throw InvalidArgument("mode damping ratio must lie in (0, 1)");
  }

  friend bool operator==(const Mode&, const Mode&) = default;
};

enum class Axis { x, y };
enum class ModeField { natural_frequency, stiffness, damping_ratio };

inline const char* to_string(Axis a) { return a == Axis::x ? "x" : "y"; }

inline const char* to_string(ModeField f) {
  switch (f) {
  case ModeField::natural_frequency: return "fn";
  case ModeField::stiffness: return "k";
  case ModeField::damping_ratio: return "zeta";
  }
  return "?";
}

/// Modal models of the tool tip in the feed (x) and cross-feed (y) directions.
struct DirectionalDynamics {
  std::vector<Mode> x_modes;
  std::vector<Mode> y_modes;

  const std::vector<Mode>& modes(Axis a) const { return a == Axis::x ? x_modes : y_modes; }
  std::vector<Mode>& modes(Axis a) { return a == Axis::x ? x_modes : y_modes; }

  /// Sorts each direction by ascending natural frequency.
  DirectionalDynamics& canonicalize() {
    auto by_freq = [](const Mode& a, const Mode& b) { return a.natural_frequency < b.natural_frequency; };
    std::stable_sort(x_modes.begin(), x_modes.end(), by_freq);
    std::stable_sort(y_modes.begin(), y_modes.end(), by_freq);
    return *this;
  }

  void validate() const {
    for (Axis a : {Axis::x, Axis::y}) {
      const auto& ms = modes(a);
      if (ms.empty()) throw InvalidArgument(std::string("no modes in direction ") + to_string(a));
      for (const auto& m : ms) m.validate();
      for (std::size_t i = 1; i < ms.size(); ++i)
        if (ms[i].natural_frequency < ms[i - 1].natural_frequency)
          throw InvalidArgument(std::string("modes in direction ") + to_string(a) +
                                " must be sorted by ascending natural frequency");
    }
  }

  double min_natural_frequency() const {
    double f = x_modes.front().natural_frequency;
    for (const auto& m : x_modes) f = std::min(f, m.natural_frequency);
    for (const auto& m : y_modes) f = std::min(f, m.natural_frequency);
    return f;
  }

  double max_natural_frequency() const {
    double f = 0.0;
    for (const auto& m : x_modes) f = std::max(f, m.natural_frequency);
    for (const auto& m : y_modes) f = std::max(f, m.natural_frequency);
    return f;
  }

  friend bool operator==(const DirectionalDynamics&, const DirectionalDynamics&) = default;
};

/// Cutting process parameters, kept in the engineering units of the input tables.
struct CuttingParams {
  double tangential_coefficient = 0.0; // Kt, N/mm^2
  double radial_ratio = 0.0;           // Kr, dimensionless
  int flute_count = 0;
  double start_angle = 0.0; // deg
  double exit_angle = 0.0;  // deg

  double kt_si() const { return tangential_coefficient * 1e6; }
  double start_rad() const { return deg_to_rad(start_angle); }
  double exit_rad() const { return deg_to_rad(exit_angle); }

  void validate() const {
    if (!(tangential_coefficient > 0.0)) throw InvalidArgument("tangential coefficient must be positive");
    if (!(radial_ratio > 0.0)) throw InvalidArgument("radial ratio must be positive");
    if (flute_count < 1) throw InvalidArgument("flute count must be at least 1");
    if (!(start_angle >= 0.0 && start_angle < exit_angle && exit_angle <= 360.0))
      throw InvalidArgument("immersion angles must satisfy 0 <= start < exit <= 360 deg");
  }

  friend bool operator==(const CuttingParams&, const CuttingParams&) = default;
};

struct BoundaryPoint {
  double spindle_speed = 0.0; // rev/min
  double depth_limit = 0.0;   // mm

  friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;
};

/// Points on a stability boundary, ordered by spindle speed.
struct BoundarySamples {
  std::vector<BoundaryPoint> points;
  std::optional<std::vector<double>> weights;

  std::size_t size() const { return points.size(); }

  std::vector<double> speeds() const {
    std::vector<double> s;
    s.reserve(points.size());
    for (const auto& p : points) s.push_back(p.spindle_speed);
    return s;
  }

  std::vector<double> depths() const {
    std::vector<double> d;
    d.reserve(points.size());
    for (const auto& p : points) d.push_back(p.depth_limit);
    return d;
  }

  void validate() const {
    if (points.empty()) throw InvalidArgument("boundary needs at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(points[i].depth_limit > 0.0) || !std::isfinite(points[i].depth_limit))
        throw InvalidArgument("boundary depth at index " + std::to_string(i) + " must be positive");
      if (i > 0 && !(points[i].spindle_speed > points[i - 1].spindle_speed))
        throw InvalidArgument("boundary speeds must be strictly increasing (index " + std::to_string(i) + ")");
    }
    if (weights) {
      if (weights->size() != points.size()) throw InvalidArgument("weights length differs from point count");
      bool any = false;
      for (double w : *weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and non-negative");
        any = any || w > 0.0;
      }
      if (!any) throw InvalidArgument("at least one weight must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Parameter vector

struct FieldRef {
  Axis axis = Axis::x;
  std::size_t mode = 0;
  ModeField field = ModeField::natural_frequency;

  auto operator<=>(const FieldRef&) const = default;
};

inline std::string to_string(const FieldRef& f) {
  std::ostringstream os;
  os << to_string(f.field) << '_' << to_string(f.axis) << f.mode + 1;
  return os.str();
}

/// Groups of fields constrained to share one value.
struct TieSpec {
  std::vector<std::vector<FieldRef>> groups;

  /// Ties every x-mode field to the y-mode field with the same index.
  static TieSpec axisymmetric(const DirectionalDynamics& d) {
    if (d.x_modes.size() != d.y_modes.size())
      throw InvalidArgument("axisymmetric tie needs equal mode counts in x and y");
    TieSpec t;
    for (std::size_t m = 0; m < d.x_modes.size(); ++m)
      for (auto f : {ModeField::natural_frequency, ModeField::stiffness, ModeField::damping_ratio})
        t.groups.push_back({FieldRef{Axis::x, m, f}, FieldRef{Axis::y, m, f}});
    return t;
  }
};

inline double get_field(const DirectionalDynamics& d, const FieldRef& f) {
  const Mode& m = d.modes(f.axis).at(f.mode);
  switch (f.field) {
  case ModeField::natural_frequency: return m.natural_frequency;
  case ModeField::stiffness: return m.stiffness;
  case ModeField::damping_ratio: return m.damping_ratio;
  }
  return 0.0;
}

inline void set_field(DirectionalDynamics& d, const FieldRef& f, double v) {
  Mode& m = d.modes(f.axis).at(f.mode);
  switch (f.field) {
  case ModeField::natural_frequency: m.natural_frequency = v; break;
  case ModeField::stiffness: m.stiffness = v; break;
  case ModeField::damping_ratio: m.damping_ratio = v; break;
  }
}

/// Canonical field order: (fn, k, zeta) per x-mode ascending, then the y-modes.
inline std::vector<FieldRef> canonical_fields(std::size_t x_modes, std::size_t y_modes) {
  std::vector<FieldRef> out;
  for (Axis a : {Axis::x, Axis::y}) {
    const std::size_t n = a == Axis::x ? x_modes : y_modes;
    for (std::size_t m = 0; m < n; ++m)
      for (auto f : {ModeField::natural_frequency, ModeField::stiffness, ModeField::damping_ratio})
        out.push_back({a, m, f});
  }
  return out;
}

/// Free parameters of a DirectionalDynamics. Each slot drives one field, or a
/// whole tie group that shares a single value.
struct ParameterVector {
  std::vector<double> values;
  std::vector<std::vector<FieldRef>> slots;
  std::size_t x_mode_count = 0;
  std::size_t y_mode_count = 0;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  ModeField kind(std::size_t i) const { return slots[i].front().field; }

  std::string name(std::size_t i) const {
    std::string s = to_string(slots[i].front());
    for (std::size_t j = 1; j < slots[i].size(); ++j) s += "=" + to_string(slots[i][j]);
    return s;
  }

  /// Same layout, new values.
  ParameterVector with_values(std::vector<double> v) const {
    if (v.size() != values.size()) throw InvalidArgument("parameter count mismatch");
    ParameterVector p = *this;
    p.values = std::move(v);
    return p;
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

inline ParameterVector flatten(const DirectionalDynamics& dynamics, const TieSpec& ties = {}) {
  dynamics.validate();
  const auto fields = canonical_fields(dynamics.x_modes.size(), dynamics.y_modes.size());

  auto exists = [&](const FieldRef& f) {
    return f.mode < dynamics.modes(f.axis).size();
  };

  // group index per canonical field, -1 when untied
  std::vector<int> group_of(fields.size(), -1);
  auto index_of = [&](const FieldRef& f) {
    return static_cast<std::size_t>(std::find(fields.begin(), fields.end(), f) - fields.begin());
  };
  for (std::size_t g = 0; g < ties.groups.size(); ++g) {
    const auto& grp = ties.groups[g];
    if (grp.empty()) throw InvalidArgument("empty tie group");
    for (const auto& f : grp) {
      if (!exists(f)) throw InvalidArgument("tie group references missing field " + to_string(f));
      if (f.field != grp.front().field)
        throw InvalidArgument("tie group mixes field kinds: " + to_string(grp.front()) + " and " + to_string(f));
      const std::size_t idx = index_of(f);
      if (group_of[idx] != -1) throw InvalidArgument("field " + to_string(f) + " appears in more than one tie");
      group_of[idx] = static_cast<int>(g);
    }
    const double v0 = get_field(dynamics, grp.front());
    for (const auto& f : grp)
      if (get_field(dynamics, f) != v0)
        throw InvalidArgument("tied fields " + to_string(grp.front()) + " and " + to_string(f) + " differ");
  }

  ParameterVector p;
  p.x_mode_count = dynamics.x_modes.size();
  p.y_mode_count = dynamics.y_modes.size();
  std::vector<bool> emitted(ties.groups.size(), false);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const int g = group_of[i];
    if (g < 0) {
      p.slots.push_back({fields[i]});
      p.values.push_back(get_field(dynamics, fields[i]));
    } else if (!emitted[static_cast<std::size_t>(g)]) {
      emitted[static_cast<std::size_t>(g)] = true;
      auto grp = ties.groups[static_cast<std::size_t>(g)];
      std::sort(grp.begin(), grp.end(), [&](const FieldRef& a, const FieldRef& b) {
        return index_of(a) < index_of(b);
      });
      p.values.push_back(get_field(dynamics, grp.front()));
      p.slots.push_back(std::move(grp));
    }
  }
  return p;
}

/// Rebuilds the dynamics. Does not re-sort modes, so slot indices stay stable
/// while a fit moves frequencies past each other.
inline DirectionalDynamics unflatten(const ParameterVector& p) {
  if (p.values.size() != p.slots.size()) throw InvalidArgument("parameter vector layout is inconsistent");
  DirectionalDynamics d;
  d.x_modes.resize(p.x_mode_count);
  d.y_modes.resize(p.y_mode_count);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < p.values.size(); ++i)
    for (const auto& f : p.slots[i]) {
      set_field(d, f, p.values[i]);
      ++covered;
    }
  if (covered != 3 * (p.x_mode_count + p.y_mode_count))
    throw InvalidArgument("parameter vector does not cover every mode field exactly once");
  return d;
}

} // namespace lobefit
