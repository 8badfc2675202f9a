#pragma once

// Zero-order (averaged directional factor) frequency-domain stability lobes.

#include "lobefit/error.hpp"
#include "lobefit/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lobefit {

using cplx = std::complex<double>;

/// Tool-tip compliance (m/N) of a sum of modes at angular frequency `omega` (rad/s).
inline cplx frf(std::span<const Mode> modes, double omega) {
  cplx h{0.0, 0.0};
  for (const Mode& m : modes) {
    const double wn = m.omega();
    const cplx den{wn * wn - omega * omega, 2.0 * m.damping_ratio * wn * omega};
    h += (wn * wn / m.stiffness) / den;
  }
  return h;
}

/// Time-averaged directional milling coefficients (without the Nt/2pi factor).
struct DirectionalFactors {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;
};

inline DirectionalFactors directional_factors(double radial_ratio, double start_angle, double exit_angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (!(start_angle >= 0.0 && start_angle <= exit_angle && exit_angle <= two_pi + 1e-12))
    throw InvalidArgument("immersion angles must satisfy 0 <= start <= exit <= 2 pi");
  const double kr = radial_ratio;
  auto xx = [kr](double p) { return std::cos(2 * p) - 2 * kr * p + kr * std::sin(2 * p); };
  auto xy = [kr](double p) { return -std::sin(2 * p) - 2 * p + kr * std::cos(2 * p); };
  auto yx = [kr](double p) { return -std::sin(2 * p) + 2 * p + kr * std::cos(2 * p); };
  auto yy = [kr](double p) { return -std::cos(2 * p) - 2 * kr * p - kr * std::sin(2 * p); };
  const double s = start_angle, e = exit_angle;
  return {0.5 * (xx(e) - xx(s)), 0.5 * (xy(e) - xy(s)), 0.5 * (yx(e) - yx(s)), 0.5 * (yy(e) - yy(s))};
}

inline DirectionalFactors directional_factors(const CuttingParams& c) {
  return directional_factors(c.radial_ratio, c.start_rad(), c.exit_rad());
}

/// Roots of a0 L^2 + a1 L + 1 = 0. `second` is empty when a0 vanishes.
struct EigenPair {
  cplx first;
  std::optional<cplx> second;
};

inline EigenPair characteristic_eigenvalues(cplx a0, cplx a1) {
  if (a0 == cplx{0.0, 0.0}) {
    if (a1 == cplx{0.0, 0.0}) throw DegenerateEngagement("characteristic equation has no terms");
    return {-1.0 / a1, std::nullopt};
  }
  const cplx disc = std::sqrt(a1 * a1 - 4.0 * a0);
  // choose the sign that avoids cancellation, recover the other root from the product 1/a0
  const cplx q = -0.5 * (a1 + (std::real(std::conj(a1) * disc) >= 0.0 ? disc : -disc));
  if (q == cplx{0.0, 0.0}) {
    // a1 == 0 and disc == 0 cannot both hold for a0 != 0, but keep the textbook form as fallback
    const cplx r = -a1 / (2.0 * a0);
    return {r, r};
  }
  return {q / a0, 1.0 / q};
}

inline EigenPair characteristic_eigenvalues(cplx frf_x, cplx frf_y, const DirectionalFactors& a) {
  const cplx a0 = frf_x * frf_y * (a.xx * a.yy - a.xy * a.yx);
  const cplx a1 = a.xx * frf_x + a.yy * frf_y;
  return characteristic_eigenvalues(a0, a1);
}

struct LobePoint {
  double spindle_speed = 0.0;     // rev/min
  double depth_limit = 0.0;       // mm
  double chatter_frequency = 0.0; // rad/s
  int lobe_index = 0;
};

/// Phase shift between inner and outer modulation for eigenvalue `lambda`.
/// Lies in (0, 2 pi) when Re(lambda) < 0.
inline double phase_eps(cplx lambda) {
  const double psi = std::atan(lambda.imag() / lambda.real());
  return std::numbers::pi - 2.0 * psi;
}

/// Limiting depth (mm) for eigenvalue `lambda`; only meaningful when Re(lambda) < 0.
inline double depth_limit_mm(cplx lambda, const CuttingParams& c) {
  const double kappa = lambda.imag() / lambda.real();
  const double a_m = -2.0 * std::numbers::pi * lambda.real() * (1.0 + kappa * kappa) / (c.flute_count * c.kt_si());
  return a_m * 1e3;
}

/// Maps one eigenvalue at chatter frequency `chatter_freq` (rad/s) onto lobe
/// `lobe_index`. Returns nothing for Re(lambda) >= 0, where no positive depth exists.
inline std::optional<LobePoint> lobe_point(cplx lambda, double chatter_freq, int lobe_index, const CuttingParams& c) {
  if (!(chatter_freq > 0.0)) throw InvalidArgument("chatter frequency must be positive");
  if (lobe_index < 0) throw InvalidArgument("lobe index must be non-negative");
  if (!(lambda.real() < 0.0)) return std::nullopt;
  const double eps = phase_eps(lambda);
  const double period = (eps + 2.0 * std::numbers::pi * lobe_index) / chatter_freq;
  LobePoint p;
  p.depth_limit = depth_limit_mm(lambda, c);
  p.spindle_speed = speed_from_tooth_period(period, c.flute_count);
  p.chatter_frequency = chatter_freq;
  p.lobe_index = lobe_index;
  if (!std::isfinite(p.depth_limit) || !(p.depth_limit > 0.0)) return std::nullopt;
  return p;
}

struct SldOptions {
  double speed_min = 0.0; // rev/min
  double speed_max = 0.0;
  std::optional<double> freq_min; // Hz; defaults to 0.8 * lowest natural frequency
  std::optional<double> freq_max; // Hz; defaults to 1.6 * highest natural frequency
  int freq_steps = 2000;
  // Lobe families per root. Raised automatically when the lowest requested
  // speed needs higher lobe numbers.
  int max_lobes = 10;
  int grid_points = 2000;
  bool keep_lobes = true;

  void validate() const {
    if (!(speed_min > 0.0 && speed_max > speed_min)) throw InvalidArgument("speed range must satisfy 0 < min < max");
    if (freq_steps < 2) throw InvalidArgument("frequency scan needs at least 2 steps");
    if (max_lobes < 1) throw InvalidArgument("max_lobes must be at least 1");
    if (grid_points < 2) throw InvalidArgument("grid needs at least 2 points");
    if (freq_min && freq_max && !(*freq_min > 0.0 && *freq_max > *freq_min))
      throw InvalidArgument("frequency scan must satisfy 0 < min < max");
  }
};

/// One lobe family: a contiguous run of stable-branch points of one root.
struct LobeBranch {
  int root = 0;
  int lobe_index = 0;
  std::vector<LobePoint> points;
};

struct SldCurve {
  std::vector<LobeBranch> lobes;
  std::vector<double> grid_speeds;     // rev/min, uniform
  std::vector<double> envelope_depths; // mm; +inf where no lobe covers the grid speed

  double speed_min() const { return grid_speeds.front(); }
  double speed_max() const { return grid_speeds.back(); }

  /// Covered grid points of the envelope.
  BoundarySamples envelope() const {
    BoundarySamples s;
    for (std::size_t i = 0; i < grid_speeds.size(); ++i)
      if (std::isfinite(envelope_depths[i])) s.points.push_back({grid_speeds[i], envelope_depths[i]});
    return s;
  }
};

/// Lobe count whose families reach down to `speed_min` for every chatter
/// frequency up to `f_hi` (Hz).
inline int lobes_to_cover(double f_hi, int flutes, double speed_min) {
  return static_cast<int>(std::ceil(60.0 * f_hi / (flutes * speed_min))) + 1;
}

namespace detail {

inline void check_modes(const DirectionalDynamics& d) {
  if (d.x_modes.empty() || d.y_modes.empty()) throw InvalidArgument("each direction needs at least one mode");
  for (const auto& m : d.x_modes) m.validate();
  for (const auto& m : d.y_modes) m.validate();
}

// Lays the segment (n0,d0)-(n1,d1) onto the uniform grid, keeping pointwise minima.
inline void rasterize_segment(double n0, double d0, double n1, double d1, double gmin, double step,
                              std::vector<double>& env) {
  if (n1 < n0) {
    std::swap(n0, n1);
    std::swap(d0, d1);
  }
  const auto last = static_cast<long>(env.size()) - 1;
  long lo = static_cast<long>(std::ceil((n0 - gmin) / step));
  long hi = static_cast<long>(std::floor((n1 - gmin) / step));
  lo = std::max(lo, 0L);
  hi = std::min(hi, last);
  const double span = n1 - n0;
  for (long i = lo; i <= hi; ++i) {
    const double g = gmin + static_cast<double>(i) * step;
    if (g < n0 || g > n1) continue;
    double d;
    if (span <= 0.0) {
      d = std::min(d0, d1);
    } else {
      const double t = (g - n0) / span;
      d = (1.0 - t) * d0 + t * d1;
    }
    auto& slot = env[static_cast<std::size_t>(i)];
    if (d < slot) slot = d;
  }
}

inline constexpr int max_subdivisions = 64;

// Root-tracked eigenvalues along a frequency list, reduced to the depth and
// phase of every stable-branch point.
struct RootScan {
  std::vector<double> depth[2];
  std::vector<double> eps[2];
  std::vector<bool> valid[2];
};

inline RootScan scan_roots(const DirectionalDynamics& d, const DirectionalFactors& alpha,
                           const std::vector<double>& omegas, const CuttingParams& cutting) {
  const std::size_t n = omegas.size();
  RootScan out;
  for (int r = 0; r < 2; ++r) {
    out.depth[r].assign(n, 0.0);
    out.eps[r].assign(n, 0.0);
    out.valid[r].assign(n, false);
  }
  cplx prev[2];
  bool have_prev = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = omegas[i];
    const EigenPair e = characteristic_eigenvalues(frf(d.x_modes, w), frf(d.y_modes, w), alpha);
    cplx root[2] = {e.first, e.second.value_or(cplx{0.0, 0.0})};
    const int count = e.second ? 2 : 1;
    if (count == 2 && have_prev) {
      const double keep = std::abs(root[0] - prev[0]) + std::abs(root[1] - prev[1]);
      const double swap = std::abs(root[1] - prev[0]) + std::abs(root[0] - prev[1]);
      if (swap < keep) std::swap(root[0], root[1]);
    }
    have_prev = count == 2;
    prev[0] = root[0];
    prev[1] = root[1];
    for (int r = 0; r < count; ++r) {
      const cplx lam = root[r];
      if (!(lam.real() < 0.0)) continue;
      const double depth = depth_limit_mm(lam, cutting);
      if (!std::isfinite(depth) || !(depth > 0.0)) continue;
      out.depth[r][i] = depth;
      out.eps[r][i] = phase_eps(lam);
      out.valid[r][i] = true;
    }
  }
  return out;
}

} // namespace detail

inline SldCurve build_sld(const DirectionalDynamics& dynamics, const CuttingParams& cutting, const SldOptions& opt) {
  detail::check_modes(dynamics);
  cutting.validate();
  opt.validate();

  const double f_lo = opt.freq_min.value_or(0.8 * dynamics.min_natural_frequency());
  const double f_hi = opt.freq_max.value_or(1.6 * dynamics.max_natural_frequency());
  if (!(f_lo > 0.0 && f_hi > f_lo)) throw InvalidArgument("frequency scan must satisfy 0 < min < max");
  const DirectionalFactors alpha = directional_factors(cutting);

  const int n_lobes = std::max(opt.max_lobes, lobes_to_cover(f_hi, cutting.flute_count, opt.speed_min));
  const double nt = cutting.flute_count;
  const double two_pi = 2.0 * std::numbers::pi;
  // lobes whose speeds all lie above the range never touch the envelope
  auto lobe_in_range = [&](int k) { return 60.0 * f_lo / (nt * (k + 1)) <= opt.speed_max; };

  const auto n_grid = static_cast<std::size_t>(opt.grid_points);
  const double step = (opt.speed_max - opt.speed_min) / static_cast<double>(n_grid - 1);

  // Uniform scan, then subdivide intervals whose lobe segments inside the
  // speed range span more than one grid step (steep lobe flanks near a mode).
  const auto n_base = static_cast<std::size_t>(opt.freq_steps) + 1;
  const double w_lo = hz_to_rad_s(f_lo), w_hi = hz_to_rad_s(f_hi);
  std::vector<double> base(n_base);
  for (std::size_t i = 0; i < n_base; ++i)
    base[i] = w_lo + (w_hi - w_lo) * static_cast<double>(i) / static_cast<double>(n_base - 1);
  const detail::RootScan coarse = detail::scan_roots(dynamics, alpha, base, cutting);

  std::vector<double> omegas;
  omegas.reserve(n_base * 2);
  for (std::size_t i = 0; i + 1 < n_base; ++i) {
    double widest = 0.0;
    for (int r = 0; r < 2; ++r) {
      if (!coarse.valid[r][i] || !coarse.valid[r][i + 1]) continue;
      for (int k = 0; k < n_lobes; ++k) {
        if (!lobe_in_range(k)) continue;
        const double n0 = 60.0 * base[i] / (nt * (coarse.eps[r][i] + two_pi * k));
        const double n1 = 60.0 * base[i + 1] / (nt * (coarse.eps[r][i + 1] + two_pi * k));
        if (std::max(n0, n1) < opt.speed_min || std::min(n0, n1) > opt.speed_max) continue;
        widest = std::max(widest, std::abs(n1 - n0));
      }
    }
    const int parts = std::clamp(static_cast<int>(std::ceil(widest / step)), 1, detail::max_subdivisions);
    for (int j = 0; j < parts; ++j) omegas.push_back(base[i] + (base[i + 1] - base[i]) * j / parts);
  }
  omegas.push_back(base.back());

  const detail::RootScan fine =
      omegas.size() == base.size() ? coarse : detail::scan_roots(dynamics, alpha, omegas, cutting);
  const std::size_t n_freq = omegas.size();

  SldCurve curve;
  curve.grid_speeds.resize(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) curve.grid_speeds[i] = opt.speed_min + step * static_cast<double>(i);
  curve.grid_speeds.back() = opt.speed_max;
  curve.envelope_depths.assign(n_grid, std::numeric_limits<double>::infinity());

  for (int r = 0; r < 2; ++r) {
    const auto& depth = fine.depth[r];
    const auto& eps = fine.eps[r];
    const auto& valid = fine.valid[r];
    for (int k = 0; k < n_lobes; ++k) {
      if (!lobe_in_range(k)) continue;
      auto speed_at = [&](std::size_t i) { return 60.0 * omegas[i] / (nt * (eps[i] + two_pi * k)); };
      LobeBranch branch{r, k, {}};
      for (std::size_t i = 0; i < n_freq; ++i) {
        if (!valid[i]) {
          if (opt.keep_lobes && !branch.points.empty()) {
            curve.lobes.push_back(std::move(branch));
            branch = LobeBranch{r, k, {}};
          }
          continue;
        }
        if (opt.keep_lobes) branch.points.push_back({speed_at(i), depth[i], omegas[i], k});
        if (i > 0 && valid[i - 1])
          detail::rasterize_segment(speed_at(i - 1), depth[i - 1], speed_at(i), depth[i], opt.speed_min, step,
                                    curve.envelope_depths);
      }
      if (opt.keep_lobes && !branch.points.empty()) curve.lobes.push_back(std::move(branch));
    }
  }

  if (std::none_of(curve.envelope_depths.begin(), curve.envelope_depths.end(),
                   [](double d) { return std::isfinite(d); }))
    throw EmptyCurve("no lobe branch intersects the speed range");
  return curve;
}

/// Linear interpolation of the envelope at the requested speeds.
inline BoundarySamples sample_at_speeds(const SldCurve& curve, std::span<const double> speeds) {
  const auto& g = curve.grid_speeds;
  const auto& d = curve.envelope_depths;
  BoundarySamples out;
  out.points.reserve(speeds.size());
  std::string bad;
  for (double s : speeds) {
    if (!(s >= g.front() && s <= g.back())) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(s);
      continue;
    }
    auto it = std::upper_bound(g.begin(), g.end(), s);
    std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
    if (i + 1 >= g.size()) i = g.size() - 2;
    const double t = (s - g[i]) / (g[i + 1] - g[i]);
    double depth;
    if (t == 0.0) depth = d[i];
    else if (t == 1.0) depth = d[i + 1];
    else depth = (1.0 - t) * d[i] + t * d[i + 1];
    if (!std::isfinite(depth)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(s) + " (uncovered)";
      continue;
    }
    out.points.push_back({s, depth});
  }
  if (!bad.empty()) throw OutOfRange("speeds outside the curve: " + bad);
  return out;
}

/// `count` evenly spaced values over [lo, hi], endpoints exact.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  v.back() = hi;
  return v;
}

/// Boundary depths at `speeds`, using a lobe grid spanning exactly the first to
/// the last requested speed. This is the same sampling the fit uses, so a fit
/// started at the generating parameters sees an objective of exactly zero.
inline BoundarySamples boundary_at_speeds(const DirectionalDynamics& dynamics, const CuttingParams& cutting,
                                          std::span<const double> speeds, SldOptions opt = {}) {
  if (speeds.size() < 2) throw InvalidArgument("need at least two speeds");
  opt.speed_min = speeds.front();
  opt.speed_max = speeds.back();
  opt.keep_lobes = false;
  return sample_at_speeds(build_sld(dynamics, cutting, opt), speeds);
}

} // namespace lobefit
