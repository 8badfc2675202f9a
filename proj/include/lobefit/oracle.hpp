#pragma once

// Brute-force stability check for validating the lobe engine. Evaluates the
// closed-loop characteristic function along the imaginary axis and counts
// right-half-plane roots from its winding about the origin. Shares only the
// FRF and the directional factors with zoa.hpp.

#include "lobefit/error.hpp"
#include "lobefit/model.hpp"
#include "lobefit/zoa.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace lobefit::oracle {

struct FreqScan {
  double band_factor = 4.0;        // scan [0, band_factor * highest natural frequency]
  int min_points = 4000;
  double refine_above = std::numbers::pi / 4; // subdivide steps whose phase change exceeds this
  double resolve_limit = std::numbers::pi / 2; // still above this after refinement -> resolution error
  int max_refine_depth = 20;
  double marginal_chord = 1e-6; // unresolved steps shorter than this pass through the origin
  double tail_tolerance = 0.5; // |D - 1| allowed at the top of the band
};

/// det[I + L(w) A Phi(iw)] with L(w) = -(Nt a Kt / 4 pi)(1 - exp(-i w T)).
inline cplx characteristic_function(const DirectionalDynamics& d, const DirectionalFactors& a,
                                    const CuttingParams& c, double depth_m, double period_s, double w) {
  const cplx fx = frf(d.x_modes, w);
  const cplx fy = frf(d.y_modes, w);
  const cplx lam = -(c.flute_count * depth_m * c.kt_si() / (4.0 * std::numbers::pi)) *
                   (1.0 - std::exp(cplx{0.0, -w * period_s}));
  // I + lam * [a] * diag(fx, fy)
  const cplx m00 = 1.0 + lam * a.xx * fx;
  const cplx m01 = lam * a.xy * fy;
  const cplx m10 = lam * a.yx * fx;
  const cplx m11 = 1.0 + lam * a.yy * fy;
  return m00 * m11 - m01 * m10;
}

namespace detail {

struct Locus {
  const DirectionalDynamics& d;
  DirectionalFactors a;
  const CuttingParams& c;
  double depth_m;
  double period;

  cplx operator()(double w) const { return characteristic_function(d, a, c, depth_m, period, w); }
};

inline double phase_step(cplx from, cplx to) { return std::arg(to / from); }

// Unwrapped phase change of the locus over [w0, w1], refined until each step is
// small. A step that stays ambiguous while its chord has shrunk to nothing means
// the locus runs through the origin: a root sits on the imaginary axis.
inline double accumulate(const Locus& f, double w0, cplx d0, double w1, cplx d1, const FreqScan& scan, int depth,
                         bool& marginal) {
  const double step = phase_step(d0, d1);
  if (std::abs(step) <= scan.refine_above) return step;
  if (depth >= scan.max_refine_depth) {
    if (std::abs(step) <= scan.resolve_limit) return step;
    if (std::abs(d1 - d0) < scan.marginal_chord) {
      marginal = true;
      return 0.0;
    }
    throw ResolutionError("frequency scan cannot resolve the characteristic locus near " +
                          std::to_string(rad_s_to_hz(w0)) + " Hz");
  }
  const double wm = 0.5 * (w0 + w1);
  const cplx dm = f(wm);
  return accumulate(f, w0, d0, wm, dm, scan, depth + 1, marginal) +
         accumulate(f, wm, dm, w1, d1, scan, depth + 1, marginal);
}

} // namespace detail

struct Verdict {
  int unstable_roots = 0; // right half plane
  bool marginal = false;  // a root lies on the imaginary axis
};

/// Counts right-half-plane characteristic roots at (speed, depth).
inline Verdict classify(const DirectionalDynamics& dynamics, const CuttingParams& cutting, double speed_rpm,
                               double depth_mm, const FreqScan& scan = {}) {
  if (!(depth_mm >= 0.0)) throw InvalidArgument("depth must be non-negative");
  if (!(speed_rpm > 0.0)) throw InvalidArgument("speed must be positive");
  if (depth_mm == 0.0) return {};
  const DirectionalFactors a = directional_factors(cutting);
  const double period = tooth_period(speed_rpm, cutting.flute_count);
  const detail::Locus f{dynamics, a, cutting, depth_mm * 1e-3, period};

  double zeta_min = 1.0, wn_min = hz_to_rad_s(dynamics.max_natural_frequency());
  for (const auto* ms : {&dynamics.x_modes, &dynamics.y_modes})
    for (const auto& m : *ms) {
      zeta_min = std::min(zeta_min, m.damping_ratio);
      wn_min = std::min(wn_min, m.omega());
    }

  // Widen the band until the locus has settled near 1 at its top.
  double w_max = scan.band_factor * hz_to_rad_s(dynamics.max_natural_frequency());
  for (int widen = 0; std::abs(f(w_max) - 1.0) > scan.tail_tolerance; ++widen) {
    if (widen == 6) throw ResolutionError("characteristic locus has not settled at the top of the frequency band");
    w_max *= 2.0;
  }

  // resolve both the delay term and the narrowest resonance peak
  const double dw_delay = (std::numbers::pi / 16.0) / period;
  const double dw_peak = zeta_min * wn_min / 8.0;
  const double dw = std::min({dw_delay, dw_peak, w_max / scan.min_points});
  const auto n = static_cast<long>(std::ceil(w_max / dw));

  double total = 0.0;
  bool marginal = false;
  double w_prev = 0.0;
  cplx d_prev = f(0.0);
  for (long i = 1; i <= n; ++i) {
    const double w = w_max * static_cast<double>(i) / static_cast<double>(n);
    const cplx d = f(w);
    total += detail::accumulate(f, w_prev, d_prev, w, d, scan, 0, marginal);
    w_prev = w;
    d_prev = d;
  }
  // Clockwise contour around the right half plane; the negative frequencies mirror the positive ones.
  return {static_cast<int>(std::lround(-total / std::numbers::pi)), marginal};
}

inline int unstable_root_count(const DirectionalDynamics& dynamics, const CuttingParams& cutting, double speed_rpm,
                               double depth_mm, const FreqScan& scan = {}) {
  return classify(dynamics, cutting, speed_rpm, depth_mm, scan).unstable_roots;
}

inline bool is_stable(const DirectionalDynamics& dynamics, const CuttingParams& cutting, double speed_rpm,
                      double depth_mm, const FreqScan& scan = {}) {
  const Verdict v = classify(dynamics, cutting, speed_rpm, depth_mm, scan);
  return v.unstable_roots == 0 && !v.marginal;
}

struct BisectStats {
  int bisection_calls = 0;
};

/// Stability limit (mm) at one speed by bisection on [lo, hi].
inline double depth_limit_bisect(const DirectionalDynamics& dynamics, const CuttingParams& cutting, double speed_rpm,
                                 double lo, double hi, double tol = 1e-4, const FreqScan& scan = {},
                                 BisectStats* stats = nullptr) {
  if (!(tol > 0.0)) throw InvalidArgument("bisection tolerance must be positive");
  if (!(lo >= 0.0 && hi > lo)) throw BracketError("bracket must satisfy 0 <= lo < hi");
  if (!is_stable(dynamics, cutting, speed_rpm, lo, scan)) throw BracketError("lower bracket end is unstable");
  if (is_stable(dynamics, cutting, speed_rpm, hi, scan)) throw BracketError("upper bracket end is stable");
  int calls = 0;
  while (hi - lo > 2.0 * tol) {
    const double mid = 0.5 * (lo + hi);
    ++calls;
    if (is_stable(dynamics, cutting, speed_rpm, mid, scan)) lo = mid;
    else hi = mid;
  }
  if (stats) stats->bisection_calls = calls;
  return 0.5 * (lo + hi);
}

/// Bisection with an automatically expanded upper bracket starting at `guess_hi`.
inline double depth_limit(const DirectionalDynamics& dynamics, const CuttingParams& cutting, double speed_rpm,
                          double guess_hi, double tol = 1e-4, const FreqScan& scan = {}) {
  double hi = guess_hi;
  for (int i = 0; i < 40 && is_stable(dynamics, cutting, speed_rpm, hi, scan); ++i) hi *= 2.0;
  return depth_limit_bisect(dynamics, cutting, speed_rpm, 0.0, hi, tol, scan);
}

} // namespace lobefit::oracle
