#pragma once

// Identification of in-process modal parameters from a measured stability
// boundary: Newton-Raphson steps on the mean log absolute depth error, with
// stall jumps, critical-point weighting and multi-start pruning.

#include "lobefit/error.hpp"
#include "lobefit/model.hpp"
#include "lobefit/parallel.hpp"
#include "lobefit/zoa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lobefit {

// ---------------------------------------------------------------------------
// Objective

/// Weighted mean log absolute error between reference and candidate depths (mm).
/// Empty `weights` means uniform.
inline double mlae(const BoundarySamples& reference, std::span<const double> candidate,
                   std::span<const double> weights = {}) {
  const std::size_t n = reference.size();
  if (candidate.size() != n) throw InvalidArgument("candidate depth count differs from reference");
  if (!weights.empty() && weights.size() != n) throw InvalidArgument("weight count differs from reference");
  if (n == 0) throw InvalidArgument("empty reference");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sum += w * std::log1p(std::abs(reference.points[i].depth_limit - candidate[i]));
  }
  return sum / static_cast<double>(n);
}

/// Rescales weights to mean 1.
inline std::vector<double> normalize_weights(std::vector<double> w) {
  if (w.empty()) return w;
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  if (!(mean > 0.0)) throw InvalidArgument("weights must have a positive mean");
  for (double& x : w) x /= mean;
  return w;
}

/// Weight `w` on interior strict local extrema of depth, 1 elsewhere, normalized to mean 1.
inline std::vector<double> detect_critical_points(const BoundarySamples& reference, double w = 2.0) {
  const std::size_t n = reference.size();
  if (n < 3) throw InvalidArgument("critical point detection needs at least 3 points");
  std::vector<double> weights(n, 1.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = reference.points[i - 1].depth_limit;
    const double b = reference.points[i].depth_limit;
    const double c = reference.points[i + 1].depth_limit;
    if ((b < a && b < c) || (b > a && b > c)) weights[i] = w;
  }
  return normalize_weights(std::move(weights));
}

using Objective = std::function<double(const ParameterVector&)>;

/// Forward-difference gradient with a relative step. Slots holding tied fields
/// move together. `base_value` skips re-evaluating the objective at `params`.
/// The objective is evaluated concurrently and must be thread safe.
inline std::vector<double> fd_sensitivity(const ParameterVector& params, const Objective& objective, double fd_step,
                                          std::optional<double> base_value = std::nullopt, unsigned threads = 1) {
  if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be positive");
  const double f0 = base_value ? *base_value : objective(params);
  if (!std::isfinite(f0)) throw NumericalError("objective is not finite at the expansion point");
  const std::size_t m = params.size();
  std::vector<double> grad(m, 0.0);
  std::vector<int> failed(m, 0);
  parallel_for(
      m,
      [&](std::size_t i) {
        double h = fd_step;
        for (int attempt = 0; attempt <= 3; ++attempt, h /= 10.0) {
          ParameterVector p = params;
          const double dp = params[i] * h;
          p[i] = params[i] + dp;
          const double f = objective(p);
          if (std::isfinite(f)) {
            grad[i] = (f - f0) / dp;
            return;
          }
        }
        failed[i] = 1;
      },
      threads);
  for (std::size_t i = 0; i < m; ++i)
    if (failed[i]) throw NumericalError("objective not finite when perturbing " + params.name(i));
  return grad;
}

/// p_i <- p_i - f * S_i / |S|^2 * alpha over every slot.
inline ParameterVector newton_step(const ParameterVector& params, double objective_value, std::span<const double> sens,
                                   double alpha) {
  if (sens.size() != params.size()) throw InvalidArgument("sensitivity length differs from parameter count");
  const double norm2 = std::inner_product(sens.begin(), sens.end(), sens.begin(), 0.0);
  if (objective_value == 0.0) return params;
  if (!(norm2 > 0.0)) throw NumericalError("zero sensitivity vector");
  ParameterVector out = params;
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - objective_value * sens[i] / norm2 * alpha;
  return out;
}

// ---------------------------------------------------------------------------
// Fit

enum class WeightKind { uniform, critical_points };

enum class StepScaling {
  relative, // Newton step on values divided by the starting guess
  absolute, // Newton step directly on Hz, N/m and damping ratio
};

struct FitOptions {
  double alpha = 1.0;
  double fd_step = 1e-4;
  int max_iterations = 200;
  double objective_threshold = 1e-3;
  int stall_window = 8;
  double stall_improvement = 0.01;
  double jump_ratio = 0.05;
  std::vector<ParameterVector> initial_guesses;
  int burn_in = 10;
  WeightKind weight_scheme = WeightKind::uniform;
  double critical_weight = 2.0;
  StepScaling scaling = StepScaling::relative;
  int max_step_halvings = 10;
  // Lobe engine settings; the speed range is taken from the reference.
  int freq_steps = 2000;
  int grid_points = 2000;
  int max_lobes = 10;
  unsigned threads = 1;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
    if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be positive");
    if (max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
    if (!(objective_threshold >= 0.0)) throw InvalidArgument("objective threshold must be non-negative");
    if (stall_window < 1) throw InvalidArgument("stall window must be at least 1");
    if (!(stall_improvement >= 0.0)) throw InvalidArgument("stall improvement must be non-negative");
    if (!(jump_ratio > 0.0 && jump_ratio < 1.0)) throw InvalidArgument("jump ratio must lie in (0, 1)");
    if (initial_guesses.empty()) throw InvalidArgument("at least one initial guess is required");
    if (burn_in < 0 || (max_iterations > 0 && burn_in >= max_iterations))
      throw InvalidArgument("burn-in must be shorter than max_iterations");
    if (!(critical_weight > 0.0)) throw InvalidArgument("critical weight must be positive");
    for (const auto& g : initial_guesses) {
      if (g.size() != initial_guesses.front().size() || g.slots != initial_guesses.front().slots)
        throw InvalidArgument("initial guesses must share one parameter layout");
      unflatten(g).validate();
    }
  }
};

enum class FitEvent { step, jump_accepted, jump_rejected, restart_pruned };

inline const char* to_string(FitEvent e) {
  switch (e) {
  case FitEvent::step: return "step";
  case FitEvent::jump_accepted: return "jump-accepted";
  case FitEvent::jump_rejected: return "jump-rejected";
  case FitEvent::restart_pruned: return "restart-pruned";
  }
  return "?";
}

struct FitIteration {
  int iteration = 0;
  double objective = 0.0; // at the parameters below, before this iteration's action
  std::vector<double> parameters;
  FitEvent event = FitEvent::step;
};

struct FitReport {
  ParameterVector parameters; // best point visited by the surviving start
  double objective = std::numeric_limits<double>::infinity();
  std::vector<FitIteration> history;
  bool converged = false;
  std::string termination;
  std::size_t survivor = 0;                // index into the initial guesses
  std::vector<double> start_objectives;    // per guess, after burn-in (+inf if unusable)
};

/// Uniform perturbations of `center`: each free value drawn from
/// [(1 - spread) v, (1 + spread) v]. Damping ratios are kept inside (0, 1).
inline std::vector<ParameterVector> perturbed_guesses(const ParameterVector& center, double spread, int count,
                                                      std::uint64_t seed) {
  if (!(spread >= 0.0 && spread < 1.0)) throw InvalidArgument("guess spread must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ParameterVector> out;
  for (int g = 0; g < count; ++g) {
    ParameterVector p = center;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = center[i] * (1.0 + spread * u(rng));
      if (p.kind(i) == ModeField::damping_ratio) p[i] = std::clamp(p[i], 1e-4, 0.999);
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Objective over the reference speeds: build the lobes for a candidate,
/// sample it and score with the weighted MLAE. Returns +inf when the candidate
/// does not produce a boundary over the reference speeds.
class BoundaryObjective {
public:
  BoundaryObjective(BoundarySamples reference, CuttingParams cutting, SldOptions sld, std::vector<double> weights)
      : reference_(std::move(reference)), cutting_(cutting), sld_(sld), weights_(std::move(weights)),
        speeds_(reference_.speeds()) {}

  std::vector<double> depths(const ParameterVector& p) const {
    const SldCurve curve = build_sld(unflatten(p), cutting_, sld_);
    return sample_at_speeds(curve, speeds_).depths();
  }

  double operator()(const ParameterVector& p) const {
    try {
      return mlae(reference_, depths(p), weights_);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  const std::vector<double>& weights() const { return weights_; }

private:
  BoundarySamples reference_;
  CuttingParams cutting_;
  SldOptions sld_;
  std::vector<double> weights_;
  std::vector<double> speeds_;
};

namespace detail {

struct FitRun {
  const FitOptions& opt;
  const BoundaryObjective& objective;
  std::vector<double> scale; // per-slot divisor for the Newton step
  std::vector<double> floor; // lower clamp for frequencies and stiffnesses

  ParameterVector current;
  double current_f = std::numeric_limits<double>::infinity();
  ParameterVector best;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> best_trace; // running best after each iteration
  int last_jump = -1;
  double jump_ratio; // halved after a rejected jump round, doubled (up to the option) after an accepted one
  std::vector<FitIteration> history;
  bool converged = false;
  std::string termination;

  FitRun(const FitOptions& o, const BoundaryObjective& obj, const ParameterVector& start)
      : opt(o), objective(obj), current(start), best(start), jump_ratio(o.jump_ratio) {
    for (std::size_t i = 0; i < start.size(); ++i) {
      double sc = 1.0;
      if (o.scaling == StepScaling::relative) sc = std::abs(start[i]);
      scale.push_back(sc);
      floor.push_back(1e-6 * std::abs(start[i]));
    }
    current_f = objective(current);
    best_f = current_f;
  }

  ParameterVector clamp(ParameterVector p) const {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p.kind(i) == ModeField::damping_ratio) p[i] = std::clamp(p[i], 1e-4, 0.5);
      else p[i] = std::max(p[i], floor[i]);
    }
    return p;
  }

  void note(const ParameterVector& p, double f) {
    if (f < best_f) {
      best_f = f;
      best = p;
    }
  }

  bool stalled(int it) const {
    if (it - last_jump <= opt.stall_window || static_cast<int>(best_trace.size()) <= opt.stall_window) return false;
    const double before = best_trace[best_trace.size() - 1 - static_cast<std::size_t>(opt.stall_window)];
    return best_f > before * (1.0 - opt.stall_improvement);
  }

  // Trial jumps of +-jump_ratio from the current point, one parameter at a
  // time and then all improving ones together. Applied only when they improve it.
  FitEvent jump() {
    const ParameterVector base = current;
    const double base_f = current_f;
    const std::size_t m = base.size();
    std::vector<double> trial_f(2 * m);
    std::vector<ParameterVector> trial(2 * m, base);
    for (std::size_t k = 0; k < 2 * m; ++k) {
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      trial[k][k / 2] = base[k / 2] * (1.0 + sign * jump_ratio);
      trial[k] = clamp(trial[k]);
    }
    parallel_for(2 * m, [&](std::size_t k) { trial_f[k] = objective(trial[k]); }, opt.threads);

    ParameterVector combo = base;
    int improving = 0;
    std::size_t best_single = 2 * m;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t pick = trial_f[2 * i] <= trial_f[2 * i + 1] ? 2 * i : 2 * i + 1;
      if (trial_f[pick] < base_f) {
        ++improving;
        combo[i] = trial[pick][i];
        if (best_single == 2 * m || trial_f[pick] < trial_f[best_single]) best_single = pick;
      }
    }
    ParameterVector chosen = base;
    double chosen_f = base_f;
    if (best_single < 2 * m) {
      chosen = trial[best_single];
      chosen_f = trial_f[best_single];
    }
    if (improving >= 2) {
      const double combo_f = objective(combo);
      if (combo_f < chosen_f) {
        chosen = combo;
        chosen_f = combo_f;
      }
    }
    if (chosen_f < base_f) {
      current = std::move(chosen);
      current_f = chosen_f;
      note(current, current_f);
      jump_ratio = std::min(2.0 * jump_ratio, opt.jump_ratio);
      return FitEvent::jump_accepted;
    }
    jump_ratio = std::max(0.5 * jump_ratio, opt.jump_ratio / 1024.0);
    return FitEvent::jump_rejected;
  }

  // Backtracking on the Newton step; true when a strictly better point was taken.
  bool try_step(const std::vector<double>& sens, bool& finite) {
    ParameterVector scaled = current;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] /= scale[i];
    double alpha = opt.alpha;
    for (int attempt = 0; attempt <= opt.max_step_halvings; ++attempt, alpha *= 0.5) {
      ParameterVector next = newton_step(scaled, current_f, sens, alpha);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] *= scale[i];
      next = clamp(std::move(next));
      const double f = objective(next);
      finite = finite || std::isfinite(f);
      if (f < current_f) {
        current = std::move(next);
        current_f = f;
        note(current, current_f);
        return true;
      }
    }
    return false;
  }

  FitEvent newton(int it) {
    std::vector<double> sens =
        fd_sensitivity(current, std::cref(objective), opt.fd_step, current_f, opt.threads);
    for (std::size_t i = 0; i < sens.size(); ++i) sens[i] *= scale[i];
    const double norm2 = std::inner_product(sens.begin(), sens.end(), sens.begin(), 0.0);
    if (!(norm2 > 0.0)) return jump();

    bool finite = false;
    if (try_step(sens, finite)) return FitEvent::step;

    // The objective is a sum of absolute terms; a slot sitting in one of its
    // kinks rises on both sides and its forward slope misleads the step. Hold
    // such slots and retry with the rest.
    std::vector<double> back(sens.size());
    parallel_for(
        sens.size(),
        [&](std::size_t i) {
          ParameterVector p = current;
          const double h = opt.fd_step * (current[i] != 0.0 ? std::abs(current[i]) : 1.0);
          p[i] -= h;
          back[i] = (current_f - objective(p)) / h * scale[i];
        },
        opt.threads);
    bool pinned = false;
    for (std::size_t i = 0; i < sens.size(); ++i)
      if (std::isfinite(back[i]) && sens[i] > 0.0 && back[i] < 0.0) {
        sens[i] = 0.0;
        pinned = true;
      }
    const double rest = std::inner_product(sens.begin(), sens.end(), sens.begin(), 0.0);
    if (pinned && rest > 0.0 && try_step(sens, finite)) return FitEvent::step;

    if (!finite)
      throw NumericalError("objective stayed non-finite after step shrinking at iteration " + std::to_string(it));
    return jump();
  }

  // One iteration: record the state, stop if converged, otherwise act.
  void iterate(int it) {
    history.push_back({it, current_f, current.values, FitEvent::step});
    if (current_f < opt.objective_threshold) {
      converged = true;
      termination = "objective below threshold";
      best_trace.push_back(best_f);
      return;
    }
    FitEvent e;
    if (stalled(it)) {
      e = jump();
      last_jump = it;
    } else {
      e = newton(it);
      if (e != FitEvent::step) last_jump = it;
    }
    history.back().event = e;
    best_trace.push_back(best_f);
  }

  void prune_marker(int it) {
    history.push_back({it, current_f, current.values, FitEvent::restart_pruned});
    best_trace.push_back(best_f);
  }
};

} // namespace detail

inline FitReport fit(const BoundarySamples& reference, const CuttingParams& cutting, const FitOptions& options) {
  reference.validate();
  cutting.validate();
  options.validate();

  std::vector<double> weights;
  if (reference.weights) weights = normalize_weights(*reference.weights);
  else if (options.weight_scheme == WeightKind::critical_points && reference.size() >= 3)
    weights = detect_critical_points(reference, options.critical_weight);

  SldOptions sld;
  sld.speed_min = reference.points.front().spindle_speed;
  sld.speed_max = reference.points.back().spindle_speed;
  if (!(sld.speed_max > sld.speed_min)) {
    // single-point reference: give the lobe grid a small span around it
    sld.speed_min *= 0.99;
    sld.speed_max *= 1.01;
  }
  sld.freq_steps = options.freq_steps;
  sld.grid_points = options.grid_points;
  sld.max_lobes = options.max_lobes;
  sld.keep_lobes = false;
  const BoundaryObjective objective(reference, cutting, sld, weights);

  FitReport report;
  report.parameters = options.initial_guesses.front();
  if (options.max_iterations == 0) {
    report.objective = objective(report.parameters);
    report.termination = "iteration budget is zero";
    return report;
  }

  std::vector<detail::FitRun> runs;
  runs.reserve(options.initial_guesses.size());
  for (const auto& g : options.initial_guesses) runs.emplace_back(options, objective, g);
  bool any = false;
  for (const auto& r : runs) any = any || std::isfinite(r.current_f);
  if (!any) throw Unfittable("no initial guess produces a boundary over the reference speeds");

  std::size_t survivor = 0;
  int it = 0;
  if (runs.size() > 1) {
    const int burn = options.burn_in;
    for (auto& r : runs) {
      if (!std::isfinite(r.current_f)) continue;
      try {
        for (int i = 0; i < burn && !r.converged; ++i) r.iterate(i);
      } catch (const NumericalError&) {
        r.best_f = std::numeric_limits<double>::infinity();
      }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      report.start_objectives.push_back(runs[i].best_f);
      if (runs[i].best_f < runs[survivor].best_f) survivor = i;
    }
    it = static_cast<int>(runs[survivor].history.size());
    if (!runs[survivor].converged && it < options.max_iterations) {
      runs[survivor].prune_marker(it);
      ++it;
      // continue from the best point seen during burn-in
      runs[survivor].current = runs[survivor].best;
      runs[survivor].current_f = runs[survivor].best_f;
    }
  } else {
    report.start_objectives.push_back(runs[0].current_f);
  }

  detail::FitRun& run = runs[survivor];
  if (!std::isfinite(run.current_f)) throw Unfittable("no initial guess survives burn-in");
  for (; it < options.max_iterations && !run.converged; ++it) run.iterate(it);

  report.parameters = run.best;
  report.objective = run.best_f;
  report.history = std::move(run.history);
  report.converged = run.converged;
  report.termination = run.converged ? run.termination : "iteration budget exhausted";
  report.survivor = survivor;
  return report;
}

} // namespace lobefit
