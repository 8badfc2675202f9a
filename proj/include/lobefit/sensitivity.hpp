#pragma once

// How strongly the stability boundary reacts to each modal parameter:
// a one-at-a-time sweep around a fixed parameter set, and a Monte Carlo
// variant that repeats a small perturbation around random neighbours.

#include "lobefit/error.hpp"
#include "lobefit/model.hpp"
#include "lobefit/parallel.hpp"
#include "lobefit/zoa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lobefit {

/// Mean squared difference of two depth lists (mm^2).
inline double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("mse: length mismatch");
  if (a.empty()) throw InvalidArgument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

/// Default perturbation grid {-0.20, -0.15, ..., +0.20}.
inline std::vector<double> default_sweep_grid(double limit = 0.20, double step = 0.05) {
  std::vector<double> g;
  const int half = static_cast<int>(std::lround(limit / step));
  for (int i = -half; i <= half; ++i) g.push_back(i * step);
  return g;
}

struct SweepCell {
  std::optional<double> mse; // empty when the perturbed boundary could not be built
  std::string missing_reason;
};

struct SweepReport {
  ParameterVector base;
  std::vector<double> grid;
  std::vector<double> speeds;
  std::vector<std::vector<SweepCell>> cells; // [parameter][grid index]

  std::optional<double> at(std::size_t param, std::size_t grid_index) const { return cells[param][grid_index].mse; }
};

namespace detail {

inline std::optional<std::vector<double>> try_depths(const ParameterVector& p, const CuttingParams& cutting,
                                                     std::span<const double> speeds, const SldOptions& sld,
                                                     std::string* reason = nullptr) {
  try {
    return boundary_at_speeds(unflatten(p), cutting, speeds, sld).depths();
  } catch (const Error& e) {
    if (reason) *reason = e.what();
    return std::nullopt;
  }
}

inline bool modes_valid(const ParameterVector& p) {
  const DirectionalDynamics d = unflatten(p);
  for (const auto& m : d.x_modes)
    if (!m.valid()) return false;
  for (const auto& m : d.y_modes)
    if (!m.valid()) return false;
  return true;
}

} // namespace detail

/// Scales one parameter at a time by (1 + eps) for every eps in `grid` and
/// records the MSE against the unperturbed boundary on `speeds`.
inline SweepReport sweep(const ParameterVector& params, const CuttingParams& cutting, std::span<const double> grid,
                         std::span<const double> speeds, const SldOptions& sld = {}, unsigned threads = 1) {
  if (grid.empty()) throw InvalidArgument("sweep grid is empty");
  for (std::size_t j = 0; j < params.size(); ++j)
    for (double e : grid) {
      ParameterVector p = params;
      p[j] *= 1.0 + e;
      if (!detail::modes_valid(p))
        throw InvalidArgument("perturbing " + params.name(j) + " by " + std::to_string(e) + " breaks a mode invariant");
    }

  SweepReport report;
  report.base = params;
  report.grid.assign(grid.begin(), grid.end());
  report.speeds.assign(speeds.begin(), speeds.end());
  const std::vector<double> base = boundary_at_speeds(unflatten(params), cutting, speeds, sld).depths();

  const std::size_t m = params.size(), g = grid.size();
  report.cells.assign(m, std::vector<SweepCell>(g));
  parallel_for(
      m * g,
      [&](std::size_t idx) {
        const std::size_t j = idx / g, e = idx % g;
        ParameterVector p = params;
        p[j] *= 1.0 + grid[e];
        SweepCell& cell = report.cells[j][e];
        if (auto d = detail::try_depths(p, cutting, speeds, sld, &cell.missing_reason)) cell.mse = mse(base, *d);
      },
      threads);
  return report;
}

struct McOptions {
  double neighborhood = 0.1; // t
  int paths = 10000;         // N
  double inner_ratio = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    if (!(neighborhood >= 0.0 && neighborhood < 0.5)) throw InvalidArgument("neighborhood width must lie in [0, 0.5)");
    if (paths < 1) throw InvalidArgument("path count must be at least 1");
    if (!(inner_ratio > 0.0)) throw InvalidArgument("inner ratio must be positive");
  }
};

struct McReport {
  std::vector<std::string> names;
  std::vector<double> mean; // mm^2
  std::vector<double> stddev; // population
  std::vector<double> min;
  std::vector<double> max;
  int paths = 0;
  int used_paths = 0;
  int skipped_paths = 0;
  long redraws = 0;
  double neighborhood = 0.0;
  double inner_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Random neighbour of `center` for one Monte Carlo path. Each path owns a
/// generator seeded from (seed, path), so paths are reproducible in any order.
inline ParameterVector mc_draw(const ParameterVector& center, double t, std::uint64_t seed, std::uint64_t path,
                               long* redraws = nullptr) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  std::mt19937_64 rng(seq);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ParameterVector p = center;
    if (t > 0.0)
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double lo = (1.0 - t) * center[i], hi = (1.0 + t) * center[i];
        p[i] = std::uniform_real_distribution<double>(std::min(lo, hi), std::max(lo, hi))(rng);
      }
    if (detail::modes_valid(p)) return p;
    if (redraws) ++*redraws;
  }
  throw NumericalError("could not draw a valid parameter set from the neighbourhood");
}

inline McReport mc_sensitivity(const ParameterVector& params, const CuttingParams& cutting, const McOptions& opt,
                               std::span<const double> speeds, const SldOptions& sld = {}) {
  opt.validate();
  const std::size_t m = params.size();
  const auto n = static_cast<std::size_t>(opt.paths);

  std::vector<std::vector<double>> per_path(n); // empty when the path was skipped
  std::vector<long> redraws(n, 0);
  parallel_for(
      n,
      [&](std::size_t path) {
        const ParameterVector drawn = mc_draw(params, opt.neighborhood, opt.seed, path, &redraws[path]);
        const auto base = detail::try_depths(drawn, cutting, speeds, sld);
        if (!base) return;
        std::vector<double> row(m);
        for (std::size_t j = 0; j < m; ++j) {
          ParameterVector p = drawn;
          p[j] *= 1.0 + opt.inner_ratio;
          if (!detail::modes_valid(p)) return;
          const auto mod = detail::try_depths(p, cutting, speeds, sld);
          if (!mod) return;
          row[j] = mse(*base, *mod);
        }
        per_path[path] = std::move(row);
      },
      opt.threads);

  McReport r;
  r.paths = opt.paths;
  r.neighborhood = opt.neighborhood;
  r.inner_ratio = opt.inner_ratio;
  r.seed = opt.seed;
  for (std::size_t j = 0; j < m; ++j) r.names.push_back(params.name(j));
  r.mean.assign(m, 0.0);
  r.stddev.assign(m, 0.0);
  r.min.assign(m, std::numeric_limits<double>::infinity());
  r.max.assign(m, -std::numeric_limits<double>::infinity());
  for (std::size_t path = 0; path < n; ++path) {
    r.redraws += redraws[path];
    if (per_path[path].empty()) {
      ++r.skipped_paths;
      continue;
    }
    ++r.used_paths;
    for (std::size_t j = 0; j < m; ++j) {
      r.mean[j] += per_path[path][j];
      r.min[j] = std::min(r.min[j], per_path[path][j]);
      r.max[j] = std::max(r.max[j], per_path[path][j]);
    }
  }
  if (r.used_paths == 0) throw EmptyCurve("no Monte Carlo path produced a boundary");
  for (double& v : r.mean) v /= r.used_paths;
  for (std::size_t path = 0; path < n; ++path) {
    if (per_path[path].empty()) continue;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = per_path[path][j] - r.mean[j];
      r.stddev[j] += d * d;
    }
  }
  for (double& v : r.stddev) v = std::sqrt(v / r.used_paths);
  return r;
}

} // namespace lobefit
