// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lobefit;
using fixtures::rel;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double tolerance_for(ModeField f) {
  switch (f) {
  case ModeField::natural_frequency: return 0.02;
  case ModeField::stiffness: return 0.10;
  case ModeField::damping_ratio: return 0.15;
  }
  return 0.0;
}

// Compares recovered values with targets at the per-kind tolerances.
void check_recovery(Outcome& o, const std::string& tag, const ParameterVector& got, const ParameterVector& want) {
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double e = rel(got[i], want[i]);
    if (e > tolerance_for(want.kind(i))) o.fail(fmt("%s %s off by %.2f%%", tag.c_str(), want.name(i).c_str(), 100 * e));
  }
}

void report(int id, const char* title, const Outcome& o, double secs) {
  std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, title, secs,
              o.detail.empty() ? "" : " | ", o.detail.c_str());
  std::fflush(stdout);
}

struct Recovered {
  fixtures::Example ex;
  FitReport fit;
};

std::vector<double> speeds_for(const fixtures::Example& ex, std::size_t n = 50) {
  return linspace(ex.speed_min, ex.speed_max, n);
}

Outcome criterion1(std::vector<Recovered>& fits) {
  Outcome o;
  for (const auto& ex : fixtures::examples()) {
    const auto t0 = Clock::now();
    const ParameterVector truth = flatten(ex.dynamics);
    const auto ref = boundary_at_speeds(ex.dynamics, ex.cutting, speeds_for(ex));
    FitOptions opt;
    opt.max_iterations = 200;
    opt.initial_guesses = perturbed_guesses(truth, 0.2, 24, 1);
    FitReport r = fit(ref, ex.cutting, opt);
    const double secs = seconds_since(t0);
    std::string line = fmt("%s: MLAE %.5f, %zu iterations, %.1f s;", ex.name.c_str(), r.objective, r.history.size(), secs);
    for (std::size_t i = 0; i < truth.size(); ++i)
      line += fmt(" %s %+.2f%%", truth.name(i).c_str(), 100 * (r.parameters[i] / truth[i] - 1));
    std::printf("    %s\n", line.c_str());
    check_recovery(o, ex.name, r.parameters, truth);
    if (!(r.objective < 0.01)) o.fail(fmt("%s MLAE %.4f", ex.name.c_str(), r.objective));
    if (secs > 120) o.fail(fmt("%s took %.0f s", ex.name.c_str(), secs));
    fits.push_back({ex, std::move(r)});
  }
  return o;
}

Outcome criterion2(const std::vector<Recovered>& fits) {
  Outcome o;
  if (fits.empty()) o.fail("no fits available");
  for (const auto& f : fits) {
    const auto sp = speeds_for(f.ex);
    const auto want = boundary_at_speeds(f.ex.dynamics, f.ex.cutting, sp).depths();
    const auto got = boundary_at_speeds(unflatten(f.fit.parameters), f.ex.cutting, sp).depths();
    double worst = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) worst = std::max(worst, rel(got[i], want[i]));
    std::printf("    %s: max relative depth error %.3f%%\n", f.ex.name.c_str(), 100 * worst);
    if (!(worst < 0.05)) o.fail(fmt("%s max error %.2f%%", f.ex.name.c_str(), 100 * worst));
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  DirectionalDynamics truth_d = fixtures::pair({4103.4, 11.65e6, 0.0269}, {4103.4, 11.65e6, 0.0269});
  DirectionalDynamics start_d = fixtures::pair({4182, 15.40e6, 0.0170}, {4182, 15.40e6, 0.0170});
  const CuttingParams cut{1110, 0.22, 4, 0, 180};
  const auto ref = boundary_at_speeds(truth_d, cut, linspace(5500, 6500, 21));
  const ParameterVector truth = flatten(truth_d, TieSpec::axisymmetric(truth_d));
  FitOptions opt;
  opt.initial_guesses = {flatten(start_d, TieSpec::axisymmetric(start_d))};
  const FitReport r = fit(ref, cut, opt);
  std::string line = fmt("MLAE %.5f, %zu iterations;", r.objective, r.history.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    line += fmt(" %s %.5g (%+.2f%%)", truth.name(i).c_str(), r.parameters[i], 100 * (r.parameters[i] / truth[i] - 1));
  std::printf("    %s\n", line.c_str());
  check_recovery(o, "surrogate", r.parameters, truth);
  return o;
}

struct OracleCase {
  std::string name;
  DirectionalDynamics dynamics;
  CuttingParams cutting;
  double speed_min, speed_max;
};

std::vector<OracleCase> oracle_cases() {
  std::vector<OracleCase> cases;
  for (const auto& ex : fixtures::examples()) cases.push_back({ex.name, ex.dynamics, ex.cutting, ex.speed_min, ex.speed_max});
  std::mt19937_64 rng(20);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  for (int i = 0; i < 20; ++i) {
    const Mode mx{u(300, 3000), u(5e6, 5e7), u(0.01, 0.06)};
    const Mode my{mx.natural_frequency * u(0.9, 1.1), u(5e6, 5e7), u(0.01, 0.06)};
    const int flutes = static_cast<int>(u(2, 5));
    const double start = u(0, 1) < 0.5 ? 0.0 : u(0, 150);
    const CuttingParams c{u(500, 2500), u(0.2, 0.5), flutes, start, 180};
    // speeds spanning the first few lobes
    const double top = 60.0 * std::max(mx.natural_frequency, my.natural_frequency) / flutes;
    cases.push_back({fmt("random%02d", i), fixtures::pair(mx, my), c, 0.25 * top, 1.25 * top});
  }
  return cases;
}

Outcome criterion4() {
  Outcome o;
  int compared = 0, uncovered = 0;
  double worst = 0.0;
  std::string worst_at;
  for (const auto& c : oracle_cases()) {
    const auto sp = linspace(c.speed_min, c.speed_max, 50);
    SldOptions sld;
    sld.speed_min = c.speed_min;
    sld.speed_max = c.speed_max;
    const SldCurve curve = build_sld(c.dynamics, c.cutting, sld);
    const auto zoa = sample_at_speeds(curve, sp);
    if (zoa.size() != sp.size()) {
      ++uncovered;
      o.fail(fmt("%s: zoa covers %zu of %zu speeds", c.name.c_str(), zoa.size(), sp.size()));
    }
    for (const auto& pt : zoa.points) {
      const double tol = 1e-4 * pt.depth_limit;
      const double ref = oracle::depth_limit(c.dynamics, c.cutting, pt.spindle_speed, 1.5 * pt.depth_limit, tol);
      const double e = rel(pt.depth_limit, ref);
      ++compared;
      if (e > worst) {
        worst = e;
        worst_at = fmt("%s at %.0f rpm", c.name.c_str(), pt.spindle_speed);
      }
      if (e > 0.01) o.fail(fmt("%s at %.0f rpm: zoa %.5g oracle %.5g", c.name.c_str(), pt.spindle_speed, pt.depth_limit, ref));
    }
  }
  std::printf("    %d comparisons, worst %.4f%% (%s)\n", compared, 100 * worst, worst_at.c_str());
  (void)uncovered;
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto ex = fixtures::ex1();
  const ParameterVector base = flatten(fixtures::ex1_predicted());
  McOptions opt;
  opt.paths = 10000;
  opt.neighborhood = 0.1;
  opt.inner_ratio = 0.01;
  opt.seed = 1;
  const McReport r = mc_sensitivity(base, ex.cutting, opt, speeds_for(ex), fixtures::sld_for(ex));
  std::string line = fmt("%d of %d paths used;", r.used_paths, r.paths);
  for (std::size_t i = 0; i < r.names.size(); ++i) line += fmt(" %s %.3g", r.names[i].c_str(), r.mean[i]);
  std::printf("    %s\n", line.c_str());
  double min_fn = INFINITY, max_other = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.kind(i) == ModeField::natural_frequency) min_fn = std::min(min_fn, r.mean[i]);
    else max_other = std::max(max_other, r.mean[i]);
  }
  std::printf("    smallest frequency mean / largest other mean = %.1f\n", min_fn / max_other);
  if (!(min_fn >= 20.0 * max_other)) o.fail(fmt("ratio %.1f below 20", min_fn / max_other));
  if (r.used_paths == 0) o.fail("no usable paths");
  return o;
}

Outcome criterion6() {
  Outcome o;
  for (const auto& ex : fixtures::examples()) {
    const ParameterVector p = flatten(ex.dynamics);
    const auto grid = default_sweep_grid();
    const SweepReport r = sweep(p, ex.cutting, grid, speeds_for(ex), fixtures::sld_for(ex));
    double min_margin = INFINITY;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t j = 0; j < p.size(); ++j)
        if (!r.at(j, g)) o.fail(fmt("%s %s at %+.2f has no boundary", ex.name.c_str(), p.name(j).c_str(), grid[g]));
      if (grid[g] == 0.0) {
        for (std::size_t j = 0; j < p.size(); ++j)
          if (r.at(j, g) && *r.at(j, g) != 0.0) o.fail(fmt("%s %s nonzero at 0", ex.name.c_str(), p.name(j).c_str()));
        continue;
      }
      for (std::size_t f = 0; f < p.size(); ++f) {
        if (p.kind(f) != ModeField::natural_frequency || !r.at(f, g)) continue;
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p.kind(j) == ModeField::natural_frequency || p.slots[j][0].axis != p.slots[f][0].axis || !r.at(j, g))
            continue;
          min_margin = std::min(min_margin, *r.at(f, g) / *r.at(j, g));
          if (!(*r.at(f, g) > *r.at(j, g)))
            o.fail(fmt("%s at %+.2f: %s %.3g <= %s %.3g", ex.name.c_str(), grid[g], p.name(f).c_str(), *r.at(f, g),
                       p.name(j).c_str(), *r.at(j, g)));
        }
      }
    }
    std::printf("    %s: smallest frequency/other MSE ratio %.2f\n", ex.name.c_str(), min_margin);
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) o.fail(what);
  };

  // objective
  {
    const auto ex = fixtures::ex1();
    const auto ref = boundary_at_speeds(ex.dynamics, ex.cutting, speeds_for(ex, 20));
    std::vector<double> same = ref.depths();
    expect(mlae(ref, same) == 0.0, "objective nonzero at equality");
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      auto c = same;
      c[rng() % c.size()] += std::uniform_real_distribution<double>(-0.5, 0.5)(rng) + 1e-3;
      const double v = mlae(ref, c);
      expect(v > 0.0, "objective not positive for differing depths");
    }
  }

  // newton step
  {
    ParameterVector p = flatten(fixtures::ex1().dynamics);
    const std::vector<double> s(p.size(), 1.0);
    expect(newton_step(p, 0.0, s, 1.0) == p, "newton step moved at objective 0");
    ParameterVector q = p;
    q.values.assign(q.size(), 1.0);
    std::vector<double> s2(q.size(), 0.0);
    s2[0] = 1.0;
    s2[1] = 2.0;
    const ParameterVector n = newton_step(q, 0.5, s2, 1.0);
    expect(std::abs(n[0] - 0.9) <= 1e-15 && std::abs(n[1] - 0.8) <= 1e-15, fmt("arithmetic step gave (%.17g, %.17g)", n[0], n[1]));
    for (std::size_t i = 2; i < n.size(); ++i) expect(n[i] == 1.0, "untouched slot moved");
  }

  // slot factors
  {
    const double kr = 0.404, pi = std::numbers::pi;
    const DirectionalFactors a = directional_factors(kr, 0.0, pi);
    expect(std::abs(a.xx + pi * kr) < 1e-12 && std::abs(a.xy + pi) < 1e-12 && std::abs(a.yx - pi) < 1e-12 &&
               std::abs(a.yy + pi * kr) < 1e-12,
           fmt("slot factors (%.6g, %.6g, %.6g, %.6g)", a.xx, a.xy, a.yx, a.yy));
  }

  // joint stiffness and Kt scaling
  for (const auto& ex : fixtures::examples()) {
    const auto sp = speeds_for(ex);
    const auto base = boundary_at_speeds(ex.dynamics, ex.cutting, sp).depths();
    for (double s : {0.5, 3.0}) {
      DirectionalDynamics d = ex.dynamics;
      for (auto& m : d.x_modes) m.stiffness *= s;
      for (auto& m : d.y_modes) m.stiffness *= s;
      CuttingParams c = ex.cutting;
      c.tangential_coefficient *= s;
      const auto scaled = boundary_at_speeds(d, c, sp).depths();
      double worst = 0.0;
      for (std::size_t i = 0; i < sp.size(); ++i) worst = std::max(worst, rel(scaled[i], base[i]));
      expect(worst <= 1e-9, fmt("%s scaling by %g changed depths by %.3g", ex.name.c_str(), s, worst));
    }
  }

  // flatten / unflatten
  {
    std::mt19937_64 rng(11);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
      DirectionalDynamics d;
      const int nx = 1 + static_cast<int>(rng() % 3), ny = 1 + static_cast<int>(rng() % 3);
      double f = u(100, 500);
      for (int k = 0; k < nx; ++k) d.x_modes.push_back({f += u(1, 1000), u(1e5, 1e9), u(1e-3, 0.5)});
      f = u(100, 500);
      for (int k = 0; k < ny; ++k) d.y_modes.push_back({f += u(1, 1000), u(1e5, 1e9), u(1e-3, 0.5)});
      const ParameterVector p = flatten(d);
      if (!(unflatten(p) == d) || !(flatten(unflatten(p)) == p)) ++bad;
    }
    expect(bad == 0, fmt("%d of 1000 round trips differ", bad));
  }

  // seeded determinism
  {
    const auto ex = fixtures::ex1();
    const auto ref = boundary_at_speeds(ex.dynamics, ex.cutting, speeds_for(ex, 20));
    FitOptions opt;
    opt.max_iterations = 15;
    opt.burn_in = 3;
    opt.initial_guesses = perturbed_guesses(flatten(ex.dynamics), 0.2, 3, 9);
    const std::string a = format_fit_report(fit(ref, ex.cutting, opt));
    const std::string b = format_fit_report(fit(ref, ex.cutting, opt));
    expect(a == b, "fit reports differ between identical runs");

    McOptions mc;
    mc.paths = 40;
    mc.seed = 7;
    const auto sp = speeds_for(ex, 20);
    const std::string m1 = format_mc_report(mc_sensitivity(flatten(ex.dynamics), ex.cutting, mc, sp));
    const std::string m2 = format_mc_report(mc_sensitivity(flatten(ex.dynamics), ex.cutting, mc, sp));
    expect(m1 == m2, "mc reports differ between identical runs");
  }

  // IO round trip
  {
    const auto ex = fixtures::ex3();
    const SldCurve curve = build_sld(ex.dynamics, ex.cutting, fixtures::sld_for(ex));
    const auto path = (std::filesystem::temp_directory_path() / "lobefit_acceptance_roundtrip.csv").string();
    export_curve(curve, CurveFormat::table, path);
    const auto back = load_records(path);
    const auto env = curve.envelope();
    expect(back.size() == env.size(), "round trip changed the point count");
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min(back.size(), env.size()); ++i)
      worst = std::max({worst, rel(back.points[i].depth_limit, env.points[i].depth_limit),
                        rel(back.points[i].spindle_speed, env.points[i].spindle_speed)});
    expect(worst <= 1e-12, fmt("round trip error %.3g", worst));
    std::filesystem::remove(path);
  }
  return o;
}

} // namespace

int main() {
  int failures = 0;
  auto run = [&](int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    report(id, title, o, secs);
    if (!o.pass) ++failures;
    return secs;
  };

  std::vector<Recovered> fits;
  run(1, "synthetic recovery of Ex.1-3", [&] { return criterion1(fits); });
  run(2, "fitted boundaries stay within 5% of the reference", [&] { return criterion2(fits); });
  run(3, "axisymmetric 21-point surrogate recovery", criterion3);
  const double t4 = run(4, "lobe engine matches the Nyquist oracle within 1%", [] {
    const auto t0 = Clock::now();
    Outcome o = criterion4();
    if (seconds_since(t0) > 300) o.fail("exceeded 5 minutes");
    return o;
  });
  (void)t4;
  run(5, "Monte Carlo ranks natural frequencies 20x above the rest", [] {
    const auto t0 = Clock::now();
    Outcome o = criterion5();
    if (seconds_since(t0) > 600) o.fail("exceeded 10 minutes");
    return o;
  });
  run(6, "sweep MSE ordering and zero at the base point", criterion6);
  run(7, "property suite", criterion7);
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
