#pragma once

// Text formats: boundary record tables, the flat run configuration, structured
// reports and a standalone SVG drawing of a boundary.

#include "lobefit/error.hpp"
#include "lobefit/inverse.hpp"
#include "lobefit/model.hpp"
#include "lobefit/sensitivity.hpp"
#include "lobefit/units.hpp"
#include "lobefit/zoa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lobefit {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw InvalidArgument("failed while writing " + path);
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// Records

inline constexpr std::string_view records_header = "spindle_speed_rpm,depth_mm";

/// Parses a records table from text; `source` names the input in messages.
inline BoundarySamples parse_records(std::string_view text, const std::string& source = "<records>") {
  using namespace io_detail;
  std::vector<std::string_view> lines = split(text, '\n');
  std::size_t row = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    while (row < lines.size()) {
      std::string_view l = trim(lines[row++]);
      if (!l.empty() && l.front() != '#') return l;
    }
    return std::nullopt;
  };
  auto fail = [&](const std::string& msg) { return ParseError(source + ":" + std::to_string(row) + ": " + msg); };

  const auto header = next_line();
  if (!header) throw ParseError(source + ": no header line");
  const auto cols = split(*header, ',');
  if (cols.size() < 2 || cols[0] != "spindle_speed_rpm" || cols[1] != "depth_mm")
    throw fail("header must start with spindle_speed_rpm,depth_mm");
  if (cols.size() > 3 || (cols.size() == 3 && cols[2] != "weight"))
    throw fail("only an optional third column named weight is allowed");
  const bool weighted = cols.size() == 3;

  struct Row {
    double speed, depth, weight;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (const auto l = next_line()) {
    const auto cells = split(*l, ',');
    if (cells.size() != cols.size())
      throw fail("expected " + std::to_string(cols.size()) + " columns, found " + std::to_string(cells.size()));
    Row r{0.0, 0.0, 1.0, row};
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = to_double(cells[c]);
      if (!v || !std::isfinite(*v)) throw fail("non-numeric cell '" + std::string(cells[c]) + "'");
      (c == 0 ? r.speed : c == 1 ? r.depth : r.weight) = *v;
    }
    if (!(r.speed > 0.0)) throw fail("spindle speed must be positive");
    if (!(r.depth > 0.0)) throw fail("depth must be positive");
    if (weighted && !(r.weight > 0.0)) throw fail("weight must be positive");
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError(source + ": no data rows");
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.speed < b.speed; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].speed == rows[i - 1].speed)
      throw ParseError(source + ":" + std::to_string(rows[i].line) + ": duplicate spindle speed " + fmt(rows[i].speed));

  BoundarySamples s;
  for (const auto& r : rows) s.points.push_back({r.speed, r.depth});
  if (weighted) {
    s.weights.emplace();
    for (const auto& r : rows) s.weights->push_back(r.weight);
  }
  return s;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BoundarySamples load_records(const std::string& path) { return parse_records(read_text(path), path); }

inline std::string format_records(const BoundarySamples& s) {
  using io_detail::fmt;
  std::string out(records_header);
  if (s.weights) out += ",weight";
  out += '\n';
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    out += fmt(s.points[i].spindle_speed) + "," + fmt(s.points[i].depth_limit);
    if (s.weights) out += "," + fmt((*s.weights)[i]);
    out += '\n';
  }
  return out;
}

inline void write_records(const BoundarySamples& s, const std::string& path) {
  auto out = io_detail::open_out(path);
  out << format_records(s);
  io_detail::finish(out, path);
}

// ---------------------------------------------------------------------------
// Curve export

enum class CurveFormat { table, svg };

inline CurveFormat parse_curve_format(std::string_view s) {
  if (s == "table") return CurveFormat::table;
  if (s == "svg" || s == "svg-like") return CurveFormat::svg;
  throw InvalidArgument("unknown format '" + std::string(s) + "' (expected table or svg-like)");
}

inline std::string format_svg(const SldCurve& curve, const BoundarySamples* overlay = nullptr) {
  using io_detail::fmt;
  const BoundarySamples env = curve.envelope();
  if (env.points.empty()) throw EmptyCurve("curve has no covered speeds");
  const double w = 800, h = 500, ml = 70, mr = 20, mt = 20, mb = 50;
  double x0 = curve.speed_min(), x1 = curve.speed_max(), ymax = 0.0;
  for (const auto& p : env.points) ymax = std::max(ymax, p.depth_limit);
  if (overlay)
    for (const auto& p : overlay->points) {
      ymax = std::max(ymax, p.depth_limit);
      x0 = std::min(x0, p.spindle_speed);
      x1 = std::max(x1, p.spindle_speed);
    }
  ymax *= 1.1;
  if (!(x1 > x0)) x1 = x0 + 1.0;
  auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * (w - ml - mr); };
  auto sy = [&](double v) { return h - mb - v / ymax * (h - mt - mb); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
    << "\" y2=\"" << h - mb << "\"/><line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
    << h - mb << "\"/></g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = ymax * i / 5.0;
    o << "<text x=\"" << sx(xv) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << std::lround(xv)
      << "</text>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    o << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  o << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">spindle speed [rev/min]</text>\n";
  o << "<text x=\"16\" y=\"" << (mt + h - mb) / 2 << "\" transform=\"rotate(-90 16 " << (mt + h - mb) / 2
    << ")\" text-anchor=\"middle\">depth limit [mm]</text>\n</g>\n";

  // one polyline per covered run of the envelope
  std::vector<std::string> runs;
  std::string cur;
  for (std::size_t i = 0; i < curve.grid_speeds.size(); ++i) {
    const double d = curve.envelope_depths[i];
    if (!std::isfinite(d)) {
      if (!cur.empty()) runs.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur += fmt(sx(curve.grid_speeds[i])) + "," + fmt(sy(d)) + " ";
  }
  if (!cur.empty()) runs.push_back(std::move(cur));
  for (const auto& r : runs)
    o << "<polyline class=\"boundary\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"" << r << "\"/>\n";
  if (overlay)
    for (const auto& p : overlay->points)
      o << "<circle class=\"reference\" cx=\"" << fmt(sx(p.spindle_speed)) << "\" cy=\"" << fmt(sy(p.depth_limit))
        << "\" r=\"3\" fill=\"#c0392b\"/>\n";
  o << "</svg>\n";
  return o.str();
}

inline void export_curve(const SldCurve& curve, CurveFormat format, const std::string& path,
                         const BoundarySamples* overlay = nullptr) {
  if (curve.grid_speeds.empty() || curve.envelope().points.empty()) throw EmptyCurve("curve has no covered speeds");
  auto out = io_detail::open_out(path);
  if (format == CurveFormat::table) out << format_records(curve.envelope());
  else out << format_svg(curve, overlay);
  io_detail::finish(out, path);
}

// ---------------------------------------------------------------------------
// Run configuration

/// Flat `key = value [unit]` text. Lines starting with '#' are comments.
struct ConfigEntry {
  std::string value;
  std::string unit;
  int line = 0;
};

class ConfigFile {
public:
  static ConfigFile parse(std::string_view text, const std::string& source = "<config>") {
    using namespace io_detail;
    ConfigFile cfg;
    cfg.source_ = source;
    const auto lines = split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const int lineno = static_cast<int>(i + 1);
      std::string_view l = lines[i];
      if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
      l = trim(l);
      if (l.empty()) continue;
      const auto eq = l.find('=');
      if (eq == std::string_view::npos)
        throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key(trim(l.substr(0, eq)));
      std::string_view rhs = trim(l.substr(eq + 1));
      if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
      if (rhs.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty value for " + key);
      ConfigEntry e;
      e.line = lineno;
      if (const auto sp = rhs.find_first_of(" \t"); sp != std::string_view::npos) {
        e.value = std::string(rhs.substr(0, sp));
        e.unit = std::string(trim(rhs.substr(sp)));
      } else {
        e.value = std::string(rhs);
      }
      if (cfg.entries_.count(key))
        throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate key " + key + " (first on line " +
                         std::to_string(cfg.entries_[key].line) + ")");
      cfg.entries_[key] = std::move(e);
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) { return parse(read_text(path), path); }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, ConfigEntry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  std::string where(const std::string& key) const {
    const auto it = entries_.find(key);
    return source_ + (it == entries_.end() ? std::string() : ":" + std::to_string(it->second.line));
  }

  /// Numeric value converted to `canonical`; a bare number is taken as already canonical.
  double number(const std::string& key, std::optional<Unit> canonical = std::nullopt) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError(source_ + ": missing key " + key);
    used_[key] = true;
    const auto v = io_detail::to_double(it->second.value);
    if (!v || !std::isfinite(*v)) throw ParseError(where(key) + ": " + key + " is not a number");
    if (it->second.unit.empty()) return *v;
    if (!canonical) throw ParseError(where(key) + ": " + key + " takes no unit");
    try {
      return convert_units(*v, parse_unit(it->second.unit), *canonical);
    } catch (const UnitError& e) {
      throw ParseError(where(key) + ": " + e.what());
    }
  }

  double number_or(const std::string& key, double fallback, std::optional<Unit> canonical = std::nullopt) const {
    return has(key) ? number(key, canonical) : fallback;
  }

  long integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ParseError(where(key) + ": " + key + " must be an integer");
    return static_cast<long>(v);
  }

  long integer_or(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

  std::string text(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError(source_ + ": missing key " + key);
    used_[key] = true;
    return it->second.unit.empty() ? it->second.value : it->second.value + " " + it->second.unit;
  }

  std::string text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = text(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError(where(key) + ": " + key + " must be true or false");
  }

  /// Keys never read by any accessor.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

private:
  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
  mutable std::map<std::string, bool> used_;
};

struct RunConfig {
  DirectionalDynamics dynamics;
  std::optional<DirectionalDynamics> guess; // fit start; defaults to `dynamics`
  CuttingParams cutting;
  double speed_min = 0.0; // rev/min
  double speed_max = 0.0;
  int speed_count = 50;
  int freq_steps = 2000;
  int grid_points = 2000;
  int max_lobes = 10;
  FitOptions fit;
  int guess_count = 1;
  double guess_spread = 0.2;
  bool axisymmetric = false;
  double sweep_limit = 0.20;
  double sweep_step = 0.05;
  McOptions mc;
  std::uint64_t seed = 1;
  std::string records; // input dataset for fit
  std::string out;     // primary output path
  unsigned threads = 1;

  SldOptions sld() const {
    SldOptions o;
    o.speed_min = speed_min;
    o.speed_max = speed_max;
    o.freq_steps = freq_steps;
    o.grid_points = grid_points;
    o.max_lobes = max_lobes;
    return o;
  }

  std::vector<double> speeds() const { return linspace(speed_min, speed_max, static_cast<std::size_t>(speed_count)); }
};

namespace io_detail {

inline std::optional<DirectionalDynamics> read_dynamics(const ConfigFile& c, const std::string& prefix) {
  DirectionalDynamics d;
  bool any = false;
  for (Axis axis : {Axis::x, Axis::y}) {
    auto& modes = axis == Axis::x ? d.x_modes : d.y_modes;
    for (int m = 1;; ++m) {
      const std::string base = prefix + to_string(axis) + "." + std::to_string(m) + ".";
      if (!c.has(base + "fn") && !c.has(base + "k") && !c.has(base + "zeta")) break;
      for (const char* f : {"fn", "k", "zeta"})
        if (!c.has(base + f)) throw ParseError(c.source() + ": mode " + base + " is missing " + f);
      Mode mode{c.number(base + "fn", Unit::hertz), c.number(base + "k", Unit::meganewton_per_m) * 1e6,
                c.number(base + "zeta")};
      try {
        mode.validate();
      } catch (const Error& e) {
        throw ParseError(c.where(base + "fn") + ": " + e.what());
      }
      modes.push_back(mode);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  if (d.x_modes.empty() || d.y_modes.empty())
    throw ParseError(c.source() + ": " + prefix + " needs at least one x mode and one y mode");
  d.canonicalize();
  return d;
}

template <typename F>
void checked(const ConfigFile& c, const std::string& key, F&& f) {
  try {
    f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(c.where(key) + ": " + e.what());
  }
}

} // namespace io_detail

/// Builds a RunConfig; every value is checked against its module's rules and
/// errors carry the file and line of the offending key.
inline RunConfig parse_config(const ConfigFile& c) {
  using io_detail::checked;
  RunConfig r;
  auto dyn = io_detail::read_dynamics(c, "mode.");
  if (!dyn) throw ParseError(c.source() + ": no modes given (expected mode.x.1.fn and friends)");
  r.dynamics = *dyn;
  r.guess = io_detail::read_dynamics(c, "guess.");

  r.cutting.tangential_coefficient = c.number("cutting.kt", Unit::newton_per_mm2);
  r.cutting.radial_ratio = c.number("cutting.kr");
  r.cutting.flute_count = static_cast<int>(c.integer("cutting.flutes"));
  r.cutting.start_angle = c.number_or("cutting.start", 0.0, Unit::degree);
  r.cutting.exit_angle = c.number_or("cutting.exit", 180.0, Unit::degree);
  checked(c, "cutting.kt", [&] { r.cutting.validate(); });

  r.speed_min = c.number("speed.min", Unit::rev_per_min);
  r.speed_max = c.number("speed.max", Unit::rev_per_min);
  r.speed_count = static_cast<int>(c.integer_or("speed.count", 50));
  if (!(r.speed_min > 0.0 && r.speed_max > r.speed_min))
    throw ParseError(c.where("speed.max") + ": speed range must satisfy 0 < speed.min < speed.max");
  if (r.speed_count < 2) throw ParseError(c.where("speed.count") + ": speed.count must be at least 2");
  r.freq_steps = static_cast<int>(c.integer_or("sld.freq_steps", 2000));
  r.grid_points = static_cast<int>(c.integer_or("sld.grid_points", 2000));
  r.max_lobes = static_cast<int>(c.integer_or("sld.max_lobes", 10));
  checked(c, "sld.freq_steps", [&] { r.sld().validate(); });

  r.seed = static_cast<std::uint64_t>(c.integer_or("seed", 1));
  r.threads = static_cast<unsigned>(c.integer_or("threads", 1));

  FitOptions& f = r.fit;
  f.alpha = c.number_or("fit.alpha", f.alpha);
  f.fd_step = c.number_or("fit.fd_step", f.fd_step);
  f.max_iterations = static_cast<int>(c.integer_or("fit.max_iterations", f.max_iterations));
  f.objective_threshold = c.number_or("fit.threshold", f.objective_threshold);
  f.stall_window = static_cast<int>(c.integer_or("fit.stall_window", f.stall_window));
  f.stall_improvement = c.number_or("fit.stall_improvement", f.stall_improvement);
  f.jump_ratio = c.number_or("fit.jump_ratio", f.jump_ratio);
  f.burn_in = static_cast<int>(c.integer_or("fit.burn_in", f.burn_in));
  const std::string weights = c.text_or("fit.weights", "uniform");
  if (weights == "uniform") f.weight_scheme = WeightKind::uniform;
  else if (weights == "critical") f.weight_scheme = WeightKind::critical_points;
  else throw ParseError(c.where("fit.weights") + ": fit.weights must be uniform or critical");
  f.critical_weight = c.number_or("fit.critical_weight", f.critical_weight);
  const std::string scaling = c.text_or("fit.scaling", "relative");
  if (scaling == "relative") f.scaling = StepScaling::relative;
  else if (scaling == "absolute") f.scaling = StepScaling::absolute;
  else throw ParseError(c.where("fit.scaling") + ": fit.scaling must be relative or absolute");
  r.guess_count = static_cast<int>(c.integer_or("fit.guesses", 1));
  r.guess_spread = c.number_or("fit.spread", 0.2);
  r.axisymmetric = c.flag_or("fit.axisymmetric", false);
  if (r.guess_count < 1) throw ParseError(c.where("fit.guesses") + ": fit.guesses must be at least 1");
  if (!(r.guess_spread >= 0.0 && r.guess_spread < 1.0))
    throw ParseError(c.where("fit.spread") + ": fit.spread must lie in [0, 1)");
  f.threads = r.threads;
  f.freq_steps = r.freq_steps;
  f.grid_points = r.grid_points;
  f.max_lobes = r.max_lobes;
  {
    FitOptions probe = f;
    probe.initial_guesses = {flatten(r.dynamics)};
    checked(c, "fit.max_iterations", [&] { probe.validate(); });
  }

  r.sweep_limit = c.number_or("sweep.limit", r.sweep_limit);
  r.sweep_step = c.number_or("sweep.step", r.sweep_step);
  if (!(r.sweep_step > 0.0 && r.sweep_limit >= 0.0 && r.sweep_limit < 1.0))
    throw ParseError(c.where("sweep.limit") + ": sweep needs 0 <= limit < 1 and step > 0");

  r.mc.neighborhood = c.number_or("mc.neighborhood", r.mc.neighborhood);
  r.mc.paths = static_cast<int>(c.integer_or("mc.paths", r.mc.paths));
  r.mc.inner_ratio = c.number_or("mc.inner_ratio", r.mc.inner_ratio);
  r.mc.seed = r.seed;
  r.mc.threads = r.threads;
  checked(c, "mc.paths", [&] { r.mc.validate(); });

  r.records = c.text_or("records", "");
  r.out = c.text_or("out", "");

  if (const auto u = c.unused(); !u.empty()) throw ParseError(c.where(u.front()) + ": unknown key " + u.front());
  return r;
}

inline RunConfig load_config(const std::string& path) { return parse_config(ConfigFile::load(path)); }

// ---------------------------------------------------------------------------
// Reports

namespace io_detail {

inline void kv(std::ostream& o, const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; }
inline void kv(std::ostream& o, const std::string& k, double v) { kv(o, k, fmt(v)); }

inline void params_kv(std::ostream& o, const std::string& prefix, const ParameterVector& p) {
  for (std::size_t i = 0; i < p.size(); ++i) kv(o, prefix + p.name(i), p[i]);
}

} // namespace io_detail

inline std::string format_fit_report(const FitReport& r) {
  using namespace io_detail;
  std::ostringstream o;
  o << "lobefit-fit-report v1\n";
  kv(o, "converged", r.converged ? "true" : "false");
  kv(o, "termination", r.termination);
  kv(o, "objective", r.objective);
  kv(o, "iterations", std::to_string(r.history.size()));
  kv(o, "survivor", std::to_string(r.survivor));
  for (std::size_t i = 0; i < r.start_objectives.size(); ++i)
    kv(o, "start_objective." + std::to_string(i), r.start_objectives[i]);
  kv(o, "units", "fn Hz, k N/m, zeta 1");
  params_kv(o, "param.", r.parameters);
  o << "[history]\niteration,objective,event";
  for (std::size_t i = 0; i < r.parameters.size(); ++i) o << ',' << r.parameters.name(i);
  o << '\n';
  for (const auto& h : r.history) {
    o << h.iteration << ',' << fmt(h.objective) << ',' << to_string(h.event);
    for (double v : h.parameters) o << ',' << fmt(v);
    o << '\n';
  }
  return o.str();
}

/// Iteration-vs-objective table.
inline std::string format_fit_history(const FitReport& r) {
  std::ostringstream o;
  o << "iteration,objective\n";
  for (const auto& h : r.history) o << h.iteration << ',' << io_detail::fmt(h.objective) << '\n';
  return o.str();
}

inline std::string format_sweep_report(const SweepReport& r) {
  using namespace io_detail;
  std::ostringstream o;
  o << "lobefit-sweep-report v1\n";
  kv(o, "speeds", std::to_string(r.speeds.size()));
  kv(o, "speed_min", r.speeds.empty() ? 0.0 : r.speeds.front());
  kv(o, "speed_max", r.speeds.empty() ? 0.0 : r.speeds.back());
  kv(o, "units", "mse mm^2");
  params_kv(o, "base.", r.base);
  o << "[mse]\nparameter";
  for (double e : r.grid) o << ',' << fmt(e);
  o << '\n';
  for (std::size_t j = 0; j < r.cells.size(); ++j) {
    o << r.base.name(j);
    for (const auto& c : r.cells[j]) o << ',' << (c.mse ? fmt(*c.mse) : std::string("missing"));
    o << '\n';
  }
  bool header = false;
  for (std::size_t j = 0; j < r.cells.size(); ++j)
    for (std::size_t e = 0; e < r.cells[j].size(); ++e)
      if (!r.cells[j][e].mse) {
        if (!header) o << "[missing]\n";
        header = true;
        o << r.base.name(j) << ',' << fmt(r.grid[e]) << ',' << r.cells[j][e].missing_reason << '\n';
      }
  return o.str();
}

inline std::string format_mc_report(const McReport& r) {
  using namespace io_detail;
  std::ostringstream o;
  o << "lobefit-mc-report v1\n";
  kv(o, "paths", std::to_string(r.paths));
  kv(o, "used_paths", std::to_string(r.used_paths));
  kv(o, "skipped_paths", std::to_string(r.skipped_paths));
  kv(o, "redraws", std::to_string(r.redraws));
  kv(o, "neighborhood", r.neighborhood);
  kv(o, "inner_ratio", r.inner_ratio);
  kv(o, "seed", std::to_string(r.seed));
  kv(o, "units", "mse mm^2");
  o << "[sensitivity]\nparameter,mean,stddev,min,max\n";
  for (std::size_t j = 0; j < r.names.size(); ++j)
    o << r.names[j] << ',' << fmt(r.mean[j]) << ',' << fmt(r.stddev[j]) << ',' << fmt(r.min[j]) << ','
      << fmt(r.max[j]) << '\n';
  return o.str();
}

inline void write_text(const std::string& text, const std::string& path) {
  auto out = io_detail::open_out(path);
  out << text;
  io_detail::finish(out, path);
}

} // namespace lobefit
