/**
 * @file value_map.hpp
 * @brief Grid sweeps over co-state seeds and initial states, plus SVG heatmaps.
 *
 * Grids are axis1-major: row i fixes the axis1 value, column j walks axis2.
 * Every cell is a pure function of its coordinates, so rows can be computed
 * in any order, in parallel, or across interrupted runs.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hybrid_zeno/ball_model.hpp"
#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/format.hpp"
#include "hybrid_zeno/parallel.hpp"
#include "hybrid_zeno/pmp_shooting.hpp"
#include "hybrid_zeno/zeno_scheme.hpp"

namespace hybrid_zeno {

struct GridAxis {
  std::string name;
  double lo = 0;
  double hi = 1;
  std::size_t n = 2;

  [[nodiscard]] double at(std::size_t i) const {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
};

struct GridSpec {
  GridAxis axis1;
  GridAxis axis2;

  void validate() const {
    for (const GridAxis* a : {&axis1, &axis2}) {
      if (!(a->lo < a->hi)) throw ConfigError("grid axis " + a->name + " requires lo < hi");
      if (a->n < 2) throw ConfigError("grid axis " + a->name + " requires n >= 2");
    }
  }
  [[nodiscard]] std::size_t rows() const { return axis1.n; }
  [[nodiscard]] std::size_t cols() const { return axis2.n; }
  [[nodiscard]] std::size_t cells() const { return axis1.n * axis2.n; }
};

inline GridSpec default_costate_grid() { return {{"p_x0", -2, 2, 201}, {"p_p0", -2, 2, 201}}; }
inline GridSpec default_state_grid() { return {{"x0", 0, 2, 101}, {"p0", -2, 2, 101}}; }

/// Hybrid executions start by jumping when the initial state sits on the guard.
inline BallState enter_domain(const BallState& s, const PhysParams& prm) {
  return (s.x == 0 && s.p < 0) ? reset(s, prm) : s;
}

// ---------------------------------------------------------------------------
// Co-state seed sweep
// ---------------------------------------------------------------------------

struct CostateCell {
  Costate seed;
  ShootStatus status = ShootStatus::Ok;
  std::size_t bounces = 0;
  double log_error = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] bool zeno() const {
    return status == ShootStatus::ZenoDetected || status == ShootStatus::ZenoSingularity;
  }
};

inline CostateCell costate_cell(const BallState& x0, const Costate& seed, const PhysParams& prm,
                                const IntegratorConfig& cfg) {
  const ShootOutcome o = shoot(enter_domain(x0, prm), seed, prm, cfg);
  CostateCell c;
  c.seed = seed;
  c.status = o.status;
  c.bounces = o.bounces;
  if (o.valid()) c.log_error = log_error(o.residual);
  return c;
}

/// Rows [row_begin, row_end) of a co-state sweep, flattened row-major.
inline std::vector<CostateCell> sweep_costate_rows(const BallState& x0, const GridSpec& grid,
                                                   const PhysParams& prm,
                                                   const IntegratorConfig& cfg,
                                                   std::size_t row_begin, std::size_t row_end,
                                                   unsigned workers = 1) {
  const std::size_t cols = grid.cols();
  std::vector<CostateCell> out((row_end - row_begin) * cols);
  parallel_for(out.size(), workers, [&](std::size_t k) {
    const std::size_t i = row_begin + k / cols;
    const std::size_t j = k % cols;
    out[k] = costate_cell(x0, {grid.axis1.at(i), grid.axis2.at(j)}, prm, cfg);
  });
  return out;
}

inline std::vector<CostateCell> sweep_costate_grid(const BallState& x0, const GridSpec& grid,
                                                   const PhysParams& prm,
                                                   const IntegratorConfig& cfg,
                                                   unsigned workers = 1) {
  grid.validate();
  return sweep_costate_rows(x0, grid, prm, cfg, 0, grid.rows(), workers);
}

inline const char* costate_csv_header() {
  return "i,j,seed_px,seed_pp,status,bounces,log_error\n";
}

inline void write_costate_rows(std::ostream& os, const GridSpec& grid, std::size_t row_begin,
                               const std::vector<CostateCell>& cells) {
  const std::size_t cols = grid.cols();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const CostateCell& c = cells[k];
    os << row_begin + k / cols << ',' << k % cols << ',' << fmt_double(c.seed.p_x) << ','
       << fmt_double(c.seed.p_p) << ',' << to_string(c.status) << ',' << c.bounces << ','
       << fmt_double(c.log_error) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Initial-state sweep
// ---------------------------------------------------------------------------

struct StateCell {
  BallState x0;
  double J_shoot = std::numeric_limits<double>::infinity();
  /// Bounce count of the cheapest Zeno-free extremal; unset when none was found.
  std::optional<std::size_t> shoot_bounces;
  std::size_t roots = 0;
  /// J* when the Zeno scheme is locally optimal, NaN otherwise.
  double J_zeno = std::numeric_limits<double>::quiet_NaN();
  double J_true = std::numeric_limits<double>::infinity();
  /// Unset when neither branch is available.
  std::optional<Branch> branch;
  bool locally_optimal = false;          ///< series time-to-Zeno
  bool locally_optimal_printed = false;  ///< printed-constant time-to-Zeno

  /// Bounce count of the optimal execution; -1 marks the Zeno branch or no solution.
  [[nodiscard]] long optimal_bounces() const {
    if (branch == Branch::Shoot && shoot_bounces) return static_cast<long>(*shoot_bounces);
    return -1;
  }
};

inline StateCell state_cell(const BallState& x0, const PhysParams& prm,
                            const IntegratorConfig& cfg, const SolverConfig& scfg) {
  StateCell c;
  c.x0 = x0;
  const BallState start = enter_domain(x0, prm);
  const std::vector<ShootResult> roots = multistart_solve(start, prm, cfg, scfg);
  c.roots = roots.size();
  c.J_shoot = J_shoot(roots);
  if (!roots.empty()) c.shoot_bounces = roots.front().bounces;
  c.locally_optimal = is_zeno_locally_optimal(start, prm, ZenoTimeVariant::Series);
  c.locally_optimal_printed = is_zeno_locally_optimal(start, prm, ZenoTimeVariant::Printed);
  if (c.locally_optimal) c.J_zeno = optimal_switch(prm).J_star;
  try {
    const TrueValue tv = true_value(start, prm, c.J_shoot);
    c.J_true = tv.J_true;
    c.branch = tv.branch;
  } catch (const Infeasible&) {
  }
  return c;
}

inline std::vector<StateCell> sweep_state_rows(const GridSpec& grid, const PhysParams& prm,
                                               const IntegratorConfig& cfg,
                                               const SolverConfig& scfg, std::size_t row_begin,
                                               std::size_t row_end, unsigned workers = 1) {
  const std::size_t cols = grid.cols();
  std::vector<StateCell> out((row_end - row_begin) * cols);
  parallel_for(out.size(), workers, [&](std::size_t k) {
    const std::size_t i = row_begin + k / cols;
    const std::size_t j = k % cols;
    out[k] = state_cell({grid.axis1.at(i), grid.axis2.at(j)}, prm, cfg, scfg);
  });
  return out;
}

inline std::vector<StateCell> sweep_state_grid(const GridSpec& grid, const PhysParams& prm,
                                               const IntegratorConfig& cfg,
                                               const SolverConfig& scfg, unsigned workers = 1) {
  grid.validate();
  return sweep_state_rows(grid, prm, cfg, scfg, 0, grid.rows(), workers);
}

inline const char* state_csv_header() {
  return "i,j,x0,p0,J_shoot,shoot_bounces,roots,J_zeno,J_true,branch,optimal_bounces,"
         "locally_optimal,locally_optimal_printed\n";
}

inline void write_state_rows(std::ostream& os, const GridSpec& grid, std::size_t row_begin,
                             const std::vector<StateCell>& cells) {
  const std::size_t cols = grid.cols();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const StateCell& c = cells[k];
    os << row_begin + k / cols << ',' << k % cols << ',' << fmt_double(c.x0.x) << ','
       << fmt_double(c.x0.p) << ',' << fmt_double(c.J_shoot) << ',';
    if (c.shoot_bounces) os << *c.shoot_bounces;
    os << ',' << c.roots << ',' << fmt_double(c.J_zeno) << ',' << fmt_double(c.J_true) << ','
       << (c.branch ? to_string(*c.branch) : "none") << ',' << c.optimal_bounces() << ','
       << int(c.locally_optimal) << ',' << int(c.locally_optimal_printed) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Local-optimality boundary
// ---------------------------------------------------------------------------

struct BoundaryPoint {
  double x;
  double p;
};

/**
 * Samples the curve zeta(x, p) + sqrt(6/g) = T_f for x on [x_lo, x_hi].
 *
 * zeta is convex in p with a closed-form minimiser, so each x contributes up
 * to two points: one on the upper branch (p above the minimiser) and one on
 * the lower branch. Points outside [p_lo, p_hi] are dropped. The result is
 * the upper branch by increasing x followed by the lower branch by
 * decreasing x.
 */
inline std::vector<BoundaryPoint> boundary_curve(const PhysParams& prm, double x_lo, double x_hi,
                                                 std::size_t n, ZenoTimeVariant variant,
                                                 double p_lo = -2, double p_hi = 2) {
  if (n < 2 || !(x_lo < x_hi) || !(p_lo < p_hi)) throw ConfigError("bad boundary sampling range");
  const double target = prm.T_f - std::sqrt(6.0 / prm.g);
  const double c2 = prm.c * prm.c;
  const double K = variant == ZenoTimeVariant::Series ? (1 + c2) / (1 - c2) : 3.0 / (1 - c2);
  auto excess = [&](double x, double p) { return zeno_time({x, p}, prm, variant) - target; };
  auto bisect = [&](double x, double a, double b) {
    // excess(a) and excess(b) have opposite signs.
    double fa = excess(x, a);
    for (int k = 0; k < 200 && b - a > 0; ++k) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      const double fm = excess(x, mid);
      if ((fm <= 0) == (fa <= 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    return std::abs(excess(x, a)) <= std::abs(excess(x, b)) ? a : b;
  };

  std::vector<BoundaryPoint> upper, lower;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = x_lo + (x_hi - x_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    const double p_star =
        std::clamp(-prm.m * std::sqrt(2 * prm.g * std::max(x, 0.0) / (K * K - 1)), p_lo, p_hi);
    if (excess(x, p_star) > 0) continue;
    if (excess(x, p_hi) > 0) upper.push_back({x, bisect(x, p_star, p_hi)});
    if (excess(x, p_lo) > 0) lower.push_back({x, bisect(x, p_lo, p_star)});
  }
  if (upper.empty() && lower.empty()) throw NoRoot("boundary does not cross the sampled region");
  std::vector<BoundaryPoint> out = std::move(upper);
  out.insert(out.end(), lower.rbegin(), lower.rend());
  return out;
}

inline void write_boundary_csv(std::ostream& os, const std::vector<BoundaryPoint>& pts) {
  os << "x,p\n";
  for (const BoundaryPoint& b : pts) os << fmt_double(b.x) << ',' << fmt_double(b.p) << '\n';
}

// ---------------------------------------------------------------------------
// SVG heatmaps
// ---------------------------------------------------------------------------

struct Rgb {
  int r, g, b;
};

/// Polyline drawn over a heatmap.
struct Overlay {
  std::vector<BoundaryPoint> points;
  std::string stroke = "#000000";
  bool dashed = false;
};

inline std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

/// Discrete colour per integer category, with a fallback for unmapped values.
struct CategoricalPalette {
  std::map<long, std::pair<Rgb, std::string>> colors;
  Rgb fallback{255, 255, 255};
  std::string fallback_label = "other";
};

/// Linear ramp between lo and hi through a fixed set of stops; NaN cells use `missing`.
struct ContinuousPalette {
  double lo = 0;
  double hi = 1;
  std::vector<Rgb> stops{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  Rgb missing{255, 255, 255};

  [[nodiscard]] Rgb at(double v) const {
    if (!std::isfinite(v)) return missing;
    double s = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    s = std::clamp(s, 0.0, 1.0) * static_cast<double>(stops.size() - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(s), stops.size() - 2);
    const double f = s - static_cast<double>(k);
    auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * f)); };
    return {mix(stops[k].r, stops[k + 1].r), mix(stops[k].g, stops[k + 1].g),
            mix(stops[k].b, stops[k + 1].b)};
  }
};

/// Bounce-count colours: 3 blue, 4 green, 5 yellow; Zeno (-1) white.
inline CategoricalPalette bounce_palette(long crop_above = 6) {
  CategoricalPalette pal;
  pal.colors = {{-1, {{255, 255, 255}, "Zeno"}},  {0, {{128, 0, 128}, "0"}},
                {1, {{230, 25, 75}, "1"}},         {2, {{245, 130, 48}, "2"}},
                {3, {{0, 90, 255}, "3"}},          {4, {{0, 170, 60}, "4"}},
                {5, {{255, 225, 25}, "5"}},        {6, {{70, 240, 240}, "6"}}};
  for (auto it = pal.colors.begin(); it != pal.colors.end();) {
    it = it->first > crop_above ? pal.colors.erase(it) : std::next(it);
  }
  pal.fallback = {255, 255, 255};
  pal.fallback_label = "> " + std::to_string(crop_above) + " (cropped)";
  return pal;
}

/// Row-major matrix over a GridSpec: values[i * cols + j].
struct Heatmap {
  GridSpec grid;
  std::vector<double> values;
  std::string title;
};

/**
 * Writes an SVG heatmap: axis1 horizontal, axis2 vertical (increasing
 * upwards), one rectangle per cell, with axis labels and a legend. Output
 * depends only on the inputs, so identical matrices render to identical bytes.
 */
template <class Palette>
void render_heatmap(std::ostream& os, const Heatmap& hm, const Palette& palette,
                    const std::vector<Overlay>& overlays = {}) {
  const std::size_t rows = hm.grid.rows();
  const std::size_t cols = hm.grid.cols();
  if (hm.values.size() != rows * cols) throw Error("heatmap size does not match grid");
  constexpr double plot = 600, margin = 70, legend = 170;
  const double cw = plot / static_cast<double>(rows);
  const double ch = plot / static_cast<double>(cols);
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(plot + 2 * margin + legend)
     << "\" height=\"" << num(plot + 2 * margin) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<title>" << hm.title << "</title>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = hm.values[i * cols + j];
      std::string fill;
      if constexpr (std::is_same_v<Palette, CategoricalPalette>) {
        const long key = std::isfinite(v) ? std::lround(v) : std::numeric_limits<long>::min();
        auto it = palette.colors.find(key);
        fill = hex(it == palette.colors.end() ? palette.fallback : it->second.first);
      } else {
        fill = hex(palette.at(v));
      }
      const double x = margin + static_cast<double>(i) * cw;
      const double y = margin + plot - static_cast<double>(j + 1) * ch;
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw)
         << "\" height=\"" << num(ch) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  os << "</g>\n";

  const GridAxis& a1 = hm.grid.axis1;
  const GridAxis& a2 = hm.grid.axis2;
  // Cells are centred on the lattice points.
  const double x_min = a1.lo - 0.5 * (a1.hi - a1.lo) / static_cast<double>(rows - 1);
  const double x_max = a1.hi + 0.5 * (a1.hi - a1.lo) / static_cast<double>(rows - 1);
  const double y_min = a2.lo - 0.5 * (a2.hi - a2.lo) / static_cast<double>(cols - 1);
  const double y_max = a2.hi + 0.5 * (a2.hi - a2.lo) / static_cast<double>(cols - 1);
  auto sx = [&](double v) { return margin + plot * (v - x_min) / (x_max - x_min); };
  auto sy = [&](double v) { return margin + plot - plot * (v - y_min) / (y_max - y_min); };

  for (const Overlay& ov : overlays) {
    if (ov.points.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << ov.stroke << "\" stroke-width=\"2\""
       << (ov.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t k = 0; k < ov.points.size(); ++k) {
      os << (k ? " " : "") << num(sx(ov.points[k].x)) << ',' << num(sy(ov.points[k].p));
    }
    os << "\"/>\n";
  }

  os << "<rect x=\"" << num(margin) << "\" y=\"" << num(margin) << "\" width=\"" << num(plot)
     << "\" height=\"" << num(plot) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double vx = a1.lo + (a1.hi - a1.lo) * k / 4.0;
    const double vy = a2.lo + (a2.hi - a2.lo) * k / 4.0;
    os << "<text x=\"" << num(sx(vx)) << "\" y=\"" << num(margin + plot + 18)
       << "\" text-anchor=\"middle\">" << num(vx) << "</text>\n";
    os << "<text x=\"" << num(margin - 6) << "\" y=\"" << num(sy(vy) + 4)
       << "\" text-anchor=\"end\">" << num(vy) << "</text>\n";
  }
  os << "<text x=\"" << num(margin + plot / 2) << "\" y=\"" << num(margin + plot + 45)
     << "\" text-anchor=\"middle\">" << a1.name << "</text>\n";
  os << "<text x=\"18\" y=\"" << num(margin + plot / 2) << "\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 18 " << num(margin + plot / 2) << ")\">" << a2.name << "</text>\n";
  os << "<text x=\"" << num(margin + plot / 2) << "\" y=\"" << num(margin / 2)
     << "\" text-anchor=\"middle\" font-size=\"16\">" << hm.title << "</text>\n";

  const double lx = margin + plot + 20;
  if constexpr (std::is_same_v<Palette, CategoricalPalette>) {
    double ly = margin;
    auto entry = [&](const Rgb& c, const std::string& label) {
      os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"14\" height=\"14\" fill=\""
         << hex(c) << "\" stroke=\"#000000\"/>\n";
      os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(ly + 12) << "\">" << label << "</text>\n";
      ly += 20;
    };
    for (const auto& [key, val] : palette.colors) entry(val.first, val.second);
    entry(palette.fallback, palette.fallback_label);
  } else {
    constexpr int kBands = 50;
    const double bh = plot / kBands;
    for (int k = 0; k < kBands; ++k) {
      const double v = palette.hi - (palette.hi - palette.lo) * (k + 0.5) / kBands;
      os << "<rect x=\"" << num(lx) << "\" y=\"" << num(margin + k * bh) << "\" width=\"20\" height=\""
         << num(bh) << "\" fill=\"" << hex(palette.at(v)) << "\"/>\n";
    }
    os << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(margin + 10) << "\">" << num(palette.hi)
       << "</text>\n";
    os << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(margin + plot) << "\">" << num(palette.lo)
       << "</text>\n";
  }
  os << "</svg>\n";
}

template <class Palette>
void render_heatmap(const Heatmap& hm, const Palette& palette, const std::string& out_path,
                    const std::vector<Overlay>& overlays = {}) {
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot open " + out_path + " for writing");
  render_heatmap(f, hm, palette, overlays);
  if (!f) throw IoError("failed writing " + out_path);
}

/// Bounce counts with Zeno and invalid shots as -1 (rendered white).
inline Heatmap costate_bounce_map(const GridSpec& grid, const std::vector<CostateCell>& cells) {
  Heatmap hm{grid, {}, "bounce count (cropped at 6)"};
  hm.values.reserve(cells.size());
  for (const CostateCell& c : cells) {
    hm.values.push_back(c.status == ShootStatus::Ok ? static_cast<double>(c.bounces) : -1.0);
  }
  return hm;
}

inline Heatmap costate_log_error_map(const GridSpec& grid, const std::vector<CostateCell>& cells) {
  Heatmap hm{grid, {}, "ln((x(T_f)-x_f)^2 + (p(T_f)-p_f)^2)"};
  for (const CostateCell& c : cells) hm.values.push_back(c.log_error);
  return hm;
}

inline Heatmap state_bounce_map(const GridSpec& grid, const std::vector<StateCell>& cells) {
  Heatmap hm{grid, {}, "optimal bounce count (white: Zeno optimal)"};
  for (const StateCell& c : cells) hm.values.push_back(static_cast<double>(c.optimal_bounces()));
  return hm;
}

inline Heatmap state_value_map(const GridSpec& grid, const std::vector<StateCell>& cells) {
  Heatmap hm{grid, {}, "value function J_true"};
  for (const StateCell& c : cells) hm.values.push_back(c.J_true);
  return hm;
}

/// Finite-value range of a heatmap, for continuous palettes.
inline std::pair<double, double> finite_range(const Heatmap& hm) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : hm.values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo > hi) return {0, 1};
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Reading sweep CSVs back
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double csv_number(const std::string& s) {
  double v;
  if (!parse_double(s, v)) throw Error("malformed number '" + s + "' in sweep CSV");
  return v;
}

inline ShootStatus parse_status(const std::string& s) {
  for (ShootStatus st : {ShootStatus::Ok, ShootStatus::ZenoSingularity, ShootStatus::ZenoDetected,
                         ShootStatus::EventLimit, ShootStatus::IntegrationFailure}) {
    if (s == to_string(st)) return st;
  }
  throw Error("unknown shot status '" + s + "' in sweep CSV");
}

}  // namespace detail

/// Parses a co-state sweep CSV (header included) back into row-major cells.
inline std::vector<CostateCell> read_costate_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  std::vector<CostateCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw Error("co-state sweep CSV row has " + std::to_string(f.size()) + " fields");
    CostateCell c;
    c.seed = {detail::csv_number(f[2]), detail::csv_number(f[3])};
    c.status = detail::parse_status(f[4]);
    c.bounces = static_cast<std::size_t>(detail::csv_number(f[5]));
    c.log_error = detail::csv_number(f[6]);
    cells.push_back(c);
  }
  return cells;
}

/// Parses a state sweep CSV (header included) back into row-major cells.
inline std::vector<StateCell> read_state_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  std::vector<StateCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 13) throw Error("state sweep CSV row has " + std::to_string(f.size()) + " fields");
    StateCell c;
    c.x0 = {detail::csv_number(f[2]), detail::csv_number(f[3])};
    c.J_shoot = detail::csv_number(f[4]);
    if (!f[5].empty()) c.shoot_bounces = static_cast<std::size_t>(detail::csv_number(f[5]));
    c.roots = static_cast<std::size_t>(detail::csv_number(f[6]));
    c.J_zeno = detail::csv_number(f[7]);
    c.J_true = detail::csv_number(f[8]);
    if (f[9] == "shoot") c.branch = Branch::Shoot;
    else if (f[9] == "zeno") c.branch = Branch::Zeno;
    c.locally_optimal = f[11] == "1";
    c.locally_optimal_printed = f[12] == "1";
    cells.push_back(c);
  }
  return cells;
}

}  // namespace hybrid_zeno
