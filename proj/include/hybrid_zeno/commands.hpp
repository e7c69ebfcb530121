/**
 * @file commands.hpp
 * @brief The simulate / shoot / zeno / sweep commands behind the CLI.
 *
 * Each command reads a RunConfig, writes its artifacts under
 * cfg.output_dir and prints a short plain-text summary. Sweeps append rows
 * in blocks of cfg.checkpoint_rows and record progress in a checkpoint file,
 * so an interrupted sweep can be resumed and finishes with the same bytes
 * as an uninterrupted one.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybrid_zeno/ball_model.hpp"
#include "hybrid_zeno/config.hpp"
#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/format.hpp"
#include "hybrid_zeno/hybrid_sim.hpp"
#include "hybrid_zeno/pmp_shooting.hpp"
#include "hybrid_zeno/value_map.hpp"
#include "hybrid_zeno/zeno_scheme.hpp"

namespace hybrid_zeno {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

inline fs::path prepare_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

// Replaces `path` with `text` via a temporary file and rename.
inline void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f = open_out(tmp);
    f << text;
    f.flush();
    if (!f) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline const std::vector<std::string>& ext_names() {
  static const std::vector<std::string> names{"x", "p", "p_x", "p_p", "J_acc"};
  return names;
}

}  // namespace detail

/// Uncontrolled run (no co-states) or a single extremal shot (with co-states).
inline int cmd_simulate(RunConfig cfg, BallState x0, std::optional<Costate> costate0,
                        std::optional<double> tf, std::ostream& out) {
  if (tf) cfg.params.T_f = *tf;
  cfg.validate();
  const fs::path dir = detail::prepare_dir(cfg);
  const PhysParams& prm = cfg.params;

  if (!costate0) {
    const BallState start = enter_domain(x0, prm);
    const auto traj =
        simulate_hybrid(ball_system(prm), Vec<2>{start.x, start.p}, 0.0, prm.T_f, cfg.integrator);
    {
      std::ofstream f = detail::open_out(dir / "trajectory.csv");
      const std::vector<std::string> names{"x", "p"};
      write_trajectory_csv(f, traj, names);
    }
    {
      std::ofstream f = detail::open_out(dir / "impacts.csv");
      write_impact_csv(f, traj.impact_times);
    }
    out << "termination: " << to_string(traj.termination) << '\n';
    out << "impacts: " << traj.impacts() << '\n';
    if (traj.t_inf) {
      out << "zeno_time_estimate: " << fmt_double(*traj.t_inf) << '\n';
      out << "zeno_time_series: " << fmt_double(zeno_time_series(start, prm)) << '\n';
      out << "zeno_time_printed: " << fmt_double(zeno_time_paper(start, prm)) << '\n';
    }
    out << "final_time: " << fmt_double(traj.final_time) << '\n';
    out << "final_state: " << fmt_double(traj.final_state[0]) << ' '
        << fmt_double(traj.final_state[1]) << '\n';
    return 0;
  }

  const ShootOutcome o = shoot(enter_domain(x0, prm), *costate0, prm, cfg.integrator, Recording::Full);
  if (o.trajectory) {
    std::ofstream f = detail::open_out(dir / "trajectory.csv");
    write_trajectory_csv(f, *o.trajectory, detail::ext_names());
    std::ofstream g = detail::open_out(dir / "impacts.csv");
    write_impact_csv(g, o.trajectory->impact_times);
  }
  out << "status: " << to_string(o.status) << '\n';
  out << "zeno_hit: " << (o.zeno_hit ? "true" : "false") << '\n';
  out << "bounces: " << o.bounces << '\n';
  if (o.valid()) {
    out << "terminal: " << fmt_double(o.terminal.x) << ' ' << fmt_double(o.terminal.p) << '\n';
    out << "residual: " << fmt_double(o.residual[0]) << ' ' << fmt_double(o.residual[1]) << '\n';
    out << "cost: " << fmt_double(o.cost) << '\n';
  }
  return 0;
}

/// Full multistart; writes seeds.csv, roots.csv and best_trajectory.csv.
inline int cmd_shoot(const RunConfig& cfg, BallState x0, unsigned workers, std::ostream& out) {
  cfg.validate();
  const fs::path dir = detail::prepare_dir(cfg);
  const PhysParams& prm = cfg.params;
  const BallState start = enter_domain(x0, prm);
  const MultistartReport rep = multistart_report(start, prm, cfg.integrator, cfg.solver, workers);
  {
    std::ofstream f = detail::open_out(dir / "seeds.csv");
    write_seed_csv(f, rep.seeds);
  }
  {
    std::ofstream f = detail::open_out(dir / "roots.csv");
    write_roots_csv(f, rep.roots);
  }
  std::size_t converged = 0;
  for (const SeedRecord& s : rep.seeds) converged += s.converged;
  out << "seeds: " << rep.seeds.size() << '\n';
  out << "converged_seeds: " << converged << '\n';
  out << "distinct_roots: " << rep.roots.size() << '\n';
  if (rep.roots.empty()) {
    fs::remove(dir / "best_trajectory.csv");
    out << "no Zeno-free extremal found\n";
    out << "J_shoot: inf\n";
    return 0;
  }
  const ShootResult& best = rep.roots.front();
  const ShootOutcome o = shoot(start, best.converged, prm, cfg.integrator, Recording::Full);
  if (o.trajectory) {
    std::ofstream f = detail::open_out(dir / "best_trajectory.csv");
    write_trajectory_csv(f, *o.trajectory, detail::ext_names());
  }
  out << "J_shoot: " << fmt_double(best.cost) << '\n';
  out << "bounces: " << best.bounces << '\n';
  out << "costate0: " << fmt_double(best.converged.p_x) << ' ' << fmt_double(best.converged.p_p)
      << '\n';
  out << "residual_norm: " << fmt_double(best.residual_norm) << '\n';
  return 0;
}

/// Cheapest cost in a roots.csv written by cmd_shoot; +inf when it lists no roots.
inline double read_J_shoot(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open shoot results " + path);
  std::string line;
  std::getline(f, line);
  double best = std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < 8) throw IoError("malformed roots file " + path);
    best = std::min(best, detail::csv_number(fields[7]));
  }
  return best;
}

/// Zeno plan and sampled execution; J_true against an optional prior shoot result.
inline int cmd_zeno(const RunConfig& cfg, BallState x0, std::optional<std::string> roots_csv,
                    std::ostream& out, std::ostream& err) {
  cfg.validate();
  const fs::path dir = detail::prepare_dir(cfg);
  const PhysParams& prm = cfg.params;
  const BallState start = enter_domain(x0, prm);
  const double J_shoot_value =
      roots_csv ? read_J_shoot(*roots_csv) : std::numeric_limits<double>::infinity();

  ZenoExecution ex;
  try {
    ex = synthesize_zeno_execution(start, prm, cfg.sample_dt, cfg.integrator);
  } catch (const NotLocallyOptimal& e) {
    err << "error: Zeno control scheme is not locally optimal from (" << fmt_double(x0.x) << ", "
        << fmt_double(x0.p) << "): " << e.what() << '\n';
    return 1;
  }
  const TrueValue tv = true_value(start, prm, J_shoot_value);

  nlohmann::ordered_json rec;
  rec["x0"] = {{"x", x0.x}, {"p", x0.p}};
  rec["plan"] = plan_to_json(ex.plan);
  rec["zeno_time_series"] = zeno_time_series(start, prm);
  rec["zeno_time_printed"] = zeno_time_paper(start, prm);
  rec["J_shoot"] = std::isfinite(J_shoot_value) ? nlohmann::ordered_json(J_shoot_value)
                                                : nlohmann::ordered_json("inf");
  rec["J_true"] = tv.J_true;
  rec["branch"] = to_string(tv.branch);
  detail::write_atomically(dir / "zeno_plan.json", rec.dump(2) + "\n");
  {
    std::ofstream f = detail::open_out(dir / "zeno_trajectory.csv");
    write_zeno_samples_csv(f, ex);
  }
  const ZenoSample& end = ex.samples.back();
  out << "t_zeno: " << fmt_double(ex.plan.t_zeno) << '\n';
  out << "t_on: " << fmt_double(ex.plan.t_on) << '\n';
  out << "T_switch: " << fmt_double(ex.plan.T_switch) << '\n';
  out << "J_zeno: " << fmt_double(ex.plan.J_zeno) << '\n';
  out << "costate_on: " << fmt_double(ex.plan.costate_on.p_x) << ' '
      << fmt_double(ex.plan.costate_on.p_p) << '\n';
  out << "endpoint: " << fmt_double(end.t) << ' ' << fmt_double(end.state.x) << ' '
      << fmt_double(end.state.p) << '\n';
  out << "J_shoot: " << fmt_double(J_shoot_value) << '\n';
  out << "J_true: " << fmt_double(tv.J_true) << '\n';
  out << "branch: " << to_string(tv.branch) << '\n';
  return 0;
}

enum class SweepKind { Costate, State };

inline const char* to_string(SweepKind k) { return k == SweepKind::Costate ? "costate" : "state"; }

struct SweepOptions {
  unsigned workers = 1;
  bool resume = false;
  /// Stop after this many rows in this invocation (the run stays resumable).
  std::optional<std::size_t> max_rows;
};

struct SweepProgress {
  std::size_t rows_done = 0;
  std::size_t rows_total = 0;
  [[nodiscard]] bool complete() const { return rows_done == rows_total; }
};

struct SweepPaths {
  fs::path csv, partial, checkpoint, meta;

  SweepPaths(const fs::path& dir, SweepKind kind) {
    const std::string stem = std::string(to_string(kind)) + "_sweep";
    csv = dir / (stem + ".csv");
    partial = dir / (stem + ".partial.csv");
    checkpoint = dir / (stem + ".checkpoint.json");
    meta = dir / (stem + ".meta.cfg");
  }
};

namespace detail {

inline void write_sweep_artifacts(const RunConfig& cfg, SweepKind kind, const fs::path& dir,
                                  const fs::path& csv, std::ostream& out) {
  std::ifstream in(csv);
  if (kind == SweepKind::Costate) {
    const std::vector<CostateCell> cells = read_costate_csv(in);
    const GridSpec& grid = cfg.costate_grid;
    render_heatmap(costate_bounce_map(grid, cells), bounce_palette(6),
                   (dir / "costate_bounces.svg").string());
    const Heatmap err = costate_log_error_map(grid, cells);
    ContinuousPalette pal;
    std::tie(pal.lo, pal.hi) = finite_range(err);
    render_heatmap(err, pal, (dir / "costate_log_error.svg").string());

    std::size_t zeno = 0, valid = 0, cropped = 0;
    for (const CostateCell& c : cells) {
      zeno += c.zeno();
      valid += c.status == ShootStatus::Ok;
      cropped += c.status == ShootStatus::Ok && c.bounces > 6;
    }
    out << "cells: " << cells.size() << '\n';
    out << "valid_cells: " << valid << '\n';
    out << "zeno_cells: " << zeno << '\n';
    out << "cells_above_6_bounces: " << cropped << '\n';
    out << "log_error_range: " << fmt_double(pal.lo) << ' ' << fmt_double(pal.hi) << '\n';
    return;
  }

  const std::vector<StateCell> cells = read_state_csv(in);
  const GridSpec& grid = cfg.state_grid;
  std::vector<Overlay> overlays;
  for (ZenoTimeVariant v : {ZenoTimeVariant::Series, ZenoTimeVariant::Printed}) {
    const bool series = v == ZenoTimeVariant::Series;
    std::vector<BoundaryPoint> pts;
    try {
      pts = boundary_curve(cfg.params, grid.axis1.lo, grid.axis1.hi, 201, v, grid.axis2.lo,
                           grid.axis2.hi);
    } catch (const NoRoot&) {
    }
    std::ofstream f =
        open_out(dir / (series ? "boundary_series.csv" : "boundary_printed.csv"));
    write_boundary_csv(f, pts);
    overlays.push_back({pts, series ? "#000000" : "#808080", !series});
  }
  render_heatmap(state_bounce_map(grid, cells), bounce_palette(6),
                 (dir / "state_bounces.svg").string(), overlays);
  const Heatmap value = state_value_map(grid, cells);
  ContinuousPalette pal;
  std::tie(pal.lo, pal.hi) = finite_range(value);
  render_heatmap(value, pal, (dir / "state_value.svg").string(), overlays);

  std::size_t zeno = 0, shoot_cells = 0, none = 0, local = 0, local_printed = 0;
  for (const StateCell& c : cells) {
    zeno += c.branch == Branch::Zeno;
    shoot_cells += c.branch == Branch::Shoot;
    none += !c.branch.has_value();
    local += c.locally_optimal;
    local_printed += c.locally_optimal_printed;
  }
  out << "cells: " << cells.size() << '\n';
  out << "zeno_optimal_cells: " << zeno << '\n';
  out << "shoot_optimal_cells: " << shoot_cells << '\n';
  out << "infeasible_cells: " << none << '\n';
  out << "locally_optimal_cells: " << local << '\n';
  out << "locally_optimal_cells_printed: " << local_printed << '\n';
}

}  // namespace detail

/**
 * Runs (or resumes) a sweep. Resuming refuses a checkpoint whose config hash
 * differs from the current configuration.
 */
inline SweepProgress cmd_sweep(const RunConfig& cfg, SweepKind kind, const SweepOptions& opt,
                               std::ostream& out) {
  cfg.validate();
  const fs::path dir = detail::prepare_dir(cfg);
  const SweepPaths paths(dir, kind);
  const GridSpec& grid = kind == SweepKind::Costate ? cfg.costate_grid : cfg.state_grid;
  const std::string hash = hash_hex(config_hash(cfg));

  SweepProgress prog{0, grid.rows()};
  std::uintmax_t bytes = 0;
  if (opt.resume && fs::exists(paths.checkpoint)) {
    std::ifstream f(paths.checkpoint);
    nlohmann::json ck = nlohmann::json::parse(f);
    if (ck.at("config_hash").get<std::string>() != hash || ck.at("kind").get<std::string>() != to_string(kind)) {
      throw ConfigError("refusing to resume: checkpoint config hash " +
                        ck.at("config_hash").get<std::string>() + " differs from current " + hash);
    }
    prog.rows_done = ck.at("rows_done").get<std::size_t>();
    bytes = ck.at("bytes").get<std::uintmax_t>();
    if (!fs::exists(paths.partial) || fs::file_size(paths.partial) < bytes) {
      throw IoError("checkpoint refers to missing sweep rows in " + paths.partial.string());
    }
    fs::resize_file(paths.partial, bytes);
    out << "resuming at row " << prog.rows_done << " of " << prog.rows_total << '\n';
  } else if (opt.resume && fs::exists(paths.csv) && fs::exists(paths.meta)) {
    const RunConfig prev = load_config(paths.meta.string());
    if (hash_hex(config_hash(prev)) != hash) {
      throw ConfigError("refusing to resume: finished sweep was produced by config hash " +
                        hash_hex(config_hash(prev)) + ", current is " + hash);
    }
    out << "sweep already complete\n";
    detail::write_sweep_artifacts(cfg, kind, dir, paths.csv, out);
    return {prog.rows_total, prog.rows_total};
  } else {
    std::ofstream f = detail::open_out(paths.partial);
    f << (kind == SweepKind::Costate ? costate_csv_header() : state_csv_header());
    f.flush();
    bytes = static_cast<std::uintmax_t>(f.tellp());
  }

  {
    std::ostringstream meta;
    meta << "# " << to_string(kind) << " sweep metadata\n";
    meta << "# config_hash = " << hash << '\n';
    meta << "# grid = " << grid.rows() << " x " << grid.cols() << '\n';
    meta << serialize_config(cfg);
    detail::write_atomically(paths.meta, meta.str());
  }

  std::size_t budget = opt.max_rows.value_or(grid.rows());
  while (!prog.complete() && budget > 0) {
    const std::size_t block = std::min({cfg.checkpoint_rows, prog.rows_total - prog.rows_done, budget});
    const std::size_t r0 = prog.rows_done;
    std::ostringstream rows;
    if (kind == SweepKind::Costate) {
      write_costate_rows(rows, grid, r0,
                         sweep_costate_rows(cfg.costate_x0, grid, cfg.params, cfg.integrator, r0,
                                            r0 + block, opt.workers));
    } else {
      write_state_rows(rows, grid, r0,
                       sweep_state_rows(grid, cfg.params, cfg.integrator, cfg.solver, r0,
                                        r0 + block, opt.workers));
    }
    {
      std::ofstream f(paths.partial, std::ios::binary | std::ios::app);
      if (!f) throw IoError("cannot append to " + paths.partial.string());
      f << rows.str();
      f.flush();
      if (!f) throw IoError("failed writing " + paths.partial.string());
    }
    bytes += rows.str().size();
    prog.rows_done += block;
    budget -= block;
    nlohmann::ordered_json ck;
    ck["kind"] = to_string(kind);
    ck["config_hash"] = hash;
    ck["rows_done"] = prog.rows_done;
    ck["rows_total"] = prog.rows_total;
    ck["bytes"] = bytes;
    detail::write_atomically(paths.checkpoint, ck.dump(2) + "\n");
  }

  if (!prog.complete()) {
    out << "stopped at row " << prog.rows_done << " of " << prog.rows_total
        << "; rerun with --resume to continue\n";
    return prog;
  }
  fs::rename(paths.partial, paths.csv);
  fs::remove(paths.checkpoint);
  out << "wrote " << paths.csv.string() << '\n';
  detail::write_sweep_artifacts(cfg, kind, dir, paths.csv, out);
  return prog;
}

}  // namespace hybrid_zeno
