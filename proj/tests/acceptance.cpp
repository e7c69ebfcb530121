// Acceptance suite: one PASS/FAIL line per criterion on standard output.
//
// Every CSV-producing stage runs twice, into <out>/run_a with one worker and
// <out>/run_b with --workers threads, and the two trees are compared byte for
// byte. A detailed report (including the Zeno-time table) is written to
// <out>/acceptance_report.txt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <CLI11.hpp>

#include "hybrid_zeno/commands.hpp"

namespace hz = hybrid_zeno;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  int id;
  std::string title;
  bool pass = false;
  std::string detail{};
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict closed_form_scheme() {
  const hz::PhysParams prm;
  const auto [T_star, J_star] = hz::optimal_switch(prm);
  const double T_exact = std::sqrt(6.0), J_exact = 2 * std::sqrt(6.0) / 3;
  const auto f = [&](double T) { return hz::steering_cost(T, prm); };
  const auto [T_num, J_num] = boost::math::tools::brent_find_minima(f, 0.1, 20.0, 52);
  const double eT = std::abs(T_star - T_exact), eJ = std::abs(J_star - J_exact);
  const double eN = std::abs(T_num - T_exact);
  Verdict v{1, "closed-form Zeno scheme"};
  v.pass = eT <= 1e-12 && eJ <= 1e-12 && eN <= 1e-6;
  v.detail = "T*=" + hz::fmt_double(T_star) + " (err " + sci(eT) + "), J*=" + hz::fmt_double(J_star) +
             " (err " + sci(eJ) + "), numeric argmin err " + sci(eN);
  return v;
}

Verdict zeno_arc(const fs::path& dir) {
  const hz::PhysParams prm;
  const hz::ZenoExecution ex = hz::synthesize_zeno_execution({0.1, 0}, prm, 0.01);
  {
    std::ofstream f(dir / "zeno_trajectory.csv", std::ios::binary);
    hz::write_zeno_samples_csv(f, ex);
  }
  const hz::ZenoSample& end = ex.samples.back();
  const double e_closed = std::max(std::abs(end.state.x - 1), std::abs(end.state.p));
  const hz::ExtendedState re = hz::reintegrate_steering_arc(ex.plan, prm);
  const double e_num = std::max(std::abs(re.state.x - 1), std::abs(re.state.p));
  double h_max = 0;
  for (const hz::ZenoSample& s : ex.samples) {
    if (s.t < ex.plan.t_on) continue;
    h_max = std::max(h_max, std::abs(hz::optimal_hamiltonian({s.t, s.state, s.costate, s.J_acc}, prm)));
  }
  const bool costates_ok = ex.plan.costate_on.p_x == -std::sqrt(2.0 / 3.0) && ex.plan.costate_on.p_p == -2;
  Verdict v{2, "Zeno arc exactness"};
  v.pass = e_closed <= 1e-12 && e_num <= 1e-7 && h_max <= 1e-9 && costates_ok;
  v.detail = "closed-form endpoint err " + sci(e_closed) + ", re-integrated err " + sci(e_num) +
             ", max |H| on arc " + sci(h_max);
  return v;
}

Verdict hamiltonian_jumps(const fs::path& dir) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pd(-3, -0.01), qd(-5, 5);
  std::uniform_int_distribution<int> cd(0, 2);
  const double cs[] = {0.5, 0.75, 0.9};
  std::ofstream f(dir / "hamiltonian_jumps.csv", std::ios::binary);
  f << "c,p,p_x,p_p,H_before,H_after,rel_err\n";
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    hz::PhysParams prm;
    prm.c = cs[cd(rng)];
    const hz::ExtendedState e{0, {0, pd(rng)}, {qd(rng), qd(rng)}, 0};
    const double before = hz::optimal_hamiltonian(e, prm);
    const double after = hz::optimal_hamiltonian(hz::extended_reset(e, prm), prm);
    const double rel = std::abs(after - before) / std::max(1.0, std::abs(before));
    worst = std::max(worst, rel);
    f << hz::fmt_double(prm.c) << ',' << hz::fmt_double(e.state.p) << ','
      << hz::fmt_double(e.costate.p_x) << ',' << hz::fmt_double(e.costate.p_p) << ','
      << hz::fmt_double(before) << ',' << hz::fmt_double(after) << ',' << hz::fmt_double(rel) << '\n';
  }
  Verdict v{3, "Hamiltonian jump invariance"};
  v.pass = worst <= 1e-12;
  v.detail = "1000 guard states, worst |dH|/max(1,|H|) = " + sci(worst);
  return v;
}

Verdict zeno_time_oracle(const fs::path& dir, std::ostream& report) {
  const hz::PhysParams prm;
  const auto sys = hz::ball_system(prm);
  std::ofstream f(dir / "zeno_time_table.csv", std::ios::binary);
  f << "x0,p0,t_inf_simulated,zeno_time_series,zeno_time_printed,series_err,printed_minus_series\n";
  report << "Zeno-time table (x0, p0, simulated, series, printed):\n";
  double worst = 0, min_gap = INFINITY, max_gap = 0;
  bool all_zeno = true;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double x0 = 0.1 + 1.9 * i / 9.0, p0 = -1 + 2.0 * j / 9.0;
      const auto traj = hz::simulate_hybrid(sys, hz::Vec<2>{x0, p0}, 0.0, 100.0, hz::IntegratorConfig{});
      const double sim = traj.t_inf.value_or(NAN);
      all_zeno = all_zeno && traj.termination == hz::Termination::ZenoDetected;
      const double series = hz::zeno_time_series({x0, p0}, prm);
      const double printed = hz::zeno_time_paper({x0, p0}, prm);
      const double err = std::abs(sim - series);
      worst = std::max(worst, std::isfinite(err) ? err : INFINITY);
      min_gap = std::min(min_gap, printed - series);
      max_gap = std::max(max_gap, printed - series);
      f << hz::fmt_double(x0) << ',' << hz::fmt_double(p0) << ',' << hz::fmt_double(sim) << ','
        << hz::fmt_double(series) << ',' << hz::fmt_double(printed) << ',' << hz::fmt_double(err)
        << ',' << hz::fmt_double(printed - series) << '\n';
      report << "  " << hz::fmt_double(x0) << ' ' << hz::fmt_double(p0) << ' ' << hz::fmt_double(sim)
             << ' ' << hz::fmt_double(series) << ' ' << hz::fmt_double(printed) << '\n';
    }
  }
  Verdict v{4, "Zeno-time oracle"};
  v.pass = all_zeno && worst <= 1e-4;
  v.detail = "10x10 grid, max |simulated - series| = " + sci(worst) +
             "; printed constant 3 disagrees with simulation: printed - series in [" +
             hz::fmt_double(min_gap) + ", " + hz::fmt_double(max_gap) + "]";
  return v;
}

Verdict shooting(const fs::path& dir, unsigned workers) {
  const hz::RunConfig cfg = [&] {
    hz::RunConfig c;
    c.output_dir = dir.string();
    return c;
  }();
  std::ostringstream sink;
  hz::cmd_shoot(cfg, {0.1, 0}, workers, sink);
  std::ifstream roots_in(dir / "roots.csv");
  std::string line;
  std::getline(roots_in, line);
  std::size_t n_roots = 0, n_good = 0;
  double worst_H = 0, best_cost = INFINITY, best_res = INFINITY;
  while (std::getline(roots_in, line)) {
    const auto fld = hz::detail::split_csv_line(line);
    const hz::Costate q{hz::detail::csv_number(fld[3]), hz::detail::csv_number(fld[4])};
    const double res = hz::detail::csv_number(fld[5]);
    ++n_roots;
    if (res <= 1e-6) ++n_good;
    best_cost = std::min(best_cost, hz::detail::csv_number(fld[7]));
    best_res = std::min(best_res, res);
    const hz::ShootOutcome o = hz::shoot({0.1, 0}, q, cfg.params, cfg.integrator, hz::Recording::Full);
    if (!o.valid()) {
      worst_H = INFINITY;
      continue;
    }
    const double H0 = hz::optimal_hamiltonian(hz::from_vec(0, o.trajectory->segments.front().state_start), cfg.params);
    auto check = [&](double t, const hz::ExtVec& y) {
      worst_H = std::max(worst_H, std::abs(hz::optimal_hamiltonian(hz::from_vec(t, y), cfg.params) - H0));
    };
    for (const auto& seg : o.trajectory->segments) {
      check(seg.t_start, seg.state_start);
      for (const auto& st : seg.steps) {
        for (double s : {0.0, 0.25, 0.5, 0.75}) check(st.t0 + s * st.h, st.eval(st.t0 + s * st.h));
      }
      check(seg.t_end, seg.state_end);
    }
  }
  Verdict v{5, "shooting reproduction"};
  v.pass = n_good >= 1 && worst_H <= 1e-6;
  v.detail = std::to_string(n_roots) + " distinct roots (" + std::to_string(n_good) +
             " with residual <= 1e-6, best " + sci(best_res) + "), J_shoot = " +
             hz::fmt_double(best_cost) + ", max |H - H(0)| = " + sci(worst_H);
  return v;
}

hz::RunConfig sweep_config(const fs::path& dir) {
  hz::RunConfig c;
  c.output_dir = dir.string();
  c.state_grid = {{"x0", 0, 2, 51}, {"p0", -2, 2, 51}};
  return c;
}

Verdict zeno_region(const fs::path& dir, unsigned workers) {
  const hz::RunConfig cfg = sweep_config(dir);
  std::ostringstream sink;
  hz::cmd_sweep(cfg, hz::SweepKind::State, {workers, false, std::nullopt}, sink);
  std::ifstream in(dir / "state_sweep.csv");
  const std::vector<hz::StateCell> cells = hz::read_state_csv(in);
  const double J_star = hz::optimal_switch(cfg.params).J_star;
  std::size_t zeno = 0, local = 0, outside = 0;
  double spread = 0;
  for (const hz::StateCell& c : cells) {
    local += c.locally_optimal;
    if (c.branch != hz::Branch::Zeno) continue;
    ++zeno;
    spread = std::max(spread, std::abs(c.J_true - J_star));
    outside += !c.locally_optimal;
  }
  Verdict v{6, "Zeno-optimal region nonemptiness"};
  v.pass = cells.size() == 51u * 51u && zeno >= 1 && spread <= 1e-12 && outside == 0;
  v.detail = "51x51 state sweep: " + std::to_string(zeno) + " Zeno-optimal cells, " +
             std::to_string(local) + " locally optimal, " + std::to_string(outside) +
             " Zeno cells outside the locally optimal set, max |J_true - J*| = " + sci(spread);
  return v;
}

Verdict figure_regeneration(const fs::path& dir, unsigned workers) {
  const hz::RunConfig cfg = sweep_config(dir);
  std::ostringstream sink;
  hz::cmd_sweep(cfg, hz::SweepKind::Costate, {workers, false, std::nullopt}, sink);
  std::ifstream in(dir / "costate_sweep.csv");
  const std::vector<hz::CostateCell> cells = hz::read_costate_csv(in);
  double lo = INFINITY, hi = -INFINITY;
  std::size_t above6 = 0, zeno = 0;
  for (const hz::CostateCell& c : cells) {
    zeno += c.zeno();
    if (c.status != hz::ShootStatus::Ok) continue;
    above6 += c.bounces > 6;
    lo = std::min(lo, c.log_error);
    hi = std::max(hi, c.log_error);
  }
  const double decades = (hi - lo) / std::log(10.0);
  const std::string svg = slurp(dir / "costate_bounces.svg");
  const bool cropped = svg.find("&gt; 6 (cropped)") != std::string::npos ||
                       svg.find("> 6 (cropped)") != std::string::npos;
  const bool has_error_map = fs::exists(dir / "costate_log_error.svg");
  Verdict v{7, "figure regeneration"};
  v.pass = cells.size() == 201u * 201u && cropped && has_error_map && decades >= 6;
  v.detail = "201x201 co-state sweep at x0=(0.1,0): bounce map cropped at 6 (" +
             std::to_string(above6) + " cells above 6, " + std::to_string(zeno) +
             " Zeno cells), log-error range [" + hz::fmt_double(lo) + ", " + hz::fmt_double(hi) +
             "] = " + sci(decades) + " orders of magnitude";
  return v;
}

Verdict determinism(const fs::path& a, const fs::path& b, unsigned wa, unsigned wb) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() == ".csv") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<std::string> differing;
  for (const std::string& n : names) {
    if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) differing.push_back(n);
  }
  Verdict v{8, "determinism"};
  v.pass = !names.empty() && differing.empty();
  v.detail = std::to_string(names.size()) + " CSV files compared between " + std::to_string(wa) +
             " and " + std::to_string(wb) + " workers";
  for (const std::string& n : differing) v.detail += "; differs: " + n;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  unsigned workers = std::max(2u, hz::default_workers());
  std::string out = "acceptance_out";
  app.add_option("--workers", workers, "worker count for the second run (first run uses 1)");
  app.add_option("--out", out, "output directory");
  CLI11_PARSE(app, argc, argv);
  if (workers < 2) workers = 2;

  const fs::path root(out), run_a = root / "run_a", run_b = root / "run_b";
  fs::remove_all(root);
  fs::create_directories(run_a);
  fs::create_directories(run_b);
  std::ofstream report(root / "acceptance_report.txt");

  std::vector<Verdict> verdicts;
  auto record = [&](Verdict v, std::chrono::steady_clock::time_point t0) {
    const std::string line = std::string(v.pass ? "PASS" : "FAIL") + "  criterion " +
                             std::to_string(v.id) + " (" + v.title + "): " + v.detail + "  [" +
                             sci(seconds_since(t0)) + " s]";
    std::cout << line << std::endl;
    report << line << '\n';
    verdicts.push_back(std::move(v));
  };
  auto guarded = [&](int id, const char* title, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      record(fn(), t0);
    } catch (const std::exception& e) {
      record(Verdict{id, title, false, std::string("exception: ") + e.what()}, t0);
    }
  };

  guarded(1, "closed-form Zeno scheme", [] { return closed_form_scheme(); });
  guarded(2, "Zeno arc exactness", [&] {
    zeno_arc(run_b);
    return zeno_arc(run_a);
  });
  guarded(3, "Hamiltonian jump invariance", [&] {
    hamiltonian_jumps(run_b);
    return hamiltonian_jumps(run_a);
  });
  guarded(4, "Zeno-time oracle", [&] {
    std::ostringstream discard;
    zeno_time_oracle(run_b, discard);
    return zeno_time_oracle(run_a, report);
  });
  guarded(5, "shooting reproduction", [&] {
    shooting(run_b, workers);
    return shooting(run_a, 1);
  });
  guarded(6, "Zeno-optimal region nonemptiness", [&] {
    zeno_region(run_b, workers);
    return zeno_region(run_a, 1);
  });
  guarded(7, "figure regeneration", [&] {
    figure_regeneration(run_b, workers);
    return figure_regeneration(run_a, 1);
  });
  guarded(8, "determinism", [&] { return determinism(run_a, run_b, 1, workers); });

  const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  std::cout << passed << "/" << verdicts.size() << " criteria passed" << std::endl;
  report << passed << "/" << verdicts.size() << " criteria passed\n";
  return passed == static_cast<long>(verdicts.size()) ? 0 : 1;
}
