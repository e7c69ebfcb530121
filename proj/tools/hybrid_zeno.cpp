// Command-line front end: simulate, shoot, zeno and sweep.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hybrid_zeno/commands.hpp"

namespace hz = hybrid_zeno;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<double> tf;
};

hz::RunConfig load(const Common& c) {
  hz::RunConfig cfg = c.config_path.empty() ? hz::RunConfig{} : hz::load_config(c.config_path);
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  if (c.tf) cfg.params.T_f = *c.tf;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a bouncing ball: hybrid simulation, shooting, Zeno scheme, sweeps"};
  app.require_subcommand(1);

  Common common;
  double x0 = 0, p0 = 0;
  unsigned workers = hz::default_workers();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "key = value configuration file");
    sub->add_option("--out", common.out_dir, "output directory (overrides output_dir)");
    sub->add_option("--tf", common.tf, "horizon T_f (overrides the config)");
  };
  auto add_state = [&](CLI::App* sub) {
    sub->add_option("--x0", x0, "initial height")->required();
    sub->add_option("--p0", p0, "initial momentum")->required();
  };

  CLI::App* simulate = app.add_subcommand("simulate", "uncontrolled run, or one extremal shot with --px0/--pp0");
  add_common(simulate);
  add_state(simulate);
  std::optional<double> px0, pp0;
  simulate->add_option("--px0", px0, "initial co-state p_x");
  simulate->add_option("--pp0", pp0, "initial co-state p_p");

  CLI::App* shoot = app.add_subcommand("shoot", "multistart shooting for Zeno-free extremals");
  add_common(shoot);
  add_state(shoot);
  shoot->add_option("--workers", workers, "worker threads");

  CLI::App* zeno = app.add_subcommand("zeno", "Zeno control execution and the true value");
  add_common(zeno);
  add_state(zeno);
  std::optional<std::string> shoot_csv;
  zeno->add_option("--shoot-csv", shoot_csv, "roots.csv from a prior shoot run");

  CLI::App* sweep = app.add_subcommand("sweep", "co-state or state sweep with heatmaps");
  add_common(sweep);
  std::string which;
  sweep->add_option("kind", which, "costate | state")
      ->required()
      ->check(CLI::IsMember({"costate", "state"}));
  hz::SweepOptions sopt;
  std::optional<std::size_t> max_rows;
  sweep->add_option("--workers", workers, "worker threads");
  sweep->add_flag("--resume", sopt.resume, "continue from a checkpoint");
  sweep->add_option("--max-rows", max_rows, "stop after this many rows (resumable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if ((px0.has_value()) != (pp0.has_value())) {
    std::cerr << "error: --px0 and --pp0 must be given together\n";
    return 2;
  }

  hz::RunConfig cfg;
  try {
    cfg = load(common);
    cfg.validate();
  } catch (const hz::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    const hz::BallState state{x0, p0};
    if (*simulate) {
      std::optional<hz::Costate> q;
      if (px0) q = hz::Costate{*px0, *pp0};
      return hz::cmd_simulate(cfg, state, q, std::nullopt, std::cout);
    }
    if (*shoot) return hz::cmd_shoot(cfg, state, workers, std::cout);
    if (*zeno) return hz::cmd_zeno(cfg, state, shoot_csv, std::cout, std::cerr);
    sopt.workers = workers;
    sopt.max_rows = max_rows;
    hz::cmd_sweep(cfg, which == "costate" ? hz::SweepKind::Costate : hz::SweepKind::State, sopt,
                  std::cout);
    return 0;
  } catch (const hz::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
