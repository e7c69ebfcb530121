/**
 * @file pmp_shooting.hpp
 * @brief Indirect shooting on the bouncing-ball extremal system.
 *
 * The unknowns are the initial co-states (p_x(0), p_p(0)). A shot integrates
 * state, co-state and running cost over [0, T_f], applying the extended reset
 * at every impact, and the residual is the terminal-state mismatch. Roots
 * are found with a trust-region dogleg iteration on a forward-difference
 * Jacobian, restarted from a uniform lattice of seeds.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "hybrid_zeno/ball_model.hpp"
#include "hybrid_zeno/format.hpp"
#include "hybrid_zeno/hybrid_sim.hpp"
#include "hybrid_zeno/parallel.hpp"

namespace hybrid_zeno {

enum class ShootStatus {
  Ok,
  ZenoSingularity,  ///< extended reset hit |p| <= p_min
  ZenoDetected,     ///< impact times contracted geometrically
  EventLimit,
  IntegrationFailure,
};

inline const char* to_string(ShootStatus s) {
  switch (s) {
    case ShootStatus::Ok: return "ok";
    case ShootStatus::ZenoSingularity: return "zeno_singularity";
    case ShootStatus::ZenoDetected: return "zeno_detected";
    case ShootStatus::EventLimit: return "event_limit";
    case ShootStatus::IntegrationFailure: return "integration_failure";
  }
  return "?";
}

struct ShootOutcome {
  BallState terminal;
  /// (x(T_f) - x_f, p(T_f) - p_f); NaN when the shot is invalid.
  std::array<double, 2> residual{};
  std::size_t bounces = 0;
  double cost = 0;
  bool zeno_hit = false;
  ShootStatus status = ShootStatus::Ok;
  /// Present only when the shot was run with Recording::Full.
  std::optional<HybridTrajectory<5>> trajectory;

  [[nodiscard]] bool valid() const { return status == ShootStatus::Ok; }
};

struct SolverConfig {
  double seed_lo = -2.0;
  double seed_hi = 2.0;
  std::size_t seeds_per_axis = 25;
  double root_tol = 1e-9;
  std::size_t max_iters = 200;
  double fd_step = 1e-7;
  double dedupe_radius = 1e-5;

  void validate() const {
    if (!(seed_lo < seed_hi)) throw ConfigError("seed box requires seed_lo < seed_hi");
    if (seeds_per_axis < 1) throw ConfigError("seeds_per_axis must be at least 1");
    if (!(root_tol > 0) || !(fd_step > 0) || !(dedupe_radius > 0) || max_iters < 1) {
      throw ConfigError("solver tolerances must be strictly positive");
    }
  }
};

struct ShootResult {
  Costate seed;
  Costate converged;
  double residual_norm = 0;
  std::size_t bounces = 0;
  double cost = 0;
  std::size_t iterations = 0;
};

/// Shoots from (x0, costate0) at t = 0 to T_f.
inline ShootOutcome shoot(const BallState& x0, const Costate& costate0, const PhysParams& prm,
                          const IntegratorConfig& cfg,
                          Recording recording = Recording::EndpointsOnly) {
  const HybridSystemDef<5> sys = extended_ball_system(prm);
  ShootOutcome out;
  const ExtVec start{x0.x, x0.p, costate0.p_x, costate0.p_p, 0.0};
  try {
    HybridTrajectory<5> traj = simulate_hybrid(sys, start, 0.0, prm.T_f, cfg, recording);
    out.bounces = traj.impacts();
    out.terminal = {traj.final_state[0], traj.final_state[1]};
    out.cost = traj.final_state[4];
    switch (traj.termination) {
      case Termination::ReachedHorizon: out.status = ShootStatus::Ok; break;
      case Termination::ZenoDetected: out.status = ShootStatus::ZenoDetected; break;
      case Termination::EventLimit: out.status = ShootStatus::EventLimit; break;
    }
    if (recording == Recording::Full) out.trajectory = std::move(traj);
  } catch (const ZenoSingularity&) {
    out.status = ShootStatus::ZenoSingularity;
  } catch (const StepSizeUnderflow&) {
    out.status = ShootStatus::IntegrationFailure;
  } catch (const NonFiniteState&) {
    out.status = ShootStatus::IntegrationFailure;
  } catch (const GuardViolation&) {
    out.status = ShootStatus::IntegrationFailure;
  }
  out.zeno_hit =
      out.status == ShootStatus::ZenoSingularity || out.status == ShootStatus::ZenoDetected;
  if (out.valid()) {
    out.residual = {out.terminal.x - prm.x_f, out.terminal.p - prm.p_f};
  } else {
    out.residual = {std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
    out.cost = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

inline std::array<double, 2> residual(const BallState& x0, const Costate& costate0,
                                      const PhysParams& prm, const IntegratorConfig& cfg) {
  return shoot(x0, costate0, prm, cfg).residual;
}

inline bool residual_valid(const std::array<double, 2>& r) {
  return std::isfinite(r[0]) && std::isfinite(r[1]);
}

/// ln of the squared terminal error; NaN for invalid residuals.
inline double log_error(const std::array<double, 2>& r) {
  return std::log(r[0] * r[0] + r[1] * r[1]);
}

/// Per-seed record of a local solve, successful or not.
struct SeedRecord {
  Costate seed;
  Costate last;
  bool converged = false;
  /// Residual norm at the last valid iterate; NaN if the seed itself was invalid.
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  std::size_t bounces = 0;
  double cost = std::numeric_limits<double>::quiet_NaN();
  bool zeno_hit = false;
  std::size_t iterations = 0;

  [[nodiscard]] ShootResult result() const {
    return {seed, last, residual_norm, bounces, cost, iterations};
  }
};

namespace detail {

// Dogleg step for the model |F + J s|^2 inside |s| <= radius.
inline Eigen::Vector2d dogleg_step(const Eigen::Matrix2d& J, const Eigen::Vector2d& F,
                                   const Eigen::Vector2d& newton, double radius) {
  if (newton.norm() <= radius) return newton;
  const Eigen::Vector2d grad = J.transpose() * F;
  const double gnorm = grad.norm();
  if (gnorm == 0) return newton * (radius / newton.norm());
  const Eigen::Vector2d Jg = J * grad;
  const Eigen::Vector2d cauchy = -(grad.squaredNorm() / Jg.squaredNorm()) * grad;
  if (cauchy.norm() >= radius) return -(radius / gnorm) * grad;
  // Point where the segment cauchy -> newton leaves the trust region.
  const Eigen::Vector2d d = newton - cauchy;
  const double a = d.squaredNorm();
  const double b = 2 * cauchy.dot(d);
  const double c = cauchy.squaredNorm() - radius * radius;
  const double tau = (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
  return cauchy + tau * d;
}

}  // namespace detail

/**
 * Trust-region dogleg solve of residual(costate) = 0 from one seed.
 *
 * Aborts when the current iterate or a Jacobian probe is invalid (Zeno or
 * integration failure), when the Jacobian is singular, when the trust
 * region collapses, or after scfg.max_iters residual evaluations. A trial
 * step that lands on an invalid shot is rejected and the region shrunk.
 */
inline SeedRecord local_root_solve_record(const BallState& x0, const Costate& seed,
                                          const PhysParams& prm, const IntegratorConfig& cfg,
                                          const SolverConfig& scfg) {
  SeedRecord rec;
  rec.seed = seed;
  rec.last = seed;

  auto eval = [&](const Eigen::Vector2d& z) {
    return shoot(x0, {z[0], z[1]}, prm, cfg);
  };
  auto as_vec = [](const ShootOutcome& o) { return Eigen::Vector2d(o.residual[0], o.residual[1]); };

  Eigen::Vector2d z(seed.p_x, seed.p_p);
  ShootOutcome cur = eval(z);
  std::size_t evals = 1;
  if (!cur.valid()) {
    rec.zeno_hit = cur.zeno_hit;
    return rec;
  }
  Eigen::Vector2d F = as_vec(cur);
  double radius = std::max(1.0, z.norm());

  auto record_current = [&] {
    rec.last = {z[0], z[1]};
    rec.residual_norm = F.norm();
    rec.bounces = cur.bounces;
    rec.cost = cur.cost;
    rec.iterations = evals;
  };
  record_current();

  while (F.norm() > scfg.root_tol) {
    if (evals >= scfg.max_iters) return rec;

    Eigen::Matrix2d J;
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d zp = z;
      const double step = scfg.fd_step * std::max(1.0, std::abs(z[i]));
      zp[i] += step;
      const ShootOutcome probe = eval(zp);
      ++evals;
      if (!probe.valid()) {
        rec.zeno_hit = probe.zeno_hit;
        return rec;
      }
      J.col(i) = (as_vec(probe) - F) / (zp[i] - z[i]);
    }
    const double det = J.determinant();
    if (!std::isfinite(det) || std::abs(det) <= 1e-14 * J.squaredNorm()) return rec;
    const Eigen::Vector2d newton = -J.inverse() * F;

    bool accepted = false;
    while (!accepted) {
      if (evals >= scfg.max_iters) return rec;
      const Eigen::Vector2d s = detail::dogleg_step(J, F, newton, radius);
      const double predicted = F.squaredNorm() - (F + J * s).squaredNorm();
      const ShootOutcome trial = eval(z + s);
      ++evals;
      double rho = -std::numeric_limits<double>::infinity();
      if (trial.valid() && predicted > 0) {
        rho = (F.squaredNorm() - as_vec(trial).squaredNorm()) / predicted;
      }
      if (rho < 0.25) {
        radius = 0.25 * s.norm();
      } else if (rho > 0.75 && s.norm() >= 0.99 * radius) {
        radius *= 2;
      }
      if (rho > 1e-4) {
        z += s;
        cur = trial;
        F = as_vec(cur);
        accepted = true;
        record_current();
      } else if (radius <= 1e-13 * std::max(1.0, z.norm())) {
        return rec;
      }
    }
  }
  rec.converged = true;
  return rec;
}

inline std::optional<ShootResult> local_root_solve(const BallState& x0, const Costate& seed,
                                                   const PhysParams& prm,
                                                   const IntegratorConfig& cfg,
                                                   const SolverConfig& scfg) {
  SeedRecord rec = local_root_solve_record(x0, seed, prm, cfg, scfg);
  if (!rec.converged) return std::nullopt;
  return rec.result();
}

/// Uniform lattice over the seed box, p_x major, p_p minor.
inline std::vector<Costate> seed_lattice(const SolverConfig& scfg) {
  const std::size_t n = scfg.seeds_per_axis;
  auto axis = [&](std::size_t i) {
    if (n == 1) return 0.5 * (scfg.seed_lo + scfg.seed_hi);
    return scfg.seed_lo + (scfg.seed_hi - scfg.seed_lo) * static_cast<double>(i) /
                              static_cast<double>(n - 1);
  };
  std::vector<Costate> seeds;
  seeds.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) seeds.push_back({axis(i), axis(j)});
  return seeds;
}

struct MultistartReport {
  std::vector<SeedRecord> seeds;    ///< lattice order
  std::vector<ShootResult> roots;   ///< deduplicated, ascending cost

  [[nodiscard]] double J_shoot() const {
    return roots.empty() ? std::numeric_limits<double>::infinity() : roots.front().cost;
  }
};

/// Keeps the first of any converged results that share a bounce count and lie within `radius`.
inline std::vector<ShootResult> dedupe_and_sort(const std::vector<ShootResult>& found,
                                                double radius) {
  std::vector<ShootResult> kept;
  for (const ShootResult& r : found) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const ShootResult& k) {
      return k.bounces == r.bounces &&
             std::hypot(k.converged.p_x - r.converged.p_x, k.converged.p_p - r.converged.p_p) <=
                 radius;
    });
    if (!dup) kept.push_back(r);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const ShootResult& a, const ShootResult& b) { return a.cost < b.cost; });
  return kept;
}

inline MultistartReport multistart_report(const BallState& x0, const PhysParams& prm,
                                          const IntegratorConfig& cfg, const SolverConfig& scfg,
                                          unsigned workers = 1) {
  scfg.validate();
  const std::vector<Costate> seeds = seed_lattice(scfg);
  MultistartReport rep;
  rep.seeds.resize(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    rep.seeds[i] = local_root_solve_record(x0, seeds[i], prm, cfg, scfg);
  });
  std::vector<ShootResult> found;
  for (const SeedRecord& s : rep.seeds) {
    if (s.converged) found.push_back(s.result());
  }
  rep.roots = dedupe_and_sort(found, scfg.dedupe_radius);
  return rep;
}

inline std::vector<ShootResult> multistart_solve(const BallState& x0, const PhysParams& prm,
                                                 const IntegratorConfig& cfg,
                                                 const SolverConfig& scfg, unsigned workers = 1) {
  return multistart_report(x0, prm, cfg, scfg, workers).roots;
}

inline double J_shoot(const std::vector<ShootResult>& roots) {
  return roots.empty() ? std::numeric_limits<double>::infinity() : roots.front().cost;
}

/// Per-seed CSV: seed_px, seed_pp, converged, residual_norm, bounces, cost, zeno_hit.
inline void write_seed_csv(std::ostream& os, const std::vector<SeedRecord>& seeds) {
  os << "seed_px,seed_pp,converged,residual_norm,bounces,cost,zeno_hit\n";
  for (const SeedRecord& s : seeds) {
    os << fmt_double(s.seed.p_x) << ',' << fmt_double(s.seed.p_p) << ',' << int(s.converged)
       << ',' << fmt_double(s.residual_norm) << ',' << s.bounces << ',' << fmt_double(s.cost)
       << ',' << int(s.zeno_hit) << '\n';
  }
}

/// Converged-root table: one row per deduplicated root, cost order.
inline void write_roots_csv(std::ostream& os, const std::vector<ShootResult>& roots) {
  os << "rank,seed_px,seed_pp,px0,pp0,residual_norm,bounces,cost,iterations\n";
  for (std::size_t k = 0; k < roots.size(); ++k) {
    const ShootResult& r = roots[k];
    os << k << ',' << fmt_double(r.seed.p_x) << ',' << fmt_double(r.seed.p_p) << ','
       << fmt_double(r.converged.p_x) << ',' << fmt_double(r.converged.p_p) << ','
       << fmt_double(r.residual_norm) << ',' << r.bounces << ',' << fmt_double(r.cost) << ','
       << r.iterations << '\n';
  }
}

}  // namespace hybrid_zeno
