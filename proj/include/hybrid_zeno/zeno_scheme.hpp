/**
 * @file zeno_scheme.hpp
 * @brief The Zeno control execution: coast into the Zeno state, rest, then steer.
 *
 * With the controls off every ball collapses onto (x, p) = (0, 0) in finite
 * time. Switching on T time units before the horizon, the minimum-energy
 * push from rest to (1, 0) costs  J(T) = m^2 (g^2 T / 2 + 6 / T^3),  which is
 * minimal at T* = sqrt(6/g). At m = 1 this is the familiar
 * J(T*) = (2/3) g sqrt(6 g).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybrid_zeno/ball_model.hpp"
#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/format.hpp"
#include "hybrid_zeno/hybrid_sim.hpp"

namespace hybrid_zeno {

inline void require_unit_rest_target(const PhysParams& prm) {
  if (prm.x_f != 1.0 || prm.p_f != 0.0) {
    throw UnsupportedTerminal("Zeno steering is derived for the terminal (x_f, p_f) = (1, 0)");
  }
}

/// Cost of steering from rest at the ground to (1, 0) in time T.
inline double steering_cost(double T, const PhysParams& prm) {
  if (!(T > 0)) throw NonpositiveDuration("steering duration must be positive");
  const double m2 = prm.m * prm.m;
  return m2 * (0.5 * prm.g * prm.g * T + 6.0 / (T * T * T));
}

struct OptimalSwitch {
  double T_star;
  double J_star;
};

inline OptimalSwitch optimal_switch(const PhysParams& prm) {
  return {std::sqrt(6.0 / prm.g), prm.m * prm.m * (2.0 / 3.0) * prm.g * std::sqrt(6.0 * prm.g)};
}

/// True when the horizon leaves room to coast into Zeno and still steer for T*.
inline bool is_zeno_locally_optimal(const BallState& x0, const PhysParams& prm,
                                    ZenoTimeVariant variant = ZenoTimeVariant::Series) {
  return prm.T_f >= zeno_time(x0, prm, variant) + std::sqrt(6.0 / prm.g);
}

struct ZenoPlan {
  double t_zeno = 0;
  double t_on = 0;
  double T_switch = 0;
  double J_zeno = 0;
  Costate costate_on;
};

/// Closed-form state, co-state and accumulated cost on the controlled arc,
/// `tau` time units after switch-on.
inline ExtendedState steering_arc(double tau, const ZenoPlan& plan, const PhysParams& prm) {
  const double m = prm.m;
  const double T = plan.T_switch;
  const double s = tau / T;
  // u(s) = A - B s on s in [0, 1].
  const double A = m * prm.g + 6.0 * m / (T * T);
  const double B = 12.0 * m / (T * T);
  ExtendedState e;
  e.t = plan.t_on + tau;
  e.state = {3 * s * s - 2 * s * s * s, (6.0 * m / T) * (s - s * s)};
  e.costate = {plan.costate_on.p_x, plan.costate_on.p_p - plan.costate_on.p_x / m * tau};
  e.J_acc = 0.5 * T * (A * A * s - A * B * s * s + B * B * s * s * s / 3.0);
  return e;
}

struct ZenoSample {
  double t;
  BallState state;
  Costate costate;
  double u;
  double J_acc;
};

struct ZenoExecution {
  ZenoPlan plan;
  std::vector<ZenoSample> samples;
  /// Coast-phase impacts, for reference.
  std::vector<double> coast_impacts;
};

/**
 * Builds the three-phase Zeno execution from x0, sampled every `sample_dt`
 * (switch-on and the horizon are always sampled).
 *
 * Phase one is the simulated uncontrolled coast; phase two pins the state
 * at (0, 0) with zero cost; phase three is the closed-form steering arc.
 * The co-states are zero until switch-on.
 */
inline ZenoExecution synthesize_zeno_execution(const BallState& x0, const PhysParams& prm,
                                               double sample_dt,
                                               const IntegratorConfig& cfg = {}) {
  require_unit_rest_target(prm);
  if (!(sample_dt > 0)) throw NonpositiveDuration("sample_dt must be positive");
  if (!is_zeno_locally_optimal(x0, prm)) {
    throw NotLocallyOptimal("horizon T_f = " + fmt_double(prm.T_f) +
                            " is shorter than time-to-Zeno plus sqrt(6/g)");
  }
  const auto [T_star, J_star] = optimal_switch(prm);

  ZenoExecution out;
  ZenoPlan& plan = out.plan;
  plan.T_switch = T_star;
  plan.t_on = prm.T_f - T_star;
  plan.J_zeno = J_star;
  plan.costate_on = {-prm.m * prm.m * std::sqrt(2.0 / 3.0) * std::pow(prm.g, 1.5),
                     -2.0 * prm.m * prm.g};

  BallState start = x0;
  if (start.x == 0 && start.p < 0) start = reset(start, prm);
  const bool at_rest = start.x <= cfg.event_tol && start.p == 0;

  std::optional<HybridTrajectory<2>> coast;
  if (at_rest) {
    plan.t_zeno = 0;
  } else {
    coast = simulate_hybrid(ball_system(prm), Vec<2>{start.x, start.p}, 0.0, prm.T_f, cfg);
    plan.t_zeno = coast->t_inf ? *coast->t_inf : zeno_time_series(start, prm);
    out.coast_impacts = coast->impact_times;
  }
  plan.t_zeno = std::min(plan.t_zeno, plan.t_on);

  std::vector<double> times;
  for (double t = 0; t < prm.T_f; t = static_cast<double>(times.size()) * sample_dt) {
    times.push_back(t);
  }
  times.push_back(plan.t_on);
  times.push_back(prm.T_f);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  for (double t : times) {
    ZenoSample smp{t, {0, 0}, {0, 0}, 0, 0};
    if (t < plan.t_on) {
      if (coast && t < coast->final_time) {
        auto seg = std::upper_bound(coast->segments.begin(), coast->segments.end(), t,
                                    [](double v, const Segment<2>& s) { return v < s.t_start; });
        const Vec<2> y = std::prev(seg)->state_at(t);
        smp.state = {y[0], y[1]};
      }
    } else {
      const ExtendedState e = steering_arc(t - plan.t_on, plan, prm);
      smp.state = e.state;
      smp.costate = e.costate;
      smp.u = optimal_control(e.costate);
      smp.J_acc = e.J_acc;
    }
    out.samples.push_back(smp);
  }
  // Land exactly on the horizon.
  ZenoSample& last = out.samples.back();
  const ExtendedState end = steering_arc(T_star, plan, prm);
  last.state = end.state;
  last.costate = end.costate;
  last.u = optimal_control(end.costate);
  last.J_acc = end.J_acc;
  return out;
}

/// Re-integrates the steering arc from rest with the extremal flow; returns the state at T_f.
inline ExtendedState reintegrate_steering_arc(const ZenoPlan& plan, const PhysParams& prm,
                                              const IntegratorConfig& cfg = {}) {
  const HybridSystemDef<5> sys = extended_ball_system(prm);
  const ExtVec start{0.0, 0.0, plan.costate_on.p_x, plan.costate_on.p_p, 0.0};
  const HybridTrajectory<5> traj = simulate_hybrid(sys, start, plan.t_on, prm.T_f, cfg);
  return from_vec(traj.final_time, traj.final_state);
}

enum class Branch { Shoot, Zeno };

inline const char* to_string(Branch b) { return b == Branch::Shoot ? "shoot" : "zeno"; }

struct TrueValue {
  double J_true;
  Branch branch;
};

/// min{J_shoot, J*} where the Zeno scheme is locally optimal; ties go to the shooting branch.
inline TrueValue true_value(const BallState& x0, const PhysParams& prm, double J_shoot) {
  const bool zeno_available = is_zeno_locally_optimal(x0, prm);
  if (!zeno_available) {
    if (!std::isfinite(J_shoot)) throw Infeasible("neither a Zeno-free extremal nor the Zeno scheme");
    return {J_shoot, Branch::Shoot};
  }
  const double J_star = optimal_switch(prm).J_star;
  if (J_shoot <= J_star) return {J_shoot, Branch::Shoot};
  return {J_star, Branch::Zeno};
}

inline void write_zeno_samples_csv(std::ostream& os, const ZenoExecution& ex) {
  os << "t,x,p,p_x,p_p,u,J_acc\n";
  for (const ZenoSample& s : ex.samples) {
    os << fmt_double(s.t) << ',' << fmt_double(s.state.x) << ',' << fmt_double(s.state.p) << ','
       << fmt_double(s.costate.p_x) << ',' << fmt_double(s.costate.p_p) << ','
       << fmt_double(s.u) << ',' << fmt_double(s.J_acc) << '\n';
  }
}

inline nlohmann::ordered_json plan_to_json(const ZenoPlan& plan) {
  nlohmann::ordered_json j;
  j["t_zeno"] = plan.t_zeno;
  j["t_on"] = plan.t_on;
  j["T_switch"] = plan.T_switch;
  j["J_zeno"] = plan.J_zeno;
  j["costate_on"] = {{"p_x", plan.costate_on.p_x}, {"p_p", plan.costate_on.p_p}};
  return j;
}

}  // namespace hybrid_zeno
