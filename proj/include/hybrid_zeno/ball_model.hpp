/**
 * @file ball_model.hpp
 * @brief The dissipative bouncing ball as a controlled hybrid system.
 *
 * Height x, momentum p, flow  x' = p/m,  p' = -m g + u, impacts on
 * {x = 0, p < 0} with reset (x, p) -> (x, -c^2 p) and running cost u^2/2.
 * Minimising the pre-Hamiltonian over u gives u* = -p_p and the optimal
 * Hamiltonian  H = -p_p^2/2 + p_x p/m - m g p_p.
 */
#pragma once

#include <array>
#include <cmath>

#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/hybrid_sim.hpp"

namespace hybrid_zeno {

struct PhysParams {
  double m = 1.0;
  double g = 1.0;
  /// Restitution parameter; momentum is scaled by c^2 at each impact.
  double c = 0.75;
  double T_f = 10.0;
  double x_f = 1.0;
  double p_f = 0.0;

  void validate() const {
    if (!(m > 0)) throw ConfigError("m must be positive", 0, "m");
    if (!(g > 0)) throw ConfigError("g must be positive", 0, "g");
    if (!(c > 0 && c < 1)) throw ConfigError("c must lie in (0, 1)", 0, "c");
    if (!(T_f > 0)) throw ConfigError("T_f must be positive", 0, "T_f");
  }
};

struct BallState {
  double x = 0;
  double p = 0;
};

struct Costate {
  double p_x = 0;
  double p_p = 0;
};

struct ExtendedState {
  double t = 0;
  BallState state;
  Costate costate;
  double J_acc = 0;
};

/// Integration layout of the extended system: (x, p, p_x, p_p, J_acc).
using ExtVec = Vec<5>;

inline ExtVec to_vec(const ExtendedState& e) {
  return {e.state.x, e.state.p, e.costate.p_x, e.costate.p_p, e.J_acc};
}

inline ExtendedState from_vec(double t, const ExtVec& v) {
  return {t, {v[0], v[1]}, {v[2], v[3]}, v[4]};
}

/// Optimal control along an extremal.
inline double optimal_control(const Costate& q) { return -q.p_p; }

/// Time derivative (x', p', p_x', p_p', J') of the extended state.
inline ExtVec controlled_flow(const ExtendedState& e, const PhysParams& prm) {
  const double pp = e.costate.p_p;
  return {e.state.p / prm.m, -prm.m * prm.g - pp, 0.0, -e.costate.p_x / prm.m, 0.5 * pp * pp};
}

inline double optimal_hamiltonian(const ExtendedState& e, const PhysParams& prm) {
  const double pp = e.costate.p_p;
  return -0.5 * pp * pp + e.costate.p_x * e.state.p / prm.m - prm.m * prm.g * pp;
}

/// Impact map. `guard_tol` bounds |x| for a state to count as on the guard.
inline BallState reset(const BallState& s, const PhysParams& prm, double guard_tol = 1e-9) {
  if (!(std::abs(s.x) <= guard_tol) || !(s.p < 0)) {
    throw GuardViolation("reset requires x = 0 and p < 0");
  }
  return {s.x, -prm.c * prm.c * s.p};
}

/**
 * Impact map on the cotangent bundle; preserves the optimal Hamiltonian.
 *
 * Throws ZenoSingularity when |p| <= p_min: the co-state jump divides by the
 * impact momentum and has no limit at the rest state.
 */
inline ExtendedState extended_reset(const ExtendedState& e, const PhysParams& prm,
                                    double p_min = 1e-10, double guard_tol = 1e-9) {
  const double p = e.state.p;
  if (std::abs(p) <= p_min) throw ZenoSingularity(p);
  ExtendedState out = e;
  out.state = reset(e.state, prm, guard_tol);

  const double c2 = prm.c * prm.c;
  const double c4 = c2 * c2;
  const double m = prm.m;
  const double px = e.costate.p_x;
  const double pp = e.costate.p_p;
  out.costate.p_p = -pp / c2;
  out.costate.p_x = -px / c2 + (m / (2 * c2)) * (pp * pp / p) * (1 - 1 / c4) +
                    (m * m * prm.g / c2) * (pp / p) * (1 + 1 / c2);
  return out;
}

/// First impact of the uncontrolled ball: time until x = 0 and the momentum there.
struct Flight {
  double t_impact;
  double p_impact;
};

inline Flight ballistic_flight(const BallState& s, const PhysParams& prm) {
  const double v = s.p / prm.m;
  const double speed = std::sqrt(v * v + 2 * prm.g * std::max(s.x, 0.0));
  return {(v + speed) / prm.g, -prm.m * speed};
}

/// Accumulation time of the uncontrolled impacts (exact geometric series).
inline double zeno_time_series(const BallState& s, const PhysParams& prm) {
  const auto [t1, p1] = ballistic_flight(s, prm);
  const double c2 = prm.c * prm.c;
  return t1 + (2 * std::abs(p1) / (prm.m * prm.g)) * c2 / (1 - c2);
}

/// The closed form with constant 3 as printed alongside the study; kept for comparison.
inline double zeno_time_paper(const BallState& s, const PhysParams& prm) {
  const double v = s.p / prm.m;
  const double c2 = prm.c * prm.c;
  return s.p / (prm.m * prm.g) +
         3.0 / (prm.g * (1 - c2)) * std::sqrt(v * v + 2 * prm.g * std::max(s.x, 0.0));
}

enum class ZenoTimeVariant { Series, Printed };

inline double zeno_time(const BallState& s, const PhysParams& prm,
                        ZenoTimeVariant variant = ZenoTimeVariant::Series) {
  return variant == ZenoTimeVariant::Series ? zeno_time_series(s, prm) : zeno_time_paper(s, prm);
}

/// Uncontrolled ball as a 2-d hybrid system; the flow is the extended flow at zero co-states.
inline HybridSystemDef<2> ball_system(const PhysParams& prm) {
  HybridSystemDef<2> sys;
  sys.flow = [prm](double, const Vec<2>& y) {
    const ExtVec d = controlled_flow({0, {y[0], y[1]}, {}, 0}, prm);
    return Vec<2>{d[0], d[1]};
  };
  sys.guard_fn = [](const Vec<2>& y) { return y[0]; };
  sys.guard_dir = [m = prm.m](const Vec<2>& y) { return y[1] / m; };
  sys.reset = [prm](const Vec<2>& y) {
    const BallState s = reset({y[0], y[1]}, prm);
    return Vec<2>{s.x, s.p};
  };
  return sys;
}

/// State and co-state system used for shooting; the reset is the extended reset.
inline HybridSystemDef<5> extended_ball_system(const PhysParams& prm, double p_min = 1e-10) {
  HybridSystemDef<5> sys;
  sys.flow = [prm](double t, const ExtVec& y) { return controlled_flow(from_vec(t, y), prm); };
  sys.guard_fn = [](const ExtVec& y) { return y[0]; };
  sys.guard_dir = [m = prm.m](const ExtVec& y) { return y[1] / m; };
  sys.reset = [prm, p_min](const ExtVec& y) {
    return to_vec(extended_reset(from_vec(0, y), prm, p_min));
  };
  return sys;
}

}  // namespace hybrid_zeno
