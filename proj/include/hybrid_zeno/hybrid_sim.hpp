/**
 * @file hybrid_sim.hpp
 * @brief Single-guard hybrid system integration over flat real-vector states.
 *
 * A hybrid system here is a flow, a scalar guard function h with impacts at
 * h = 0, a direction test (impacts only count while it is negative) and a
 * reset map. Continuous arcs are integrated with the Dormand-Prince 5(4)
 * pair; its 4th-order continuous extension is kept per step for event
 * location and export. Runs stop at the horizon, at an event budget, or when
 * the impact times contract geometrically below a threshold (Zeno).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "hybrid_zeno/errors.hpp"
#include "hybrid_zeno/format.hpp"

namespace hybrid_zeno {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Fixed-guard, fixed-reset hybrid system of dimension N.
template <std::size_t N>
struct HybridSystemDef {
  static_assert(N > 0, "state dimension must be positive");
  static constexpr std::size_t dimension = N;

  std::function<Vec<N>(double, const Vec<N>&)> flow;
  /// Event function; impacts happen where it reaches zero from above.
  std::function<double(const Vec<N>&)> guard_fn;
  /// Rate of the guard function along the flow; impacts require a negative value.
  std::function<double(const Vec<N>&)> guard_dir;
  std::function<Vec<N>(const Vec<N>&)> reset;
};

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  /// Largest accepted step; unset means 1/100 of the integration horizon.
  std::optional<double> max_step;
  double event_tol = 1e-12;
  /// Impact gap below which a contracting impact sequence is declared Zeno.
  double min_impact_gap = 1e-7;
  std::size_t max_events = 10'000;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0) || !(event_tol > 0) || !(min_impact_gap > 0) ||
        (max_step && !(*max_step > 0))) {
      throw ConfigError("integrator tolerances must be strictly positive");
    }
    if (max_events < 1) throw ConfigError("max_events must be at least 1");
  }

  [[nodiscard]] double resolved_max_step(double horizon) const {
    return max_step ? *max_step : horizon / 100.0;
  }
};

/// One accepted Runge-Kutta step with its continuous extension.
template <std::size_t N>
struct DenseStep {
  double t0 = 0;
  double h = 0;
  std::array<Vec<N>, 5> coeffs{};

  [[nodiscard]] Vec<N> eval(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = coeffs[0][i] +
             s * (coeffs[1][i] + s1 * (coeffs[2][i] + s * (coeffs[3][i] + s1 * coeffs[4][i])));
    }
    return y;
  }
};

/// A continuous arc between impacts. `steps` is empty when recording was off.
template <std::size_t N>
struct Segment {
  double t_start = 0;
  double t_end = 0;
  Vec<N> state_start{};
  Vec<N> state_end{};
  std::vector<DenseStep<N>> steps;

  [[nodiscard]] Vec<N> state_at(double t) const {
    if (t <= t_start) return state_start;
    if (t >= t_end) return state_end;
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double v, const DenseStep<N>& st) { return v < st.t0; });
    if (it == steps.begin()) return state_start;
    return std::prev(it)->eval(t);
  }
};

template <std::size_t N>
struct EventHit {
  double t = 0;
  Vec<N> state{};
};

template <std::size_t N>
struct SegmentResult {
  Segment<N> segment;
  std::optional<EventHit<N>> event;
};

enum class Termination { ReachedHorizon, ZenoDetected, EventLimit };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedHorizon: return "ReachedHorizon";
    case Termination::ZenoDetected: return "ZenoDetected";
    case Termination::EventLimit: return "EventLimit";
  }
  return "?";
}

enum class Recording { Full, EndpointsOnly };

template <std::size_t N>
struct HybridTrajectory {
  std::vector<Segment<N>> segments;
  std::vector<double> impact_times;
  Termination termination = Termination::ReachedHorizon;
  /// Accumulation time of the impacts; set only for ZenoDetected.
  std::optional<double> t_inf;
  double final_time = 0;
  /// State after the last processed reset, or at the horizon.
  Vec<N> final_state{};

  [[nodiscard]] std::size_t impacts() const { return impact_times.size(); }
};

namespace detail {

// Dormand-Prince 5(4) tableau and dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Starting step estimate (Hairer, Norsett & Wanner, "Solving ODEs I", II.4).
template <std::size_t N, class F>
double initial_step(F& f, double t, const Vec<N>& y, const Vec<N>& f0, double h_max,
                    const IntegratorConfig& cfg) {
  double dnf = 0, dny = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y[i] / sk) * (y[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, h_max);
  Vec<N> y1;
  for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h * f0[i];
  const Vec<N> f1 = f(t + h, y1);
  double der2 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 =
      der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 5.0);
  return std::min({100 * h, h1, h_max});
}

// First downward guard crossing inside an accepted step, as a bracket in time.
template <std::size_t N>
std::optional<std::pair<double, double>> bracket_crossing(const HybridSystemDef<N>& sys,
                                                          const DenseStep<N>& step,
                                                          double guard_start,
                                                          double guard_end) {
  constexpr int kSamples = 8;
  const double t0 = step.t0;
  const double h = step.h;
  auto guard_at = [&](double s) {
    if (s == 1.0) return guard_end;
    return sys.guard_fn(step.eval(t0 + s * h));
  };

  double s_pos = -1;  // last sample with the guard strictly positive
  if (guard_start > 0) {
    s_pos = 0;
  } else {
    // Starting on the guard (just after a reset): walk towards the start
    // until the lift-off is resolved.
    const double s1 = 1.0 / kSamples;
    if (guard_at(s1) <= 0) {
      double s = s1;
      for (int k = 0; k < 60; ++k) {
        const double probe = s * 0.5;
        if (probe * h == 0) break;
        if (sys.guard_fn(step.eval(t0 + probe * h)) > 0) {
          return std::make_pair(t0 + probe * h, t0 + s * h);
        }
        s = probe;
      }
      return std::nullopt;
    }
  }
  for (int j = 1; j <= kSamples; ++j) {
    const double s = static_cast<double>(j) / kSamples;
    const double gs = guard_at(s);
    if (gs > 0) {
      s_pos = s;
    } else if (s_pos >= 0) {
      return std::make_pair(t0 + s_pos * h, s == 1.0 ? t0 + h : t0 + s * h);
    }
  }
  return std::nullopt;
}

}  // namespace detail

/**
 * Integrates one continuous arc from (t0, state) towards t_max, stopping at
 * the first admissible guard crossing.
 *
 * The event time is bracketed on the dense output and refined until the
 * bracket is narrower than cfg.event_tol; the reported event state is the
 * bracket end on the nonpositive side of the guard.
 */
template <std::size_t N>
SegmentResult<N> integrate_segment(const HybridSystemDef<N>& sys, const Vec<N>& state,
                                   double t0, double t_max, const IntegratorConfig& cfg,
                                   Recording recording = Recording::Full,
                                   std::optional<double> max_step = std::nullopt) {
  using T = detail::Dopri5;
  if (!(t0 < t_max)) throw InvalidInitialState("segment requires t0 < t_max");
  if (sys.guard_fn(state) <= cfg.event_tol && sys.guard_dir(state) < 0) {
    throw InvalidInitialState("segment starts on the guard moving inwards");
  }
  const double h_max = max_step ? *max_step : cfg.resolved_max_step(t_max - t0);

  SegmentResult<N> out;
  Segment<N>& seg = out.segment;
  seg.t_start = t0;
  seg.state_start = state;

  auto& f = sys.flow;
  double t = t0;
  Vec<N> y = state;
  Vec<N> k1 = f(t, y);
  double h = detail::initial_step<N>(f, t, y, k1, h_max, cfg);
  double guard_y = sys.guard_fn(y);
  double fac_old = 1e-4;
  bool last_rejected = false;

  Vec<N> k2, k3, k4, k5, k6, k7, ytmp, y1;
  for (;;) {
    bool final_step = false;
    if (t + h >= t_max || t + 1.01 * h >= t_max) {
      h = t_max - t;
      final_step = true;
    }
    if (h <= 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw StepSizeUnderflow(t);
    }

    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * T::a21 * k1[i];
    k2 = f(t + T::c2 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    k3 = f(t + T::c3 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    k4 = f(t + T::c4 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    k5 = f(t + T::c5 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] +
                            T::a64 * k4[i] + T::a65 * k5[i]);
    const double t_new = final_step ? t_max : t + h;
    k6 = f(t_new, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      y1[i] = y[i] + h * (T::a71 * k1[i] + T::a73 * k3[i] + T::a74 * k4[i] + T::a75 * k5[i] +
                          T::a76 * k6[i]);
    k7 = f(t_new, y1);

    double err = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                            T::e6 * k6[i] + T::e7 * k7[i]);
      const double sk = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (e / sk) * (e / sk);
    }
    err = std::sqrt(err / static_cast<double>(N));
    if (!std::isfinite(err)) {
      if (!detail::all_finite(y1)) throw NonFiniteState(t);
      err = std::numeric_limits<double>::max();
    }

    // PI step-size control.
    constexpr double beta = 0.04, safe = 0.9, fac_min = 0.2, fac_max = 10.0;
    const double fac11 = std::pow(err, 0.2 - beta * 0.75);
    if (err > 1.0) {
      h /= std::min(1.0 / fac_min, fac11 / safe);
      last_rejected = true;
      continue;
    }

    double fac = fac11 / std::pow(fac_old, beta);
    fac = std::clamp(fac / safe, 1.0 / fac_max, 1.0 / fac_min);
    double h_new = std::min(h / fac, h_max);
    if (last_rejected) h_new = std::min(h_new, h);
    fac_old = std::max(err, 1e-4);
    last_rejected = false;

    DenseStep<N> step;
    step.t0 = t;
    step.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y1[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      step.coeffs[0][i] = y[i];
      step.coeffs[1][i] = ydiff;
      step.coeffs[2][i] = bspl;
      step.coeffs[3][i] = ydiff - h * k7[i] - bspl;
      step.coeffs[4][i] = h * (T::d1 * k1[i] + T::d3 * k3[i] + T::d4 * k4[i] + T::d5 * k5[i] +
                               T::d6 * k6[i] + T::d7 * k7[i]);
    }

    const double guard_new = sys.guard_fn(y1);
    if (auto br = detail::bracket_crossing(sys, step, guard_y, guard_new)) {
      auto g_of_t = [&](double tt) { return sys.guard_fn(step.eval(tt)); };
      auto tol = [&](double a, double b) { return std::abs(b - a) <= cfg.event_tol; };
      double ga = g_of_t(br->first);
      double gb = br->second == t + h ? guard_new : g_of_t(br->second);
      double t_e = br->second;
      if (gb < 0 && ga > 0) {
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(g_of_t, br->first, br->second, ga, gb, tol,
                                                   iters);
        // Keep the end that sits on or below the guard.
        t_e = g_of_t(r.second) <= 0 ? r.second : r.first;
        if (g_of_t(t_e) > 0) t_e = br->second;
      }
      const Vec<N> y_e = t_e == t + h ? y1 : step.eval(t_e);
      if (sys.guard_dir(y_e) < 0) {
        if (!detail::all_finite(y_e)) throw NonFiniteState(t_e);
        if (recording == Recording::Full) seg.steps.push_back(step);
        seg.t_end = t_e;
        seg.state_end = y_e;
        out.event = EventHit<N>{t_e, y_e};
        return out;
      }
      // Grazing contact: not an impact.
    }

    if (!detail::all_finite(y1)) throw NonFiniteState(t_new);
    if (recording == Recording::Full) seg.steps.push_back(step);
    t = t_new;
    y = y1;
    k1 = k7;
    guard_y = guard_new;
    if (final_step) break;
    h = h_new;
  }
  seg.t_end = t;
  seg.state_end = y;
  return out;
}

/**
 * Geometric extrapolation of a contracting impact sequence.
 *
 * Fires when the latest gap is below cfg.min_impact_gap and the last (up to
 * three) consecutive gap ratios all lie in (0, 1); returns
 * t_k + gap_k * r / (1 - r) with r the latest ratio.
 */
inline std::optional<double> detect_zeno(std::span<const double> impact_times,
                                         const IntegratorConfig& cfg) {
  const std::size_t n = impact_times.size();
  if (n < 3) return std::nullopt;
  const double last_gap = impact_times[n - 1] - impact_times[n - 2];
  if (!(last_gap < cfg.min_impact_gap)) return std::nullopt;
  const std::size_t ratios = std::min<std::size_t>(3, n - 2);
  double r_last = 0;
  for (std::size_t j = 0; j < ratios; ++j) {
    const std::size_t k = n - 1 - j;
    const double gap = impact_times[k] - impact_times[k - 1];
    const double prev = impact_times[k - 1] - impact_times[k - 2];
    const double r = gap / prev;
    if (!(r > 0 && r < 1)) return std::nullopt;
    if (j == 0) r_last = r;
  }
  return impact_times[n - 1] + last_gap * r_last / (1 - r_last);
}

/// Alternates continuous arcs and resets from (t0, state0) until t_f, Zeno, or the event budget.
template <std::size_t N>
HybridTrajectory<N> simulate_hybrid(const HybridSystemDef<N>& sys, const Vec<N>& state0,
                                    double t0, double t_f, const IntegratorConfig& cfg,
                                    Recording recording = Recording::Full) {
  cfg.validate();
  if (!(t0 < t_f)) throw InvalidInitialState("simulation requires t0 < t_f");
  if (sys.guard_fn(state0) <= cfg.event_tol && sys.guard_dir(state0) < 0) {
    throw InvalidInitialState("initial state lies on the guard moving inwards");
  }
  const double h_max = cfg.resolved_max_step(t_f - t0);

  HybridTrajectory<N> traj;
  double t = t0;
  Vec<N> state = state0;
  while (t < t_f) {
    SegmentResult<N> res = integrate_segment(sys, state, t, t_f, cfg, recording, h_max);
    traj.segments.push_back(std::move(res.segment));
    if (!res.event) {
      t = t_f;
      state = traj.segments.back().state_end;
      break;
    }
    t = res.event->t;
    traj.impact_times.push_back(t);
    state = sys.reset(res.event->state);
    if (auto t_inf = detect_zeno(traj.impact_times, cfg)) {
      traj.termination = Termination::ZenoDetected;
      traj.t_inf = t_inf;
      break;
    }
    if (traj.impact_times.size() >= cfg.max_events) {
      traj.termination = Termination::EventLimit;
      break;
    }
  }
  traj.final_time = t;
  traj.final_state = state;
  return traj;
}

/// CSV with columns t, x0..x{N-1}, segment_index; `samples_per_step` points per dense step.
template <std::size_t N>
void write_trajectory_csv(std::ostream& os, const HybridTrajectory<N>& traj,
                          std::span<const std::string> names = {}, int samples_per_step = 4) {
  os << 't';
  for (std::size_t i = 0; i < N; ++i) {
    os << ',' << (i < names.size() ? names[i] : "x" + std::to_string(i));
  }
  os << ",segment_index\n";
  auto row = [&](double t, const Vec<N>& y, std::size_t seg) {
    os << fmt_double(t);
    for (double v : y) os << ',' << fmt_double(v);
    os << ',' << seg << '\n';
  };
  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    const auto& seg = traj.segments[k];
    row(seg.t_start, seg.state_start, k);
    for (const auto& st : seg.steps) {
      for (int j = 1; j <= samples_per_step; ++j) {
        const double tt = st.t0 + st.h * j / samples_per_step;
        if (tt >= seg.t_end) break;
        row(tt, st.eval(tt), k);
      }
    }
    row(seg.t_end, seg.state_end, k);
  }
}

/// Impact table CSV: k, t_k, gap_k (gap to the previous impact; empty for k = 0).
inline void write_impact_csv(std::ostream& os, std::span<const double> impact_times) {
  os << "k,t_k,gap_k\n";
  for (std::size_t k = 0; k < impact_times.size(); ++k) {
    os << k << ',' << fmt_double(impact_times[k]) << ',';
    if (k > 0) os << fmt_double(impact_times[k] - impact_times[k - 1]);
    os << '\n';
  }
}

}  // namespace hybrid_zeno
