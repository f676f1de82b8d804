#pragma once

// Event-driven integration of piecewise-smooth systems: free flight on the
// active branch, surface-event location on the dense output, sliding on the
// tangent selection with post-step projection, and epsilon-regularized
// (Aizerman-Pyatnitskiy) integration for comparison runs.

#include "nonsmooth/core.hpp"
#include "nonsmooth/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nonsmooth {

struct SolverConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.1;
  double event_tol = 1e-10;        // time-width of refined event brackets
  double sliding_proj_tol = 1e-9;  // |sigma| bound maintained while sliding
  double min_event_gap = 1e-9;     // re-detection guard after a handled event
  long max_events = 1000000;
  double dense_dt = 0.0;           // >0: emit interpolated samples at this spacing

  void validate() const {
    if (rel_tol <= 0 || abs_tol <= 0 || max_step <= 0 || event_tol <= 0 ||
        sliding_proj_tol <= 0 || min_event_gap <= 0 || max_events <= 0)
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (event_tol >= max_step)
      throw std::invalid_argument("SolverConfig: event_tol must be below max_step");
  }
};

enum class Mode { FlightPlus, FlightMinus, Sliding };
enum class EventKind { Crossing, SlidingEntry, SlidingExit, Grazing };
enum class RunStatus { Ok, StepUnderflow, MaxEventsExceeded, EvalError };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::FlightPlus: return "FP";
    case Mode::FlightMinus: return "FM";
    case Mode::Sliding: return "SL";
  }
  return "?";
}

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Crossing: return "CROSSING";
    case EventKind::SlidingEntry: return "SLIDING_ENTRY";
    case EventKind::SlidingExit: return "SLIDING_EXIT";
    case EventKind::Grazing: return "GRAZING";
  }
  return "?";
}

struct Sample {
  double t;
  State x;
  Mode mode;
};

struct TrajectoryEvent {
  double t;
  EventKind kind;
  State x;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<TrajectoryEvent> events;
  RunStatus status = RunStatus::Ok;
  std::string message;

  bool ok() const { return status == RunStatus::Ok; }
  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }

  /// Linear interpolation between recorded samples.
  State state_at(double t) const {
    if (samples.empty()) throw std::domain_error("Trajectory::state_at: empty trajectory");
    const double tiny = 1e-12 * (1.0 + std::abs(t));
    if (t <= samples.front().t + tiny && t >= samples.front().t - tiny)
      return samples.front().x;
    if (t < samples.front().t - tiny || t > samples.back().t + tiny)
      throw std::domain_error("Trajectory::state_at: time outside trajectory range");
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const Sample& s) { return v < s.t; });
    if (it == samples.end()) return samples.back().x;
    if (it == samples.begin()) return samples.front().x;
    const Sample& b = *it;
    const Sample& a = *(it - 1);
    const double w = (b.t - a.t) > 0 ? (t - a.t) / (b.t - a.t) : 0.0;
    return a.x + w * (b.x - a.x);
  }
};

/// Piecewise-linear saturation: x/eps inside the band, sign(x) outside.
inline double sat(double x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("sat: eps must be positive");
  return std::clamp(x / eps, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Event location on a dense segment
// ---------------------------------------------------------------------------

/// View into a continuously interpolated stretch of trajectory.
struct DenseSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::function<State(double)> eval;
};

struct EventLocation {
  enum class Kind { None, Crossing, Grazing };
  Kind kind = Kind::None;
  double t = 0.0;
  double sigma = 0.0;
};

namespace detail {

inline double bisect_sigma_root(const std::function<double(double)>& g, double ta, double tb,
                                double ga, double event_tol, double on_tol) {
  // ga and g(tb) straddle zero; shrink to event_tol, then keep halving until
  // the midpoint sigma is inside the on-band
  double lo = ta, hi = tb, glo = ga;
  double tm = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    tm = 0.5 * (lo + hi);
    const double gm = g(tm);
    const bool width_ok = (hi - lo) <= event_tol;
    if (width_ok && std::abs(gm) <= on_tol) return tm;
    if ((hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tm)))
      return tm;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = tm;
      glo = gm;
    } else {
      hi = tm;
    }
  }
  return tm;
}

inline std::pair<double, double> ternary_min(const std::function<double(double)>& g, double ta,
                                             double tb, double width_tol) {
  double lo = ta, hi = tb;
  for (int it = 0; it < 200 && (hi - lo) > width_tol; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (g(m1) < g(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double tm = 0.5 * (lo + hi);
  return {tm, g(tm)};
}

}  // namespace detail

/// Locates the first surface event on a dense segment: a sign traversal of
/// sigma (Crossing) or an interior dip into the |sigma| <= on_tol band that
/// retreats without traversal (Grazing, reported flagged). Returns None when
/// sigma keeps its sign and stays clear of the band.
inline EventLocation locate_event(const DenseSegment& seg, const SwitchingSurface& surface,
                                  double event_tol = 1e-10) {
  EventLocation out;
  if (!(seg.t1 > seg.t0)) return out;
  auto sig = [&](double t) {
    const double v = surface.sigma(t, seg.eval(t));
    if (!std::isfinite(v)) throw std::domain_error("locate_event: non-finite sigma");
    return v;
  };
  const int K = 32;
  std::vector<double> ts(K + 1), sg(K + 1);
  for (int j = 0; j <= K; ++j) {
    ts[j] = seg.t0 + (seg.t1 - seg.t0) * j / K;
    sg[j] = sig(ts[j]);
  }
  const double on = surface.on_tol;
  int j0 = -1;
  for (int j = 0; j <= K; ++j)
    if (std::abs(sg[j]) > on) {
      j0 = j;
      break;
    }
  if (j0 < 0) return out;  // hugs the surface; nothing to locate
  const double s0 = sg[j0] > 0 ? 1.0 : -1.0;

  for (int j = j0 + 1; j <= K; ++j) {
    if (sg[j] * s0 < -on) {
      int i = j - 1;
      while (i > j0 && sg[i] * s0 <= 0.0) --i;
      out.kind = EventLocation::Kind::Crossing;
      out.t = detail::bisect_sigma_root(sig, ts[i], ts[j], sg[i], event_tol, on);
      out.sigma = sig(out.t);
      return out;
    }
  }

  // no traversal: refine the lowest approach toward the surface; sampled
  // values may sit well above on_tol while the true interior minimum dips in
  int jm = j0;
  for (int j = j0; j <= K; ++j)
    if (sg[j] * s0 < sg[jm] * s0) jm = j;
  const bool interior_min = jm > 0 && jm < K;
  if (interior_min || sg[jm] * s0 <= on) {
    const double ta = ts[std::max(jm - 1, 0)];
    const double tb = ts[std::min(jm + 1, K)];
    auto dip = [&](double t) { return sig(t) * s0; };
    auto [tmin, vmin] = detail::ternary_min(dip, ta, tb, event_tol);
    if (vmin <= on) {
      out.kind = EventLocation::Kind::Grazing;
      out.t = tmin;
      out.sigma = sig(tmin);
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Smooth reference integration
// ---------------------------------------------------------------------------

inline Trajectory integrate_smooth(const VectorField& f, const State& x0, double t0, double t1,
                                   const SolverConfig& cfg, Mode tag = Mode::FlightPlus) {
  cfg.validate();
  if (!x0.allFinite()) throw std::invalid_argument("integrate_smooth: non-finite initial state");
  if (t1 < t0) throw std::invalid_argument("integrate_smooth: t1 < t0");
  Trajectory tr;
  tr.samples.push_back({t0, x0, tag});
  if (t1 == t0) return tr;
  try {
    Dopri5 stepper(f, cfg.rel_tol, cfg.abs_tol, cfg.max_step);
    stepper.reset(t0, x0);
    while (stepper.t() < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
      if (!stepper.step(t1)) {
        tr.status = RunStatus::StepUnderflow;
        tr.message = "step size underflow at t = " + std::to_string(stepper.t());
        return tr;
      }
      const DenseStep& seg = stepper.last_step();
      if (cfg.dense_dt > 0.0) {
        const double tprev = tr.samples.back().t;
        double tq = (std::floor(tprev / cfg.dense_dt) + 1.0) * cfg.dense_dt;
        for (; tq < stepper.t() - 1e-14 * std::max(1.0, std::abs(tq)); tq += cfg.dense_dt)
          if (tq > tprev) tr.samples.push_back({tq, seg.eval(tq), tag});
      }
      tr.samples.push_back({stepper.t(), stepper.x(), tag});
    }
  } catch (const std::exception& e) {
    tr.status = RunStatus::EvalError;
    tr.message = e.what();
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Event-driven integration under the surface law of the system
// ---------------------------------------------------------------------------

namespace detail {

/// Tangent selection used as the sliding vector field. Clamping to the
/// admissible segment keeps stage evaluations robust near the region border.
inline State sliding_selection(const PiecewiseSystem& sys, double t, const State& x) {
  const SegmentSet set = sys.surface_set(t, x);
  const State n = sys.surface.grad_sigma(t, x);
  const double nd = n.dot(set.dir);
  const double nb = n.dot(set.base);
  double lam;
  if (std::abs(nd) <= kBoundaryTol * (std::abs(nb) + std::abs(nd) + 1.0))
    lam = 0.5 * (set.lo + set.hi);
  else
    lam = std::clamp(-nb / nd, set.lo, set.hi);
  return set.at(lam);
}

struct OnSurfaceDecision {
  Mode mode;
  SurfaceClassification cls;
};

inline OnSurfaceDecision decide_on_surface(const PiecewiseSystem& sys, double t, const State& x) {
  const SurfaceClassification cls = classify_surface_point(sys, t, x);
  if (cls.kind == SurfaceKind::Repelling) return {Mode::FlightPlus, cls};
  const GlySurfaceField g = gly_surface_field(sys, t, x);
  if (g.has_tangent) return {Mode::Sliding, cls};
  if (cls.p > 0.0 && cls.m > 0.0) return {Mode::FlightPlus, cls};
  if (cls.p < 0.0 && cls.m < 0.0) return {Mode::FlightMinus, cls};
  return {cls.p + cls.m >= 0.0 ? Mode::FlightPlus : Mode::FlightMinus, cls};
}

class EventDrivenRun {
 public:
  EventDrivenRun(const PiecewiseSystem& sys, const SolverConfig& cfg, double t1)
      : sys_(sys), cfg_(cfg), t1_(t1) {}

  Trajectory run(State x0, double t0) {
    if (surface_side(sys_.surface, t0, x0) == Side::On) {
      const OnSurfaceDecision d = decide_on_surface(sys_, t0, x0);
      mode_ = d.mode;
      if (mode_ == Mode::Sliding) project(t0, x0);
    } else {
      mode_ = surface_side(sys_.surface, t0, x0) == Side::Plus ? Mode::FlightPlus
                                                               : Mode::FlightMinus;
    }
    tr_.samples.push_back({t0, x0, mode_});
    if (t1_ == t0) return std::move(tr_);

    double t = t0;
    State x = x0;
    try {
      while (t < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
        const bool sliding = (mode_ == Mode::Sliding);
        const bool advanced = sliding ? run_sliding(t, x) : run_flight(t, x);
        if (!advanced) break;  // status already set
        if (tr_.status != RunStatus::Ok) break;
      }
    } catch (const std::exception& e) {
      tr_.status = RunStatus::EvalError;
      tr_.message = e.what();
    }
    return std::move(tr_);
  }

 private:
  static double sgn(double v) { return v >= 0.0 ? 1.0 : -1.0; }

  void project(double t, State& x) const {
    for (int it = 0; it < 25; ++it) {
      const double s = sys_.surface.sigma(t, x);
      if (std::abs(s) <= cfg_.sliding_proj_tol) return;
      const State g = sys_.surface.grad_sigma(t, x);
      const double den = g.squaredNorm();
      if (den <= 0.0)
        throw std::domain_error("sliding projection: zero surface gradient");
      x -= (s / den) * g;
    }
    if (std::abs(sys_.surface.sigma(t, x)) > cfg_.sliding_proj_tol)
      throw std::runtime_error("sliding projection failed to converge");
  }

  bool log_event(double t, EventKind kind, const State& x) {
    tr_.events.push_back({t, kind, x});
    if (static_cast<long>(tr_.events.size()) > cfg_.max_events) {
      tr_.status = RunStatus::MaxEventsExceeded;
      tr_.message = "event budget exhausted (chattering?) at t = " + std::to_string(t);
      return false;
    }
    return true;
  }

  void emit_dense(const DenseStep& seg, double t_upto, Mode mode) {
    if (cfg_.dense_dt <= 0.0) return;
    const double tprev = tr_.samples.back().t;
    double tq = (std::floor(tprev / cfg_.dense_dt) + 1.0) * cfg_.dense_dt;
    for (; tq < t_upto - 1e-14 * std::max(1.0, std::abs(tq)); tq += cfg_.dense_dt)
      if (tq > tprev && tq >= seg.t0) tr_.samples.push_back({tq, seg.eval(tq), mode});
  }

  void push_sample(double t, const State& x, Mode mode) {
    if (!tr_.samples.empty() &&
        t <= tr_.samples.back().t + 1e-15 * std::max(1.0, std::abs(t)))
      return;  // keep times strictly increasing
    tr_.samples.push_back({t, x, mode});
  }

  // One flight phase. Returns false when the run must stop.
  bool run_flight(double& t, State& x) {
    const bool plus = (mode_ == Mode::FlightPlus);
    const double side = plus ? 1.0 : -1.0;
    Dopri5 stepper(plus ? sys_.f_plus : sys_.f_minus, cfg_.rel_tol, cfg_.abs_tol, cfg_.max_step);
    stepper.reset(t, x);
    State buf(sys_.dimension);

    while (stepper.t() < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
      if (!stepper.step(t1_)) {
        tr_.status = RunStatus::StepUnderflow;
        tr_.message = "step size underflow at t = " + std::to_string(stepper.t());
        t = stepper.t();
        x = stepper.x();
        return false;
      }
      const DenseStep& seg = stepper.last_step();
      const double ta = std::max(seg.t0, guard_);
      const double tb = seg.t0 + seg.h;
      const auto ev = scan_flight_segment(seg, ta, tb, side, buf);

      if (ev.kind == EventLocation::Kind::Crossing) {
        State xe = seg.eval(ev.t);
        emit_dense(seg, ev.t, mode_);
        const OnSurfaceDecision d = decide_on_surface(sys_, ev.t, xe);
        guard_ = ev.t + cfg_.min_event_gap;
        if (d.mode == Mode::Sliding) {
          project(ev.t, xe);
          if (!log_event(ev.t, EventKind::SlidingEntry, xe)) return false;
          mode_ = Mode::Sliding;
        } else if (d.mode == mode_) {
          // fields push back to the incoming side: a touch, not a traversal
          if (!log_event(ev.t, EventKind::Grazing, xe)) return false;
        } else {
          if (!log_event(ev.t, EventKind::Crossing, xe)) return false;
          mode_ = d.mode;
        }
        push_sample(ev.t, xe, mode_);
        t = ev.t;
        x = xe;
        return true;  // phase ends; driver restarts with new mode
      }
      if (ev.kind == EventLocation::Kind::Grazing) {
        State xe = seg.eval(ev.t);
        if (!log_event(ev.t, EventKind::Grazing, xe)) return false;
        emit_dense(seg, ev.t, mode_);
        push_sample(ev.t, xe, mode_);
        guard_ = ev.t + cfg_.min_event_gap;
        // flight resumes on the same side; the stepper already holds tb
      }
      emit_dense(seg, stepper.t(), mode_);
      push_sample(stepper.t(), stepper.x(), mode_);
    }
    t = stepper.t();
    x = stepper.x();
    return true;
  }

  EventLocation scan_flight_segment(const DenseStep& seg, double ta, double tb, double side,
                                    State& buf) {
    EventLocation out;
    if (!(tb > ta)) return out;
    auto sig = [&](double t) {
      seg.eval_into(t, buf);
      const double v = sys_.surface.sigma(t, buf);
      if (!std::isfinite(v)) throw std::domain_error("non-finite sigma during flight");
      return v;
    };
    const double on = sys_.surface.on_tol;
    const double arm = 2.0 * on;
    const int K = 16;
    double ts[K + 1], sg[K + 1];
    for (int j = 0; j <= K; ++j) {
      ts[j] = ta + (tb - ta) * j / K;
      sg[j] = sig(ts[j]);
    }
    int j0 = -1;
    for (int j = 0; j <= K; ++j)
      if (std::abs(sg[j]) > arm) {
        j0 = j;
        break;
      }
    if (j0 < 0) return out;  // still inside the band; keep flying
    const double sa = sgn(sg[j0]);

    if (sa != side) {
      // surface was traversed at or before the armed point
      int i = -1;
      for (int j = j0 - 1; j >= 0; --j)
        if (sg[j] * sa < 0.0) {
          i = j;
          break;
        }
      out.kind = EventLocation::Kind::Crossing;
      out.t = (i >= 0) ? detail::bisect_sigma_root(sig, ts[i], ts[j0], sg[i], cfg_.event_tol, on)
                       : ta;
      out.sigma = sig(out.t);
      return out;
    }

    for (int j = j0 + 1; j <= K; ++j) {
      if (sg[j] * sa < -on) {
        int i = j - 1;
        while (i > j0 && sg[i] * sa <= 0.0) --i;
        out.kind = EventLocation::Kind::Crossing;
        out.t = detail::bisect_sigma_root(sig, ts[i], ts[j], sg[i], cfg_.event_tol, on);
        out.sigma = sig(out.t);
        return out;
      }
    }

    // interior dip with retreat: a sampled local minimum may hide a grazing
    // touch well below the sample resolution, so estimate the true minimum
    // from the parabola through the bracketing samples before refining
    int jm = j0;
    for (int j = j0; j <= K; ++j)
      if (sg[j] * sa < sg[jm] * sa) jm = j;
    if (jm > 0 && jm < K && sg[K] * sa > arm) {
      const double ym = sg[jm - 1] * sa, y0 = sg[jm] * sa, yp = sg[jm + 1] * sa;
      const double curv = ym + yp - 2.0 * y0;
      double est = y0;
      if (curv > 0.0) est = y0 - (yp - ym) * (yp - ym) / (8.0 * curv);
      if (est <= 100.0 * on) {
        auto dip = [&](double t) { return sig(t) * sa; };
        auto [tmin, vmin] = detail::ternary_min(dip, ts[jm - 1], ts[jm + 1], cfg_.event_tol);
        if (vmin <= on) {
          out.kind = EventLocation::Kind::Grazing;
          out.t = tmin;
          out.sigma = sig(tmin);
        }
      }
    }
    return out;
  }

  // One sliding phase. Returns false when the run must stop.
  bool run_sliding(double& t, State& x) {
    VectorField f0 = [this](double tt, const State& xx) {
      return sliding_selection(sys_, tt, xx);
    };
    Dopri5 stepper(f0, cfg_.rel_tol, cfg_.abs_tol, cfg_.max_step);
    project(t, x);
    stepper.reset(t, x);
    State buf(sys_.dimension);

    // endpoint normal projections at entry fix the sign convention monitored
    // for exit roots
    auto endpoints = [this, &buf](double tt, const State& xx) {
      const SegmentSet set = sys_.surface_set(tt, xx);
      const State n = sys_.surface.grad_sigma(tt, xx);
      return std::pair<double, double>(n.dot(set.at(set.lo)), n.dot(set.at(set.hi)));
    };
    auto [elo0, ehi0] = endpoints(t, x);
    const double scale0 = std::abs(elo0) + std::abs(ehi0) + 1.0;
    const double floor0 = 1e-11 * scale0;
    double se_lo, se_hi;
    if (std::abs(elo0) > floor0)
      se_lo = sgn(elo0);
    else
      se_lo = -sgn(ehi0);
    se_hi = (std::abs(ehi0) > floor0) ? sgn(ehi0) : -se_lo;

    while (stepper.t() < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
      if (!stepper.step(t1_)) {
        tr_.status = RunStatus::StepUnderflow;
        tr_.message = "step size underflow while sliding at t = " + std::to_string(stepper.t());
        t = stepper.t();
        x = stepper.x();
        return false;
      }
      const DenseStep& seg = stepper.last_step();
      const double ta = std::max(seg.t0, guard_);
      const double tb = seg.t0 + seg.h;

      double te = 0.0;
      double exit_side = 0.0;
      if (tb > ta && find_sliding_exit(seg, ta, tb, se_lo, se_hi, floor0, buf, te, exit_side)) {
        State xe = seg.eval(te);
        project(te, xe);
        emit_dense(seg, te, Mode::Sliding);
        guard_ = te + cfg_.min_event_gap;
        if (!log_event(te, EventKind::SlidingExit, xe)) return false;
        mode_ = exit_side > 0.0 ? Mode::FlightPlus : Mode::FlightMinus;
        push_sample(te, xe, mode_);
        t = te;
        x = xe;
        return true;
      }

      State xn = stepper.x();
      project(stepper.t(), xn);
      stepper.set_state(xn);
      emit_dense(seg, stepper.t(), Mode::Sliding);
      push_sample(stepper.t(), xn, Mode::Sliding);
    }
    t = stepper.t();
    x = stepper.x();
    return true;
  }

  bool find_sliding_exit(const DenseStep& seg, double ta, double tb, double se_lo, double se_hi,
                         double floor0, State& buf, double& te, double& exit_side) {
    auto e_at = [&](double tt, bool hi) {
      seg.eval_into(tt, buf);
      const SegmentSet set = sys_.surface_set(tt, buf);
      const State n = sys_.surface.grad_sigma(tt, buf);
      return n.dot(set.at(hi ? set.hi : set.lo));
    };
    const int K = 8;
    double tprev = ta;
    double lo_prev = e_at(ta, false), hi_prev = e_at(ta, true);
    for (int j = 1; j <= K; ++j) {
      const double tj = ta + (tb - ta) * j / K;
      const double lo_j = e_at(tj, false);
      const double hi_j = e_at(tj, true);
      const bool lo_flip = lo_j * se_lo < -floor0;
      const bool hi_flip = hi_j * se_hi < -floor0;
      if (lo_flip || hi_flip) {
        const bool use_hi = hi_flip && (!lo_flip || std::abs(hi_j) > std::abs(lo_j));
        auto g = [&](double tt) { return e_at(tt, use_hi); };
        const double gprev = use_hi ? hi_prev : lo_prev;
        const double sref = use_hi ? se_hi : se_lo;
        te = (gprev * sref > 0.0)
                 ? detail::bisect_sigma_root(g, tprev, tj, gprev, cfg_.event_tol,
                                             std::numeric_limits<double>::infinity())
                 : tprev;
        const double other = e_at(te, !use_hi);
        exit_side = (std::abs(other) > floor0) ? sgn(other) : (use_hi ? se_lo : se_hi);
        return true;
      }
      tprev = tj;
      lo_prev = lo_j;
      hi_prev = hi_j;
    }
    return false;
  }

  const PiecewiseSystem& sys_;
  const SolverConfig& cfg_;
  double t1_;
  Mode mode_ = Mode::FlightPlus;
  double guard_ = -std::numeric_limits<double>::infinity();
  Trajectory tr_;
};

}  // namespace detail

/// Event-driven run under the system's surface law. With the default convex
/// hull law this realizes the Filippov solution (sliding exactly on the
/// attracting part of the surface); wider segment laws keep the state on the
/// surface as long as a tangent selection exists, which is how stiction-type
/// friction models hold their rest state.
inline Trajectory integrate_filippov(const PiecewiseSystem& sys, const State& x0, double t0,
                                     double t1, const SolverConfig& cfg) {
  cfg.validate();
  if (x0.size() != sys.dimension)
    throw std::invalid_argument("integrate_filippov: state dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("integrate_filippov: non-finite x0");
  if (t1 < t0) throw std::invalid_argument("integrate_filippov: t1 < t0");
  detail::EventDrivenRun run(sys, cfg, t1);
  return run.run(x0, t0);
}

// ---------------------------------------------------------------------------
// Regularized (Aizerman-Pyatnitskiy) integration
// ---------------------------------------------------------------------------

/// Smooth field with the sign channel replaced by sat(sigma, eps); coincides
/// with the branch fields wherever |sigma| >= eps.
inline VectorField regularized_system(const PiecewiseSystem& sys, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("regularized_system: eps must be positive");
  if (!sys.channel)
    throw std::invalid_argument("regularized_system: model declares no scalar sign channel");
  const SignChannel ch = *sys.channel;
  const ScalarField sigma = sys.surface.sigma;
  return [ch, sigma, eps](double t, const State& x) {
    return State(ch.drift(t, x) + sat(sigma(t, x), eps) * ch.gain(t, x));
  };
}

using EpsilonSchedule = std::vector<double>;

inline void validate_epsilon_schedule(const EpsilonSchedule& sched) {
  if (sched.empty()) throw std::invalid_argument("epsilon schedule is empty");
  for (size_t i = 0; i < sched.size(); ++i) {
    if (!(sched[i] > 0.0)) throw std::invalid_argument("epsilon schedule entries must be positive");
    if (i > 0 && !(sched[i] < sched[i - 1]))
      throw std::invalid_argument("epsilon schedule must be strictly decreasing");
  }
}

/// Sup-distance between two trajectories over the shared time range, sampled
/// on a uniform grid with linear interpolation between recorded samples.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b, double grid_dt) {
  if (!(grid_dt > 0.0)) throw std::invalid_argument("trajectory_distance: grid step must be > 0");
  if (a.samples.empty() || b.samples.empty())
    throw std::domain_error("trajectory_distance: empty trajectory");
  const double lo = std::max(a.t_begin(), b.t_begin());
  const double hi = std::min(a.t_end(), b.t_end());
  if (hi < lo - 1e-12 * std::max(1.0, std::abs(lo)))
    throw std::domain_error("trajectory_distance: disjoint time ranges");
  double d = 0.0;
  for (double t = lo;; t += grid_dt) {
    const double tq = std::min(t, hi);
    d = std::max(d, (a.state_at(tq) - b.state_at(tq)).norm());
    if (tq >= hi) break;
  }
  return d;
}

struct ApOptions {
  bool continuation = false;      // warm-start each eps from the previous final state
  double report_grid_dt = 0.0;    // grid for d_k; defaults to span/1000
};

struct ApRun {
  double eps;
  Trajectory trajectory;
};

struct ApResult {
  std::vector<ApRun> runs;
  std::vector<double> d_consecutive;  // sup-distance between runs k and k+1
  RunStatus status = RunStatus::Ok;
  std::string message;
  const Trajectory& final_trajectory() const { return runs.back().trajectory; }
};

/// One smooth integration per epsilon in the (strictly decreasing) schedule.
inline ApResult integrate_ap(const PiecewiseSystem& sys, const State& x0, double t0, double t1,
                             const EpsilonSchedule& sched, const SolverConfig& cfg,
                             const ApOptions& opts = {}) {
  validate_epsilon_schedule(sched);
  ApResult out;
  State start = x0;
  for (const double eps : sched) {
    Trajectory tr = integrate_smooth(regularized_system(sys, eps), start, t0, t1, cfg);
    for (Sample& s : tr.samples)
      s.mode = sys.surface.sigma(s.t, s.x) >= 0.0 ? Mode::FlightPlus : Mode::FlightMinus;
    if (!tr.ok() && out.status == RunStatus::Ok) {
      out.status = tr.status;
      out.message = "eps = " + std::to_string(eps) + ": " + tr.message;
    }
    if (opts.continuation && tr.ok()) start = tr.back().x;
    out.runs.push_back({eps, std::move(tr)});
  }
  const double dt = opts.report_grid_dt > 0.0 ? opts.report_grid_dt
                                              : std::max((t1 - t0) / 1000.0, 1e-12);
  for (size_t k = 0; k + 1 < out.runs.size(); ++k) {
    const Trajectory& u = out.runs[k].trajectory;
    const Trajectory& v = out.runs[k + 1].trajectory;
    if (u.ok() && v.ok())
      out.d_consecutive.push_back(trajectory_distance(u, v, dt));
    else
      out.d_consecutive.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace nonsmooth
