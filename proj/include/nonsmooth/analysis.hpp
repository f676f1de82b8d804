#pragma once

// Closed-form equilibria of the drill model, the load-jump stability
// conditions, the Lyapunov machinery certifying them, and the safe-load
// region sweep combining the certified checker with simulation.

#include "nonsmooth/core.hpp"
#include "nonsmooth/integrate.hpp"
#include "nonsmooth/models.hpp"

#include <cmath>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonsmooth {

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

struct Equilibrium {
  enum class Kind { Idle, Loaded };
  double s0 = 0.0;
  double y0 = 0.0;
  double x0 = 0.0;
  Kind kind = Kind::Idle;

  State state() const {
    State u(3);
    u << s0, y0, x0;
    return u;
  }
};

/// Unique equilibrium of the reduced drill system for 0 <= gamma < a/2:
///   s0 = c*(a - sqrt(a^2 - 4*gamma^2)) / (2*gamma)   (smaller root of
///   a*c*s/(c^2+s^2) = gamma), y0 = -gamma/a, x0 = -gamma*s0/(a*c).
/// Evaluated in the cancellation-free form s0 = 2*c*gamma/(a + sqrt(...)).
inline Equilibrium drilling_equilibrium(double a, double c, double gamma) {
  if (!(a > 0.0) || !(c > 0.0))
    throw std::invalid_argument("drilling_equilibrium: a, c must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("drilling_equilibrium: gamma must be >= 0");
  if (gamma == 0.0) return Equilibrium{0.0, 0.0, 0.0, Equilibrium::Kind::Idle};
  const double disc = a * a - 4.0 * gamma * gamma;
  if (!(gamma < 0.5 * a) || disc <= 0.0)
    throw std::domain_error("drilling_equilibrium: no equilibrium for gamma >= a/2");
  Equilibrium e;
  e.kind = Equilibrium::Kind::Loaded;
  e.s0 = 2.0 * c * gamma / (a + std::sqrt(disc));
  e.y0 = -gamma / a;
  e.x0 = -gamma * e.s0 / (a * c);
  // closed form must solve the field to rounding error
  const double r1 = a * e.y0 + gamma;
  const double r2 = -c * e.y0 - e.s0 - e.x0 * e.s0;
  const double r3 = -c * e.x0 + e.y0 * e.s0;
  if (std::max({std::abs(r1), std::abs(r2), std::abs(r3)}) > 1e-10 * std::max(1.0, a))
    throw std::runtime_error("drilling_equilibrium: residual check failed");
  return e;
}

/// Norm of the governing velocity at x: the branch field off the surface and
/// the tangent selection of the surface law on it.
inline double equilibrium_residual(const PiecewiseSystem& sys, double t, const State& x) {
  switch (surface_side(sys.surface, t, x)) {
    case Side::Plus:
      return sys.f_plus(t, x).norm();
    case Side::Minus:
      return sys.f_minus(t, x).norm();
    case Side::On:
      return gly_surface_field(sys, t, x).selection.norm();
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Load-jump stability conditions
// ---------------------------------------------------------------------------

/// The three inequalities guaranteeing convergence after a load jump
/// gamma0 -> gamma1:
///   gamma0 < a/2
///   gamma1 < min(a/2, 2*c^2)
///   3*(M^2 + 2M)*gamma1^2 - 8*c^2*gamma1 + 3*a*c^2 >= 0
struct ConditionReport {
  bool cond_gamma0 = false;
  bool cond_gamma1 = false;
  bool cond_M = false;
  bool all() const { return cond_gamma0 && cond_gamma1 && cond_M; }
};

inline ConditionReport load_jump_conditions(double a, double c, double M_lock,
                                            const LoadChangeScenario& sc) {
  sc.validate();
  if (!(a > 0.0) || !(c > 0.0) || !(M_lock > 0.0))
    throw std::invalid_argument("load_jump_conditions: a, c, M_lock must be > 0");
  ConditionReport r;
  r.cond_gamma0 = sc.gamma0 < 0.5 * a;
  r.cond_gamma1 = sc.gamma1 < std::min(0.5 * a, 2.0 * c * c);
  const double g1 = sc.gamma1;
  r.cond_M = 3.0 * (M_lock * M_lock + 2.0 * M_lock) * g1 * g1 - 8.0 * c * c * g1 +
                 3.0 * a * c * c >=
             0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Lyapunov machinery
// ---------------------------------------------------------------------------

/// Frame of the energy argument in the region s < c, built around the loaded
/// equilibrium at gamma1: coordinates eta = a*y + gamma1,
/// z = -x - gamma1*s/(a*c), and psi(s) = -(gamma1/c)*s^2 + a*s - c*gamma1.
/// s1 is the equilibrium slip, the smaller root of psi.
struct LyapunovFrame {
  double a;
  double c;
  double gamma1;
  double s1;

  static LyapunovFrame make(double a, double c, double gamma1) {
    const Equilibrium e = drilling_equilibrium(a, c, gamma1);
    LyapunovFrame f{a, c, gamma1, e.s0};
    if (std::abs(f.psi(f.s1)) > 1e-10 * std::max(1.0, a * c))
      throw std::runtime_error("LyapunovFrame: psi(s1) != 0");
    return f;
  }

  double eta(double y) const { return a * y + gamma1; }
  double z(double s, double x) const { return -x - gamma1 * s / (a * c); }

  double psi(double s) const { return -(gamma1 / c) * s * s + a * s - c * gamma1; }

  /// Antiderivative of psi (exact polynomial algebra, no quadrature).
  double psi_antiderivative(double s) const {
    return -(gamma1 / (3.0 * c)) * s * s * s + 0.5 * a * s * s - c * gamma1 * s;
  }

  double psi_integral(double from, double to) const {
    return psi_antiderivative(to) - psi_antiderivative(from);
  }
};

/// V(s, eta, z) = (a^2/2) z^2 + (1/2) eta^2 + integral_{s1}^{s} psi.
inline double lyapunov_V(double s, double eta, double z, const LyapunovFrame& f) {
  return 0.5 * f.a * f.a * z * z + 0.5 * eta * eta + f.psi_integral(f.s1, s);
}

/// dV/dt along solutions in {s < c}:
///   -a^2*c*z^2 - (a*gamma1/c)*eta*z - c*eta^2.
/// Negative definite in (eta, z) exactly when gamma1 < 2*c^2.
inline double lyapunov_Vdot(double eta, double z, const LyapunovFrame& f) {
  return -f.a * f.a * f.c * z * z - (f.a * f.gamma1 / f.c) * eta * z - f.c * eta * eta;
}

/// Bounded invariant region used by the convergence argument:
///   { V(s,eta,z) <= psi_integral(s1, c) + ((1+M)^2/2)*gamma1^2, s in [s2, c] }
/// where s2 < c solves psi_integral(s2, c) + ((1+M)^2/2)*gamma1^2 = 0.
struct AbsorbingSet {
  LyapunovFrame frame;
  double M_lock;
  double s2;
  double v_threshold;

  bool contains(double s, double eta, double z) const {
    return s >= s2 && s <= frame.c && lyapunov_V(s, eta, z, frame) <= v_threshold;
  }
};

inline AbsorbingSet absorbing_set(const LyapunovFrame& f, double M_lock) {
  if (!(M_lock > 0.0)) throw std::invalid_argument("absorbing_set: M_lock must be > 0");
  const double K = 0.5 * (1.0 + M_lock) * (1.0 + M_lock) * f.gamma1 * f.gamma1;
  auto g = [&](double s2) { return f.psi_integral(s2, f.c) + K; };
  // psi < 0 below s1, so g decreases as s2 moves left; bracket downward from s1
  double hi = f.s1;
  if (g(hi) < 0.0)
    throw std::domain_error("absorbing_set: threshold negative at s1 (unexpected geometry)");
  double step = std::max(f.c - f.s1, 1.0);
  double lo = hi - step;
  int guard = 0;
  while (g(lo) > 0.0) {
    lo -= (step *= 2.0);
    if (++guard > 200) throw std::domain_error("absorbing_set: no root s2 < c found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  AbsorbingSet out{f, M_lock, 0.5 * (lo + hi), f.psi_integral(f.s1, f.c) + K};
  return out;
}

inline bool absorbing_set_membership(double s, double eta, double z, const LyapunovFrame& f,
                                     double M_lock) {
  return absorbing_set(f, M_lock).contains(s, eta, z);
}

/// W(x, y) = (x + gamma1/a)^2 + (y + gamma1/a)^2, the squared distance to the
/// projected equilibrium of the sliding dynamics on s = c.
inline double sliding_W(double x, double y, double gamma1, double a) {
  const double g = gamma1 / a;
  return (x + g) * (x + g) + (y + g) * (y + g);
}

struct SemicircleCheck {
  bool noncontact;       // Wdot < 0 at every sampled point
  double max_half_Wdot;  // largest sampled (1/2) dW/dt
};

/// Samples the semicircle {W = R^2, y > -gamma1/a} and evaluates
/// (1/2) dW/dt under the time-rescaled sliding dynamics
///   y' = -y - x - 1,  x' = -x + y.
inline SemicircleCheck sliding_semicircle_check(double gamma1, double a, double R,
                                                int samples = 100) {
  if (!(R > 0.0) || samples < 1)
    throw std::invalid_argument("sliding_semicircle_check: bad R or sample count");
  const double g = gamma1 / a;
  SemicircleCheck out{true, -std::numeric_limits<double>::infinity()};
  for (int i = 1; i <= samples; ++i) {
    const double th = M_PI * i / (samples + 1);  // y > -g half
    const double x = -g + R * std::cos(th);
    const double y = -g + R * std::sin(th);
    const double xdot = -x + y;
    const double ydot = -y - x - 1.0;
    const double half_wdot = (x + g) * xdot + (y + g) * ydot;
    out.max_half_Wdot = std::max(out.max_half_Wdot, half_wdot);
    if (!(half_wdot < 0.0)) out.noncontact = false;
  }
  return out;
}

/// Global stability test for the governor's sliding segment:
/// A > 0, B > 0, A*B > 1.
inline bool andronov_mayer(double A, double B) { return A > 0.0 && B > 0.0 && A * B > 1.0; }

// ---------------------------------------------------------------------------
// Trajectory diagnostics
// ---------------------------------------------------------------------------

struct AttractorReport {
  bool bounded = true;
  double max_norm = 0.0;
  double tail_diameter = 0.0;           // bounding-box diagonal over the tail
  bool converged = false;               // tail_diameter <= converge_tol
  std::vector<double> tail_min_distance;  // per supplied equilibrium
};

inline AttractorReport attractor_diagnostics(const Trajectory& tr,
                                             const std::vector<State>& equilibria,
                                             double tail_fraction = 0.1,
                                             double converge_tol = 1e-3, double bound = 1e8) {
  if (tr.samples.empty()) throw std::invalid_argument("attractor_diagnostics: empty trajectory");
  AttractorReport rep;
  for (const Sample& s : tr.samples) {
    const double n = s.x.norm();
    if (!std::isfinite(n) || n > bound) rep.bounded = false;
    rep.max_norm = std::max(rep.max_norm, n);
  }
  const double t_tail =
      tr.t_end() - tail_fraction * std::max(tr.t_end() - tr.t_begin(), 0.0);
  State lo = tr.samples.back().x, hi = tr.samples.back().x;
  rep.tail_min_distance.assign(equilibria.size(), std::numeric_limits<double>::infinity());
  for (const Sample& s : tr.samples) {
    if (s.t < t_tail) continue;
    lo = lo.cwiseMin(s.x);
    hi = hi.cwiseMax(s.x);
    for (size_t i = 0; i < equilibria.size(); ++i)
      rep.tail_min_distance[i] = std::min(rep.tail_min_distance[i], (s.x - equilibria[i]).norm());
  }
  rep.tail_diameter = (hi - lo).norm();
  rep.converged = rep.bounded && rep.tail_diameter <= converge_tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Safe-load region sweep
// ---------------------------------------------------------------------------

enum class RegionLabel { TheoremSafe, NumericSafe, Unsafe };

inline const char* to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::TheoremSafe: return "THEOREM_SAFE";
    case RegionLabel::NumericSafe: return "NUMERIC_SAFE";
    case RegionLabel::Unsafe: return "UNSAFE";
  }
  return "?";
}

struct RegionCell {
  double gamma1 = 0.0;
  RegionLabel label = RegionLabel::Unsafe;
  double terminal_distance = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

struct RegionMap {
  double a = 0.0, c = 0.0, M_lock = 0.0, gamma0 = 0.0, horizon = 0.0;
  std::vector<RegionCell> cells;
};

namespace detail {

/// Simulates the post-jump transient and reports the largest distance to the
/// loaded equilibrium over the final 10% of the horizon.
inline RegionCell sweep_cell(double a, double c, double M_lock, double gamma0, double gamma1,
                             double horizon, const SolverConfig& cfg) {
  RegionCell cell;
  cell.gamma1 = gamma1;
  const ConditionReport cond = load_jump_conditions(a, c, M_lock, {gamma0, gamma1, 0.0});
  if (cond.all()) {
    cell.label = RegionLabel::TheoremSafe;
    return cell;
  }
  try {
    const Equilibrium pre = drilling_equilibrium(a, c, gamma0);
    const Equilibrium post = drilling_equilibrium(a, c, gamma1);
    const PiecewiseSystem sys = drilling_reduced({a, c, gamma1, M_lock});
    const Trajectory tr = integrate_filippov(sys, pre.state(), 0.0, horizon, cfg);
    if (!tr.ok()) {
      cell.label = RegionLabel::Unsafe;
      cell.note = "integration: " + tr.message;
      return cell;
    }
    const State eq = post.state();
    double worst = 0.0;
    for (const Sample& s : tr.samples) {
      if (s.t < 0.9 * horizon) continue;
      worst = std::max(worst, (s.x - eq).norm());
    }
    cell.terminal_distance = worst;
    cell.label = worst < 1e-3 ? RegionLabel::NumericSafe : RegionLabel::Unsafe;
  } catch (const std::exception& e) {
    cell.label = RegionLabel::Unsafe;
    cell.note = e.what();
  }
  return cell;
}

}  // namespace detail

/// Labels each gamma1 in the grid: certified by the inequality checker,
/// convergent in simulation (sustained 1e-3 ball over the final 10% of the
/// horizon), or unsafe. Cells run concurrently; output order follows the grid.
inline RegionMap safe_load_sweep(double a, double c, double M_lock, double gamma0,
                                 const std::vector<double>& gamma1_grid, double horizon,
                                 const SolverConfig& cfg) {
  if (gamma1_grid.empty()) throw std::invalid_argument("safe_load_sweep: empty grid");
  for (double g1 : gamma1_grid)
    if (!(g1 > gamma0) || !(g1 < 0.5 * a))
      throw std::invalid_argument("safe_load_sweep: grid values must lie in (gamma0, a/2)");
  if (!(horizon > 0.0)) throw std::invalid_argument("safe_load_sweep: horizon must be > 0");
  RegionMap map;
  map.a = a;
  map.c = c;
  map.M_lock = M_lock;
  map.gamma0 = gamma0;
  map.horizon = horizon;
  std::vector<std::future<RegionCell>> jobs;
  jobs.reserve(gamma1_grid.size());
  for (double g1 : gamma1_grid)
    jobs.push_back(std::async(std::launch::async, detail::sweep_cell, a, c, M_lock, gamma0, g1,
                              horizon, cfg));
  for (auto& j : jobs) map.cells.push_back(j.get());
  return map;
}

}  // namespace nonsmooth
