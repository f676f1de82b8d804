#pragma once

// Piecewise-smooth systems with one switching surface and their set-valued
// right-hand sides: Filippov convex hull and general segment-shaped surface
// laws (Gelig-Leonov-Yakubovich style, e.g. asymmetric or static friction).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace nonsmooth {

using State = Eigen::VectorXd;
using VectorField = std::function<State(double, const State&)>;
using ScalarField = std::function<double(double, const State&)>;

/// Ties |p| or |m| below this are resolved toward sliding (boundary case).
inline constexpr double kBoundaryTol = 1e-12;

enum class Side { Plus, Minus, On };

/// Scalar switching surface sigma(t,x) = 0 with its gradient in x.
struct SwitchingSurface {
  ScalarField sigma;
  VectorField grad_sigma;
  double on_tol = 1e-9;
};

inline Side surface_side(const SwitchingSurface& surface, double t, const State& x) {
  if (!x.allFinite()) throw std::domain_error("surface_side: non-finite state");
  const double s = surface.sigma(t, x);
  if (!std::isfinite(s)) throw std::domain_error("surface_side: non-finite sigma value");
  if (s > surface.on_tol) return Side::Plus;
  if (s < -surface.on_tol) return Side::Minus;
  return Side::On;
}

/// Closed convex segment {base + lambda*dir : lambda in [lo, hi]}.
/// Degenerate (a point) when lo == hi or dir == 0.
struct SegmentSet {
  State base;
  State dir;
  double lo = 0.0;
  double hi = 1.0;

  SegmentSet() = default;
  SegmentSet(State base_, State dir_, double lo_ = 0.0, double hi_ = 1.0)
      : base(std::move(base_)), dir(std::move(dir_)), lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw std::invalid_argument("SegmentSet: lo > hi");
  }

  State at(double lambda) const { return base + lambda * dir; }

  /// Euclidean distance from v to the segment.
  double distance_to(const State& v) const {
    const double dd = dir.squaredNorm();
    double lambda = lo;
    if (dd > 0.0) {
      lambda = std::clamp((v - base).dot(dir) / dd, lo, hi);
    }
    return (v - at(lambda)).norm();
  }

  bool contains(const State& v, double tol = 1e-12) const {
    return distance_to(v) <= tol;
  }
};

using SurfaceSetFn = std::function<SegmentSet(double, const State&)>;

/// Discontinuity written as a scalar sign channel: f(t,x) = drift + gain*sign(sigma).
/// Declared by models that admit smoothing (sign -> sat_eps).
struct SignChannel {
  VectorField drift;
  VectorField gain;
};

/// Two smooth branches split by one switching surface, plus the set-valued
/// law on the surface. surface_set defaults to the convex hull of the two
/// one-sided limits (the Filippov segment); models may install a wider set.
struct PiecewiseSystem {
  int dimension = 0;
  std::string name;
  VectorField f_plus;
  VectorField f_minus;
  SwitchingSurface surface;
  SurfaceSetFn surface_set;   // filled by make_piecewise when absent
  std::optional<SignChannel> channel;
};

/// Hull of the one-sided limits: base = f_minus, dir = f_plus - f_minus.
inline SegmentSet filippov_hull(const PiecewiseSystem& sys, double t, const State& x) {
  State fm = sys.f_minus(t, x);
  State fp = sys.f_plus(t, x);
  return SegmentSet(fm, fp - fm, 0.0, 1.0);
}

/// Finalizes a system definition: installs the default hull law when the
/// model supplied none.
inline PiecewiseSystem make_piecewise(PiecewiseSystem sys) {
  if (sys.dimension < 1) throw std::invalid_argument("make_piecewise: bad dimension");
  if (!sys.surface_set) {
    // capture by value; PiecewiseSystem is immutable after construction
    const VectorField fp = sys.f_plus;
    const VectorField fm = sys.f_minus;
    sys.surface_set = [fp, fm](double t, const State& x) {
      State a = fm(t, x);
      State b = fp(t, x);
      return SegmentSet(a, b - a, 0.0, 1.0);
    };
  }
  return sys;
}

enum class SurfaceKind { CrossToPlus, CrossToMinus, AttractingSliding, Repelling };

/// Sign table of the normal projections p = n.f_plus, m = n.f_minus at a
/// surface point. boundary is set when either projection ties with zero;
/// ties resolve toward sliding and the exit logic handles departure.
struct SurfaceClassification {
  SurfaceKind kind;
  double p = 0.0;
  double m = 0.0;
  bool boundary = false;
};

inline SurfaceClassification classify_surface_point(const PiecewiseSystem& sys, double t,
                                                    const State& x) {
  const State n = sys.surface.grad_sigma(t, x);
  if (n.norm() == 0.0)
    throw std::domain_error("classify_surface_point: zero surface gradient at x");
  const double p = n.dot(sys.f_plus(t, x));
  const double m = n.dot(sys.f_minus(t, x));
  SurfaceClassification c;
  c.p = p;
  c.m = m;
  if (std::abs(p) <= kBoundaryTol || std::abs(m) <= kBoundaryTol) {
    c.kind = SurfaceKind::AttractingSliding;
    c.boundary = true;
  } else if (p < 0.0 && m > 0.0) {
    c.kind = SurfaceKind::AttractingSliding;
  } else if (p > 0.0 && m < 0.0) {
    c.kind = SurfaceKind::Repelling;
  } else if (p > 0.0) {
    c.kind = SurfaceKind::CrossToPlus;
  } else {
    c.kind = SurfaceKind::CrossToMinus;
  }
  return c;
}

/// Tangent velocity on an attracting surface point: the intersection of the
/// segment joining f_plus and f_minus with the tangent plane.
struct SlidingField {
  State f0;
  double alpha;   // convex weight on f_plus, in [0,1] while sliding persists
};

inline SlidingField filippov_sliding_field(const PiecewiseSystem& sys, double t,
                                           const State& x) {
  const State n = sys.surface.grad_sigma(t, x);
  if (n.norm() == 0.0)
    throw std::domain_error("filippov_sliding_field: zero surface gradient");
  const State fp = sys.f_plus(t, x);
  const State fm = sys.f_minus(t, x);
  const double p = n.dot(fp);
  const double m = n.dot(fm);
  const double denom = m - p;
  if (std::abs(denom) <= kBoundaryTol * (std::abs(p) + std::abs(m) + 1.0))
    throw std::domain_error("filippov_sliding_field: parallel normal projections (m - p = 0)");
  const double alpha = m / denom;
  State f0 = fm + alpha * (fp - fm);
  return {std::move(f0), alpha};
}

/// Surface law evaluation: the admissible segment, the element selected by
/// the zero-normal-projection condition (clamped to the segment when the
/// tangent condition cannot be met, which reproduces one-sided departure
/// values), and whether that tangent element exists uniquely.
struct GlySurfaceField {
  SegmentSet set;
  State selection;      // set.at(lambda)
  double lambda = 0.0;
  bool has_tangent = false;   // lambda solves n.v = 0 inside [lo, hi]
  bool unique_tangent = false;
};

inline GlySurfaceField gly_surface_field(const PiecewiseSystem& sys, double t, const State& x) {
  const State n = sys.surface.grad_sigma(t, x);
  if (n.norm() == 0.0) throw std::domain_error("gly_surface_field: zero surface gradient");
  GlySurfaceField out;
  out.set = sys.surface_set(t, x);
  const double nb = n.dot(out.set.base);
  const double nd = n.dot(out.set.dir);
  const double scale = std::abs(nb) + std::abs(nd) + 1.0;
  if (std::abs(nd) <= kBoundaryTol * scale) {
    // whole segment parallel to the tangent plane
    if (std::abs(nb) <= sys.surface.on_tol * scale) {
      out.lambda = 0.5 * (out.set.lo + out.set.hi);
      out.has_tangent = true;
      out.unique_tangent = false;   // every element is tangent
    } else {
      out.lambda = nb > 0.0 ? out.set.lo : out.set.hi;   // all elements leave; pick extreme
      out.has_tangent = false;
    }
  } else {
    const double lam = -nb / nd;
    const double slack = kBoundaryTol * (std::abs(out.set.lo) + std::abs(out.set.hi) + 1.0);
    out.has_tangent = lam >= out.set.lo - slack && lam <= out.set.hi + slack;
    out.unique_tangent = out.has_tangent;
    out.lambda = std::clamp(lam, out.set.lo, out.set.hi);
  }
  if (!out.has_tangent) {
    // both limits pointing inward with no admissible tangent value would be
    // an inconsistent surface law (the set must contain the hull)
    const SurfaceClassification c = classify_surface_point(sys, t, x);
    if (c.kind == SurfaceKind::AttractingSliding && !c.boundary)
      throw std::domain_error(
          "gly_surface_field: attracting surface point but surface set admits no tangent "
          "element (surface law inconsistent with branch limits)");
  }
  out.selection = out.set.at(out.lambda);
  return out;
}

}  // namespace nonsmooth
