#pragma once

// Adaptive Dormand-Prince 5(4) stepper with the standard 4th-order continuous
// extension. The event-driven integrator drives it step by step and queries
// the dense output for surface-crossing roots.

#include "nonsmooth/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nonsmooth {

/// Continuous extension over one accepted step [t0, t0+h].
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  State r1, r2, r3, r4, r5;

  State eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }

  /// Allocation-free variant for tight scanning loops.
  void eval_into(double t, State& out) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    out = r4 + th1 * r5;
    out = r3 + th * out;
    out = r2 + th1 * out;
    out = r1 + th * out;
  }
};

class Dopri5 {
 public:
  Dopri5(VectorField f, double rel_tol, double abs_tol, double max_step)
      : f_(std::move(f)), rel_(rel_tol), abs_(abs_tol), hmax_(max_step) {
    if (rel_ <= 0 || abs_ <= 0 || hmax_ <= 0)
      throw std::invalid_argument("Dopri5: tolerances and max_step must be positive");
  }

  void reset(double t, State x) {
    t_ = t;
    x_ = std::move(x);
    k1_ = f_(t_, x_);
    h_ = 0.0;   // re-derive on next step
  }

  /// Overwrites the current state (used by sliding projection); restores FSAL.
  void set_state(const State& x) {
    x_ = x;
    k1_ = f_(t_, x_);
  }

  double t() const { return t_; }
  const State& x() const { return x_; }
  const DenseStep& last_step() const { return dense_; }

  /// One accepted adaptive step, not beyond t_end. Returns false on step
  /// underflow (the state stays at the last accepted point).
  bool step(double t_end) {
    const double direction = 1.0;   // forward integration only
    if (h_ == 0.0) h_ = initial_step(t_end);
    const int n = static_cast<int>(x_.size());
    State k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), ynew(n);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      double h = std::min({h_, hmax_, t_end - t_});
      if (h <= tiny_step()) return false;

      y = x_ + h * (a21 * k1_);
      k2 = f_(t_ + c2 * h, y);
      y = x_ + h * (a31 * k1_ + a32 * k2);
      k3 = f_(t_ + c3 * h, y);
      y = x_ + h * (a41 * k1_ + a42 * k2 + a43 * k3);
      k4 = f_(t_ + c4 * h, y);
      y = x_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = f_(t_ + c5 * h, y);
      y = x_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = f_(t_ + h, y);
      ynew = x_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f_(t_ + h, ynew);

      // scaled RMS error of the embedded 4th-order difference
      double err = 0.0;
      bool finite = ynew.allFinite();
      if (finite) {
        for (int i = 0; i < n; ++i) {
          const double e = h * (e1 * k1_[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                e6 * k6[i] + e7 * k7[i]);
          const double sc = abs_ + rel_ * std::max(std::abs(x_[i]), std::abs(ynew[i]));
          err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / n);
      } else {
        err = 1e10;
      }

      if (err <= 1.0) {
        build_dense(h, k3, k4, k5, k6, k7, ynew);
        t_ += h;
        x_ = ynew;
        k1_ = k7;   // FSAL
        const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
        h_ = h * fac * direction;
        return true;
      }
      const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
      h_ = h * fac;
    }
    return false;
  }

 private:
  double tiny_step() const {
    return 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
  }

  double initial_step(double t_end) const {
    // small trial step scaled to the field magnitude (cheap variant of the
    // usual starting-step heuristic; the controller adapts within a few steps)
    const double d0 = x_.norm();
    const double d1 = k1_.norm();
    double h = (d1 > 1e-10) ? 0.01 * std::max(d0, 1.0) / d1 : 1e-6;
    return std::min({h, hmax_, std::max(t_end - t_, 0.0)});
  }

  void build_dense(double h, const State& k3, const State& k4, const State& k5,
                   const State& k6, const State& k7, const State& ynew) {
    dense_.t0 = t_;
    dense_.h = h;
    dense_.r1 = x_;
    dense_.r2 = ynew - x_;
    dense_.r3 = h * k1_ - dense_.r2;
    dense_.r4 = dense_.r2 - h * k7 - dense_.r3;
    dense_.r5 = h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
  }

  // Dormand-Prince 5(4) tableau
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
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  VectorField f_;
  double rel_, abs_, hmax_;
  double t_ = 0.0;
  double h_ = 0.0;
  State x_, k1_;
  DenseStep dense_;
};

}  // namespace nonsmooth
