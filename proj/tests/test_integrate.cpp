#include <catch2/catch_amalgamated.hpp>

#include "nonsmooth/integrate.hpp"
#include "nonsmooth/models.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace nonsmooth;
using Catch::Approx;

namespace {

State vec1(double a) {
  State v(1);
  v << a;
  return v;
}

State vec2v(double a, double b) {
  State v(2);
  v << a, b;
  return v;
}

State vec3v(double a, double b, double c) {
  State v(3);
  v << a, b, c;
  return v;
}

double sigma_of(const PiecewiseSystem& sys, const Sample& s) {
  return sys.surface.sigma(s.t, s.x);
}

}  // namespace

TEST_CASE("integrate_smooth basics") {
  SolverConfig cfg;

  SECTION("exponential decay hits the closed form") {
    auto f = [](double, const State& x) { return State(-x); };
    const Trajectory tr = integrate_smooth(f, vec1(1.0), 0.0, 1.0, cfg);
    REQUIRE(tr.ok());
    CHECK(tr.back().t == Approx(1.0));
    CHECK(tr.back().x[0] == Approx(std::exp(-1.0)).margin(1e-8));
  }

  SECTION("zero field is exactly constant") {
    auto f = [](double, const State& x) { return State(State::Zero(x.size())); };
    const Trajectory tr = integrate_smooth(f, vec2v(3.0, -4.0), 0.0, 7.0, cfg);
    REQUIRE(tr.ok());
    for (const Sample& s : tr.samples) {
      CHECK(s.x[0] == 3.0);
      CHECK(s.x[1] == -4.0);
    }
  }

  SECTION("zero-length span returns the single initial sample") {
    auto f = [](double, const State& x) { return State(-x); };
    const Trajectory tr = integrate_smooth(f, vec1(2.0), 1.5, 1.5, cfg);
    REQUIRE(tr.ok());
    REQUIRE(tr.samples.size() == 1);
    CHECK(tr.samples[0].t == 1.5);
  }

  SECTION("smooth branch agrees with a fixed-step RK4 oracle at halved steps") {
    const PiecewiseSystem ch = chua({});
    // stay inside the x1 > 0 region over a short horizon
    const State x0 = vec3v(1.0, 0.0, 0.0);
    const Trajectory tr = integrate_smooth(ch.f_plus, x0, 0.0, 0.5, cfg);
    REQUIRE(tr.ok());
    const auto coarse = oracles::rk4(ch.f_plus, x0, 0.0, 0.5, 1e-3);
    const auto fine = oracles::rk4(ch.f_plus, x0, 0.0, 0.5, 5e-4);
    CHECK((coarse.back() - fine.back()).norm() < 1e-6);  // oracle self-consistency
    CHECK((tr.back().x - fine.back()).norm() < 1e-6);
  }

  SECTION("dense output is accurate at interior points") {
    auto f = [](double t, const State& x) {
      State d(1);
      d[0] = std::cos(t) * x[0];
      return d;
    };
    SolverConfig dn = cfg;
    dn.dense_dt = 0.01;
    const Trajectory tr = integrate_smooth(f, vec1(1.0), 0.0, 3.0, dn);
    REQUIRE(tr.ok());
    REQUIRE(tr.samples.size() >= 300);
    for (const Sample& s : tr.samples)
      CHECK(s.x[0] == Approx(std::exp(std::sin(s.t))).margin(1e-7));
  }

  SECTION("finite-time blowup reports step underflow with the last valid state") {
    auto f = [](double, const State& x) { return State(x.cwiseProduct(x)); };
    const Trajectory tr = integrate_smooth(f, vec1(1.0), 0.0, 2.0, cfg);
    CHECK(tr.status == RunStatus::StepUnderflow);
    CHECK(tr.back().t > 0.9);
    CHECK(tr.back().t < 1.01);
    CHECK(std::isfinite(tr.back().x[0]));
  }

  SECTION("halving the tolerances moves the result less than 10x the coarse tolerance") {
    const PiecewiseSystem ch = chua({});
    const State x0 = vec3v(1.0, 0.0, 0.0);
    SolverConfig coarse = cfg;
    coarse.rel_tol = 1e-6;
    coarse.abs_tol = 1e-8;
    SolverConfig tight = coarse;
    tight.rel_tol /= 2.0;
    tight.abs_tol /= 2.0;
    const Trajectory a = integrate_smooth(ch.f_plus, x0, 0.0, 1.0, coarse);
    const Trajectory b = integrate_smooth(ch.f_plus, x0, 0.0, 1.0, tight);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK((a.back().x - b.back().x).norm() < 10.0 * 1e-6 * (1.0 + a.back().x.norm()));
  }
}

TEST_CASE("locate_event on constructed segments") {
  SwitchingSurface surf;
  surf.sigma = [](double, const State& x) { return x[0]; };
  surf.grad_sigma = [](double, const State&) { return vec1(1.0); };

  SECTION("linear root") {
    DenseSegment seg{0.0, 1.0, [](double t) { return vec1(t - 0.3); }};
    const EventLocation ev = locate_event(seg, surf, 1e-10);
    REQUIRE(ev.kind == EventLocation::Kind::Crossing);
    CHECK(ev.t == Approx(0.3).margin(1e-9));
    CHECK(std::abs(ev.sigma) <= surf.on_tol);
  }

  SECTION("quadratic dip below on_tol without traversal is flagged grazing") {
    DenseSegment seg{0.0, 1.0,
                     [](double t) { return vec1((t - 0.5) * (t - 0.5) - 1e-20); }};
    const EventLocation ev = locate_event(seg, surf, 1e-10);
    REQUIRE(ev.kind == EventLocation::Kind::Grazing);
    CHECK(ev.t == Approx(0.5).margin(1e-5));
    CHECK(std::abs(ev.sigma) <= surf.on_tol);
  }

  SECTION("no sign change and no dip is a no-event signal") {
    DenseSegment seg{0.0, 1.0, [](double t) { return vec1(1.0 + t); }};
    CHECK(locate_event(seg, surf, 1e-10).kind == EventLocation::Kind::None);
  }

  SECTION("governor first crossing agrees with a brute-force dense scan") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);

    // oracle: fixed-step path of the minus branch, scanned at ~1e6 points
    const auto path = oracles::rk4(w.f_minus, x0, 0.0, 3.0, 3e-6);
    double t_oracle = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 1; i < path.x.size(); ++i) {
      if (path.x[i - 1][0] < 0.0 && path.x[i][0] >= 0.0) {
        t_oracle = 0.5 * (path.t[i - 1] + path.t[i]);
        break;
      }
    }
    REQUIRE(std::isfinite(t_oracle));

    SolverConfig cfg;
    const Trajectory tr = integrate_filippov(w, x0, 0.0, 3.0, cfg);
    REQUIRE(tr.ok());
    REQUIRE_FALSE(tr.events.empty());
    CHECK(tr.events.front().t == Approx(t_oracle).margin(1e-6));
  }
}

TEST_CASE("sat and regularized fields") {
  CHECK(sat(0.0, 0.3) == 0.0);
  CHECK(sat(0.05, 0.1) == Approx(0.5));
  CHECK(sat(0.2, 0.1) == 1.0);
  CHECK(sat(-0.2, 0.1) == -1.0);
  CHECK(sat(-0.05, 0.1) == Approx(-0.5));
  CHECK_THROWS_AS(sat(1.0, 0.0), std::invalid_argument);

  SECTION("coincides with the branch fields outside the band") {
    const PiecewiseSystem ch = chua({});
    const VectorField f = regularized_system(ch, 0.01);
    const State x = vec3v(0.02, 0.3, -0.1);
    CHECK((f(0.0, x) - ch.f_plus(0.0, x)).norm() == 0.0);
    const State xm = vec3v(-0.02, 0.3, -0.1);
    CHECK((f(0.0, xm) - ch.f_minus(0.0, xm)).norm() == 0.0);
  }

  SECTION("sign-term contribution vanishes on the surface") {
    const PiecewiseSystem ch = chua({});
    const VectorField f = regularized_system(ch, 0.01);
    const State x = vec3v(0.0, 0.3, -0.1);
    CHECK(f(0.0, x)[0] == Approx(8.4562 * 0.3).margin(1e-12));
  }

  SECTION("half-saturation inside the band") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const double eps = 0.01;
    const VectorField f = regularized_system(w, eps);
    const State x = vec3v(eps / 2.0, 0.3, 0.0);
    // friction term is 0.5 instead of 1
    CHECK(f(0.0, x)[0] == Approx(-1.5 * x[0] + 0.3 - 0.5));
  }

  SECTION("model without a sign channel is unsupported") {
    const PiecewiseSystem di = double_integrator_control();
    CHECK_THROWS_AS(regularized_system(di, 0.01), std::invalid_argument);
  }
}

TEST_CASE("event-driven integration") {
  SolverConfig cfg;

  SECTION("governor run reaches sliding and the sliding coordinate collapses") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const Trajectory tr = integrate_filippov(w, vec3v(-0.5, 1.0, 1.2), 0.0, 50.0, cfg);
    REQUIRE(tr.ok());
    bool slid = false;
    for (const TrajectoryEvent& e : tr.events)
      if (e.kind == EventKind::SlidingEntry) slid = true;
    CHECK(slid);
    CHECK(std::abs(tr.back().x[0]) <= 1e-6);

    SECTION("sliding samples stay on the surface") {
      for (const Sample& s : tr.samples)
        if (s.mode == Mode::Sliding) CHECK(std::abs(sigma_of(w, s)) <= cfg.sliding_proj_tol);
    }
    SECTION("every event lies on the surface") {
      for (const TrajectoryEvent& e : tr.events)
        CHECK(std::abs(w.surface.sigma(e.t, e.x)) <= w.surface.on_tol);
    }
    SECTION("the convex weight stays admissible while sliding") {
      for (const Sample& s : tr.samples)
        if (s.mode == Mode::Sliding) {
          const SlidingField f = filippov_sliding_field(w, s.t, s.x);
          CHECK(f.alpha >= -1e-9);
          CHECK(f.alpha <= 1.0 + 1e-9);
        }
    }
    SECTION("times strictly increase and states stay finite") {
      for (size_t i = 1; i < tr.samples.size(); ++i) {
        CHECK(tr.samples[i].t > tr.samples[i - 1].t);
        CHECK(tr.samples[i].x.allFinite());
      }
    }
    SECTION("mode after a crossing matches the sigma side just past the event") {
      for (const TrajectoryEvent& e : tr.events) {
        if (e.kind != EventKind::Crossing) continue;
        for (const Sample& s : tr.samples) {
          if (s.t <= e.t + cfg.min_event_gap) continue;
          const double sg = sigma_of(w, s);
          if (std::abs(sg) <= w.surface.on_tol) break;  // entered the band again
          CHECK((sg > 0) == (s.mode == Mode::FlightPlus));
          break;
        }
      }
    }
  }

  SECTION("opposite-limit sliding is a hard equilibrium") {
    const PiecewiseSystem di = double_integrator_control();
    const State x0 = vec2v(0.5, 1.0);
    const Trajectory tr = integrate_filippov(di, x0, 0.0, 5.0, cfg);
    REQUIRE(tr.ok());
    CHECK((tr.back().x - x0).norm() <= 1e-9);
    for (const Sample& s : tr.samples) CHECK(s.mode == Mode::Sliding);
  }

  SECTION("zero horizon gives the single initial sample") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const Trajectory tr = integrate_filippov(w, vec3v(-0.5, 1.0, 1.2), 2.0, 2.0, cfg);
    REQUIRE(tr.ok());
    CHECK(tr.samples.size() == 1);
    CHECK(tr.events.empty());
  }

  SECTION("surface-free run equals the smooth branch integration") {
    const PiecewiseSystem d = drilling_reduced({10.0, 5.0, 1.0, 10.0});
    const State x0 = vec3v(0.4, -0.09, -0.01);  // near the loaded equilibrium, s < c
    SolverConfig dn = cfg;
    dn.dense_dt = 0.01;
    const Trajectory a = integrate_filippov(d, x0, 0.0, 5.0, dn);
    const Trajectory b = integrate_smooth(d.f_plus, x0, 0.0, 5.0, dn);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.events.empty());
    CHECK(trajectory_distance(a, b, 0.01) <= 10.0 * (cfg.rel_tol + cfg.abs_tol) * 10.0);
  }

  SECTION("event budget converts chattering into a diagnosable error") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    SolverConfig small = cfg;
    small.max_events = 2;
    const Trajectory tr = integrate_filippov(w, vec3v(-0.5, 1.0, 1.2), 0.0, 50.0, small);
    CHECK(tr.status == RunStatus::MaxEventsExceeded);
    CHECK_FALSE(tr.samples.empty());
    CHECK(tr.back().t < 50.0);
  }

  SECTION("a tangential touch is logged as grazing and flight resumes") {
    PiecewiseSystem sys;
    sys.dimension = 2;
    auto f = [](double, const State& x) { return vec2v(x[1], 1.0); };
    sys.f_plus = f;
    sys.f_minus = f;
    sys.surface.sigma = [](double, const State& x) { return x[0]; };
    sys.surface.grad_sigma = [](double, const State&) { return vec2v(1.0, 0.0); };
    sys = make_piecewise(std::move(sys));
    // parabolic arc whose minimum sits 1e-12 above the surface
    const State x0 = vec2v(0.005 + 1e-12, -0.1);
    const Trajectory tr = integrate_filippov(sys, x0, 0.0, 0.2, cfg);
    REQUIRE(tr.ok());
    REQUIRE(tr.events.size() == 1);
    CHECK(tr.events[0].kind == EventKind::Grazing);
    CHECK(tr.events[0].t == Approx(0.1).margin(1e-3));
    for (const Sample& s : tr.samples) CHECK(s.mode == Mode::FlightPlus);
  }

  SECTION("static friction sticks where the symmetric law releases") {
    Eigen::MatrixXd A(2, 2);
    A << 0, 1, -1, 0;
    Eigen::VectorXd b(2), cv(2);
    b << 0, -1;
    cv << 0, 1;
    const State rest = vec2v(1.5, 0.0);
    const Trajectory stick = integrate_filippov(
        friction_linear(A, b, cv, FrictionLaw::StaticExceeds, 2.0), rest, 0.0, 10.0, cfg);
    REQUIRE(stick.ok());
    CHECK((stick.back().x - rest).norm() <= 1e-9);

    const Trajectory slip = integrate_filippov(friction_linear(A, b, cv, FrictionLaw::Symmetric),
                                               rest, 0.0, 10.0, cfg);
    REQUIRE(slip.ok());
    CHECK((slip.back().x - rest).norm() > 0.1);
  }
}

TEST_CASE("regularized integration and distances") {
  SolverConfig cfg;
  cfg.dense_dt = 0.01;

  SECTION("per-epsilon run equals direct integration of the regularized field") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);
    const ApResult res = integrate_ap(w, x0, 0.0, 5.0, {1e-2, 1e-3}, cfg, {});
    REQUIRE(res.status == RunStatus::Ok);
    for (const ApRun& run : res.runs) {
      const Trajectory direct =
          integrate_smooth(regularized_system(w, run.eps), x0, 0.0, 5.0, cfg);
      CHECK(trajectory_distance(run.trajectory, direct, 0.01) <=
            10.0 * (cfg.rel_tol + cfg.abs_tol));
    }
  }

  SECTION("no surface contact makes every epsilon run match the event-driven one") {
    const PiecewiseSystem d = drilling_reduced({10.0, 5.0, 1.0, 10.0});
    const State x0 = vec3v(0.4, -0.09, -0.01);
    const Trajectory fil = integrate_filippov(d, x0, 0.0, 5.0, cfg);
    const ApResult res = integrate_ap(d, x0, 0.0, 5.0, {1e-2, 1e-3, 1e-4}, cfg, {});
    REQUIRE(fil.ok());
    REQUIRE(res.status == RunStatus::Ok);
    for (const ApRun& run : res.runs)
      CHECK(trajectory_distance(fil, run.trajectory, 0.01) <= 1e-5);
  }

  SECTION("small epsilon tracks the event-driven terminal state through sliding") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);
    const Trajectory fil = integrate_filippov(w, x0, 0.0, 10.0, cfg);
    const ApResult res = integrate_ap(w, x0, 0.0, 10.0, {1e-4}, cfg, {});
    REQUIRE(fil.ok());
    REQUIRE(res.status == RunStatus::Ok);
    CHECK((fil.back().x - res.final_trajectory().back().x).norm() <= 1e-3);
  }

  SECTION("continuation reuses the previous final state") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);
    ApOptions opts;
    opts.continuation = true;
    const ApResult res = integrate_ap(w, x0, 0.0, 2.0, {1e-2, 1e-3}, cfg, opts);
    REQUIRE(res.status == RunStatus::Ok);
    CHECK((res.runs[1].trajectory.front().x - res.runs[0].trajectory.back().x).norm() == 0.0);
  }

  SECTION("schedule validation") {
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);
    CHECK_THROWS_AS(integrate_ap(w, x0, 0, 1, {}, cfg, {}), std::invalid_argument);
    CHECK_THROWS_AS(integrate_ap(w, x0, 0, 1, {1e-3, 1e-2}, cfg, {}), std::invalid_argument);
    CHECK_THROWS_AS(integrate_ap(w, x0, 0, 1, {1e-2, -1e-3}, cfg, {}), std::invalid_argument);
  }

  SECTION("distance basics on synthetic trajectories") {
    Trajectory a, b;
    for (double t : {0.0, 1.0, 2.0}) {
      a.samples.push_back({t, vec2v(1.0, 2.0), Mode::FlightPlus});
      b.samples.push_back({t, vec2v(1.0, -1.0), Mode::FlightPlus});
    }
    CHECK(trajectory_distance(a, a, 0.1) == 0.0);
    CHECK(trajectory_distance(a, b, 0.1) == Approx(3.0));

    Trajectory c;
    c.samples.push_back({5.0, vec2v(0, 0), Mode::FlightPlus});
    c.samples.push_back({6.0, vec2v(0, 0), Mode::FlightPlus});
    CHECK_THROWS_AS(trajectory_distance(a, c, 0.1), std::domain_error);
  }

  SECTION("coarse distance grid stays within 5% of a dense one") {
    // window chosen to cover the sliding entry and the sliding stretch but
    // not the exit event, where the profile is a spike narrower than any
    // fixed grid
    const PiecewiseSystem w = watt({1.5, 1.1});
    const State x0 = vec3v(-0.5, 1.0, 1.2);
    SolverConfig fine = cfg;
    fine.dense_dt = 1e-3;
    const Trajectory fil = integrate_filippov(w, x0, 0.0, 4.0, fine);
    const ApResult res = integrate_ap(w, x0, 0.0, 4.0, {1e-3}, fine, {});
    REQUIRE(fil.ok());
    const double coarse = trajectory_distance(fil, res.final_trajectory(), 1e-2);
    const double dense = trajectory_distance(fil, res.final_trajectory(), 1e-4);
    CHECK(coarse == Approx(dense).epsilon(0.05));
  }
}
