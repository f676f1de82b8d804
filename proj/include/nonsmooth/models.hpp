#pragma once

// Benchmark systems: the induction-motor drill with asymmetric locking
// friction (full and reduced coordinates), the Watt governor with dry
// friction, the Chua circuit with a discontinuous characteristic, the
// time-optimal double integrator, and a generic linear system driven by a
// relay/friction law.

#include "nonsmooth/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonsmooth {

// ---------------------------------------------------------------------------
// Drilling system
// ---------------------------------------------------------------------------

/// Reduced drill model parameters: a = beta*(S*B)^2/(I*L), c = R/L (field
/// angular speed), gamma = T0/I (load level), M_lock the locking asymmetry
/// factor of the friction torque [-gamma*M, gamma].
struct DrillingParams {
  double a;
  double c;
  double gamma;
  double M_lock;

  void validate() const {
    if (!(a > 0.0) || !(c > 0.0)) throw std::invalid_argument("DrillingParams: a, c must be > 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("DrillingParams: gamma must be >= 0");
    if (!(M_lock > 0.0)) throw std::invalid_argument("DrillingParams: M_lock must be > 0");
  }
};

/// Electromechanical drill model parameters (induction motor + resistance
/// torque T0 with locking factor M_lock).
struct DrillingMotorParams {
  double L;
  double R;
  double S;
  double B;
  double I_inertia;
  double beta;
  double T0;
  double M_lock;

  void validate() const {
    if (!(L > 0 && R > 0 && S > 0 && B > 0 && I_inertia > 0 && beta > 0))
      throw std::invalid_argument("DrillingMotorParams: physical constants must be > 0");
    if (!(T0 >= 0.0)) throw std::invalid_argument("DrillingMotorParams: T0 must be >= 0");
    if (!(M_lock > 0.0)) throw std::invalid_argument("DrillingMotorParams: M_lock must be > 0");
  }

  DrillingParams reduced() const {
    validate();
    return DrillingParams{beta * (S * B) * (S * B) / (I_inertia * L), R / L, T0 / I_inertia,
                          M_lock};
  }
};

/// Sudden load change from gamma0 to gamma1 at time tau.
struct LoadChangeScenario {
  double gamma0;
  double gamma1;
  double tau = 0.0;

  void validate() const {
    if (!(gamma0 >= 0.0) || !(gamma0 < gamma1))
      throw std::invalid_argument("LoadChangeScenario: need 0 <= gamma0 < gamma1");
  }
};

/// Reduced drill system, state (s, y, x):
///   s' in a*y + Mf(s),   y' = -c*y - s - x*s,   x' = -c*x + y*s
/// with Mf = gamma for s < c, Mf = -gamma*M for s > c and the segment
/// [-gamma*M, gamma] on s = c. The switching function is sigma = c - s so the
/// drilling region s < c is the plus side.
inline PiecewiseSystem drilling_reduced(const DrillingParams& p) {
  p.validate();
  const double a = p.a, c = p.c, g = p.gamma, M = p.M_lock;
  const double mid = 0.5 * (g - g * M);
  const double half = 0.5 * (g + g * M);
  auto rhs = [a, c](const State& u, double Mf) {
    State f(3);
    f[0] = a * u[1] + Mf;
    f[1] = -c * u[1] - u[0] - u[2] * u[0];
    f[2] = -c * u[2] + u[1] * u[0];
    return f;
  };
  PiecewiseSystem sys;
  sys.dimension = 3;
  sys.name = "drilling";
  sys.f_plus = [rhs, g](double, const State& u) { return rhs(u, g); };
  sys.f_minus = [rhs, g, M](double, const State& u) { return rhs(u, -g * M); };
  sys.surface.sigma = [c](double, const State& u) { return c - u[0]; };
  sys.surface.grad_sigma = [](double, const State&) {
    State n(3);
    n << -1.0, 0.0, 0.0;
    return n;
  };
  sys.channel = SignChannel{
      [rhs, mid](double, const State& u) { return rhs(u, mid); },
      [half](double, const State&) {
        State h(3);
        h << half, 0.0, 0.0;
        return h;
      }};
  return make_piecewise(std::move(sys));
}

/// Full electromechanical drill, state (i1, i2, theta, theta_dot):
///   L*i1' + R*i1 = S*B*sin(theta)*theta_dot
///   L*i2' + R*i2 = S*B*cos(theta)*theta_dot
///   I*theta'' in -beta*S*B*(i1*sin(theta) + i2*cos(theta)) + Mf(omega)
/// where omega = theta_dot + R/L and Mf = -T0 for omega > 0, M*T0 for
/// omega < 0, [-T0, M*T0] at omega = 0.
inline PiecewiseSystem drilling_motor(const DrillingMotorParams& p) {
  p.validate();
  const double L = p.L, R = p.R, SB = p.S * p.B, I = p.I_inertia, beta = p.beta;
  const double T0 = p.T0, M = p.M_lock;
  auto rhs = [L, R, SB, I, beta](const State& u, double Mf) {
    const double i1 = u[0], i2 = u[1], th = u[2], thd = u[3];
    State f(4);
    f[0] = (SB * std::sin(th) * thd - R * i1) / L;
    f[1] = (SB * std::cos(th) * thd - R * i2) / L;
    f[2] = thd;
    f[3] = (-beta * SB * (i1 * std::sin(th) + i2 * std::cos(th)) + Mf) / I;
    return f;
  };
  const double mid = 0.5 * (-T0 + M * T0);
  const double half = 0.5 * (-T0 - M * T0);
  PiecewiseSystem sys;
  sys.dimension = 4;
  sys.name = "drilling-motor";
  sys.f_plus = [rhs, T0](double, const State& u) { return rhs(u, -T0); };
  sys.f_minus = [rhs, T0, M](double, const State& u) { return rhs(u, M * T0); };
  sys.surface.sigma = [R, L](double, const State& u) { return u[3] + R / L; };
  sys.surface.grad_sigma = [](double, const State&) {
    State n(4);
    n << 0.0, 0.0, 0.0, 1.0;
    return n;
  };
  sys.channel = SignChannel{
      [rhs, mid](double, const State& u) { return rhs(u, mid); },
      [half, I](double, const State&) {
        State h(4);
        h << 0.0, 0.0, 0.0, half / I;
        return h;
      }};
  return make_piecewise(std::move(sys));
}

/// Change of variables from motor coordinates (i1, i2, theta, theta_dot) to
/// the reduced (s, y, x):
///   s = -theta_dot
///   x = L/(S*B) * (i1*cos(theta) - i2*sin(theta))
///   y = L/(S*B) * (i1*sin(theta) + i2*cos(theta))
inline State motor_to_reduced(const State& u, const DrillingMotorParams& p) {
  const double r = p.L / (p.S * p.B);
  const double i1 = u[0], i2 = u[1], th = u[2];
  State v(3);
  v[0] = -u[3];
  v[1] = r * (i1 * std::sin(th) + i2 * std::cos(th));
  v[2] = r * (i1 * std::cos(th) - i2 * std::sin(th));
  return v;
}

/// Inverse of motor_to_reduced; theta is not recoverable from (s, y, x) and
/// must be supplied.
inline State reduced_to_motor(const State& v, double theta, const DrillingMotorParams& p) {
  const double r = p.S * p.B / p.L;
  const double s = v[0], y = v[1], x = v[2];
  State u(4);
  u[0] = r * (x * std::cos(theta) + y * std::sin(theta));
  u[1] = r * (-x * std::sin(theta) + y * std::cos(theta));
  u[2] = theta;
  u[3] = -s;
  return u;
}

// ---------------------------------------------------------------------------
// Watt governor
// ---------------------------------------------------------------------------

struct WattParams {
  double A = 1.5;
  double B = 1.1;
};

/// Watt governor with dry friction, state (y1, y2, y3):
///   y1' in -A*y1 + y2 - Sign(y1),  y2' = -B*y1 + y3,  y3' = -y1
inline PiecewiseSystem watt(const WattParams& p) {
  const double A = p.A, B = p.B;
  auto rhs = [A, B](const State& y, double sg) {
    State f(3);
    f[0] = -A * y[0] + y[1] - sg;
    f[1] = -B * y[0] + y[2];
    f[2] = -y[0];
    return f;
  };
  PiecewiseSystem sys;
  sys.dimension = 3;
  sys.name = "watt";
  sys.f_plus = [rhs](double, const State& y) { return rhs(y, 1.0); };
  sys.f_minus = [rhs](double, const State& y) { return rhs(y, -1.0); };
  sys.surface.sigma = [](double, const State& y) { return y[0]; };
  sys.surface.grad_sigma = [](double, const State&) {
    State n(3);
    n << 1.0, 0.0, 0.0;
    return n;
  };
  sys.channel = SignChannel{[rhs](double, const State& y) { return rhs(y, 0.0); },
                            [](double, const State&) {
                              State h(3);
                              h << -1.0, 0.0, 0.0;
                              return h;
                            }};
  return make_piecewise(std::move(sys));
}

// ---------------------------------------------------------------------------
// Chua circuit
// ---------------------------------------------------------------------------

struct ChuaParams {
  double alpha = 8.4562;
  double beta = 12.0732;
  double gamma_c = 0.0052;
  double m0 = -0.1768;
  double m1 = -1.1468;
};

/// Chua circuit with a discontinuous characteristic, state (x1, x2, x3):
///   x1' in -alpha*(m1+1)*x1 + alpha*x2 - alpha*(m0-m1)*Sign(x1)
///   x2' = x1 - x2 + x3
///   x3' = -beta*x2 - gamma_c*x3
inline PiecewiseSystem chua(const ChuaParams& p) {
  const double al = p.alpha, be = p.beta, ga = p.gamma_c, m0 = p.m0, m1 = p.m1;
  auto rhs = [al, be, ga, m0, m1](const State& x, double sg) {
    State f(3);
    f[0] = -al * (m1 + 1.0) * x[0] + al * x[1] - al * (m0 - m1) * sg;
    f[1] = x[0] - x[1] + x[2];
    f[2] = -be * x[1] - ga * x[2];
    return f;
  };
  PiecewiseSystem sys;
  sys.dimension = 3;
  sys.name = "chua";
  sys.f_plus = [rhs](double, const State& x) { return rhs(x, 1.0); };
  sys.f_minus = [rhs](double, const State& x) { return rhs(x, -1.0); };
  sys.surface.sigma = [](double, const State& x) { return x[0]; };
  sys.surface.grad_sigma = [](double, const State&) {
    State n(3);
    n << 1.0, 0.0, 0.0;
    return n;
  };
  sys.channel = SignChannel{[rhs](double, const State& x) { return rhs(x, 0.0); },
                            [al, m0, m1](double, const State&) {
                              State h(3);
                              h << -al * (m0 - m1), 0.0, 0.0;
                              return h;
                            }};
  return make_piecewise(std::move(sys));
}

// ---------------------------------------------------------------------------
// Time-optimal double integrator
// ---------------------------------------------------------------------------

/// First-quadrant synthesis of the time-optimal control for
///   x1' = x2*u1,  x2' = u2,  |u1| <= 1, |u2| <= 1
/// switching on the parabola sigma = x1 - 0.5*x2^2. The sliding field on the
/// switching curve is identically zero because the one-sided limits are exact
/// opposites.
inline PiecewiseSystem double_integrator_control() {
  auto guard = [](const State& x) {
    if (x[0] < -1e-9 || x[1] < -1e-9)
      throw std::domain_error("double_integrator_control: state left the first quadrant");
  };
  PiecewiseSystem sys;
  sys.dimension = 2;
  sys.name = "double-integrator";
  // sigma > 0 (x1 > 0.5*x2^2): u1 = -1, u2 = +1
  sys.f_plus = [guard](double, const State& x) {
    guard(x);
    State f(2);
    f << -x[1], 1.0;
    return f;
  };
  // sigma < 0: u1 = +1, u2 = -1
  sys.f_minus = [guard](double, const State& x) {
    guard(x);
    State f(2);
    f << x[1], -1.0;
    return f;
  };
  sys.surface.sigma = [](double, const State& x) { return x[0] - 0.5 * x[1] * x[1]; };
  sys.surface.grad_sigma = [](double, const State& x) {
    State n(2);
    n << 1.0, -x[1];
    return n;
  };
  // the control switch is not a scalar sign channel in the field components
  sys.channel = std::nullopt;
  return make_piecewise(std::move(sys));
}

// ---------------------------------------------------------------------------
// Linear system with relay / friction characteristic
// ---------------------------------------------------------------------------

enum class FrictionLaw {
  Symmetric,      // phi(0) = [-1, 1]: the Filippov hull
  StaticExceeds,  // phi(0) = [-alpha_s, alpha_s], alpha_s > 1: static friction
};

/// x' = A*x + b*phi(sigma), sigma = c.x, phi = sign off the surface. The
/// surface law at sigma = 0 is the interval [-1,1] (Symmetric) or
/// [-alpha_s, alpha_s] (StaticExceeds); the latter is strictly wider than the
/// hull of the branch limits and models stiction.
inline PiecewiseSystem friction_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       const Eigen::VectorXd& c_vec, FrictionLaw law,
                                       double alpha_s = 1.0) {
  const int n = static_cast<int>(b.size());
  if (A.rows() != n || A.cols() != n || c_vec.size() != n)
    throw std::invalid_argument("friction_linear: inconsistent dimensions");
  if (law == FrictionLaw::StaticExceeds && !(alpha_s > 1.0))
    throw std::invalid_argument(
        "friction_linear: StaticExceeds requires alpha_s > 1 (otherwise the law degenerates "
        "to the symmetric hull)");
  const double span = (law == FrictionLaw::StaticExceeds) ? alpha_s : 1.0;
  PiecewiseSystem sys;
  sys.dimension = n;
  sys.name = "friction-linear";
  sys.f_plus = [A, b](double, const State& x) { return State(A * x + b); };
  sys.f_minus = [A, b](double, const State& x) { return State(A * x - b); };
  sys.surface.sigma = [c_vec](double, const State& x) { return c_vec.dot(x); };
  sys.surface.grad_sigma = [c_vec](double, const State&) { return State(c_vec); };
  sys.surface_set = [A, b, span](double, const State& x) {
    // A*x + b*[-span, span]
    return SegmentSet(State(A * x - span * b), State(2.0 * span * b), 0.0, 1.0);
  };
  sys.channel = SignChannel{[A](double, const State& x) { return State(A * x); },
                            [b](double, const State&) { return State(b); }};
  return make_piecewise(std::move(sys));
}

// ---------------------------------------------------------------------------
// Flat key = value parameter records
// ---------------------------------------------------------------------------

using ParamRecord = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment, blank lines ignored.
inline ParamRecord parse_param_text(const std::string& text) {
  ParamRecord rec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("parameter record line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("parameter record line " + std::to_string(lineno) +
                                  ": empty key or value");
    if (rec.count(key))
      throw std::invalid_argument("parameter record: duplicate key '" + key + "'");
    rec[key] = val;
  }
  return rec;
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("parameter '" + key + "': not a number: " + v);
  }
  while (pos < v.size() && (v[pos] == ' ' || v[pos] == '\t')) ++pos;
  if (pos != v.size())
    throw std::invalid_argument("parameter '" + key + "': trailing characters in " + v);
  return x;
}

inline std::vector<double> to_reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(to_real(key, item));
  if (out.empty()) throw std::invalid_argument("parameter '" + key + "': empty list");
  return out;
}

class RecordReader {
 public:
  RecordReader(std::string model, const ParamRecord& rec) : model_(std::move(model)), rec_(rec) {}

  double real(const std::string& key) { return to_real(key, fetch(key)); }
  std::vector<double> reals(const std::string& key) { return to_reals(key, fetch(key)); }
  std::string text(const std::string& key) { return fetch(key); }
  bool has(const std::string& key) const { return rec_.count(key) > 0; }

  void finish() const {
    for (const auto& [k, v] : rec_)
      if (!used_.count(k))
        throw std::invalid_argument("model '" + model_ + "': unknown parameter '" + k + "'");
  }

 private:
  std::string fetch(const std::string& key) {
    auto it = rec_.find(key);
    if (it == rec_.end())
      throw std::invalid_argument("model '" + model_ + "': missing parameter '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string model_;
  const ParamRecord& rec_;
  std::set<std::string> used_;
};

}  // namespace detail

/// Builds a named model from a flat parameter record. Unknown keys are
/// rejected. Model names: drilling, drilling-motor, watt, chua,
/// double-integrator, friction-linear.
inline PiecewiseSystem make_system(const std::string& model, const ParamRecord& rec) {
  detail::RecordReader r(model, rec);
  if (model == "drilling") {
    DrillingParams p{r.real("a"), r.real("c"), r.real("gamma"), r.real("M_lock")};
    r.finish();
    return drilling_reduced(p);
  }
  if (model == "drilling-motor") {
    DrillingMotorParams p{r.real("L"), r.real("R"),         r.real("S"),  r.real("B"),
                          r.real("I_inertia"), r.real("beta"), r.real("T0"), r.real("M_lock")};
    r.finish();
    return drilling_motor(p);
  }
  if (model == "watt") {
    WattParams p{r.real("A"), r.real("B")};
    r.finish();
    return watt(p);
  }
  if (model == "chua") {
    ChuaParams p{r.real("alpha"), r.real("beta"), r.real("gamma_c"), r.real("m0"), r.real("m1")};
    r.finish();
    return chua(p);
  }
  if (model == "double-integrator") {
    r.finish();
    return double_integrator_control();
  }
  if (model == "friction-linear") {
    const std::vector<double> bv = r.reals("b");
    const std::vector<double> cv = r.reals("c_vec");
    const std::vector<double> av = r.reals("A_matrix");
    const std::string law_s = r.text("law");
    FrictionLaw law;
    double alpha_s = 1.0;
    if (law_s == "SYMMETRIC") {
      law = FrictionLaw::Symmetric;
    } else if (law_s == "STATIC_EXCEEDS") {
      law = FrictionLaw::StaticExceeds;
      alpha_s = r.real("alpha_s");
    } else {
      throw std::invalid_argument("friction-linear: law must be SYMMETRIC or STATIC_EXCEEDS");
    }
    const int n = static_cast<int>(bv.size());
    if (static_cast<int>(av.size()) != n * n || static_cast<int>(cv.size()) != n)
      throw std::invalid_argument("friction-linear: A_matrix must have n*n entries (row-major) "
                                  "and c_vec n entries, n = len(b)");
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = av[i * n + j];
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bv.data(), n);
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cv.data(), n);
    r.finish();
    return friction_linear(A, b, c, law, alpha_s);
  }
  throw std::invalid_argument("unknown model '" + model + "'");
}

}  // namespace nonsmooth
