#pragma once

// Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "geoequiv/errors.hpp"

namespace geoequiv {

struct OdeOptions {
  double tol = 1e-10;       // local error per unit of parameter length
  double max_step = 1e-2;
  double min_step = 1e-13;
  double initial_step = 1e-3;
  std::size_t max_steps = 5'000'000;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> dy;
  bool stopped = false;  // stopped early because the state left the admissible set
};

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
using OdeGuard = std::function<bool(const Eigen::VectorXd&)>;

/// Integrates y' = f(t, y) from t0 over a signed length T. Stops early (stopped = true) when
/// `inside` rejects a state or f raises DomainError there.
inline OdeSolution dormand_prince(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double T,
                                  const OdeOptions& opt, const OdeGuard& inside = {}) {
  using V = Eigen::VectorXd;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!(opt.tol > 0.0) || !(opt.max_step > 0.0)) throw ArgumentError("integrator tolerances must be positive");
  OdeSolution sol;
  V y = y0, k1(y0.size());
  f(t0, y, k1);
  sol.t.push_back(t0);
  sol.y.push_back(y);
  sol.dy.push_back(k1);
  if (T == 0.0) return sol;

  double dir = T > 0 ? 1.0 : -1.0;
  double t = t0, t_end = t0 + T;
  double h = std::min({opt.initial_step, opt.max_step, std::abs(T)});
  V k2, k3, k4, k5, k6, k7, yn, tmp, err;
  std::size_t steps = 0;
  while (dir * (t_end - t) > 0.0) {
    if (++steps > opt.max_steps) throw NumericError("integrator exceeded the step budget");
    bool last = false;
    if (h >= std::abs(t_end - t)) {
      h = std::abs(t_end - t);
      last = true;
    }
    double hs = dir * h;
    try {
      tmp = y + hs * a21 * k1;
      f(t + c2 * hs, tmp, k2);
      tmp = y + hs * (a31 * k1 + a32 * k2);
      f(t + c3 * hs, tmp, k3);
      tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      f(t + c4 * hs, tmp, k4);
      tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(t + c5 * hs, tmp, k5);
      tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(t + hs, tmp, k6);
      yn = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      f(t + hs, yn, k7);
    } catch (const DomainError&) {
      // a stage left the domain of the vector field: shrink, and give up once the step is tiny
      if (h <= 1e3 * opt.min_step) {
        sol.stopped = true;
        return sol;
      }
      h *= 0.25;
      continue;
    }
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      en = std::max(en, std::abs(err[i]) / (1.0 + std::max(std::abs(y[i]), std::abs(yn[i]))));
    double allowed = opt.tol * h;
    if (en <= allowed || h <= opt.min_step) {
      if (h <= opt.min_step && en > allowed) throw NumericError("step size underflow");
      if (inside && !inside(yn)) {
        sol.stopped = true;
        return sol;
      }
      t = last ? t_end : t + hs;
      y = yn;
      k1 = k7;
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.dy.push_back(k1);
    }
    double factor = en == 0.0 ? 5.0 : 0.9 * std::pow(allowed / en, 0.25);
    h = std::min(opt.max_step, h * std::clamp(factor, 0.2, 5.0));
  }
  return sol;
}

/// Cubic Hermite interpolation between samples i and i+1 at local parameter s in [0, 1].
inline Eigen::VectorXd hermite(const OdeSolution& s, std::size_t i, double u) {
  double h = s.t[i + 1] - s.t[i];
  double u2 = u * u, u3 = u2 * u;
  double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * s.y[i] + h10 * h * s.dy[i] + h01 * s.y[i + 1] + h11 * h * s.dy[i + 1];
}

}  // namespace geoequiv
