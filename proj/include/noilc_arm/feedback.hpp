#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "noilc_arm/pneumatics.hpp"

namespace noilc_arm {

// Outer-loop gains. Inputs are normalized angles, the output is a pressure
// difference in Pa. k_d multiplies the measured angular rate, so a negative
// k_d damps.
struct PidGains {
  double k_ff = 0.35e5;
  double k_p = 0.3e5;
  double k_i = 0.8e5;
  double k_d = -0.02e5;
  double windup_limit = 0.4e5;  // bound on |k_i * integral|, Pa

  void validate() const {
    if (!std::isfinite(k_ff) || !std::isfinite(k_p) || !std::isfinite(k_i) ||
        !std::isfinite(k_d) || !std::isfinite(windup_limit))
      throw InputError("PID gains must be finite");
    if (k_p < 0.0 || k_i < 0.0) throw InputError("k_p and k_i must be non-negative");
    if (windup_limit < 0.0) throw InputError("windup limit must be non-negative");
  }
};

struct PidState {
  double integral = 0.0;
  double prev_y = 0.0;
  double prev_e = 0.0;
  double rate = 0.0;  // filtered measurement derivative
  bool primed = false;
};

struct PidOutput {
  double u = 0.0;
  PidState state;
};

inline PidOutput pid_step(const PidGains& g, const PidState& s, double y_des, double y_meas,
                          double dt) {
  PidOutput out;
  PidState& n = out.state;
  n = s;
  const double e = y_des - y_meas;
  if (s.primed) {
    n.integral += 0.5 * (e + s.prev_e) * dt;
    // derivative of the measurement through a backward-Euler first-order
    // filter with time constant 2 dt
    const double tc = 2.0 * dt;
    const double raw = (y_meas - s.prev_y) / dt;
    n.rate += dt / (tc + dt) * (raw - s.rate);
  }
  if (g.k_i > 0.0) {
    const double bound = g.windup_limit / g.k_i;
    n.integral = std::clamp(n.integral, -bound, bound);
  }
  n.prev_e = e;
  n.prev_y = y_meas;
  n.primed = true;
  out.u = g.k_ff * y_des + g.k_p * e + g.k_i * n.integral + g.k_d * n.rate;
  return out;
}

struct PressureSetpoints {
  double p_a = 0.0;
  double p_b = 0.0;
};

// Pressure-difference command to clamped per-actuator setpoints. Only one
// actuator is ever raised above ambient.
inline PressureSetpoints setpoints_from_input(double u_tot, const PneumaticConstants& c) {
  return {std::min(c.p_max, std::max(c.p0, c.p0 + u_tot)),
          std::min(c.p_max, std::max(c.p0, c.p0 - u_tot))};
}

}  // namespace noilc_arm
