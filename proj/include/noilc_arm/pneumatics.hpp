#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <utility>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/lti.hpp"

namespace noilc_arm {

// Isothermal single-actuator gas constants and the pressure-loop tuning.
// Pressures are absolute.
struct PneumaticConstants {
  double R = 287.0;       // J/(kg K)
  double T = 293.0;       // K
  double V = 0.45e-3;     // m^3
  double p0 = 1.0e5;      // Pa, ambient
  double p_src = 3.0e5;   // Pa
  double p_max = 1.4e5;   // Pa
  double tau_p = 0.02;    // s

  void validate() const {
    if (!(p0 < p_max && p_max < p_src))
      throw InvalidModelError("pneumatic constants need p0 < p_max < p_src");
    if (!(V > 0.0) || !(tau_p > 0.0) || !(T > 0.0) || !(R > 0.0))
      throw InvalidModelError("pneumatic constants need positive V, tau_p, T, R");
  }

  // dp/dt per unit mass flow at the nominal volume.
  double pressure_gain() const { return R * T / V; }
};

// Averaged switching-valve bank: two-regime orifice (choked below the
// critical pressure ratio, elliptic above), linear in the PWM duty cycle.
struct ValveParams {
  double c_flow = 2.4e-9;  // kg/(s Pa), per valve
  double b_crit = 0.3;
  double dc_min = 0.0;
  int n_parallel = 2;

  void validate() const {
    if (!(c_flow > 0.0)) throw InvalidModelError("valve c_flow must be positive");
    if (!(b_crit >= 0.0 && b_crit < 1.0)) throw InvalidModelError("valve b_crit must be in [0, 1)");
    if (!(dc_min >= 0.0 && dc_min < 1.0)) throw InvalidModelError("valve dc_min must be in [0, 1)");
    if (n_parallel < 1) throw InvalidModelError("valve n_parallel must be >= 1");
  }
};

// Angle-dependent actuator volume: V_a = V (1 + gamma alpha / alpha_range),
// V_b = V (1 - gamma alpha / alpha_range). The volume rate term compresses the
// deflating actuator during fast motion.
struct CouplingParams {
  bool enabled = true;
  double gamma = 0.3;
  double alpha_range = 95.0 * std::numbers::pi / 180.0;  // rad, per side
};

struct PneumaticPlantState {
  double p_a = 1.0e5;
  double p_b = 1.0e5;
  double alpha = 0.0;
  double alpha_dot = 0.0;

  double dp() const { return p_a - p_b; }

  static PneumaticPlantState at_rest(const PneumaticConstants& c) {
    return {c.p0, c.p0, 0.0, 0.0};
  }

  friend bool operator==(const PneumaticPlantState&, const PneumaticPlantState&) = default;
};

struct PlantParams {
  PneumaticConstants consts;
  ValveParams valve;
  CouplingParams coupling;
  SecondOrderModel arm;
  int substeps = 5;  // integration substeps per inner-loop period
};

inline double valve_mass_flow(double p_u, double p_d, double dc, const ValveParams& params) {
  if (!(dc >= 0.0 && dc <= 1.0)) throw InputError("duty cycle outside [0, 1]");
  if (dc <= params.dc_min || p_u <= p_d) return 0.0;
  const double ratio = p_d / p_u;
  double phi = 1.0;
  if (ratio > params.b_crit) {
    const double x = (ratio - params.b_crit) / (1.0 - params.b_crit);
    phi = std::sqrt(std::max(0.0, 1.0 - x * x));
  }
  return params.n_parallel * params.c_flow * p_u * phi * dc;
}

// First-order desired pressure dynamics inverted through the isothermal model.
inline double pressure_controller(double p_des, double p_meas, const PneumaticConstants& c) {
  return c.V / (c.R * c.T * c.tau_p) * (p_des - p_meas);
}

struct DutyCycles {
  double in = 0.0;
  double out = 0.0;
};

inline DutyCycles duty_cycles_from_mass_flow(double mdot_des, double p_act,
                                             const PneumaticConstants& c,
                                             const ValveParams& params) {
  DutyCycles dc;
  if (mdot_des > 0.0) {
    const double full = valve_mass_flow(c.p_src, p_act, 1.0, params);
    dc.in = full > 0.0 ? std::clamp(mdot_des / full, 0.0, 1.0) : 1.0;
  } else if (mdot_des < 0.0) {
    const double full = valve_mass_flow(p_act, c.p0, 1.0, params);
    dc.out = full > 0.0 ? std::clamp(-mdot_des / full, 0.0, 1.0) : 1.0;
  }
  return dc;
}

// Net mass flow into one actuator for the given duty cycles.
inline double actuator_mass_flow(double p_act, const DutyCycles& dc, const PneumaticConstants& c,
                                 const ValveParams& params) {
  return valve_mass_flow(c.p_src, p_act, dc.in, params) -
         valve_mass_flow(p_act, c.p0, dc.out, params);
}

struct PlantStepResult {
  PneumaticPlantState state;
  DutyCycles dc_a;
  DutyCycles dc_b;
  int clamp_events = 0;
};

// One inner-loop period. Duty cycles are computed once from the measured
// pressures and held for the period; pressures and the arm are integrated
// with `substeps` semi-implicit Euler steps.
inline PlantStepResult plant_step(const PneumaticPlantState& state, double p_a_des, double p_b_des,
                                  double dt, const PlantParams& pp, double p_a_meas,
                                  double p_b_meas) {
  const PneumaticConstants& c = pp.consts;
  PlantStepResult r;
  r.dc_a = duty_cycles_from_mass_flow(pressure_controller(p_a_des, p_a_meas, c), p_a_meas, c,
                                      pp.valve);
  r.dc_b = duty_cycles_from_mass_flow(pressure_controller(p_b_des, p_b_meas, c), p_b_meas, c,
                                      pp.valve);

  const double w2 = pp.arm.omega0 * pp.arm.omega0;
  const double damping = 2.0 * pp.arm.delta * pp.arm.omega0;
  const int n = std::max(1, pp.substeps);
  const double h = dt / n;
  const double gain = c.R * c.T;
  const double lo = 0.99 * c.p0;

  PneumaticPlantState s = state;
  for (int i = 0; i < n; ++i) {
    double va = c.V;
    double vb = c.V;
    double va_dot = 0.0;
    double vb_dot = 0.0;
    if (pp.coupling.enabled) {
      const double k = pp.coupling.gamma / pp.coupling.alpha_range;
      const double frac = std::clamp(k * s.alpha, -0.8, 0.8);
      va = c.V * (1.0 + frac);
      vb = c.V * (1.0 - frac);
      va_dot = c.V * k * s.alpha_dot;
      vb_dot = -va_dot;
    }
    const double mdot_a = actuator_mass_flow(s.p_a, r.dc_a, c, pp.valve);
    const double mdot_b = actuator_mass_flow(s.p_b, r.dc_b, c, pp.valve);
    double pa = s.p_a + h * (mdot_a * gain - s.p_a * va_dot) / va;
    double pb = s.p_b + h * (mdot_b * gain - s.p_b * vb_dot) / vb;
    if (pa < lo || pa > c.p_src) {
      pa = std::clamp(pa, lo, c.p_src);
      ++r.clamp_events;
    }
    if (pb < lo || pb > c.p_src) {
      pb = std::clamp(pb, lo, c.p_src);
      ++r.clamp_events;
    }
    s.p_a = pa;
    s.p_b = pb;

    const double dp_bar = (s.p_a - s.p_b) / 1e5;
    const double accel = w2 * (pp.arm.kappa * dp_bar - s.alpha) - damping * s.alpha_dot;
    s.alpha_dot += h * accel;
    s.alpha += h * s.alpha_dot;
  }
  r.state = s;
  return r;
}

inline PlantStepResult plant_step(const PneumaticPlantState& state, double p_a_des, double p_b_des,
                                  double dt, const PlantParams& pp) {
  return plant_step(state, p_a_des, p_b_des, dt, pp, state.p_a, state.p_b);
}

// Moving average over the last `window` pressure samples.
class MovingAverage {
 public:
  explicit MovingAverage(std::size_t window = 5) : window_(std::max<std::size_t>(1, window)) {}

  double push(double x) {
    buf_.push_back(x);
    sum_ += x;
    if (buf_.size() > window_) {
      sum_ -= buf_.front();
      buf_.pop_front();
    }
    return sum_ / static_cast<double>(buf_.size());
  }

  void reset() {
    buf_.clear();
    sum_ = 0.0;
  }

 private:
  std::size_t window_;
  std::deque<double> buf_;
  double sum_ = 0.0;
};

// Truth plant with its two inner pressure loops. Owns the measurement
// filters and the running clamp-event count.
class PneumaticArm {
 public:
  PneumaticArm(PlantParams params, bool filter_pressures, std::size_t filter_window = 5)
      : params_(std::move(params)),
        filter_(filter_pressures),
        fa_(filter_window),
        fb_(filter_window) {
    params_.consts.validate();
    params_.valve.validate();
    params_.arm.validate();
    reset(PneumaticPlantState::at_rest(params_.consts));
  }

  void reset(const PneumaticPlantState& s) {
    state_ = s;
    clamp_events_ = 0;
    fa_.reset();
    fb_.reset();
  }

  void step(double p_a_des, double p_b_des, double dt) {
    double pa_meas = state_.p_a;
    double pb_meas = state_.p_b;
    if (filter_) {
      pa_meas = fa_.push(state_.p_a);
      pb_meas = fb_.push(state_.p_b);
    }
    const PlantStepResult r = plant_step(state_, p_a_des, p_b_des, dt, params_, pa_meas, pb_meas);
    state_ = r.state;
    last_dc_a_ = r.dc_a;
    last_dc_b_ = r.dc_b;
    clamp_events_ += r.clamp_events;
  }

  const PneumaticPlantState& state() const { return state_; }
  const PlantParams& params() const { return params_; }
  int clamp_events() const { return clamp_events_; }
  DutyCycles last_dc_a() const { return last_dc_a_; }
  DutyCycles last_dc_b() const { return last_dc_b_; }

 private:
  PlantParams params_;
  bool filter_;
  MovingAverage fa_;
  MovingAverage fb_;
  PneumaticPlantState state_;
  DutyCycles last_dc_a_;
  DutyCycles last_dc_b_;
  int clamp_events_ = 0;
};

}  // namespace noilc_arm
