#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "noilc_arm/csv.hpp"
#include "noilc_arm/errors.hpp"

namespace noilc_arm {

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Waypoint {
  double t = 0.0;      // s, start of the transition into `angle`
  double angle = 0.0;  // rad
};

// The first waypoint fixes the initial angle. Every later waypoint starts a
// rest-to-rest trapezoidal-velocity move towards its angle at its time.
struct TrapezoidSpec {
  std::vector<Waypoint> waypoints;
  double a_max = deg2rad(12000.0);  // rad/s^2
  double v_max = 0.0;               // rad/s
  double Ts = 0.02;                 // s
  double duration = 8.0;            // s
};

struct Trajectory {
  double Ts = 0.02;
  std::vector<double> angle;  // rad, sample k at t = k Ts

  std::size_t size() const { return angle.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * Ts; }
};

// Rest-to-rest move of length `distance` under acceleration and velocity limits.
struct TrapezoidProfile {
  double distance = 0.0;
  double accel = 0.0;
  double t_acc = 0.0;    // accelerating (and decelerating) phase length
  double t_coast = 0.0;  // constant-velocity phase length

  static TrapezoidProfile plan(double distance, double a_max, double v_max) {
    TrapezoidProfile p;
    p.distance = distance;
    p.accel = a_max;
    if (distance <= 0.0) return p;
    if (distance * a_max <= v_max * v_max) {
      p.t_acc = std::sqrt(distance / a_max);
    } else {
      p.t_acc = v_max / a_max;
      p.t_coast = (distance - v_max * v_max / a_max) / v_max;
    }
    return p;
  }

  double duration() const { return 2.0 * t_acc + t_coast; }

  double position(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (tau >= duration()) return distance;
    const double v_peak = accel * t_acc;
    const double d_acc = 0.5 * accel * t_acc * t_acc;
    if (tau < t_acc) return 0.5 * accel * tau * tau;
    if (tau < t_acc + t_coast) return d_acc + v_peak * (tau - t_acc);
    const double r = duration() - tau;
    return distance - 0.5 * accel * r * r;
  }
};

// Peak velocity that makes a move of `distance` last exactly `move_time`
// while accelerating at a_max.
inline double vmax_for_move_time(double distance, double a_max, double move_time) {
  const double disc = a_max * a_max * move_time * move_time - 4.0 * a_max * distance;
  if (disc < 0.0)
    throw InputError("move cannot complete in the requested time at this acceleration");
  return 0.5 * (a_max * move_time - std::sqrt(disc));
}

inline std::size_t trajectory_length(double duration, double Ts) {
  return static_cast<std::size_t>(std::llround(duration / Ts));
}

inline void check_trapezoid_spec(const TrapezoidSpec& spec) {
  if (spec.waypoints.empty()) throw InputError("trapezoid spec has no waypoints");
  if (!(spec.a_max > 0.0) || !(spec.v_max > 0.0))
    throw InputError("trapezoid spec needs a_max > 0 and v_max > 0");
  if (!(spec.Ts > 0.0) || !(spec.duration > 0.0))
    throw InputError("trapezoid spec needs Ts > 0 and duration > 0");
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    if (!(spec.waypoints[i].t > spec.waypoints[i - 1].t))
      throw InfeasibleTrajectoryError(
          "segment " + std::to_string(i) + ": waypoint times must be strictly increasing", i);
  }
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    const double dist = std::abs(spec.waypoints[i].angle - spec.waypoints[i - 1].angle);
    const double need = TrapezoidProfile::plan(dist, spec.a_max, spec.v_max).duration();
    const double end =
        i + 1 < spec.waypoints.size() ? spec.waypoints[i + 1].t : spec.duration;
    const double avail = end - spec.waypoints[i].t;
    if (need > avail + 1e-12) {
      std::ostringstream msg;
      msg << "segment " << i << " (t=" << spec.waypoints[i].t << " s): transition needs " << need
          << " s but only " << avail << " s are available";
      throw InfeasibleTrajectoryError(msg.str(), i);
    }
  }
}

inline Trajectory generate_trapezoid(const TrapezoidSpec& spec) {
  check_trapezoid_spec(spec);
  const std::size_t N = trajectory_length(spec.duration, spec.Ts);
  if (N == 0) throw EmptyTrajectoryError("trajectory duration shorter than one sample");

  struct Move {
    double t0;
    double from;
    double sign;
    TrapezoidProfile profile;
  };
  std::vector<Move> moves;
  const auto& wp = spec.waypoints;
  for (std::size_t i = 1; i < wp.size(); ++i) {
    const double delta = wp[i].angle - wp[i - 1].angle;
    moves.push_back({wp[i].t, wp[i - 1].angle, delta >= 0.0 ? 1.0 : -1.0,
                     TrapezoidProfile::plan(std::abs(delta), spec.a_max, spec.v_max)});
  }

  Trajectory traj;
  traj.Ts = spec.Ts;
  traj.angle.resize(N);
  std::size_t m = 0;
  for (std::size_t k = 0; k < N; ++k) {
    const double t = static_cast<double>(k) * spec.Ts;
    while (m < moves.size() && t >= moves[m].t0) ++m;
    if (m == 0) {
      traj.angle[k] = wp.front().angle;
      continue;
    }
    const Move& mv = moves[m - 1];
    const double tau = t - mv.t0;
    const TrapezoidProfile& p = mv.profile;
    // land exactly on the waypoint once the move is over
    traj.angle[k] = tau >= p.duration() ? wp[m].angle : mv.from + mv.sign * p.position(tau);
  }
  return traj;
}

// Canonical evaluation schedule: 0 deg, then -30 at 1.6 s, +30 at 2.6 s,
// -30 at 3.6 s, +30 at 4.6 s and back to 0 at 6.0 s, over 8 s. The velocity
// limit is chosen so a 60 deg move takes 0.2 s at 12000 deg/s^2.
inline TrapezoidSpec paper_reference_spec(double Ts = 0.02) {
  TrapezoidSpec spec;
  spec.waypoints = {{0.0, 0.0},
                    {1.6, deg2rad(-30.0)},
                    {2.6, deg2rad(30.0)},
                    {3.6, deg2rad(-30.0)},
                    {4.6, deg2rad(30.0)},
                    {6.0, 0.0}};
  spec.a_max = deg2rad(12000.0);
  spec.v_max = vmax_for_move_time(deg2rad(60.0), spec.a_max, 0.2);
  spec.Ts = Ts;
  spec.duration = 8.0;
  return spec;
}

inline Trajectory paper_reference_trajectory(double Ts = 0.02) {
  return generate_trapezoid(paper_reference_spec(Ts));
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "t,angle_rad\n";
  for (std::size_t k = 0; k < traj.size(); ++k)
    out << format_number(traj.time(k)) << ',' << format_number(traj.angle[k]) << '\n';
}

// Reads a "t,angle_rad" CSV with uniformly spaced samples starting at t = 0.
inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::vector<double> t;
  std::vector<double> a;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && (line[0] == 't' || line[0] == 'T')) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected 't,angle'");
    try {
      t.push_back(std::stod(line.substr(0, comma)));
      a.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw InputError(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  if (t.size() < 2) throw EmptyTrajectoryError(path + ": need at least two samples");
  const double Ts = t[1] - t[0];
  if (!(Ts > 0.0) || std::abs(t[0]) > 1e-9 * Ts)
    throw InputError(path + ": samples must start at t=0 and increase");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (std::abs(t[k] - static_cast<double>(k) * Ts) > 1e-6 * Ts)
      throw InputError(path + ": samples are not uniformly spaced");
  }
  return {Ts, std::move(a)};
}

}  // namespace noilc_arm
