#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "noilc_arm/trajectory.hpp"

namespace noilc_arm {
namespace {

const double kAmax = deg2rad(12000.0);

TrapezoidSpec single_jump(double from_deg, double to_deg, double t0, double v_max,
                          double Ts = 0.02) {
  TrapezoidSpec s;
  s.waypoints = {{0.0, deg2rad(from_deg)}, {t0, deg2rad(to_deg)}};
  s.a_max = kAmax;
  s.v_max = v_max;
  s.Ts = Ts;
  const double move = std::abs(deg2rad(to_deg - from_deg));
  s.duration = t0 + TrapezoidProfile::plan(move, s.a_max, v_max).duration() + 0.5;
  return s;
}

// Index of the first sample after t0 at the target angle.
double settle_time(const Trajectory& tr, double t0, double target) {
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.time(k) >= t0 && std::abs(tr.angle[k] - target) < 1e-12) return tr.time(k) - t0;
  return INFINITY;
}

TEST(Trapezoid, SingleWaypointIsConstant) {
  TrapezoidSpec s;
  s.waypoints = {{0.0, 0.4}};
  s.v_max = 1.0;
  const Trajectory tr = generate_trapezoid(s);
  ASSERT_EQ(tr.size(), 400u);
  for (double a : tr.angle) EXPECT_EQ(a, 0.4);
}

TEST(Trapezoid, TriangleProfileTime) {
  // with no velocity limit a rest-to-rest move takes 2 sqrt(d / a)
  const double d = deg2rad(60.0);
  const TrapezoidProfile p = TrapezoidProfile::plan(d, kAmax, 1e9);
  EXPECT_NEAR(p.duration(), 2.0 * std::sqrt(d / kAmax), 1e-12);
  EXPECT_NEAR(p.duration(), 0.1414, 1e-4);
  EXPECT_NEAR(p.position(p.duration() / 2.0), d / 2.0, 1e-12);
}

TEST(Trapezoid, VelocityLimitForMoveTime) {
  const double d = deg2rad(60.0);
  const double v = vmax_for_move_time(d, kAmax, 0.2);
  EXPECT_NEAR(rad2deg(v), 351.5, 0.1);
  EXPECT_NEAR(TrapezoidProfile::plan(d, kAmax, v).duration(), 0.2, 1e-12);
  EXPECT_THROW(vmax_for_move_time(d, kAmax, 0.1), InputError);
}

TEST(Trapezoid, SixtyDegreeJumpTakesPointTwoSeconds) {
  const double v = vmax_for_move_time(deg2rad(60.0), kAmax, 0.2);
  for (double sign : {1.0, -1.0}) {
    const Trajectory tr = generate_trapezoid(single_jump(0.0, sign * 60.0, 0.5, v));
    EXPECT_NEAR(settle_time(tr, 0.5, deg2rad(sign * 60.0)), 0.2, 0.02 + 1e-9);
  }
}

TEST(Trapezoid, SampledAccelerationWithinLimit) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ang(-80.0, 80.0);
  std::uniform_real_distribution<double> vel(50.0, 800.0);
  std::uniform_real_distribution<double> ts(0.001, 0.02);
  for (int trial = 0; trial < 200; ++trial) {
    const double Ts = ts(rng);
    const Trajectory tr =
        generate_trapezoid(single_jump(ang(rng), ang(rng), 0.3, deg2rad(vel(rng)), Ts));
    for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
      const double acc = (tr.angle[k + 1] - 2.0 * tr.angle[k] + tr.angle[k - 1]) / (Ts * Ts);
      ASSERT_LE(std::abs(acc), 1.05 * kAmax) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Trapezoid, ExactWaypointAfterMove) {
  const double v = vmax_for_move_time(deg2rad(60.0), kAmax, 0.2);
  const Trajectory tr = generate_trapezoid(single_jump(-30.0, 30.0, 0.5, v));
  EXPECT_EQ(tr.angle.back(), deg2rad(30.0));
  EXPECT_EQ(tr.angle.front(), deg2rad(-30.0));
}

TEST(Trapezoid, InfeasibleSegmentIsNamed) {
  TrapezoidSpec s = paper_reference_spec();
  s.a_max = deg2rad(100.0);
  s.v_max = deg2rad(100.0);
  try {
    generate_trapezoid(s);
    FAIL() << "expected an infeasible trajectory";
  } catch (const InfeasibleTrajectoryError& e) {
    EXPECT_EQ(e.segment(), 1u);
    EXPECT_NE(std::string(e.what()).find("segment 1"), std::string::npos);
  }
}

TEST(Trapezoid, RejectsNonIncreasingTimes) {
  TrapezoidSpec s = paper_reference_spec();
  s.waypoints[2].t = s.waypoints[1].t;
  EXPECT_THROW(generate_trapezoid(s), InfeasibleTrajectoryError);
  s = paper_reference_spec();
  s.v_max = 0.0;
  EXPECT_THROW(generate_trapezoid(s), InputError);
  s = paper_reference_spec();
  s.waypoints.clear();
  EXPECT_THROW(generate_trapezoid(s), InputError);
}

TEST(PaperReference, FourHundredSamples) { EXPECT_EQ(paper_reference_trajectory(0.02).size(), 400u); }

TEST(PaperReference, PlateausFollowSchedule) {
  const Trajectory tr = paper_reference_trajectory();
  EXPECT_EQ(tr.angle[0], 0.0);
  EXPECT_EQ(tr.angle[100], deg2rad(-30.0));  // t = 2.0 s
  EXPECT_EQ(tr.angle[150], deg2rad(30.0));   // t = 3.0 s
  EXPECT_EQ(tr.angle[200], deg2rad(-30.0));  // t = 4.0 s
  EXPECT_EQ(tr.angle[260], deg2rad(30.0));   // t = 5.2 s
  EXPECT_EQ(tr.angle[399], 0.0);
}

TEST(PaperReference, LargestJumpIsSixtyDegrees) {
  const Trajectory tr = paper_reference_trajectory();
  const auto [lo, hi] = std::minmax_element(tr.angle.begin(), tr.angle.end());
  EXPECT_NEAR(rad2deg(*hi - *lo), 60.0, 1e-12);
}

TEST(PaperReference, Deterministic) {
  EXPECT_EQ(paper_reference_trajectory().angle, paper_reference_trajectory().angle);
}

TEST(PaperReference, VelocityContinuous) {
  const Trajectory tr = paper_reference_trajectory();
  const double Ts = tr.Ts;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const double dv = (tr.angle[k + 1] - tr.angle[k]) / Ts - (tr.angle[k] - tr.angle[k - 1]) / Ts;
    EXPECT_LE(std::abs(dv), kAmax * Ts * 1.05) << k;
  }
}

TEST(TrajectoryCsv, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "noilc_arm_traj.csv";
  const Trajectory tr = paper_reference_trajectory();
  write_trajectory_csv(path.string(), tr);
  const Trajectory back = read_trajectory_csv(path.string());
  EXPECT_EQ(back.angle, tr.angle);
  EXPECT_NEAR(back.Ts, 0.02, 1e-15);
}

TEST(TrajectoryCsv, RejectsIrregularSampling) {
  const auto path = std::filesystem::temp_directory_path() / "noilc_arm_bad.csv";
  {
    std::ofstream out(path);
    out << "t,angle_rad\n0,0\n0.02,0.1\n0.05,0.2\n";
  }
  EXPECT_THROW(read_trajectory_csv(path.string()), InputError);
  {
    std::ofstream out(path);
    out << "t,angle_rad\n0,0\n0.02,abc\n";
  }
  EXPECT_THROW(read_trajectory_csv(path.string()), InputError);
}

}  // namespace
}  // namespace noilc_arm
