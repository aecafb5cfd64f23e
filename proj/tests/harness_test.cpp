#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "noilc_arm/analysis.hpp"
#include "noilc_arm/harness.hpp"

namespace noilc_arm {
namespace {

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

ExperimentConfig nominal_exact() {
  ExperimentConfig cfg;
  cfg.plant_kind = PlantKind::kNominal;
  cfg.feedback_enabled = false;
  cfg.quantize = false;
  return cfg;
}

TEST(RmsError, Examples) {
  EXPECT_EQ(rms_error(Eigen::VectorXd::Zero(10)), 0.0);
  EXPECT_NEAR(rms_error(Eigen::VectorXd::Constant(7, -0.02)), 0.02 * 180.0, 1e-12);
  Eigen::VectorXd alt(9);
  for (Eigen::Index i = 0; i < 9; ++i) alt(i) = (i % 2) ? 0.03 : -0.03;
  EXPECT_NEAR(rms_error(alt), 0.03 * 180.0, 1e-12);
  EXPECT_THROW(rms_error(Eigen::VectorXd()), EmptyTrajectoryError);
}

TEST(RunSingleIteration, InverseInputTracksOnNominalPlant) {
  ExperimentConfig cfg = nominal_exact();
  cfg.feedback_enabled = true;
  cfg.gains = {0.0, 0.0, 0.0, 0.0, 0.0};
  const Trajectory ref = cfg.reference();
  const std::size_t N = ref.size();
  const LiftedSystem lifted = learning_model(cfg, N);
  Eigen::VectorXd yd(static_cast<Eigen::Index>(N));
  for (std::size_t i = 1; i <= N; ++i)
    yd(static_cast<Eigen::Index>(i - 1)) = ref.angle[std::min(i, N - 1)] / cfg.norms.angle_scale;
  const Eigen::VectorXd u = lifted.P.triangularView<Eigen::Lower>().solve(yd);
  EXPECT_LT(run_single_iteration(cfg, u).rms_deg, 1e-6);
}

TEST(RunSingleIteration, PneumaticIterationZeroInBand) {
  const double rms = run_single_iteration(ExperimentConfig{}, Eigen::VectorXd::Zero(400)).rms_deg;
  EXPECT_GE(rms, 8.0);
  EXPECT_LE(rms, 20.0);
}

TEST(RunSingleIteration, DeterministicIncludingNoise) {
  ExperimentConfig cfg;
  cfg.noise_std = deg2rad(0.2);
  cfg.seed = 99;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(400, 0.01);
  const IterationRecord a = run_single_iteration(cfg, u, 3);
  const IterationRecord b = run_single_iteration(cfg, u, 3);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(bitwise_equal(a.y, b.y));
  cfg.seed = 100;
  EXPECT_FALSE(bitwise_equal(run_single_iteration(cfg, u, 3).y, a.y));
}

TEST(RunSingleIteration, InnerRateSampleCount) {
  const IterationRecord r = run_single_iteration(ExperimentConfig{}, Eigen::VectorXd::Zero(400));
  EXPECT_EQ(r.alpha_inner.size(), 4 * 400 + 1);
  EXPECT_EQ(r.y.size(), 401);
  EXPECT_EQ(r.e.size(), 400);
  EXPECT_EQ(r.alpha_inner(4 * 400), r.y_true(400));
  for (Eigen::Index k = 0; k <= 400; ++k) ASSERT_EQ(r.alpha_inner(4 * k), r.y_true(k));
}

TEST(RunSingleIteration, StartsFromRest) {
  const IterationRecord r = run_single_iteration(ExperimentConfig{}, Eigen::VectorXd::Zero(400));
  EXPECT_EQ(r.y_true(0), 0.0);
  EXPECT_EQ(r.p_a(0), ExperimentConfig{}.plant.consts.p0);
  EXPECT_EQ(r.p_b(0), ExperimentConfig{}.plant.consts.p0);
}

TEST(RunSingleIteration, PressuresStayInPhysicalRange) {
  const ExperimentConfig cfg;
  const auto recs = run_experiment(cfg);
  for (const auto& r : recs) {
    EXPECT_GE(r.p_a.minCoeff(), cfg.plant.consts.p0 * 0.99);
    EXPECT_GE(r.p_b.minCoeff(), cfg.plant.consts.p0 * 0.99);
    EXPECT_LE(r.p_a.maxCoeff(), cfg.plant.consts.p_src);
    EXPECT_LE(r.p_b.maxCoeff(), cfg.plant.consts.p_src);
  }
}

TEST(RunSingleIteration, RejectsWrongLengthAndNonFinite) {
  const ExperimentConfig cfg;
  EXPECT_THROW(run_single_iteration(cfg, Eigen::VectorXd::Zero(399)), LengthMismatchError);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(400);
  u(17) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(run_single_iteration(cfg, u), DivergenceError);
  u(17) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(run_single_iteration(cfg, u), DivergenceError);
}

TEST(RunSingleIteration, ErrorUsesNextSample) {
  ExperimentConfig cfg = nominal_exact();
  const IterationRecord r = run_single_iteration(cfg, Eigen::VectorXd::Zero(400));
  const Trajectory ref = cfg.reference();
  for (std::size_t i = 1; i < 400; ++i)
    ASSERT_DOUBLE_EQ(r.e(static_cast<Eigen::Index>(i - 1)) * cfg.norms.angle_scale,
                     ref.angle[i] - r.y(static_cast<Eigen::Index>(i)));
}

TEST(Repetitiveness, ReplayedInputReproducesOutput) {
  ExperimentConfig cfg;
  cfg.iterations = 3;
  const auto recs = run_experiment(cfg);
  for (std::size_t j = 1; j < recs.size(); ++j) {
    const Eigen::VectorXd y = replay_total_input(cfg, recs[j - 1].u_tot, j);
    EXPECT_TRUE(bitwise_equal(y, recs[j - 1].y)) << j;
  }
}

TEST(Repetitiveness, ReplayHoldsOnNominalPlantWithDisturbance) {
  ExperimentConfig cfg;
  cfg.plant_kind = PlantKind::kNominal;
  cfg.disturbance = DisturbanceKind::kFixed;
  cfg.iterations = 2;
  const auto recs = run_experiment(cfg);
  EXPECT_TRUE(bitwise_equal(replay_total_input(cfg, recs[1].u_tot, 2), recs[1].y));
}

TEST(RunExperiment, NoLearningGivesIdenticalRecords) {
  ExperimentConfig cfg;
  cfg.learning = LearningKind::kNone;
  cfg.iterations = 4;
  const auto recs = run_experiment(cfg);
  ASSERT_EQ(recs.size(), 5u);
  for (std::size_t j = 1; j < recs.size(); ++j) {
    EXPECT_EQ(recs[j].j, j);
    EXPECT_TRUE(bitwise_equal(recs[j].y, recs[0].y));
    EXPECT_TRUE(bitwise_equal(recs[j].u_tot, recs[0].u_tot));
    EXPECT_EQ(recs[j].rms_deg, recs[0].rms_deg);
  }
}

TEST(RunExperiment, FirstIterationHasZeroCorrection) {
  ExperimentConfig cfg;
  cfg.iterations = 1;
  const auto recs = run_experiment(cfg);
  EXPECT_EQ(recs[0].u_corr, Eigen::VectorXd::Zero(400));
  EXPECT_NE(recs[1].u_corr, Eigen::VectorXd::Zero(400));
}

TEST(RunExperiment, NominalPlantLearnsFixedDisturbance) {
  ExperimentConfig cfg;
  cfg.plant_kind = PlantKind::kNominal;
  cfg.feedback_enabled = false;
  cfg.disturbance = DisturbanceKind::kFixed;
  const auto recs = run_experiment(cfg);
  EXPECT_LE(recs.back().rms_deg, 0.02 * recs.front().rms_deg);
}

TEST(RunExperiment, ExactModelCostNonIncreasing) {
  ExperimentConfig cfg = nominal_exact();
  cfg.disturbance = DisturbanceKind::kFixed;
  const auto recs = run_experiment(cfg);
  for (std::size_t j = 1; j < recs.size(); ++j)
    EXPECT_LE(recs[j].cost, recs[j - 1].cost * (1.0 + 1e-12)) << j;
}

TEST(RunExperiment, PdIlcBaselineImproves) {
  ExperimentConfig cfg;
  cfg.learning = LearningKind::kPdIlc;
  cfg.iterations = 10;
  const auto recs = run_experiment(cfg);
  EXPECT_LT(recs.back().rms_deg, recs.front().rms_deg);
}

TEST(RunExperiment, ReducedDifferenceMatrixRuns) {
  ExperimentConfig cfg;
  cfg.difference = DifferenceKind::kReduced;
  cfg.iterations = 5;
  const auto recs = run_experiment(cfg);
  EXPECT_LT(recs.back().rms_deg, recs.front().rms_deg);
}

// Without cylinder coupling the pneumatic plant should behave like the
// identified LTI model for moderate commands.
TEST(PlantFidelity, PneumaticNearLtiWithoutCoupling) {
  ExperimentConfig cfg;
  cfg.quantize = false;
  cfg.plant.coupling.enabled = false;
  const Trajectory ref = cfg.reference();
  Eigen::VectorXd u(static_cast<Eigen::Index>(ref.size()));
  for (std::size_t k = 0; k < ref.size(); ++k)
    u(static_cast<Eigen::Index>(k)) = 0.5 * ref.angle[k] / cfg.plant.arm.kappa * 1e5;
  const Eigen::VectorXd y_pn = replay_total_input(cfg, u);
  cfg.plant_kind = PlantKind::kNominal;
  const Eigen::VectorXd y_lti = replay_total_input(cfg, u);
  EXPECT_LT((y_pn - y_lti).norm() / y_lti.norm(), 0.15);
}

TEST(ExperimentConfig, ValidateNamesField) {
  ExperimentConfig cfg;
  cfg.inner_hz = 190.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rates.inner_hz"), std::string::npos);
  }
  cfg = {};
  cfg.weight_s = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.trajectory.a_max = deg2rad(100.0);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.trajectory.Ts = 0.01;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Analysis, TransitionsOfPaperReference) {
  const auto trs = find_transitions(paper_reference_trajectory());
  ASSERT_FALSE(trs.empty());
  int sixty = 0;
  for (const auto& t : trs) {
    EXPECT_LT(t.start, t.end);
    if (std::abs(rad2deg(t.size()) - 60.0) < 1e-9) ++sixty;
  }
  EXPECT_GE(sixty, 1);
}

TEST(Analysis, BounceBackOnSyntheticSignal) {
  Transition tr;
  tr.from = 0.0;
  tr.to = 1.0;
  Eigen::VectorXd a(6);
  a << 0.0, 0.5, 0.4, 0.7, 1.0, 0.9;
  EXPECT_NEAR(bounce_back(a, 0.1, tr, 0.0, 1.0, 0.01), 0.1, 1e-12);
  a << 0.0, 0.2, 0.5, 0.7, 1.0, 0.2;
  EXPECT_EQ(bounce_back(a, 0.1, tr, 0.0, 1.0, 0.01), 0.0);
  tr.to = -1.0;
  a << 0.0, -0.6, -0.3, -0.7, -1.0, -1.0;
  EXPECT_NEAR(bounce_back(a, 0.1, tr, 0.0, 1.0, 0.01), 0.3, 1e-12);
}

TEST(Analysis, PeakLagSign) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(50);
  r(20) = 1.0;
  Eigen::VectorXd lead = Eigen::VectorXd::Zero(50);
  lead(17) = 1.0;
  EXPECT_EQ(peak_lag(lead, r, 10), -3);
  Eigen::VectorXd lag = Eigen::VectorXd::Zero(50);
  lag(25) = 1.0;
  EXPECT_EQ(peak_lag(lag, r, 10), 5);
  EXPECT_THROW(peak_lag(lag, Eigen::VectorXd::Zero(3), 1), LengthMismatchError);
}

TEST(Analysis, TrailingMean) {
  const auto m = trailing_mean({3.0, 6.0, 9.0, 0.0}, 3);
  EXPECT_DOUBLE_EQ(m[0], 3.0);
  EXPECT_DOUBLE_EQ(m[1], 4.5);
  EXPECT_DOUBLE_EQ(m[2], 6.0);
  EXPECT_DOUBLE_EQ(m[3], 5.0);
}

}  // namespace
}  // namespace noilc_arm
