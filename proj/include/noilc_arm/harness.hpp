#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/feedback.hpp"
#include "noilc_arm/lti.hpp"
#include "noilc_arm/noilc.hpp"
#include "noilc_arm/pneumatics.hpp"
#include "noilc_arm/trajectory.hpp"

namespace noilc_arm {

enum class PlantKind { kNominal, kPneumatic };
enum class LearningKind { kNoilc, kPdIlc, kNone };
enum class DifferenceKind { kSquare, kReduced };
enum class DisturbanceKind { kNone, kFixed };

struct PdIlcParams {
  double kp = 0.3;
  double kd = 0.0;
  double q_cutoff_hz = 3.0;
};

struct ExperimentConfig {
  PlantKind plant_kind = PlantKind::kPneumatic;
  LearningKind learning = LearningKind::kNoilc;
  std::size_t iterations = 30;

  double inner_hz = 200.0;
  double outer_hz = 50.0;
  double pwm_hz = 200.0;  // duty cycles are held for one PWM period

  double weight_m = 1.0;
  double weight_s = 0.1;
  double weight_w = 2e-5;
  DifferenceKind difference = DifferenceKind::kSquare;
  PdIlcParams pd_ilc;

  PidGains gains;
  bool feedback_enabled = true;  // off: correction plus feedforward-free open loop
  PlantParams plant;
  NormalizationConstants norms;
  bool pressure_filter = true;
  std::size_t filter_window = 5;

  TrapezoidSpec trajectory = paper_reference_spec();
  std::optional<Trajectory> custom_reference;  // overrides `trajectory` when set

  std::uint64_t seed = 1;
  double noise_std = 0.0;       // rad
  bool quantize = true;
  double quantum = deg2rad(0.1);  // rad

  DisturbanceKind disturbance = DisturbanceKind::kNone;
  double disturbance_amp = deg2rad(5.0);  // rad

  double T_ilc() const { return 1.0 / outer_hz; }
  std::size_t substeps_per_outer() const {
    return static_cast<std::size_t>(std::llround(inner_hz / outer_hz));
  }

  // Cross-field checks; throws ConfigError with the offending field.
  void validate() const {
    if (!(inner_hz > 0.0)) throw ConfigError("rates.inner_hz", 0, "must be > 0");
    if (!(outer_hz > 0.0)) throw ConfigError("rates.outer_hz", 0, "must be > 0");
    if (!(pwm_hz > 0.0)) throw ConfigError("rates.pwm_hz", 0, "must be > 0");
    const double ratio = inner_hz / outer_hz;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
      throw ConfigError("rates.inner_hz", 0,
                        "inner rate must be an integer multiple of the outer rate");
    if (iterations < 1) throw ConfigError("experiment.iterations", 0, "must be >= 1");
    if (weight_m < 0.0) throw ConfigError("weights.m", 0, "must be >= 0");
    if (!(weight_s > 0.0)) throw ConfigError("weights.s", 0, "must be > 0");
    if (weight_w < 0.0) throw ConfigError("weights.w", 0, "must be >= 0");
    if (noise_std < 0.0) throw ConfigError("measurement.noise_std_deg", 0, "must be >= 0");
    if (quantize && !(quantum > 0.0))
      throw ConfigError("measurement.quantum_deg", 0, "must be > 0");
    try {
      plant.consts.validate();
      plant.valve.validate();
      plant.arm.validate();
      norms.validate();
      gains.validate();
    } catch (const Error& e) {
      throw ConfigError("", 0, e.what());
    }
    if (plant.substeps < 1) throw ConfigError("pneumatics.substeps", 0, "must be >= 1");
    if (!custom_reference) {
      if (std::abs(trajectory.Ts - T_ilc()) > 1e-12)
        throw ConfigError("trajectory", 0, "sample time must equal the outer-loop period");
      try {
        check_trapezoid_spec(trajectory);
      } catch (const InfeasibleTrajectoryError& e) {
        throw ConfigError("trajectory", 0, e.what());
      } catch (const InputError& e) {
        throw ConfigError("trajectory", 0, e.what());
      }
    } else if (std::abs(custom_reference->Ts - T_ilc()) > 1e-9) {
      throw ConfigError("trajectory.csv", 0, "sample time must equal the outer-loop period");
    }
    if (learning == LearningKind::kPdIlc && !(pd_ilc.q_cutoff_hz > 0.0))
      throw ConfigError("pd_ilc.q_cutoff_hz", 0, "must be > 0");
  }

  Trajectory reference() const {
    return custom_reference ? *custom_reference : generate_trapezoid(trajectory);
  }
};

struct IterationRecord {
  std::size_t j = 0;
  double rms_deg = 0.0;
  Eigen::VectorXd e;       // normalized, e(i) = y_D(i) - y(i), i = 1..N
  Eigen::VectorXd u_corr;  // normalized correction applied at k = 0..N-1
  Eigen::VectorXd u_tot;   // Pa, k = 0..N-1
  Eigen::VectorXd u_pid;   // Pa, k = 0..N-1
  Eigen::VectorXd y;       // measured angle, rad, k = 0..N
  Eigen::VectorXd y_true;  // plant angle, rad, k = 0..N
  Eigen::VectorXd p_a;     // Pa, at the start of each outer step
  Eigen::VectorXd p_b;
  Eigen::VectorXd alpha_inner;  // plant angle at the inner rate, rad
  int clamp_count = 0;          // outer steps with an active setpoint clamp
  int pressure_guard_events = 0;
  double cost = 0.0;  // learning objective at the update computed from this record

  friend bool operator==(const IterationRecord& a, const IterationRecord& b) {
    return a.j == b.j && a.rms_deg == b.rms_deg && a.e == b.e && a.u_corr == b.u_corr &&
           a.u_tot == b.u_tot && a.u_pid == b.u_pid && a.y == b.y && a.y_true == b.y_true &&
           a.p_a == b.p_a && a.p_b == b.p_b && a.alpha_inner == b.alpha_inner &&
           a.clamp_count == b.clamp_count &&
           a.pressure_guard_events == b.pressure_guard_events;
  }
};

inline double rms_error(const Eigen::VectorXd& e, const NormalizationConstants& norms = {}) {
  if (e.size() == 0) throw EmptyTrajectoryError("rms_error of an empty vector");
  return std::sqrt(e.squaredNorm() / static_cast<double>(e.size())) * norms.angle_scale * 180.0 /
         std::numbers::pi;
}

// Repetitive output disturbance used to exercise learning on the nominal plant.
inline double fixed_disturbance(double t, double amp) {
  return amp * (std::sin(2.0 * std::numbers::pi * 0.25 * t) +
                0.5 * std::sin(2.0 * std::numbers::pi * 0.8 * t + 0.3));
}

namespace detail {

// Either truth plant behind one interface; the nominal plant treats the
// clamped setpoint difference as the applied pressure difference.
class TruthPlant {
 public:
  explicit TruthPlant(const ExperimentConfig& cfg)
      : kind_(cfg.plant_kind),
        cfg_(cfg),
        nominal_(discretize_zoh(cfg.plant.arm, cfg.norms, 1.0 / cfg.inner_hz)),
        pneumatic_(cfg.plant, cfg.pressure_filter, cfg.filter_window) {
    reset();
  }

  void reset() {
    x_ = State2::Zero();
    pneumatic_.reset(PneumaticPlantState::at_rest(cfg_.plant.consts));
    p_a_ = p_b_ = cfg_.plant.consts.p0;
  }

  void step(const PressureSetpoints& sp, double dt) {
    if (kind_ == PlantKind::kNominal) {
      x_ = nominal_.A * x_ + nominal_.B * ((sp.p_a - sp.p_b) / cfg_.norms.input_scale);
      p_a_ = sp.p_a;
      p_b_ = sp.p_b;
    } else {
      pneumatic_.step(sp.p_a, sp.p_b, dt);
    }
  }

  double angle() const {
    return kind_ == PlantKind::kNominal ? nominal_.C.dot(x_) * cfg_.norms.angle_scale
                                        : pneumatic_.state().alpha;
  }
  double p_a() const { return kind_ == PlantKind::kNominal ? p_a_ : pneumatic_.state().p_a; }
  double p_b() const { return kind_ == PlantKind::kNominal ? p_b_ : pneumatic_.state().p_b; }
  int guard_events() const {
    return kind_ == PlantKind::kNominal ? 0 : pneumatic_.clamp_events();
  }
  bool finite() const {
    if (kind_ == PlantKind::kNominal) return x_.allFinite();
    const auto& s = pneumatic_.state();
    return std::isfinite(s.alpha) && std::isfinite(s.alpha_dot) && std::isfinite(s.p_a) &&
           std::isfinite(s.p_b);
  }

 private:
  PlantKind kind_;
  const ExperimentConfig& cfg_;
  DiscretePlant nominal_;
  PneumaticArm pneumatic_;
  State2 x_ = State2::Zero();
  double p_a_ = 0.0;
  double p_b_ = 0.0;
};

class Measurement {
 public:
  Measurement(const ExperimentConfig& cfg, std::size_t iteration)
      : cfg_(cfg), noise_(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(iteration)};
    rng_.seed(seq);
  }

  double operator()(double angle) {
    double y = angle;
    if (cfg_.noise_std > 0.0) y += noise_(rng_);
    if (cfg_.quantize) y = std::round(y / cfg_.quantum) * cfg_.quantum;
    return y;
  }

 private:
  const ExperimentConfig& cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
};

}  // namespace detail

// One pass over the reference with the cascade: PID + correction at the
// outer rate, pressure loops and plant at the inner rate. The plant and the
// PID state start from rest on every call.
inline IterationRecord run_single_iteration(const ExperimentConfig& cfg,
                                            const Eigen::VectorXd& u_corr, std::size_t j = 0) {
  const Trajectory ref = cfg.reference();
  const std::size_t N = ref.size();
  if (static_cast<std::size_t>(u_corr.size()) != N)
    throw LengthMismatchError("run_single_iteration: u_corr", N,
                              static_cast<std::size_t>(u_corr.size()));
  if (!u_corr.allFinite()) throw DivergenceError("correction signal is not finite", 0);

  const auto n = static_cast<Eigen::Index>(N);
  const double T = cfg.T_ilc();
  const std::size_t sub = cfg.substeps_per_outer();
  const double dt_inner = T / static_cast<double>(sub);
  const double scale = cfg.norms.angle_scale;
  const double span = cfg.plant.consts.p_max - cfg.plant.consts.p0;

  detail::TruthPlant plant(cfg);
  detail::Measurement measure(cfg, j);
  PidState pid;

  IterationRecord rec;
  rec.j = j;
  rec.u_corr = u_corr;
  rec.u_tot.resize(n);
  rec.u_pid.resize(n);
  rec.p_a.resize(n);
  rec.p_b.resize(n);
  rec.y.resize(n + 1);
  rec.y_true.resize(n + 1);
  rec.alpha_inner.resize(n * static_cast<Eigen::Index>(sub) + 1);
  rec.alpha_inner(0) = plant.angle();

  auto disturbance = [&](std::size_t k) {
    return cfg.disturbance == DisturbanceKind::kFixed
               ? fixed_disturbance(static_cast<double>(k) * T, cfg.disturbance_amp)
               : 0.0;
  };

  for (std::size_t k = 0; k <= N; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    rec.y_true(ki) = plant.angle() + disturbance(k);
    rec.y(ki) = measure(rec.y_true(ki));
    if (k == N) break;

    const double y_des = ref.angle[k] / scale;
    PidOutput out;
    if (cfg.feedback_enabled) {
      out = pid_step(cfg.gains, pid, y_des, rec.y(ki) / scale, T);
      pid = out.state;
    }
    const double u_tot = compose_total_input(out.u, u_corr(ki), cfg.norms);
    if (std::abs(u_tot) > span) ++rec.clamp_count;
    const PressureSetpoints sp = setpoints_from_input(u_tot, cfg.plant.consts);

    rec.u_pid(ki) = out.u;
    rec.u_tot(ki) = u_tot;
    rec.p_a(ki) = plant.p_a();
    rec.p_b(ki) = plant.p_b();

    for (std::size_t s = 0; s < sub; ++s) {
      plant.step(sp, dt_inner);
      rec.alpha_inner(ki * static_cast<Eigen::Index>(sub) + static_cast<Eigen::Index>(s) + 1) =
          plant.angle();
    }
    if (!plant.finite())
      throw DivergenceError("plant state became non-finite at outer step " + std::to_string(k),
                            k);
  }

  rec.e.resize(n);
  for (std::size_t i = 1; i <= N; ++i) {
    const double y_des = ref.angle[std::min(i, N - 1)];
    rec.e(static_cast<Eigen::Index>(i - 1)) = (y_des - rec.y(static_cast<Eigen::Index>(i))) / scale;
  }
  rec.rms_deg = rms_error(rec.e, cfg.norms);
  rec.pressure_guard_events = plant.guard_events();
  return rec;
}

// Open-loop replay of a recorded total input (no feedback), returning the
// measured angle at k = 0..N.
inline Eigen::VectorXd replay_total_input(const ExperimentConfig& cfg, const Eigen::VectorXd& u_tot,
                                          std::size_t j = 0) {
  const std::size_t sub = cfg.substeps_per_outer();
  const double dt_inner = cfg.T_ilc() / static_cast<double>(sub);
  detail::TruthPlant plant(cfg);
  detail::Measurement measure(cfg, j);
  Eigen::VectorXd y(u_tot.size() + 1);
  for (Eigen::Index k = 0; k <= u_tot.size(); ++k) {
    const double d = cfg.disturbance == DisturbanceKind::kFixed
                         ? fixed_disturbance(static_cast<double>(k) * cfg.T_ilc(),
                                             cfg.disturbance_amp)
                         : 0.0;
    y(k) = measure(plant.angle() + d);
    if (k == u_tot.size()) break;
    const PressureSetpoints sp = setpoints_from_input(u_tot(k), cfg.plant.consts);
    for (std::size_t s = 0; s < sub; ++s) plant.step(sp, dt_inner);
  }
  return y;
}

inline LiftedSystem learning_model(const ExperimentConfig& cfg, std::size_t N) {
  const DiscretePlant model = discretize_zoh(cfg.plant.arm, cfg.norms, cfg.T_ilc());
  LiftedSystem lifted = LiftedSystem::build(model, N);
  if (cfg.difference == DifferenceKind::kReduced)
    lifted.D = build_reduced_difference_matrix(N, cfg.T_ilc());
  return lifted;
}

inline IlcWeights learning_weights(const ExperimentConfig& cfg, const LiftedSystem& lifted) {
  return IlcWeights::diagonal(lifted.N, cfg.weight_m, cfg.weight_s, cfg.weight_w,
                              static_cast<std::size_t>(lifted.D.rows()));
}

// Iteration 0 runs with a zero correction; every later correction comes from
// the learning law applied to the previous record.
inline std::vector<IterationRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.reference().size();
  const LiftedSystem lifted = learning_model(cfg, N);
  const IlcWeights weights = learning_weights(cfg, lifted);
  std::optional<NoilcSolver> solver;
  if (cfg.learning == LearningKind::kNoilc) solver.emplace(weights, lifted);

  std::vector<IterationRecord> records;
  records.reserve(cfg.iterations + 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j <= cfg.iterations; ++j) {
    IterationRecord rec = run_single_iteration(cfg, u, j);
    Eigen::VectorXd next = u;
    switch (cfg.learning) {
      case LearningKind::kNoilc:
        next = solver->update(rec.e, u);
        break;
      case LearningKind::kPdIlc:
        next = pd_ilc_update(cfg.pd_ilc.kp, cfg.pd_ilc.kd, cfg.pd_ilc.q_cutoff_hz, rec.e, u,
                             cfg.T_ilc());
        break;
      case LearningKind::kNone:
        break;
    }
    rec.cost = ilc_cost(weights, lifted, rec.e, u, next);
    records.push_back(std::move(rec));
    u = std::move(next);
  }
  return records;
}

}  // namespace noilc_arm
