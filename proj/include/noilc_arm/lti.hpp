#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "noilc_arm/errors.hpp"

namespace noilc_arm {

// Continuous second-order arm model: alpha(s)/dp(s) = kappa w0^2 / (s^2 + 2 delta w0 s + w0^2),
// with kappa in rad/bar.
struct SecondOrderModel {
  double kappa = 7.91;
  double omega0 = 14.14;
  double delta = 0.31;

  void validate() const {
    if (!std::isfinite(kappa) || !std::isfinite(omega0) || !std::isfinite(delta))
      throw InvalidModelError("second-order model has non-finite parameters");
    if (omega0 <= 0.0) throw InvalidModelError("omega0 must be positive");
    if (delta <= 0.0) throw InvalidModelError("delta must be positive");
    if (kappa == 0.0) throw InvalidModelError("kappa must be nonzero");
  }
};

// Scales that map (angle, angular rate, pressure difference) to the
// normalized units the learning controller works in.
struct NormalizationConstants {
  double angle_scale = std::numbers::pi;        // rad
  double rate_scale = 10.0 * std::numbers::pi;  // rad/s
  double input_scale = 1e5;                     // Pa

  void validate() const {
    if (!(angle_scale > 0.0) || !(rate_scale > 0.0) || !(input_scale > 0.0) ||
        !std::isfinite(angle_scale) || !std::isfinite(rate_scale) ||
        !std::isfinite(input_scale))
      throw InvalidModelError("normalization constants must be finite and positive");
  }
};

using State2 = Eigen::Vector2d;

struct DiscretePlant {
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d B = Eigen::Vector2d::Zero();
  Eigen::RowVector2d C = Eigen::RowVector2d(1.0, 0.0);
  double Ts = 0.02;

  double spectral_radius() const {
    return A.eigenvalues().cwiseAbs().maxCoeff();
  }
};

// A, B, C exactly as printed (two decimals) for the identified arm.
inline DiscretePlant printed_arm_plant() {
  DiscretePlant p;
  p.A << 0.96, 0.18, -0.36, 0.80;
  p.B << 0.09, 0.91;
  p.C << 1.0, 0.0;
  p.Ts = 0.02;
  return p;
}

struct ContinuousRealization {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
};

// Normalized state (alpha/angle_scale, alpha_dot/rate_scale), input dp/input_scale.
inline ContinuousRealization normalized_realization(const SecondOrderModel& model,
                                                    const NormalizationConstants& norms) {
  model.validate();
  norms.validate();
  const double w2 = model.omega0 * model.omega0;
  const double input_bar = norms.input_scale / 1e5;
  ContinuousRealization c;
  c.A << 0.0, norms.rate_scale / norms.angle_scale,
      -w2 * norms.angle_scale / norms.rate_scale, -2.0 * model.delta * model.omega0;
  c.B << 0.0, w2 * model.kappa * input_bar / norms.rate_scale;
  return c;
}

// Zero-order-hold discretization via the exponential of the augmented
// [[A_c, B_c], [0, 0]] block.
inline DiscretePlant discretize_zoh(const SecondOrderModel& model,
                                   const NormalizationConstants& norms, double Ts) {
  if (!std::isfinite(Ts)) throw InvalidModelError("sampling time is not finite");
  if (!(Ts > 0.0)) throw InvalidModelError("sampling time must be positive");
  const ContinuousRealization c = normalized_realization(model, norms);

  Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
  aug.topLeftCorner<2, 2>() = c.A;
  aug.topRightCorner<2, 1>() = c.B;
  const Eigen::Matrix3d phi = (aug * Ts).exp();

  DiscretePlant p;
  p.A = phi.topLeftCorner<2, 2>();
  p.B = phi.topRightCorner<2, 1>();
  p.C << 1.0, 0.0;
  p.Ts = Ts;
  return p;
}

struct StepResult {
  State2 x_next;
  double y;
};

// One sample: the input acts during [k, k+1) and the output is read at k+1.
inline StepResult step(const DiscretePlant& plant, const State2& x, double u) {
  StepResult r;
  r.x_next = plant.A * x + plant.B * u;
  r.y = plant.C.dot(r.x_next);
  return r;
}

// y(k) for k = 1..N given u(k) for k = 0..N-1.
inline Eigen::VectorXd simulate(const DiscretePlant& plant, std::span<const double> u,
                                const State2& x0 = State2::Zero()) {
  if (u.empty()) throw EmptyTrajectoryError("simulate: empty input sequence");
  Eigen::VectorXd y(static_cast<Eigen::Index>(u.size()));
  State2 x = x0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const StepResult r = step(plant, x, u[k]);
    x = r.x_next;
    y(static_cast<Eigen::Index>(k)) = r.y;
  }
  return y;
}

inline Eigen::VectorXd simulate(const DiscretePlant& plant, const Eigen::VectorXd& u,
                                const State2& x0 = State2::Zero()) {
  return simulate(plant, std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                  x0);
}

// Lower-triangular Toeplitz matrix of Markov parameters: P(i, k) = C A^(i-k) B.
inline Eigen::MatrixXd build_lifted_matrix(const DiscretePlant& plant, std::size_t N) {
  if (N == 0) throw EmptyTrajectoryError("lifted matrix needs N >= 1");
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::VectorXd markov(n);
  Eigen::Vector2d AkB = plant.B;
  for (Eigen::Index k = 0; k < n; ++k) {
    markov(k) = plant.C.dot(AkB);
    AkB = plant.A * AkB;
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k <= i; ++k) P(i, k) = markov(i - k);
  return P;
}

// Forward-difference derivative operator scaled by 1/T. The last row repeats
// the one before it, so the matrix stays square.
inline Eigen::MatrixXd build_difference_matrix(std::size_t N, double T_ilc) {
  if (N < 2) throw SizeError("difference matrix needs N >= 2");
  if (!(T_ilc > 0.0)) throw SizeError("difference matrix needs T_ilc > 0");
  const auto n = static_cast<Eigen::Index>(N);
  const double s = 1.0 / T_ilc;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    D(i, i) = -s;
    D(i, i + 1) = s;
  }
  D(n - 1, n - 2) = -s;
  D(n - 1, n - 1) = s;
  return D;
}

// The conventional (N-1) x N forward difference, kept for comparison against
// the square operator above.
inline Eigen::MatrixXd build_reduced_difference_matrix(std::size_t N, double T_ilc) {
  if (N < 2) throw SizeError("difference matrix needs N >= 2");
  if (!(T_ilc > 0.0)) throw SizeError("difference matrix needs T_ilc > 0");
  const auto n = static_cast<Eigen::Index>(N);
  const double s = 1.0 / T_ilc;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n - 1, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    D(i, i) = -s;
    D(i, i + 1) = s;
  }
  return D;
}

struct LiftedSystem {
  Eigen::MatrixXd P;
  Eigen::MatrixXd D;
  std::size_t N = 0;
  double T_ilc = 0.0;

  static LiftedSystem build(const DiscretePlant& plant, std::size_t N) {
    LiftedSystem s;
    s.P = build_lifted_matrix(plant, N);
    s.D = build_difference_matrix(N, plant.Ts);
    s.N = N;
    s.T_ilc = plant.Ts;
    return s;
  }
};

}  // namespace noilc_arm
