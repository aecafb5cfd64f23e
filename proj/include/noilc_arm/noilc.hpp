#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/lti.hpp"

namespace noilc_arm {

// Cost matrices of the learning objective
//   J = 1/2 [e'Me + du'S du + u'D'WDu].
// W is sized to the row count of the difference operator in use.
struct IlcWeights {
  Eigen::MatrixXd M;
  Eigen::MatrixXd S;
  Eigen::MatrixXd W;

  static IlcWeights diagonal(std::size_t N, double m, double s, double w,
                             std::size_t w_rows = 0) {
    const auto n = static_cast<Eigen::Index>(N);
    const auto nw = static_cast<Eigen::Index>(w_rows == 0 ? N : w_rows);
    IlcWeights out;
    out.M = m * Eigen::MatrixXd::Identity(n, n);
    out.S = s * Eigen::MatrixXd::Identity(n, n);
    out.W = w * Eigen::MatrixXd::Identity(nw, nw);
    return out;
  }

  // Symmetric, PSD for M and W, strictly PD for S. PSD is checked by a
  // Cholesky attempt on the matrix plus a small diagonal shift.
  void validate() const {
    check_psd(M, "M", false);
    check_psd(S, "S", true);
    check_psd(W, "W", false);
  }

 private:
  static void check_psd(const Eigen::MatrixXd& X, const char* name, bool strict) {
    if (X.rows() != X.cols())
      throw SingularCostError(std::string("cost matrix ") + name + " is not square");
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw SingularCostError(std::string("cost matrix ") + name + " is not symmetric");
    const double shift = strict ? 0.0 : 1e-10 * scale;
    const Eigen::MatrixXd shifted =
        X + shift * Eigen::MatrixXd::Identity(X.rows(), X.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success)
      throw SingularCostError(std::string("cost matrix ") + name +
                              (strict ? " is not positive definite"
                                      : " is not positive semi-definite"));
  }
};

// One iteration's learning data; all vectors have the lifted length N.
struct IlcIterate {
  Eigen::VectorXd u;
  Eigen::VectorXd e;
  std::size_t j = 0;
  double T_ilc = 0.0;
};

namespace detail {

inline void require_length(const Eigen::VectorXd& v, std::size_t N, const char* what) {
  const auto n = static_cast<std::size_t>(v.size());
  if (n != N) throw LengthMismatchError(what, N, n);
}

}  // namespace detail

// e^{j+1} = e^j - P (u^{j+1} - u^j)
inline Eigen::VectorXd predict_error(const LiftedSystem& lifted, const Eigen::VectorXd& e_j,
                                     const Eigen::VectorXd& u_j, const Eigen::VectorXd& u_next) {
  detail::require_length(e_j, lifted.N, "predict_error: e_j");
  detail::require_length(u_j, lifted.N, "predict_error: u_j");
  detail::require_length(u_next, lifted.N, "predict_error: u_next");
  return e_j - lifted.P * (u_next - u_j);
}

inline double ilc_cost(const IlcWeights& w, const LiftedSystem& lifted, const Eigen::VectorXd& e_j,
                       const Eigen::VectorXd& u_j, const Eigen::VectorXd& u_next) {
  const Eigen::VectorXd e = predict_error(lifted, e_j, u_j, u_next);
  const Eigen::VectorXd du = u_next - u_j;
  const Eigen::VectorXd Du = lifted.D * u_next;
  return 0.5 * (e.dot(w.M * e) + du.dot(w.S * du) + Du.dot(w.W * Du));
}

// Closed-form minimizer of ilc_cost. The Hessian P'MP + S + D'WD does not
// depend on the iteration, so it is assembled and factorized once.
class NoilcSolver {
 public:
  NoilcSolver(const IlcWeights& weights, const LiftedSystem& lifted) : lifted_(lifted) {
    const auto n = static_cast<Eigen::Index>(lifted.N);
    if (weights.M.rows() != n || weights.S.rows() != n || weights.W.rows() != lifted.D.rows())
      throw LengthMismatchError("NoilcSolver: cost matrix dimensions", lifted.N,
                                static_cast<std::size_t>(weights.M.rows()));
    weights.validate();
    PtM_ = lifted.P.transpose() * weights.M;
    memory_ = PtM_ * lifted.P + weights.S;
    const Eigen::MatrixXd hessian = memory_ + lifted.D.transpose() * weights.W * lifted.D;
    llt_.compute(hessian);
    if (llt_.info() != Eigen::Success)
      throw SingularCostError(
          "Cholesky factorization of the Hessian P'MP + S + D'WD failed");
  }

  Eigen::VectorXd update(const Eigen::VectorXd& e_j, const Eigen::VectorXd& u_j) const {
    detail::require_length(e_j, lifted_.N, "noilc_update: e_j");
    detail::require_length(u_j, lifted_.N, "noilc_update: u_j");
    return llt_.solve(memory_ * u_j + PtM_ * e_j);
  }

  const LiftedSystem& lifted() const { return lifted_; }

 private:
  LiftedSystem lifted_;
  Eigen::MatrixXd PtM_;
  Eigen::MatrixXd memory_;  // P'MP + S
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline Eigen::VectorXd noilc_update(const IlcWeights& weights, const LiftedSystem& lifted,
                                    const Eigen::VectorXd& e_j, const Eigen::VectorXd& u_j) {
  return NoilcSolver(weights, lifted).update(e_j, u_j);
}

// Correction is stored normalized and applied in Pa.
inline double compose_total_input(double u_pid, double u_corr_k,
                                  const NormalizationConstants& norms) {
  return u_pid + u_corr_k * norms.input_scale;
}

// Second-order Butterworth low-pass run forward and backward (zero phase).
// A cutoff at or above Nyquist leaves the signal untouched.
class ZeroPhaseLowPass {
 public:
  ZeroPhaseLowPass(double cutoff_hz, double Ts) {
    if (!(cutoff_hz > 0.0) || !(Ts > 0.0))
      throw InputError("Q filter needs a positive cutoff and sampling time");
    if (cutoff_hz >= 0.5 / Ts) {
      bypass_ = true;
      return;
    }
    const double K = std::tan(std::numbers::pi * cutoff_hz * Ts);
    const double K2 = K * K;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * K + K2);
    b0_ = K2 * norm;
    b1_ = 2.0 * b0_;
    b2_ = b0_;
    a1_ = 2.0 * (K2 - 1.0) * norm;
    a2_ = (1.0 - std::numbers::sqrt2 * K + K2) * norm;
  }

  bool bypass() const { return bypass_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (bypass_ || x.size() == 0) return x;
    const Eigen::Index n = x.size();
    const Eigen::Index pad = std::min<Eigen::Index>(6, n - 1);
    // odd reflection at both ends
    Eigen::VectorXd ext(n + 2 * pad);
    for (Eigen::Index i = 0; i < pad; ++i) {
      ext(i) = 2.0 * x(0) - x(pad - i);
      ext(n + pad + i) = 2.0 * x(n - 1) - x(n - 2 - i);
    }
    ext.segment(pad, n) = x;
    Eigen::VectorXd fwd = run(ext);
    Eigen::VectorXd rev = run(fwd.reverse());
    return rev.reverse().segment(pad, n);
  }

 private:
  // Direct-form II transposed, started in steady state for the first sample.
  Eigen::VectorXd run(const Eigen::VectorXd& x) const {
    const double dc_gain = (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_);
    double z2 = (b2_ - a2_ * dc_gain) * x(0);
    double z1 = (b1_ - a1_ * dc_gain) * x(0) + z2;
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double yi = b0_ * x(i) + z1;
      z1 = b1_ * x(i) - a1_ * yi + z2;
      z2 = b2_ * x(i) - a2_ * yi;
      y(i) = yi;
    }
    return y;
  }

  bool bypass_ = false;
  double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
};

// PD-type learning law with a zero-phase Q filter, used as a baseline.
inline Eigen::VectorXd pd_ilc_update(double kp_ilc, double kd_ilc, double q_cutoff_hz,
                                     const Eigen::VectorXd& e_j, const Eigen::VectorXd& u_j,
                                     double T_ilc) {
  if (e_j.size() != u_j.size())
    throw LengthMismatchError("pd_ilc_update: e_j", static_cast<std::size_t>(u_j.size()),
                              static_cast<std::size_t>(e_j.size()));
  const Eigen::Index n = e_j.size();
  Eigen::VectorXd de = Eigen::VectorXd::Zero(n);
  if (n >= 2) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) de(i) = (e_j(i + 1) - e_j(i)) / T_ilc;
    de(n - 1) = de(n - 2);
  }
  const Eigen::VectorXd raw = u_j + kp_ilc * e_j + kd_ilc * de;
  return ZeroPhaseLowPass(q_cutoff_hz, T_ilc).apply(raw);
}

}  // namespace noilc_arm
