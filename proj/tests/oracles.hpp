#pragma once

// Reference computations for the tests. None of these go through the code
// under test: they use plain loops, series expansions and generic
// optimizers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Matrix exponential by scaling and squaring with a long Taylor series.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& M) {
  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.125) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd X = M * scale;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Normalized continuous state matrices of the arm written out by hand:
// x1 = alpha / a_s, x2 = alpha_dot / r_s, u = dp / u_s (dp in Pa, kappa per bar).
struct Continuous {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
};

inline Continuous arm_continuous(double kappa, double w0, double delta, double a_s, double r_s,
                                 double u_s) {
  Continuous c;
  c.A(0, 0) = 0.0;
  c.A(0, 1) = r_s / a_s;
  c.A(1, 0) = -w0 * w0 * a_s / r_s;
  c.A(1, 1) = -2.0 * delta * w0;
  c.B(0) = 0.0;
  c.B(1) = w0 * w0 * kappa * (u_s / 1e5) / r_s;
  return c;
}

// Output sequence y(1..N) by explicit recursion on plain arrays.
inline std::vector<double> simulate_loop(const Eigen::Matrix2d& A, const Eigen::Vector2d& B,
                                         const std::vector<double>& u, double x1 = 0.0,
                                         double x2 = 0.0) {
  std::vector<double> y(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double n1 = A(0, 0) * x1 + A(0, 1) * x2 + B(0) * u[k];
    const double n2 = A(1, 0) * x1 + A(1, 1) * x2 + B(1) * u[k];
    x1 = n1;
    x2 = n2;
    y[k] = x1;
  }
  return y;
}

// Learning cost expanded into scalar sums.
inline double cost_loops(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S,
                         const Eigen::MatrixXd& W, const Eigen::MatrixXd& P,
                         const Eigen::MatrixXd& D, const Eigen::VectorXd& e_j,
                         const Eigen::VectorXd& u_j, const Eigen::VectorXd& u_next) {
  const auto n = static_cast<std::size_t>(u_j.size());
  const auto nd = static_cast<std::size_t>(D.rows());
  std::vector<double> e(n), du(n), Du(nd, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = u_next(i) - u_j(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double pd = 0.0;
    for (std::size_t k = 0; k < n; ++k) pd += P(i, k) * du[k];
    e[i] = e_j(i) - pd;
  }
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t k = 0; k < n; ++k) Du[i] += D(i, k) * u_next(k);
  double j = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) j += e[i] * M(i, k) * e[k] + du[i] * S(i, k) * du[k];
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t k = 0; k < nd; ++k) j += Du[i] * W(i, k) * Du[k];
  return 0.5 * j;
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

inline Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x,
                                        double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Nonlinear conjugate gradient (Polak-Ribiere) driven only by function
// values: finite-difference gradients and a three-point parabolic line
// search. Exact on quadratics up to rounding.
inline Eigen::VectorXd minimize_cg(const Objective& f, Eigen::VectorXd x, int max_iter,
                                   double grad_tol, double h = 1e-3) {
  Eigen::VectorXd g = central_gradient(f, x, h);
  Eigen::VectorXd d = -g;
  for (int it = 0; it < max_iter && g.lpNorm<Eigen::Infinity>() > grad_tol; ++it) {
    const double t = 1e-2 / std::max(1.0, d.norm());
    const double f0 = f(x);
    const double fp = f(x + t * d);
    const double fm = f(x - t * d);
    const double curv = (fp + fm - 2.0 * f0) / (t * t);
    const double slope = (fp - fm) / (2.0 * t);
    if (!(curv > 0.0)) break;
    x += (-slope / curv) * d;
    const Eigen::VectorXd g_new = central_gradient(f, x, h);
    const double beta = std::max(0.0, g_new.dot(g_new - g) / g.dot(g));
    d = -g_new + beta * d;
    g = g_new;
    if ((it + 1) % static_cast<int>(x.size()) == 0) d = -g;
  }
  return x;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace oracle
