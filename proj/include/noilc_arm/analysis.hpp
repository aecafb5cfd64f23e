#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/trajectory.hpp"

namespace noilc_arm {

// One rest-to-rest transition of a sampled reference: the last sample of the
// plateau before it and the first sample of the plateau after it.
struct Transition {
  std::size_t start = 0;
  std::size_t end = 0;
  double from = 0.0;  // rad
  double to = 0.0;    // rad

  double size() const { return std::abs(to - from); }
  double direction() const { return to >= from ? 1.0 : -1.0; }
};

inline std::vector<Transition> find_transitions(const Trajectory& ref) {
  std::vector<Transition> out;
  std::size_t k = 1;
  while (k < ref.size()) {
    if (ref.angle[k] == ref.angle[k - 1]) {
      ++k;
      continue;
    }
    Transition t;
    t.start = k - 1;
    t.from = ref.angle[k - 1];
    while (k + 1 < ref.size() && ref.angle[k + 1] != ref.angle[k]) ++k;
    t.end = k;
    t.to = ref.angle[k];
    out.push_back(t);
    ++k;
  }
  return out;
}

// Largest retreat against the direction of travel between the start of a
// transition and the moment the angle first comes within `reach_tol` of the
// target, searched over `window` seconds. `alpha` is sampled every `dt`
// seconds from t = 0. Zero means the approach was monotone.
inline double bounce_back(const Eigen::VectorXd& alpha, double dt, const Transition& tr,
                          double t_start, double window = 0.5,
                          double reach_tol = deg2rad(0.5)) {
  const double dir = tr.direction();
  const auto first = static_cast<Eigen::Index>(std::llround(t_start / dt));
  const auto last = std::min<Eigen::Index>(
      alpha.size() - 1, first + static_cast<Eigen::Index>(std::llround(window / dt)));
  double best = -std::numeric_limits<double>::infinity();
  double retreat = 0.0;
  for (Eigen::Index i = first; i <= last; ++i) {
    const double progress = dir * alpha(i);
    if (progress >= dir * tr.to - reach_tol) break;
    best = std::max(best, progress);
    retreat = std::max(retreat, best - progress);
  }
  return retreat;
}

// Lag L in [-max_lag, max_lag] maximizing sum_k x(k + L) y(k). A negative
// lag means x leads y.
inline int peak_lag(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int max_lag) {
  if (x.size() != y.size() || x.size() == 0)
    throw LengthMismatchError("peak_lag", static_cast<std::size_t>(y.size()),
                              static_cast<std::size_t>(x.size()));
  const auto n = static_cast<int>(x.size());
  int best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (int k = std::max(0, -lag); k < n && k + lag < n; ++k) c += x(k + lag) * y(k);
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  return best_lag;
}

inline Eigen::VectorXd increments(const Eigen::VectorXd& x) {
  if (x.size() < 2) return Eigen::VectorXd();
  return x.tail(x.size() - 1) - x.head(x.size() - 1);
}

// Trailing mean over `w` samples; the first w-1 entries average what exists.
inline std::vector<double> trailing_mean(const std::vector<double>& v, std::size_t w) {
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= w) sum -= v[i - w];
    out[i] = sum / static_cast<double>(std::min(i + 1, w));
  }
  return out;
}

}  // namespace noilc_arm
