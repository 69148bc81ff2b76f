#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace treemot::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// x ln x with the 0 ln 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// a * ln(b) where a == 0 contributes nothing even if b == 0.
inline double xlogy(double a, double b) { return a == 0.0 ? 0.0 : a * std::log(b); }

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

inline double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// Shifts a log-domain vector so that its exponentials sum to one.
inline void log_normalize(std::vector<double>& v) {
  const double z = log_sum_exp(v);
  if (z == kNegInf || !std::isfinite(z)) return;
  for (double& x : v) x -= z;
}

/// Exponentiates a normalized log vector.
inline std::vector<double> exp_normalized(std::span<const double> log_v) {
  std::vector<double> out(log_v.begin(), log_v.end());
  const double z = log_sum_exp(out);
  for (double& x : out) x = std::exp(x - z);
  return out;
}

/// Rescales a nonnegative vector to sum one; returns false for zero mass.
inline bool normalize_in_place(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (!(s > 0.0) || !std::isfinite(s)) return false;
  for (double& x : v) x /= s;
  return true;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

}  // namespace treemot::detail
