#pragma once

// Independent statistical oracles: Welford accumulation in long double,
// Student-t quantiles from Simpson-integrated densities, and OLS from the raw
// normal equations. None of these share code with intentd/stats.hpp.

#include <cmath>
#include <span>
#include <utility>

namespace intentd::testing {

struct OracleStats {
  long double mean = 0;
  long double stddev = 0;
};

inline OracleStats welford(std::span<const double> xs) {
  long double mean = 0;
  long double m2 = 0;
  long double k = 0;
  for (double x : xs) {
    k += 1;
    const long double d = x - mean;
    mean += d / k;
    m2 += d * (x - mean);
  }
  return {mean, std::sqrt(m2 / (k - 1))};
}

inline long double student_t_pdf(long double t, long double dof) {
  const long double logc = std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2) - 0.5L * std::log(dof * M_PIl);
  return std::exp(logc - (dof + 1) / 2 * std::log1p(t * t / dof));
}

/// P(0 <= T <= t) by composite Simpson.
inline long double student_t_half_mass(long double t, long double dof, int intervals = 4000) {
  const long double h = t / intervals;
  long double acc = student_t_pdf(0, dof) + student_t_pdf(t, dof);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4 : 2) * student_t_pdf(i * h, dof);
  return acc * h / 3;
}

/// t with P(T <= t) = 0.975, by bisection on the integrated density.
inline long double student_t_975(long double dof) {
  long double lo = 0;
  long double hi = 20;
  while (student_t_half_mass(hi, dof) < 0.475L) hi *= 2;
  for (int i = 0; i < 64; ++i) {
    const long double mid = (lo + hi) / 2;
    (student_t_half_mass(mid, dof) < 0.475L ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

/// OLS slope and intercept from raw sums solved by Cramer's rule.
inline std::pair<long double, long double> normal_equations(std::span<const std::pair<double, double>> pts) {
  long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    n += 1;
    sx += x;
    sy += y;
    sxx += static_cast<long double>(x) * x;
    sxy += static_cast<long double>(x) * y;
  }
  const long double det = n * sxx - sx * sx;
  const long double slope = (n * sxy - sx * sy) / det;
  const long double intercept = (sxx * sy - sx * sxy) / det;
  return {slope, intercept};
}

}  // namespace intentd::testing
