#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include <boost/math/distributions/students_t.hpp>

#include "intentd/error.hpp"

namespace intentd {

struct SummaryStats {
  std::size_t n = 0;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;  // sample, n - 1 denominator
  double ci95_ms = 0.0;    // half-width
  double cov = 0.0;        // stddev / mean
};

/// Two-sided 95% Student-t quantile, t_{0.975, dof}.
inline double t_quantile_975(std::size_t dof) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

/// Mean, sample stddev, Student-t 95% CI half-width and coefficient of
/// variation. CoV is reported as 0 when the mean is 0.
inline SummaryStats summarize(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "summary needs at least 2 samples");

  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / static_cast<double>(n);

  double ss = 0.0;
  double comp = 0.0;
  for (double x : samples) {
    ss += (x - mean) * (x - mean);
    comp += x - mean;
  }
  // Corrected two-pass variance.
  const double var = (ss - comp * comp / static_cast<double>(n)) / static_cast<double>(n - 1);
  const double stddev = std::sqrt(std::max(var, 0.0));

  SummaryStats s;
  s.n = n;
  s.mean_ms = mean;
  s.stddev_ms = stddev;
  s.ci95_ms = t_quantile_975(n - 1) * stddev / std::sqrt(static_cast<double>(n));
  s.cov = mean != 0.0 ? stddev / std::abs(mean) : 0.0;
  return s;
}

struct LinearFit {
  double slope = 0.0;      // ms per intent
  double intercept = 0.0;  // ms
  double r_squared = 0.0;
};

/// Ordinary least squares over (workload, mean_ms) points. r^2 is reported
/// as 1 when every y is identical.
inline LinearFit fit_linear(std::span<const std::pair<double, double>> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::InsufficientSamples, "linear fit needs at least 3 points");

  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::Degenerate, "linear fit needs at least two distinct workloads");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.r_squared = 1.0;
    return fit;
  }
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
  }
  fit.r_squared = 1.0 - ss_res / syy;
  return fit;
}

}  // namespace intentd
