#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace gramforge {

// Sentinel for an empty cell of a sense-resolved matrix: probability zero,
// never produced by a finite log-probability.
inline constexpr double kEmptyCell = std::numeric_limits<double>::quiet_NaN();

inline bool is_empty_cell(double v) { return std::isnan(v); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Scales to unit L2 norm; the zero vector is returned unchanged.
inline std::vector<double> unit_normalized(std::vector<double> v) {
  const double n = norm2(v);
  if (n > 0.0)
    for (auto& x : v) x /= n;
  return v;
}

// Probability-space feature vector of a run of log-probabilities, unit
// normalized. Shifting by the maximum before exponentiating is a positive
// rescale, so the direction (all cosine clustering cares about) is exact and
// nothing underflows. Empty cells become coordinate 0.
inline std::vector<double> probability_direction(std::span<const double> logps) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double l : logps)
    if (!is_empty_cell(l)) peak = std::max(peak, l);
  std::vector<double> v(logps.size(), 0.0);
  if (!std::isfinite(peak)) return v;
  for (std::size_t i = 0; i < logps.size(); ++i)
    if (!is_empty_cell(logps[i])) v[i] = std::exp(logps[i] - peak);
  return unit_normalized(std::move(v));
}

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  return std::max(0.0, 1.0 - dot(a, b));
}

}  // namespace gramforge
