/*
 * Copyright 2026 The capfi authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace capfi::stats {

// Quantile by linear interpolation between closest ranks (the R-7 / numpy
// default convention): position h = (n-1)p, value = x[floor h] interpolated
// toward x[floor h + 1]. Input must be sorted.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 0) return 0.0;
  if (n == 1) return sorted[0];
  double h = static_cast<double>(n - 1) * p;
  size_t lo = static_cast<size_t>(h);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct BoxStats {
  size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double sigma = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

inline BoxStats box_stats(std::vector<double> values) {
  BoxStats s;
  s.n = values.size();
  if (s.n == 0) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  if (s.min == s.max) {
    // Constant sample: exact, no accumulated rounding.
    s.mean = s.median = s.q1 = s.q3 = s.min;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  s.median = quantile_sorted(values, 0.5);
  s.q1 = quantile_sorted(values, 0.25);
  s.q3 = quantile_sorted(values, 0.75);
  s.iqr = s.q3 - s.q1;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sigma = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

// Pearson correlation; 0 when either side is constant or inputs are empty.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace capfi::stats
