#include "submort/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace submort {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: no values");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  double h = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

QuantileSummary quantile_summary(std::vector<double> values, double lo, double hi) {
  std::sort(values.begin(), values.end());
  QuantileSummary s;
  s.median = quantile_sorted(values, 0.5);
  s.lower = quantile_sorted(values, lo);
  s.upper = quantile_sorted(values, hi);
  return s;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace submort
