#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace submort {

/// Empirical quantile with linear interpolation between order statistics:
/// h = q*(n-1), result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
double quantile_sorted(std::span<const double> sorted, double q);

/// Convenience overload; sorts a copy.
double quantile(std::vector<double> values, double q);

struct QuantileSummary {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

QuantileSummary quantile_summary(std::vector<double> values, double lo = 0.025,
                                 double hi = 0.975);

double mean(std::span<const double> v);
/// Sample variance (n-1 denominator); 0 for fewer than two values.
double sample_variance(std::span<const double> v);

}  // namespace submort
