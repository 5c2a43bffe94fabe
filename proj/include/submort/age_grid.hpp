#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace submort {

/// Age grid: ordered interval lower bounds starting at 0, last interval
/// open-ended.  The default grid is 0, 1, 5, 10, ..., 85+ (19 groups).
class AgeGrid {
public:
  /// Throws std::invalid_argument unless bounds are strictly increasing,
  /// non-empty and start at 0.
  explicit AgeGrid(std::vector<double> lower_bounds);

  /// 0, 1, 5, 10, ..., 85+ (G = 19).
  static AgeGrid default_19();
  /// Single-year grid 0, 1, ..., max_age with open-ended last group.
  static AgeGrid single_year(int max_age);

  std::size_t size() const { return lower_.size(); }
  double lower_bound(std::size_t i) const { return lower_[i]; }
  /// Interval width in years; +inf for the open-ended last group.
  double width(std::size_t i) const {
    return i + 1 < lower_.size() ? lower_[i + 1] - lower_[i]
                                 : std::numeric_limits<double>::infinity();
  }
  bool open_ended(std::size_t i) const { return i + 1 == lower_.size(); }
  const std::vector<double>& lower_bounds() const { return lower_; }

  bool operator==(const AgeGrid&) const = default;

private:
  std::vector<double> lower_;
};

}  // namespace submort
