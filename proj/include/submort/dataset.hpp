#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "submort/age_grid.hpp"

namespace submort {

/// One (age, area, year) record as it appears on the wire.
struct CellRecord {
  std::string area;
  int year = 0;
  double age_lower = 0.0;
  long long deaths = 0;
  double population = 0.0;  // person-years of exposure
  std::string group;        // optional pooling group; empty = default group
};

struct Violation {
  std::string rule;    // e.g. "zero_exposure_nonzero_deaths"
  std::string detail;  // names the offending cell
};

/// Rectangular panel of deaths and exposures indexed by (age, area, year).
/// Immutable after construction; cells missing from the input are tracked so
/// validation can report an incomplete index.
class MortalityDataset {
public:
  /// Areas keep first-appearance order; years and ages are sorted.
  /// Throws std::invalid_argument only for malformed structure that leaves no
  /// usable index (no records, inconsistent group labels for one area, or an
  /// age set that is not a valid grid).  Data-level problems are left for
  /// validate() to report.
  static MortalityDataset from_records(const std::vector<CellRecord>& records);

  /// Same, with a supplied aggregate-deaths series (one value per (age, year)
  /// in x-major order: index x + G*t).
  static MortalityDataset from_records(const std::vector<CellRecord>& records,
                                       std::vector<long long> aggregate_deaths);

  const AgeGrid& age_grid() const { return age_grid_; }
  const std::vector<std::string>& areas() const { return areas_; }
  const std::vector<int>& years() const { return years_; }
  /// Pooling group per area (parallel to areas()).
  const std::vector<std::string>& groups() const { return groups_; }

  std::size_t n_ages() const { return age_grid_.size(); }
  std::size_t n_areas() const { return areas_.size(); }
  std::size_t n_years() const { return years_.size(); }
  std::size_t n_cells() const { return deaths_.size(); }

  std::size_t cell_index(std::size_t x, std::size_t a, std::size_t t) const {
    return x + n_ages() * (a + n_areas() * t);
  }

  long long deaths(std::size_t x, std::size_t a, std::size_t t) const {
    return deaths_[cell_index(x, a, t)];
  }
  double exposure(std::size_t x, std::size_t a, std::size_t t) const {
    return exposure_[cell_index(x, a, t)];
  }
  bool cell_present(std::size_t x, std::size_t a, std::size_t t) const {
    return present_[cell_index(x, a, t)] != 0;
  }

  bool has_supplied_aggregate() const { return supplied_aggregate_.has_value(); }
  /// Aggregate deaths for (age, year): the supplied series if any, otherwise
  /// the sum over areas.
  long long aggregate_deaths(std::size_t x, std::size_t t) const;

  /// Duplicate-cell findings recorded while building (reported by validate()).
  const std::vector<Violation>& construction_findings() const { return findings_; }

private:
  MortalityDataset(AgeGrid grid) : age_grid_(std::move(grid)) {}

  AgeGrid age_grid_;
  std::vector<std::string> areas_;
  std::vector<int> years_;
  std::vector<std::string> groups_;
  std::vector<long long> deaths_;
  std::vector<double> exposure_;
  std::vector<std::uint8_t> present_;
  std::optional<std::vector<long long>> supplied_aggregate_;  // x + G*t
  std::vector<Violation> findings_;
};

/// Checks every dataset invariant; returns an empty list iff all hold.
/// Never aborts: each finding names the offending cell and rule.
std::vector<Violation> validate_dataset(const MortalityDataset& d);

/// Rates per (age, area, year) on the natural or log scale, with an absent
/// marker for cells that have no defined value.
struct RateSurface {
  enum class Scale { Natural, Log };

  Scale scale = Scale::Natural;
  std::size_t n_ages = 0, n_areas = 0, n_years = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> present;

  std::size_t index(std::size_t x, std::size_t a, std::size_t t) const {
    return x + n_ages * (a + n_areas * t);
  }
  bool is_present(std::size_t x, std::size_t a, std::size_t t) const {
    return present[index(x, a, t)] != 0;
  }
  double value(std::size_t x, std::size_t a, std::size_t t) const {
    return values[index(x, a, t)];
  }
};

/// log(y/P) where both deaths and exposure are positive; absent otherwise
/// (zero counts have no finite log rate).
RateSurface observed_log_rates(const MortalityDataset& d);

}  // namespace submort
