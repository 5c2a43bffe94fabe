#include "submort/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace submort {

namespace {

std::string cell_name(const std::string& area, int year, double age_lower) {
  std::string s = "(area=" + area + ", year=" + std::to_string(year) + ", age=";
  if (age_lower == std::floor(age_lower)) {
    s += std::to_string(static_cast<long long>(age_lower));
  } else {
    s += std::to_string(age_lower);
  }
  return s + ")";
}

}  // namespace

MortalityDataset MortalityDataset::from_records(const std::vector<CellRecord>& records) {
  if (records.empty()) throw std::invalid_argument("dataset: no records");

  std::set<double> age_set;
  std::set<int> year_set;
  std::vector<std::string> areas;
  std::map<std::string, std::size_t> area_index;
  std::map<std::string, std::string> area_group;

  for (const auto& r : records) {
    age_set.insert(r.age_lower);
    year_set.insert(r.year);
    if (!area_index.count(r.area)) {
      area_index[r.area] = areas.size();
      areas.push_back(r.area);
      area_group[r.area] = r.group;
    } else if (area_group[r.area] != r.group) {
      throw std::invalid_argument("dataset: area " + r.area +
                                  " appears with conflicting group labels");
    }
  }

  MortalityDataset d(AgeGrid(std::vector<double>(age_set.begin(), age_set.end())));
  d.areas_ = std::move(areas);
  d.years_.assign(year_set.begin(), year_set.end());
  d.groups_.reserve(d.areas_.size());
  for (const auto& a : d.areas_) d.groups_.push_back(area_group[a]);

  const std::size_t n = d.n_ages() * d.n_areas() * d.n_years();
  d.deaths_.assign(n, 0);
  d.exposure_.assign(n, 0.0);
  d.present_.assign(n, 0);

  std::map<double, std::size_t> age_idx;
  for (std::size_t i = 0; i < d.age_grid_.size(); ++i) age_idx[d.age_grid_.lower_bound(i)] = i;
  std::map<int, std::size_t> year_idx;
  for (std::size_t i = 0; i < d.years_.size(); ++i) year_idx[d.years_[i]] = i;

  for (const auto& r : records) {
    std::size_t x = age_idx[r.age_lower];
    std::size_t a = area_index[r.area];
    std::size_t t = year_idx[r.year];
    std::size_t i = d.cell_index(x, a, t);
    if (d.present_[i]) {
      d.findings_.push_back({"duplicate_cell", cell_name(r.area, r.year, r.age_lower)});
    }
    d.present_[i] = 1;
    d.deaths_[i] = r.deaths;
    d.exposure_[i] = r.population;
  }
  return d;
}

MortalityDataset MortalityDataset::from_records(const std::vector<CellRecord>& records,
                                                std::vector<long long> aggregate_deaths) {
  MortalityDataset d = from_records(records);
  if (aggregate_deaths.size() != d.n_ages() * d.n_years())
    throw std::invalid_argument("dataset: aggregate series must have one value per (age, year)");
  d.supplied_aggregate_ = std::move(aggregate_deaths);
  return d;
}

long long MortalityDataset::aggregate_deaths(std::size_t x, std::size_t t) const {
  if (supplied_aggregate_) return (*supplied_aggregate_)[x + n_ages() * t];
  long long s = 0;
  for (std::size_t a = 0; a < n_areas(); ++a) s += deaths_[cell_index(x, a, t)];
  return s;
}

std::vector<Violation> validate_dataset(const MortalityDataset& d) {
  std::vector<Violation> out = d.construction_findings();
  const auto& grid = d.age_grid();
  for (std::size_t t = 0; t < d.n_years(); ++t) {
    for (std::size_t a = 0; a < d.n_areas(); ++a) {
      for (std::size_t x = 0; x < d.n_ages(); ++x) {
        std::string cell = cell_name(d.areas()[a], d.years()[t], grid.lower_bound(x));
        if (!d.cell_present(x, a, t)) {
          out.push_back({"incomplete_index", cell});
          continue;
        }
        long long y = d.deaths(x, a, t);
        double P = d.exposure(x, a, t);
        if (y < 0) out.push_back({"negative_deaths", cell});
        if (!(P >= 0.0) || !std::isfinite(P)) out.push_back({"bad_exposure", cell});
        if (P == 0.0 && y > 0) out.push_back({"zero_exposure_nonzero_deaths", cell});
      }
    }
  }
  if (d.has_supplied_aggregate()) {
    // a supplied aggregate must cover every single-area count
    for (std::size_t t = 0; t < d.n_years(); ++t) {
      for (std::size_t x = 0; x < d.n_ages(); ++x) {
        long long agg = d.aggregate_deaths(x, t);
        for (std::size_t a = 0; a < d.n_areas(); ++a) {
          if (d.cell_present(x, a, t) && d.deaths(x, a, t) > agg) {
            out.push_back({"aggregate_below_area_count",
                           cell_name(d.areas()[a], d.years()[t], grid.lower_bound(x))});
          }
        }
      }
    }
  }
  return out;
}

RateSurface observed_log_rates(const MortalityDataset& d) {
  RateSurface s;
  s.scale = RateSurface::Scale::Log;
  s.n_ages = d.n_ages();
  s.n_areas = d.n_areas();
  s.n_years = d.n_years();
  s.values.assign(d.n_cells(), 0.0);
  s.present.assign(d.n_cells(), 0);
  for (std::size_t t = 0; t < d.n_years(); ++t) {
    for (std::size_t a = 0; a < d.n_areas(); ++a) {
      for (std::size_t x = 0; x < d.n_ages(); ++x) {
        long long y = d.deaths(x, a, t);
        double P = d.exposure(x, a, t);
        if (y > 0 && P > 0.0) {
          std::size_t i = s.index(x, a, t);
          s.values[i] = std::log(static_cast<double>(y) / P);
          s.present[i] = 1;
        }
      }
    }
  }
  return s;
}

}  // namespace submort
