#include "submort/age_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace submort {

AgeGrid::AgeGrid(std::vector<double> lower_bounds) : lower_(std::move(lower_bounds)) {
  if (lower_.empty()) throw std::invalid_argument("age grid: no bounds");
  if (lower_.front() != 0.0) throw std::invalid_argument("age grid: first bound must be 0");
  for (std::size_t i = 0; i + 1 < lower_.size(); ++i) {
    if (!(lower_[i] < lower_[i + 1]))
      throw std::invalid_argument("age grid: bounds must be strictly increasing");
  }
  for (double b : lower_) {
    if (!std::isfinite(b)) throw std::invalid_argument("age grid: non-finite bound");
  }
}

AgeGrid AgeGrid::default_19() {
  std::vector<double> b{0.0, 1.0};
  for (int a = 5; a <= 85; a += 5) b.push_back(a);
  return AgeGrid(std::move(b));
}

AgeGrid AgeGrid::single_year(int max_age) {
  std::vector<double> b;
  for (int a = 0; a <= max_age; ++a) b.push_back(a);
  return AgeGrid(std::move(b));
}

}  // namespace submort
