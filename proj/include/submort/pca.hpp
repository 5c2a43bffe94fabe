#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "submort/age_grid.hpp"

namespace submort {

/// N reference log-mortality schedules over G age groups, row-major.
struct ReferenceMatrix {
  std::size_t n_rows = 0;  // N schedules
  std::size_t n_cols = 0;  // G age groups, must match age_grid.size()
  std::vector<double> values;  // row-major N x G
  AgeGrid age_grid = AgeGrid::default_19();
  std::vector<std::string> row_labels;

  double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }
};

/// Thin SVD X = U diag(D) V^T with r = min(N, G) columns, D sorted descending.
struct SvdResult {
  std::size_t n = 0, g = 0, r = 0;
  std::vector<double> u;  // N x r row-major
  std::vector<double> d;  // r singular values
  std::vector<double> v;  // G x r row-major
};

/// Throws std::invalid_argument naming the offending cell on non-finite
/// input; std::runtime_error if the decomposition fails to converge.
SvdResult svd(const ReferenceMatrix& x);

/// First p right-singular vectors of the reference matrix, sign-normalized:
/// each column's inner product with the column-mean log schedule is >= 0
/// (first nonzero entry positive on an exact tie).
struct PrincipalComponentBasis {
  AgeGrid age_grid = AgeGrid::default_19();
  std::size_t n_components = 0;
  std::vector<double> loadings;        // G x p row-major: loading(x, j)
  std::vector<double> singular_values; // all min(N, G) values
  std::vector<double> explained_variance_ratio;  // per kept component

  double loading(std::size_t x, std::size_t j) const {
    return loadings[x * n_components + j];
  }
  std::size_t n_ages() const { return age_grid.size(); }
};

PrincipalComponentBasis build_basis(const ReferenceMatrix& x, std::size_t p = 3);

}  // namespace submort
