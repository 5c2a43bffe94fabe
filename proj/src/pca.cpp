#include "submort/pca.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace submort {

SvdResult svd(const ReferenceMatrix& x) {
  if (x.n_rows == 0 || x.n_cols == 0) throw std::invalid_argument("svd: empty matrix");
  if (x.n_cols != x.age_grid.size())
    throw std::invalid_argument("svd: column count does not match age grid");
  if (x.values.size() != x.n_rows * x.n_cols)
    throw std::invalid_argument("svd: value buffer size mismatch");
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    for (std::size_t j = 0; j < x.n_cols; ++j) {
      if (!std::isfinite(x.at(i, j))) {
        throw std::invalid_argument("svd: non-finite entry at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
      }
    }
  }

  Eigen::MatrixXd m(x.n_rows, x.n_cols);
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < x.n_cols; ++j) m(i, j) = x.at(i, j);

  Eigen::JacobiSVD<Eigen::MatrixXd> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) throw std::runtime_error("svd: failed to converge");

  SvdResult out;
  out.n = x.n_rows;
  out.g = x.n_cols;
  out.r = std::min(x.n_rows, x.n_cols);
  out.u.resize(out.n * out.r);
  out.d.resize(out.r);
  out.v.resize(out.g * out.r);
  for (std::size_t k = 0; k < out.r; ++k) out.d[k] = dec.singularValues()(k);
  for (std::size_t i = 0; i < out.n; ++i)
    for (std::size_t k = 0; k < out.r; ++k) out.u[i * out.r + k] = dec.matrixU()(i, k);
  for (std::size_t j = 0; j < out.g; ++j)
    for (std::size_t k = 0; k < out.r; ++k) out.v[j * out.r + k] = dec.matrixV()(j, k);
  return out;
}

PrincipalComponentBasis build_basis(const ReferenceMatrix& x, std::size_t p) {
  const std::size_t r = std::min(x.n_rows, x.n_cols);
  if (p < 1 || p > r)
    throw std::invalid_argument("build_basis: component count " + std::to_string(p) +
                                " out of range 1.." + std::to_string(r));
  SvdResult s = svd(x);

  // column means of the reference matrix: the mean log-mortality schedule
  std::vector<double> mean_schedule(x.n_cols, 0.0);
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < x.n_cols; ++j) mean_schedule[j] += x.at(i, j);
  for (double& v : mean_schedule) v /= static_cast<double>(x.n_rows);

  PrincipalComponentBasis b;
  b.age_grid = x.age_grid;
  b.n_components = p;
  b.loadings.resize(x.n_cols * p);
  b.singular_values = s.d;
  b.explained_variance_ratio.resize(p);

  double total = 0.0;
  for (double d : s.d) total += d * d;

  for (std::size_t k = 0; k < p; ++k) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.n_cols; ++j) dot += s.v[j * s.r + k] * mean_schedule[j];
    double sign = 1.0;
    if (dot < 0.0) {
      sign = -1.0;
    } else if (dot == 0.0) {
      for (std::size_t j = 0; j < x.n_cols; ++j) {
        if (s.v[j * s.r + k] != 0.0) {
          sign = s.v[j * s.r + k] > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < x.n_cols; ++j)
      b.loadings[j * p + k] = sign * s.v[j * s.r + k];
    b.explained_variance_ratio[k] = total > 0.0 ? s.d[k] * s.d[k] / total : 0.0;
  }
  return b;
}

}  // namespace submort
