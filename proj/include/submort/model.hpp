#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "submort/dataset.hpp"
#include "submort/pca.hpp"

namespace submort {

/// Prior on the principal-component coefficients.  FlatImproper drops the
/// geographic hierarchy entirely (improper flat prior on each beta); used for
/// diagnostics and conjugate reductions, not for production fits.
enum class CoefficientPrior { Hierarchical, FlatImproper };

/// Full model definition: data, basis and structural switches.
struct ModelSpec {
  /// Throws std::invalid_argument unless the basis and dataset share an age
  /// grid.  Pooling groups come from the dataset's group labels; one mean
  /// hierarchy is fitted per group.
  ModelSpec(PrincipalComponentBasis basis, MortalityDataset dataset);

  PrincipalComponentBasis basis;
  MortalityDataset dataset;
  bool constraint_enabled = true;     // aggregate-deaths likelihood term
  double prior_upper = 40.0;          // U(0, prior_upper] on every sigma
  bool sigma_mu_time_varying = false; // one smoothing sigma per (p, t) instead of per p
  CoefficientPrior coefficient_prior = CoefficientPrior::Hierarchical;
  bool include_overdispersion = true; // age-specific random effect u

  std::size_t n_components() const { return basis.n_components; }
  std::size_t n_ages() const { return dataset.n_ages(); }
  std::size_t n_areas() const { return dataset.n_areas(); }
  std::size_t n_years() const { return dataset.n_years(); }
  std::size_t n_groups() const { return n_groups_; }
  std::size_t group_of_area(std::size_t a) const { return group_of_area_[a]; }

private:
  std::size_t n_groups_ = 1;
  std::vector<std::size_t> group_of_area_;
};

/// Parameter state.  Shapes (P = components, A = areas, T = years,
/// G = age groups, NG = pooling groups, S = smoothing-sigma count):
///   beta[p + P*(a + A*t)], mu[t + T*(p + P*g)], sigma_beta[t + T*(p + P*g)],
///   sigma_mu[s + S*(p + P*g)], sigma_x[x], u[x + G*(a + A*t)].
/// Hierarchy vectors are empty under a flat coefficient prior; u and sigma_x
/// are empty when over-dispersion is disabled.
struct ModelParams {
  std::vector<double> beta;
  std::vector<double> mu;
  std::vector<double> sigma_beta;
  std::vector<double> sigma_mu;
  std::vector<double> sigma_x;
  std::vector<double> u;
};

/// Flat-vector layout for ModelParams; the sampler and the trace/summary
/// machinery index draws through this.
struct ParamLayout {
  ParamLayout() = default;
  explicit ParamLayout(const ModelSpec& spec);

  std::size_t n_components = 0, n_areas = 0, n_years = 0, n_ages = 0, n_groups = 0;
  std::size_t n_sigma_mu_per_comp = 0;  // S above
  bool hierarchical = true;
  bool overdispersion = true;

  std::size_t beta_offset = 0, mu_offset = 0, sigma_beta_offset = 0, sigma_mu_offset = 0,
              sigma_x_offset = 0, u_offset = 0, total = 0;

  std::size_t beta_index(std::size_t p, std::size_t a, std::size_t t) const {
    return beta_offset + p + n_components * (a + n_areas * t);
  }
  std::size_t mu_index(std::size_t g, std::size_t p, std::size_t t) const {
    return mu_offset + t + n_years * (p + n_components * g);
  }
  std::size_t sigma_beta_index(std::size_t g, std::size_t p, std::size_t t) const {
    return sigma_beta_offset + t + n_years * (p + n_components * g);
  }
  std::size_t sigma_mu_index(std::size_t g, std::size_t p, std::size_t s) const {
    return sigma_mu_offset + s + n_sigma_mu_per_comp * (p + n_components * g);
  }
  std::size_t sigma_x_index(std::size_t x) const { return sigma_x_offset + x; }
  std::size_t u_index(std::size_t x, std::size_t a, std::size_t t) const {
    return u_offset + x + n_ages * (a + n_areas * t);
  }

  std::string name(std::size_t flat_index) const;

  std::vector<double> flatten(const ModelParams& p) const;
  ModelParams unflatten(const std::vector<double>& v) const;
};

/// Throws std::invalid_argument if array shapes do not match the spec.
void check_shapes(const ModelParams& params, const ModelSpec& spec);

/// log m = sum_p beta_{p,a,t} Y_px + u_{x,a,t}.  Throws std::out_of_range
/// for bad indices.
double log_rate(const ModelParams& params, const ModelSpec& spec, std::size_t x, std::size_t a,
                std::size_t t);

/// Poisson log-likelihood over cells with positive exposure, plus the
/// aggregate-deaths term per (age, year) when the constraint is enabled.
/// Returns -inf for non-finite rates; never throws on values.
double log_likelihood(const ModelParams& params, const ModelSpec& spec);

/// Hierarchical prior: beta ~ N(mu, sigma_beta^2); second-order random walk
/// on mu over time (diffuse N(0, 100^2) on the first two years); u ~
/// N(0, sigma_x^2); flat priors on sigmas inside (0, prior_upper], -inf
/// outside.
double log_prior(const ModelParams& params, const ModelSpec& spec);

double log_posterior(const ModelParams& params, const ModelSpec& spec);

/// Normal log-density.
double normal_logpdf(double v, double mean, double sd);

/// Poisson log-probability term y*log(lam) - lam - lgamma(y+1) with the
/// conventions: 0 when lam == 0 and y == 0; -inf for non-finite lam or
/// lam == 0 with y > 0.
double poisson_log_term(double y, double lam, double lgamma_y_plus_1);

}  // namespace submort
