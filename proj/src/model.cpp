#include "submort/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace submort {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kDiffuseSd = 100.0;                    // first two years of mu
}  // namespace

double normal_logpdf(double v, double mean, double sd) {
  double z = (v - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double poisson_log_term(double y, double lam, double lgamma_y_plus_1) {
  if (!std::isfinite(lam) || lam < 0.0) return kNegInf;
  if (lam == 0.0) return y == 0.0 ? 0.0 : kNegInf;
  return y * std::log(lam) - lam - lgamma_y_plus_1;
}

ModelSpec::ModelSpec(PrincipalComponentBasis basis_in, MortalityDataset dataset_in)
    : basis(std::move(basis_in)), dataset(std::move(dataset_in)) {
  if (!(basis.age_grid == dataset.age_grid()))
    throw std::invalid_argument("model: basis age grid does not match dataset age grid");
  std::map<std::string, std::size_t> ids;
  group_of_area_.reserve(dataset.n_areas());
  for (const auto& gname : dataset.groups()) {
    auto [it, inserted] = ids.emplace(gname, ids.size());
    group_of_area_.push_back(it->second);
  }
  n_groups_ = ids.size();
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
  n_components = spec.n_components();
  n_areas = spec.n_areas();
  n_years = spec.n_years();
  n_ages = spec.n_ages();
  n_groups = spec.n_groups();
  hierarchical = spec.coefficient_prior == CoefficientPrior::Hierarchical;
  overdispersion = spec.include_overdispersion;
  n_sigma_mu_per_comp =
      spec.sigma_mu_time_varying ? (n_years > 2 ? n_years - 2 : 0) : 1;

  std::size_t off = 0;
  beta_offset = off;
  off += n_components * n_areas * n_years;
  mu_offset = off;
  if (hierarchical) off += n_groups * n_components * n_years;
  sigma_beta_offset = off;
  if (hierarchical) off += n_groups * n_components * n_years;
  sigma_mu_offset = off;
  if (hierarchical) off += n_groups * n_components * n_sigma_mu_per_comp;
  sigma_x_offset = off;
  if (overdispersion) off += n_ages;
  u_offset = off;
  if (overdispersion) off += n_ages * n_areas * n_years;
  total = off;
}

std::string ParamLayout::name(std::size_t i) const {
  auto triple = [](const char* base, std::size_t i1, std::size_t i2, std::size_t i3) {
    return std::string(base) + "[" + std::to_string(i1) + "," + std::to_string(i2) + "," +
           std::to_string(i3) + "]";
  };
  if (i < mu_offset) {
    std::size_t r = i - beta_offset;
    std::size_t p = r % n_components;
    std::size_t a = (r / n_components) % n_areas;
    std::size_t t = r / (n_components * n_areas);
    return triple("beta", p, a, t);
  }
  if (hierarchical && i < sigma_beta_offset) {
    std::size_t r = i - mu_offset;
    std::size_t t = r % n_years;
    std::size_t p = (r / n_years) % n_components;
    std::size_t g = r / (n_years * n_components);
    return triple("mu", g, p, t);
  }
  if (hierarchical && i < sigma_mu_offset) {
    std::size_t r = i - sigma_beta_offset;
    std::size_t t = r % n_years;
    std::size_t p = (r / n_years) % n_components;
    std::size_t g = r / (n_years * n_components);
    return triple("sigma_beta", g, p, t);
  }
  if (hierarchical && i < sigma_x_offset) {
    std::size_t r = i - sigma_mu_offset;
    std::size_t s = r % n_sigma_mu_per_comp;
    std::size_t p = (r / n_sigma_mu_per_comp) % n_components;
    std::size_t g = r / (n_sigma_mu_per_comp * n_components);
    return triple("sigma_mu", g, p, s);
  }
  if (overdispersion && i < u_offset) {
    return "sigma_x[" + std::to_string(i - sigma_x_offset) + "]";
  }
  if (overdispersion && i < total) {
    std::size_t r = i - u_offset;
    std::size_t x = r % n_ages;
    std::size_t a = (r / n_ages) % n_areas;
    std::size_t t = r / (n_ages * n_areas);
    return triple("u", x, a, t);
  }
  throw std::out_of_range("parameter index out of range");
}

std::vector<double> ParamLayout::flatten(const ModelParams& p) const {
  std::vector<double> v(total, 0.0);
  auto copy = [&v](std::size_t off, const std::vector<double>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) v[off + i] = src[i];
  };
  copy(beta_offset, p.beta);
  if (hierarchical) {
    copy(mu_offset, p.mu);
    copy(sigma_beta_offset, p.sigma_beta);
    copy(sigma_mu_offset, p.sigma_mu);
  }
  if (overdispersion) {
    copy(sigma_x_offset, p.sigma_x);
    copy(u_offset, p.u);
  }
  return v;
}

ModelParams ParamLayout::unflatten(const std::vector<double>& v) const {
  if (v.size() != total) throw std::invalid_argument("unflatten: wrong length");
  ModelParams p;
  auto take = [&v](std::size_t off, std::size_t n) {
    return std::vector<double>(v.begin() + off, v.begin() + off + n);
  };
  p.beta = take(beta_offset, n_components * n_areas * n_years);
  if (hierarchical) {
    p.mu = take(mu_offset, n_groups * n_components * n_years);
    p.sigma_beta = take(sigma_beta_offset, n_groups * n_components * n_years);
    p.sigma_mu = take(sigma_mu_offset, n_groups * n_components * n_sigma_mu_per_comp);
  }
  if (overdispersion) {
    p.sigma_x = take(sigma_x_offset, n_ages);
    p.u = take(u_offset, n_ages * n_areas * n_years);
  }
  return p;
}

void check_shapes(const ModelParams& params, const ModelSpec& spec) {
  ParamLayout lay(spec);
  auto want = [](std::size_t got, std::size_t expect, const char* what) {
    if (got != expect)
      throw std::invalid_argument(std::string("model params: ") + what + " has length " +
                                  std::to_string(got) + ", expected " + std::to_string(expect));
  };
  want(params.beta.size(), lay.n_components * lay.n_areas * lay.n_years, "beta");
  if (lay.hierarchical) {
    want(params.mu.size(), lay.n_groups * lay.n_components * lay.n_years, "mu");
    want(params.sigma_beta.size(), lay.n_groups * lay.n_components * lay.n_years, "sigma_beta");
    want(params.sigma_mu.size(), lay.n_groups * lay.n_components * lay.n_sigma_mu_per_comp,
         "sigma_mu");
  } else {
    want(params.mu.size(), 0, "mu");
    want(params.sigma_beta.size(), 0, "sigma_beta");
    want(params.sigma_mu.size(), 0, "sigma_mu");
  }
  if (lay.overdispersion) {
    want(params.sigma_x.size(), lay.n_ages, "sigma_x");
    want(params.u.size(), lay.n_ages * lay.n_areas * lay.n_years, "u");
  } else {
    want(params.sigma_x.size(), 0, "sigma_x");
    want(params.u.size(), 0, "u");
  }
}

double log_rate(const ModelParams& params, const ModelSpec& spec, std::size_t x, std::size_t a,
                std::size_t t) {
  if (x >= spec.n_ages() || a >= spec.n_areas() || t >= spec.n_years())
    throw std::out_of_range("log_rate: index out of range");
  const std::size_t P = spec.n_components();
  double v = 0.0;
  const double* beta = params.beta.data() + P * (a + spec.n_areas() * t);
  for (std::size_t p = 0; p < P; ++p) v += beta[p] * spec.basis.loading(x, p);
  if (spec.include_overdispersion)
    v += params.u[x + spec.n_ages() * (a + spec.n_areas() * t)];
  return v;
}

double log_likelihood(const ModelParams& params, const ModelSpec& spec) {
  check_shapes(params, spec);
  const auto& d = spec.dataset;
  const std::size_t G = d.n_ages(), A = d.n_areas(), T = d.n_years();
  double total = 0.0;
  std::vector<double> agg(G, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(agg.begin(), agg.end(), 0.0);
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t x = 0; x < G; ++x) {
        double P = d.exposure(x, a, t);
        if (P <= 0.0) continue;  // empty cells contribute nothing
        double lam = P * std::exp(log_rate(params, spec, x, a, t));
        double y = static_cast<double>(d.deaths(x, a, t));
        total += poisson_log_term(y, lam, std::lgamma(y + 1.0));
        agg[x] += lam;
      }
    }
    if (spec.constraint_enabled) {
      for (std::size_t x = 0; x < G; ++x) {
        double yagg = static_cast<double>(d.aggregate_deaths(x, t));
        total += poisson_log_term(yagg, agg[x], std::lgamma(yagg + 1.0));
      }
    }
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

double log_prior(const ModelParams& params, const ModelSpec& spec) {
  check_shapes(params, spec);
  ParamLayout lay(spec);
  const std::size_t P = lay.n_components, A = lay.n_areas, T = lay.n_years, G = lay.n_ages;
  double total = 0.0;

  auto sigma_ok = [&spec](double s) { return s > 0.0 && s <= spec.prior_upper; };

  if (lay.hierarchical) {
    for (const double s : params.sigma_beta)
      if (!sigma_ok(s)) return kNegInf;
    for (const double s : params.sigma_mu)
      if (!sigma_ok(s)) return kNegInf;
  }
  if (lay.overdispersion) {
    for (const double s : params.sigma_x)
      if (!sigma_ok(s)) return kNegInf;
  }

  if (lay.hierarchical) {
    // beta pooled toward the group mean
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t a = 0; a < A; ++a) {
        std::size_t g = spec.group_of_area(a);
        for (std::size_t p = 0; p < P; ++p) {
          total += normal_logpdf(params.beta[p + P * (a + A * t)],
                                 params.mu[lay.mu_index(g, p, t) - lay.mu_offset],
                                 params.sigma_beta[lay.sigma_beta_index(g, p, t) -
                                                   lay.sigma_beta_offset]);
        }
      }
    }
    // second-order random walk on mu, diffuse on the first two years
    for (std::size_t g = 0; g < lay.n_groups; ++g) {
      for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t t = 0; t < T; ++t) {
          std::size_t i = lay.mu_index(g, p, t) - lay.mu_offset;
          if (t < 2) {
            total += normal_logpdf(params.mu[i], 0.0, kDiffuseSd);
          } else {
            double pred = 2.0 * params.mu[lay.mu_index(g, p, t - 1) - lay.mu_offset] -
                          params.mu[lay.mu_index(g, p, t - 2) - lay.mu_offset];
            std::size_t s = spec.sigma_mu_time_varying ? t - 2 : 0;
            total += normal_logpdf(params.mu[i], pred,
                                   params.sigma_mu[lay.sigma_mu_index(g, p, s) -
                                                   lay.sigma_mu_offset]);
          }
        }
      }
    }
  }

  if (lay.overdispersion) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t a = 0; a < A; ++a)
        for (std::size_t x = 0; x < G; ++x)
          total += normal_logpdf(params.u[x + G * (a + A * t)], 0.0, params.sigma_x[x]);
  }
  return total;
}

double log_posterior(const ModelParams& params, const ModelSpec& spec) {
  double prior = log_prior(params, spec);
  if (prior == kNegInf) return kNegInf;
  double ll = log_likelihood(params, spec);
  return prior + ll;
}

}  // namespace submort
