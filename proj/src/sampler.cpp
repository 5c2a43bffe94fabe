#include "submort/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "submort/format.hpp"
#include "submort/stats.hpp"

namespace submort {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDiffuseSd = 100.0;

// Solve the small symmetric positive-definite system M b = rhs in place
// (ridge-stabilized Cholesky); dimension is the component count, at most 5.
void solve_spd(std::vector<double>& M, std::vector<double>& rhs, std::size_t n) {
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += M[i * n + i];
  double ridge = 1e-10 * (tr > 0 ? tr : 1.0);
  for (std::size_t i = 0; i < n; ++i) M[i * n + i] += ridge;
  // Cholesky M = L L^T
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = M[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= M[i * n + k] * M[j * n + k];
      if (i == j) {
        M[i * n + i] = std::sqrt(std::max(s, 1e-300));
      } else {
        M[i * n + j] = s / M[j * n + j];
      }
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= M[i * n + k] * rhs[k];
    rhs[i] = s / M[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= M[k * n + i] * rhs[k];
    rhs[i] = s / M[i * n + i];
  }
}

enum class BlockKind { Beta, U, Mu, SigmaBeta, SigmaMu, SigmaX };

struct Block {
  BlockKind kind;
  std::size_t i = 0, j = 0, k = 0;  // indices; meaning depends on kind
  double log_step = 0.0;
  long long win_accepts = 0, win_attempts = 0;
  long long post_accepts = 0, post_attempts = 0;
};

class ChainRunner {
public:
  ChainRunner(const ModelSpec& spec, const SamplerConfig& cfg, int chain_index)
      : spec_(spec),
        cfg_(cfg),
        chain_(chain_index),
        lay_(spec),
        rng_(cfg.seed, static_cast<std::uint64_t>(chain_index)) {
    G_ = lay_.n_ages;
    A_ = lay_.n_areas;
    T_ = lay_.n_years;
    P_ = lay_.n_components;

    const auto& d = spec.dataset;
    const std::size_t n = d.n_cells();
    y_.resize(n);
    expo_.resize(n);
    lgy_.resize(n);
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t a = 0; a < A_; ++a)
        for (std::size_t x = 0; x < G_; ++x) {
          std::size_t c = cell(x, a, t);
          y_[c] = static_cast<double>(d.deaths(x, a, t));
          expo_[c] = d.exposure(x, a, t);
          lgy_[c] = std::lgamma(y_[c] + 1.0);
        }
    if (spec.constraint_enabled) {
      yagg_.resize(G_ * T_);
      lgyagg_.resize(G_ * T_);
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t x = 0; x < G_; ++x) {
          yagg_[x + G_ * t] = static_cast<double>(d.aggregate_deaths(x, t));
          lgyagg_[x + G_ * t] = std::lgamma(yagg_[x + G_ * t] + 1.0);
        }
    }
    basis_.resize(G_ * P_);
    for (std::size_t x = 0; x < G_; ++x)
      for (std::size_t p = 0; p < P_; ++p) basis_[x * P_ + p] = spec.basis.loading(x, p);
    group_.resize(A_);
    for (std::size_t a = 0; a < A_; ++a) group_[a] = spec.group_of_area(a);

    build_blocks();
  }

  ChainResult run() {
    v_ = lay_.flatten(init_params(spec_, rng_));
    rebuild_caches();
    double lp = prior_total();
    if (!std::isfinite(lp + ll_))
      throw std::runtime_error("non-finite log posterior at initialization");

    ChainResult out;
    out.draws.reserve(static_cast<std::size_t>(cfg_.n_saved_per_chain()));
    long long batch = 0;
    for (long long iter = 1; iter <= cfg_.n_iterations; ++iter) {
      for (Block& b : blocks_) update_block(b, iter > cfg_.n_burnin);
      if (iter <= cfg_.n_burnin && iter % cfg_.adaptation_window == 0) {
        ++batch;
        adapt(batch);
      }
      if (iter > cfg_.n_burnin && (iter - cfg_.n_burnin) % cfg_.thin == 0)
        out.draws.push_back(v_);
      if (iter % 1000 == 0) rebuild_caches();  // clear accumulated drift
    }
    out.acceptance.reserve(blocks_.size());
    for (const Block& b : blocks_) {
      double rate = b.post_attempts > 0
                        ? static_cast<double>(b.post_accepts) /
                              static_cast<double>(b.post_attempts)
                        : 0.0;
      out.acceptance.push_back({block_name(b), rate});
    }
    return out;
  }

private:
  std::size_t cell(std::size_t x, std::size_t a, std::size_t t) const {
    return x + G_ * (a + A_ * t);
  }

  void build_blocks() {
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t a = 0; a < A_; ++a)
        blocks_.push_back({BlockKind::Beta, a, t, 0, std::log(0.1)});
    if (lay_.overdispersion) {
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t a = 0; a < A_; ++a)
          blocks_.push_back({BlockKind::U, a, t, 0, std::log(0.1)});
    }
    if (lay_.hierarchical) {
      for (std::size_t g = 0; g < lay_.n_groups; ++g)
        for (std::size_t p = 0; p < P_; ++p)
          blocks_.push_back({BlockKind::Mu, g, p, 0, std::log(0.1)});
      for (std::size_t g = 0; g < lay_.n_groups; ++g)
        for (std::size_t p = 0; p < P_; ++p)
          for (std::size_t t = 0; t < T_; ++t)
            blocks_.push_back({BlockKind::SigmaBeta, g, p, t, std::log(0.3)});
      for (std::size_t g = 0; g < lay_.n_groups; ++g)
        for (std::size_t p = 0; p < P_; ++p)
          for (std::size_t s = 0; s < lay_.n_sigma_mu_per_comp; ++s)
            blocks_.push_back({BlockKind::SigmaMu, g, p, s, std::log(0.3)});
    }
    if (lay_.overdispersion) {
      for (std::size_t x = 0; x < G_; ++x)
        blocks_.push_back({BlockKind::SigmaX, x, 0, 0, std::log(0.3)});
    }
    scratch_logm_.resize(G_);
    scratch_lam_.resize(G_);
    scratch_cell_.resize(G_);
    scratch_agg_lam_.resize(G_);
    scratch_agg_ll_.resize(G_);
    scratch_vec_.resize(std::max({P_, G_, T_}));
  }

  std::string block_name(const Block& b) const {
    switch (b.kind) {
      case BlockKind::Beta:
        return "beta[a=" + std::to_string(b.i) + ",t=" + std::to_string(b.j) + "]";
      case BlockKind::U:
        return "u[a=" + std::to_string(b.i) + ",t=" + std::to_string(b.j) + "]";
      case BlockKind::Mu:
        return "mu[g=" + std::to_string(b.i) + ",p=" + std::to_string(b.j) + "]";
      case BlockKind::SigmaBeta:
        return "sigma_beta[g=" + std::to_string(b.i) + ",p=" + std::to_string(b.j) +
               ",t=" + std::to_string(b.k) + "]";
      case BlockKind::SigmaMu:
        return "sigma_mu[g=" + std::to_string(b.i) + ",p=" + std::to_string(b.j) +
               ",s=" + std::to_string(b.k) + "]";
      case BlockKind::SigmaX:
        return "sigma_x[x=" + std::to_string(b.i) + "]";
    }
    return "?";
  }

  void adapt(long long batch) {
    double damp = 1.0 / std::sqrt(static_cast<double>(batch));
    for (Block& b : blocks_) {
      if (b.win_attempts == 0) continue;
      double rate = static_cast<double>(b.win_accepts) / static_cast<double>(b.win_attempts);
      double delta = (rate - cfg_.target_acceptance) * damp;
      b.log_step += std::clamp(delta, -1.0, 1.0);
      b.log_step = std::clamp(b.log_step, -20.0, 5.0);
      b.win_accepts = b.win_attempts = 0;
    }
  }

  void update_block(Block& b, bool post_burnin) {
    bool accepted = false;
    switch (b.kind) {
      case BlockKind::Beta:
        accepted = update_beta(b.i, b.j, std::exp(b.log_step));
        break;
      case BlockKind::U:
        accepted = update_u(b.i, b.j, std::exp(b.log_step));
        break;
      case BlockKind::Mu:
        accepted = update_mu(b.i, b.j, std::exp(b.log_step));
        break;
      case BlockKind::SigmaBeta:
        accepted = update_sigma_beta(b.i, b.j, b.k, std::exp(b.log_step));
        break;
      case BlockKind::SigmaMu:
        accepted = update_sigma_mu(b.i, b.j, b.k, std::exp(b.log_step));
        break;
      case BlockKind::SigmaX:
        accepted = update_sigma_x(b.i, std::exp(b.log_step));
        break;
    }
    if (post_burnin) {
      ++b.post_attempts;
      if (accepted) ++b.post_accepts;
    } else {
      ++b.win_attempts;
      if (accepted) ++b.win_accepts;
    }
  }

  bool metropolis_accept(double delta) {
    return std::log(rng_.uniform()) < delta;
  }

  // ---- likelihood scratch for one (area, year) column -------------------

  // Computes the likelihood delta of replacing the G log-rates of column
  // (a, t) with new_logm, filling the scratch arrays for a later commit.
  double column_delta(std::size_t a, std::size_t t, const double* new_logm) {
    double dll = 0.0;
    for (std::size_t x = 0; x < G_; ++x) {
      std::size_t c = cell(x, a, t);
      scratch_logm_[x] = new_logm[x];
      if (expo_[c] > 0.0) {
        double lam = expo_[c] * std::exp(new_logm[x]);
        scratch_lam_[x] = lam;
        scratch_cell_[x] = poisson_log_term(y_[c], lam, lgy_[c]);
        dll += scratch_cell_[x] - cell_ll_[c];
      } else {
        scratch_lam_[x] = 0.0;
        scratch_cell_[x] = 0.0;
      }
    }
    if (spec_.constraint_enabled) {
      for (std::size_t x = 0; x < G_; ++x) {
        std::size_t c = cell(x, a, t);
        std::size_t xt = x + G_ * t;
        double new_agg = agg_lam_[xt] - lam_[c] + scratch_lam_[x];
        scratch_agg_lam_[x] = new_agg;
        scratch_agg_ll_[x] = poisson_log_term(yagg_[xt], new_agg, lgyagg_[xt]);
        dll += scratch_agg_ll_[x] - agg_ll_[xt];
      }
    }
    return dll;
  }

  void commit_column(std::size_t a, std::size_t t, double dll) {
    for (std::size_t x = 0; x < G_; ++x) {
      std::size_t c = cell(x, a, t);
      logm_[c] = scratch_logm_[x];
      lam_[c] = scratch_lam_[x];
      cell_ll_[c] = scratch_cell_[x];
      if (spec_.constraint_enabled) {
        std::size_t xt = x + G_ * t;
        agg_lam_[xt] = scratch_agg_lam_[x];
        agg_ll_[xt] = scratch_agg_ll_[x];
      }
    }
    ll_ += dll;
  }

  // ---- block updates -----------------------------------------------------

  bool update_beta(std::size_t a, std::size_t t, double step) {
    double* beta = v_.data() + lay_.beta_index(0, a, t);
    double* prop = scratch_vec_.data();
    double dprior = 0.0;
    for (std::size_t p = 0; p < P_; ++p) prop[p] = beta[p] + step * rng_.normal();
    if (lay_.hierarchical) {
      std::size_t g = group_[a];
      for (std::size_t p = 0; p < P_; ++p) {
        double mu = v_[lay_.mu_index(g, p, t)];
        double sb = v_[lay_.sigma_beta_index(g, p, t)];
        dprior += normal_logpdf(prop[p], mu, sb) - normal_logpdf(beta[p], mu, sb);
      }
    }
    thread_local std::vector<double> new_logm;
    new_logm.resize(G_);
    for (std::size_t x = 0; x < G_; ++x) {
      double lm = 0.0;
      const double* row = basis_.data() + x * P_;
      for (std::size_t p = 0; p < P_; ++p) lm += row[p] * prop[p];
      if (lay_.overdispersion) lm += v_[lay_.u_index(x, a, t)];
      new_logm[x] = lm;
    }
    double dll = column_delta(a, t, new_logm.data());
    if (!metropolis_accept(dprior + dll)) return false;
    for (std::size_t p = 0; p < P_; ++p) beta[p] = prop[p];
    commit_column(a, t, dll);
    return true;
  }

  bool update_u(std::size_t a, std::size_t t, double step) {
    double dprior = 0.0;
    double* prop = scratch_vec_.data();  // proposed u values
    thread_local std::vector<double> new_logm;
    new_logm.resize(G_);
    for (std::size_t x = 0; x < G_; ++x) {
      std::size_t ui = lay_.u_index(x, a, t);
      double old_u = v_[ui];
      double new_u = old_u + step * rng_.normal();
      prop[x] = new_u;
      double sx = v_[lay_.sigma_x_index(x)];
      dprior += normal_logpdf(new_u, 0.0, sx) - normal_logpdf(old_u, 0.0, sx);
      new_logm[x] = logm_[cell(x, a, t)] + (new_u - old_u);
    }
    double dll = column_delta(a, t, new_logm.data());
    if (!metropolis_accept(dprior + dll)) return false;
    for (std::size_t x = 0; x < G_; ++x) v_[lay_.u_index(x, a, t)] = prop[x];
    commit_column(a, t, dll);
    return true;
  }

  // RW2 prior terms for one (group, component), evaluated on given mu values.
  double mu_series_prior(std::size_t g, std::size_t p, const double* mu) const {
    double total = 0.0;
    for (std::size_t t = 0; t < T_; ++t) {
      if (t < 2) {
        total += normal_logpdf(mu[t], 0.0, kDiffuseSd);
      } else {
        std::size_t s = spec_.sigma_mu_time_varying ? t - 2 : 0;
        double sd = v_[lay_.sigma_mu_index(g, p, s)];
        total += normal_logpdf(mu[t], 2.0 * mu[t - 1] - mu[t - 2], sd);
      }
    }
    return total;
  }

  bool update_mu(std::size_t g, std::size_t p, double step) {
    const double* mu = v_.data() + lay_.mu_index(g, p, 0);
    double* prop = scratch_vec_.data();
    for (std::size_t t = 0; t < T_; ++t) prop[t] = mu[t] + step * rng_.normal();
    double delta = mu_series_prior(g, p, prop) - mu_series_prior(g, p, mu);
    for (std::size_t t = 0; t < T_; ++t) {
      for (std::size_t a = 0; a < A_; ++a) {
        if (group_[a] != g) continue;
        double b = v_[lay_.beta_index(p, a, t)];
        double sb = v_[lay_.sigma_beta_index(g, p, t)];
        delta += normal_logpdf(b, prop[t], sb) - normal_logpdf(b, mu[t], sb);
      }
    }
    if (!metropolis_accept(delta)) return false;
    double* mu_w = v_.data() + lay_.mu_index(g, p, 0);
    for (std::size_t t = 0; t < T_; ++t) mu_w[t] = prop[t];
    return true;
  }

  bool update_sigma_beta(std::size_t g, std::size_t p, std::size_t t, double step) {
    std::size_t idx = lay_.sigma_beta_index(g, p, t);
    double old_s = v_[idx];
    double new_s = old_s * std::exp(step * rng_.normal());
    if (new_s > spec_.prior_upper) {
      rng_.uniform();  // keep the stream aligned with the accept draw
      return false;
    }
    double mu = v_[lay_.mu_index(g, p, t)];
    double delta = std::log(new_s) - std::log(old_s);  // Jacobian of the log walk
    for (std::size_t a = 0; a < A_; ++a) {
      if (group_[a] != g) continue;
      double b = v_[lay_.beta_index(p, a, t)];
      delta += normal_logpdf(b, mu, new_s) - normal_logpdf(b, mu, old_s);
    }
    if (!metropolis_accept(delta)) return false;
    v_[idx] = new_s;
    return true;
  }

  bool update_sigma_mu(std::size_t g, std::size_t p, std::size_t s, double step) {
    std::size_t idx = lay_.sigma_mu_index(g, p, s);
    double old_s = v_[idx];
    double new_s = old_s * std::exp(step * rng_.normal());
    if (new_s > spec_.prior_upper) {
      rng_.uniform();
      return false;
    }
    double delta = std::log(new_s) - std::log(old_s);
    const double* mu = v_.data() + lay_.mu_index(g, p, 0);
    for (std::size_t t = 2; t < T_; ++t) {
      if (spec_.sigma_mu_time_varying && t - 2 != s) continue;
      double pred = 2.0 * mu[t - 1] - mu[t - 2];
      delta += normal_logpdf(mu[t], pred, new_s) - normal_logpdf(mu[t], pred, old_s);
    }
    if (!metropolis_accept(delta)) return false;
    v_[idx] = new_s;
    return true;
  }

  bool update_sigma_x(std::size_t x, double step) {
    std::size_t idx = lay_.sigma_x_index(x);
    double old_s = v_[idx];
    double new_s = old_s * std::exp(step * rng_.normal());
    if (new_s > spec_.prior_upper) {
      rng_.uniform();
      return false;
    }
    double delta = std::log(new_s) - std::log(old_s);
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t a = 0; a < A_; ++a) {
        double u = v_[lay_.u_index(x, a, t)];
        delta += normal_logpdf(u, 0.0, new_s) - normal_logpdf(u, 0.0, old_s);
      }
    if (!metropolis_accept(delta)) return false;
    v_[idx] = new_s;
    return true;
  }

  // ---- full recomputation --------------------------------------------------

  void rebuild_caches() {
    logm_.assign(G_ * A_ * T_, 0.0);
    lam_.assign(G_ * A_ * T_, 0.0);
    cell_ll_.assign(G_ * A_ * T_, 0.0);
    if (spec_.constraint_enabled) {
      agg_lam_.assign(G_ * T_, 0.0);
      agg_ll_.assign(G_ * T_, 0.0);
    }
    ll_ = 0.0;
    for (std::size_t t = 0; t < T_; ++t) {
      for (std::size_t a = 0; a < A_; ++a) {
        for (std::size_t x = 0; x < G_; ++x) {
          std::size_t c = cell(x, a, t);
          double lm = 0.0;
          const double* row = basis_.data() + x * P_;
          const double* beta = v_.data() + lay_.beta_index(0, a, t);
          for (std::size_t p = 0; p < P_; ++p) lm += row[p] * beta[p];
          if (lay_.overdispersion) lm += v_[lay_.u_index(x, a, t)];
          logm_[c] = lm;
          if (expo_[c] > 0.0) {
            lam_[c] = expo_[c] * std::exp(lm);
            cell_ll_[c] = poisson_log_term(y_[c], lam_[c], lgy_[c]);
            ll_ += cell_ll_[c];
            if (spec_.constraint_enabled) agg_lam_[x + G_ * t] += lam_[c];
          }
        }
      }
      if (spec_.constraint_enabled) {
        for (std::size_t x = 0; x < G_; ++x) {
          std::size_t xt = x + G_ * t;
          agg_ll_[xt] = poisson_log_term(yagg_[xt], agg_lam_[xt], lgyagg_[xt]);
          ll_ += agg_ll_[xt];
        }
      }
    }
  }

  double prior_total() { return log_prior(lay_.unflatten(v_), spec_); }

  const ModelSpec& spec_;
  const SamplerConfig& cfg_;
  int chain_;
  ParamLayout lay_;
  Rng rng_;

  std::size_t G_ = 0, A_ = 0, T_ = 0, P_ = 0;
  std::vector<double> y_, expo_, lgy_, yagg_, lgyagg_, basis_;
  std::vector<std::size_t> group_;

  std::vector<double> v_;
  std::vector<double> logm_, lam_, cell_ll_, agg_lam_, agg_ll_;
  double ll_ = 0.0;

  std::vector<Block> blocks_;
  std::vector<double> scratch_logm_, scratch_lam_, scratch_cell_, scratch_agg_lam_,
      scratch_agg_ll_, scratch_vec_;
};

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1) throw std::invalid_argument("sampler config: n_chains must be >= 1");
  if (thin < 1) throw std::invalid_argument("sampler config: thin must be >= 1");
  if (n_burnin < 0) throw std::invalid_argument("sampler config: n_burnin must be >= 0");
  if (!(n_burnin < n_iterations))
    throw std::invalid_argument("sampler config: n_burnin must be < n_iterations");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw std::invalid_argument("sampler config: target_acceptance must be in (0,1)");
  if (adaptation_window < 1)
    throw std::invalid_argument("sampler config: adaptation_window must be >= 1");
}

ModelParams init_params(const ModelSpec& spec, Rng& rng) {
  ParamLayout lay(spec);
  const std::size_t P = lay.n_components, A = lay.n_areas, T = lay.n_years, G = lay.n_ages;
  const auto& d = spec.dataset;

  ModelParams out;
  out.beta.assign(P * A * T, 0.0);
  if (lay.hierarchical) {
    out.mu.assign(lay.n_groups * P * T, 0.0);
    out.sigma_beta.assign(lay.n_groups * P * T, 1.0);
    out.sigma_mu.assign(lay.n_groups * P * lay.n_sigma_mu_per_comp, 1.0);
  }
  if (lay.overdispersion) {
    out.sigma_x.assign(G, 1.0);
    out.u.assign(G * A * T, 0.0);
  }

  std::vector<double> M(P * P), rhs(P);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t a = 0; a < A; ++a) {
      std::fill(M.begin(), M.end(), 0.0);
      std::fill(rhs.begin(), rhs.end(), 0.0);
      std::size_t n_pts = 0;
      for (std::size_t x = 0; x < G; ++x) {
        double expo = d.exposure(x, a, t);
        if (!(expo > 0.0)) continue;
        long long yy = d.deaths(x, a, t);
        double z = yy > 0 ? std::log(static_cast<double>(yy) / expo)
                          : std::log(0.5 / (expo + 1.0));
        ++n_pts;
        for (std::size_t p = 0; p < P; ++p) {
          rhs[p] += spec.basis.loading(x, p) * z;
          for (std::size_t q = 0; q <= p; ++q)
            M[p * P + q] += spec.basis.loading(x, p) * spec.basis.loading(x, q);
        }
      }
      if (n_pts >= P) {
        for (std::size_t p = 0; p < P; ++p)
          for (std::size_t q = p + 1; q < P; ++q) M[p * P + q] = M[q * P + p];
        solve_spd(M, rhs, P);
        for (std::size_t p = 0; p < P; ++p) out.beta[p + P * (a + A * t)] = rhs[p];
      }
    }
  }

  if (lay.hierarchical) {
    std::vector<std::size_t> group_size(lay.n_groups, 0);
    for (std::size_t a = 0; a < A; ++a) ++group_size[spec.group_of_area(a)];
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t a = 0; a < A; ++a) {
        std::size_t g = spec.group_of_area(a);
        for (std::size_t p = 0; p < P; ++p)
          out.mu[lay.mu_index(g, p, t) - lay.mu_offset] +=
              out.beta[p + P * (a + A * t)] / static_cast<double>(group_size[g]);
      }
  }

  for (double& b : out.beta) b += 0.01 * rng.normal();
  for (double& m : out.mu) m += 0.01 * rng.normal();
  for (double& u : out.u) u += 0.01 * rng.normal();
  return out;
}

ChainResult run_chain(const ModelSpec& spec, const SamplerConfig& config, int chain_index) {
  config.validate();
  ChainRunner runner(spec, config, chain_index);
  return runner.run();
}

namespace {

void write_trace(const std::string& path, const ParamLayout& lay,
                 const SamplerConfig& cfg,
                 const std::vector<std::vector<std::vector<double>>>& chains) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace file " + path);
  f << "iteration,chain,parameter,value\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t s = 0; s < chains[c].size(); ++s) {
      long long iter = cfg.n_burnin + static_cast<long long>(s + 1) * cfg.thin;
      for (std::size_t i = 0; i < chains[c][s].size(); ++i) {
        f << iter << ',' << c << ',' << lay.name(i) << ',' << format_double(chains[c][s][i])
          << '\n';
      }
    }
  }
}

}  // namespace

PosteriorSamples run(const ModelSpec& spec, const SamplerConfig& config) {
  config.validate();
  PosteriorSamples out;
  out.layout = ParamLayout(spec);
  out.config = config;
  out.chains.resize(config.n_chains);
  out.acceptance.resize(config.n_chains);

  int n_workers = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = std::min(n_workers, config.n_chains);

  std::vector<std::exception_ptr> errors(config.n_chains);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int c = next.fetch_add(1);
      if (c >= config.n_chains) return;
      try {
        ChainResult r = run_chain(spec, config, c);
        out.chains[c] = std::move(r.draws);
        out.acceptance[c] = std::move(r.acceptance);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int c = 0; c < config.n_chains; ++c) {
    if (errors[c]) {
      try {
        std::rethrow_exception(errors[c]);
      } catch (const std::exception& e) {
        throw std::runtime_error("chain " + std::to_string(c) + ": " + e.what());
      }
    }
  }
  if (!config.trace_csv.empty())
    write_trace(config.trace_csv, out.layout, config, out.chains);
  return out;
}

double gelman_rubin(const std::vector<std::vector<double>>& per_chain_draws) {
  const std::size_t m = per_chain_draws.size();
  if (m < 2) throw std::invalid_argument("gelman_rubin: need at least 2 chains");
  const std::size_t n = per_chain_draws[0].size();
  for (const auto& c : per_chain_draws) {
    if (c.size() != n) throw std::invalid_argument("gelman_rubin: unequal chain lengths");
    if (c.size() < 10)
      throw std::invalid_argument("gelman_rubin: need at least 10 draws per chain");
  }
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean(per_chain_draws[c]);
    vars[c] = sample_variance(per_chain_draws[c]);
  }
  double W = mean(vars);
  double B = static_cast<double>(n) * sample_variance(means);
  if (W == 0.0) {
    if (B == 0.0) return 1.0;  // identical constant chains
    return std::numeric_limits<double>::infinity();  // divergent
  }
  double nn = static_cast<double>(n);
  return std::sqrt(((nn - 1.0) / nn * W + B / nn) / W);
}

ScalarSummary summarize_scalar(const std::vector<std::vector<double>>& per_chain_draws,
                               double lo, double hi) {
  std::vector<double> pooled;
  for (const auto& c : per_chain_draws) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.empty()) throw std::invalid_argument("summarize: no draws");
  std::sort(pooled.begin(), pooled.end());
  ScalarSummary s;
  s.median = quantile_sorted(pooled, 0.5);
  s.lower = quantile_sorted(pooled, lo);
  s.upper = quantile_sorted(pooled, hi);
  s.rhat = std::numeric_limits<double>::quiet_NaN();
  if (per_chain_draws.size() >= 2 && per_chain_draws[0].size() >= 10)
    s.rhat = gelman_rubin(per_chain_draws);
  return s;
}

PosteriorSummary summarize(const PosteriorSamples& samples, double lo, double hi) {
  PosteriorSummary out;
  const std::size_t n_params = samples.layout.total;
  out.names.reserve(n_params);
  out.rows.reserve(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    out.names.push_back(samples.layout.name(i));
    out.rows.push_back(summarize_scalar(extract_param(samples, i), lo, hi));
  }
  return out;
}

std::vector<std::vector<double>> extract_param(const PosteriorSamples& samples,
                                               std::size_t flat_index) {
  std::vector<std::vector<double>> out(samples.n_chains());
  for (std::size_t c = 0; c < samples.n_chains(); ++c) {
    out[c].reserve(samples.chains[c].size());
    for (const auto& draw : samples.chains[c]) out[c].push_back(draw[flat_index]);
  }
  return out;
}

std::vector<std::vector<double>> extract_log_rate(const PosteriorSamples& samples,
                                                  const ModelSpec& spec, std::size_t x,
                                                  std::size_t a, std::size_t t) {
  const ParamLayout& lay = samples.layout;
  std::vector<std::vector<double>> out(samples.n_chains());
  for (std::size_t c = 0; c < samples.n_chains(); ++c) {
    out[c].reserve(samples.chains[c].size());
    for (const auto& draw : samples.chains[c]) {
      double lm = 0.0;
      for (std::size_t p = 0; p < lay.n_components; ++p)
        lm += draw[lay.beta_index(p, a, t)] * spec.basis.loading(x, p);
      if (lay.overdispersion) lm += draw[lay.u_index(x, a, t)];
      out[c].push_back(lm);
    }
  }
  return out;
}

}  // namespace submort
