#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "submort/model.hpp"
#include "submort/rng.hpp"

namespace submort {

struct SamplerConfig {
  int n_chains = 4;
  long long n_iterations = 20000;  // total per chain
  long long n_burnin = 10000;
  long long thin = 10;
  std::uint64_t seed = 1;
  double target_acceptance = 0.44;
  long long adaptation_window = 50;  // iterations between step-size updates
  int threads = 0;                   // concurrent chains; 0 = hardware count
  std::string trace_csv;             // optional; empty = no trace output

  long long n_saved_per_chain() const { return (n_iterations - n_burnin) / thin; }
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Post-burn-in acceptance rate for one proposal block.
struct AcceptanceRecord {
  std::string block;
  double rate = 0.0;
};

struct ChainResult {
  std::vector<std::vector<double>> draws;  // [saved][param]
  std::vector<AcceptanceRecord> acceptance;
};

/// Thinned post-burn-in draws from every chain, plus bookkeeping.
struct PosteriorSamples {
  ParamLayout layout;
  SamplerConfig config;
  std::vector<std::vector<std::vector<double>>> chains;  // [chain][saved][param]
  std::vector<std::vector<AcceptanceRecord>> acceptance;  // [chain]

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_saved_per_chain() const { return chains.empty() ? 0 : chains[0].size(); }
  std::size_t n_saved_total() const { return n_chains() * n_saved_per_chain(); }
};

/// Least-squares start: beta fitted to imputed observed log rates (zero-death
/// cells imputed as log((y+0.5)/(P+1))) per (area, year); mu the area mean of
/// beta; every sigma 1; u zero.  beta, mu and u are then jittered with
/// N(0, 0.01^2) noise from the given stream (sigmas are not jittered).
ModelParams init_params(const ModelSpec& spec, Rng& rng);

/// One chain of random-walk Metropolis block updates (beta and u blocks per
/// (area, year), mu blocks per component, each sigma on the log scale with
/// Jacobian correction), adapted toward the target acceptance rate during
/// burn-in only.  Deterministic given (config.seed, chain_index).
/// Throws std::runtime_error if the initial state has non-finite posterior.
ChainResult run_chain(const ModelSpec& spec, const SamplerConfig& config, int chain_index);

/// All chains, decorrelated streams derived from the seed.  Chains may run
/// concurrently; results are ordered by chain index so output never depends
/// on scheduling.  Chain failures are rethrown with the chain labeled.
PosteriorSamples run(const ModelSpec& spec, const SamplerConfig& config);

/// Potential scale reduction factor
///   R = sqrt(((n-1)/n * W + B/n) / W)
/// with W the mean within-chain variance and B/n the variance of chain means.
/// Degenerate cases: all chains constant and equal -> 1; W = 0 with B > 0 ->
/// +inf (divergent).  Throws std::invalid_argument for fewer than 2 chains or
/// fewer than 10 draws per chain.
double gelman_rubin(const std::vector<std::vector<double>>& per_chain_draws);

struct ScalarSummary {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double rhat = 0.0;  // NaN when fewer than 2 chains or too few draws
};

/// Pooled empirical quantiles (linear interpolation between order statistics)
/// with R-hat attached.
ScalarSummary summarize_scalar(const std::vector<std::vector<double>>& per_chain_draws,
                               double lo = 0.025, double hi = 0.975);

struct PosteriorSummary {
  std::vector<std::string> names;
  std::vector<ScalarSummary> rows;
};

/// Summary of every model parameter.
PosteriorSummary summarize(const PosteriorSamples& samples, double lo = 0.025,
                           double hi = 0.975);

std::vector<std::vector<double>> extract_param(const PosteriorSamples& samples,
                                               std::size_t flat_index);

/// Per-chain draws of log m_{x,a,t} reconstructed from beta and u.
std::vector<std::vector<double>> extract_log_rate(const PosteriorSamples& samples,
                                                  const ModelSpec& spec, std::size_t x,
                                                  std::size_t a, std::size_t t);

}  // namespace submort
