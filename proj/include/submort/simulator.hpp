#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "submort/lifetable.hpp"
#include "submort/pca.hpp"

namespace submort {

/// Relational-model parameters: logit(l_x) = alpha + beta * logit(l_std_x).
struct BrassParams {
  double alpha = 0.0;
  double beta = 1.0;
};

/// Transform a standard survivorship curve.  l_0 is pinned to 1 and excluded
/// from the transform.  By default Y_x = logit(l_std_x); with
/// literal_reading the raw survivorship is used as the regressor instead.
/// Throws std::invalid_argument (echoing the parameters) if the transformed
/// curve is not strictly decreasing, so the caller can redraw.
std::vector<double> brass_survivorship(std::span<const double> standard_l, BrassParams params,
                                       bool literal_reading = false);

/// Rates for a Brass-transformed schedule.  Closed intervals come from the
/// transformed survivorship; the open-ended rate scales the standard's
/// terminal rate by the ratio of last-closed-interval rates.
std::vector<double> brass_transformed_rates(const LifeTable& standard, BrassParams params,
                                            bool literal_reading = false);

struct SyntheticCounty {
  std::string id;
  long long size = 0;                 // total person-years, one sex
  std::vector<double> population;     // person-years per age group
  std::vector<double> true_rates;     // per age group, constant over years
  BrassParams brass;
  std::vector<long long> deaths;      // x + G*t once simulated
  std::uint64_t seed = 0;             // stream used for the parameter draw
};

/// Bundled standard: a smooth 19-group schedule with the usual infant dip,
/// young-adult hump and old-age rise.
std::vector<double> default_standard_schedule();
LifeTable default_standard_lifetable();

/// Deterministic synthetic reference set: the standard deformed over a grid
/// of level, old-age slope, child and young-adult variations.  Serves as the
/// reference matrix for basis construction when no external set is supplied.
ReferenceMatrix synthetic_reference_schedules(const LifeTable& standard);

/// One county per (size, replicate): alpha ~ U(-0.75, 0.75) and
/// beta ~ U(0.7, 1.3), redrawn (at most 100 times) if the transform is
/// rejected.  County streams derive from (seed, size, replicate), so the
/// output is invariant to the order of the sizes list up to relabeling.
/// An empty age_structure defaults to the standard's stationary L_x shares.
std::vector<SyntheticCounty> make_counties(const LifeTable& standard,
                                           const std::vector<long long>& sizes,
                                           std::span<const double> age_structure,
                                           int n_per_size, std::uint64_t seed,
                                           bool literal_reading = false);

/// Poisson death counts y[x + G*t] ~ Poisson(P_x * m_x), deterministic given
/// (seed, county id).
std::vector<long long> simulate_deaths(const SyntheticCounty& county, int n_years,
                                       std::uint64_t seed);

/// Runs simulate_deaths for every county and stores the result in place.
void simulate_all(std::vector<SyntheticCounty>& counties, int n_years, std::uint64_t seed);

}  // namespace submort
