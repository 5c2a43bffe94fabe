#pragma once

#include <span>
#include <vector>

#include "submort/age_grid.hpp"
#include "submort/stats.hpp"

namespace submort {

/// Period life table over an age grid, radix 1.0.
///
/// Columns follow the usual relationships: q from m via
/// q = n*m / (1 + (n - a)*m) on closed intervals (q = 1 on the open last
/// group), l cumulated survivorship, d = l*q, L = n*l' + a*d person-years
/// (L = l/m on the last group), T reverse-cumulated, e = T/l.
struct LifeTable {
  AgeGrid age_grid = AgeGrid::default_19();
  std::vector<double> m;  // mortality rates
  std::vector<double> a;  // average years lived in interval by those dying
  std::vector<double> q;  // death probabilities
  std::vector<double> l;  // survivorship, l[0] = 1
  std::vector<double> d;  // deaths column
  std::vector<double> L;  // person-years lived in interval
  std::vector<double> T;  // person-years remaining
  std::vector<double> e;  // expectation of remaining life

  double e0() const { return e.front(); }
};

/// a_x convention: a_0 = 0.07 + 1.7*m_0 capped to [0.01, 0.5]; n/2 for other
/// closed intervals; the open-ended group is handled through e = 1/m.
/// Throws std::invalid_argument for non-positive or non-finite rates.
LifeTable rates_to_lifetable(const AgeGrid& grid, std::span<const double> m);

/// Inverse direction: q_x = 1 - l_{x+1}/l_x, m from q by the same a_x
/// convention (the infant a_0 is solved by fixed-point iteration), terminal
/// m = 1/terminal_e.  Round-trips with rates_to_lifetable to 1e-10 on l.
/// Throws std::invalid_argument if l is not strictly decreasing from 1 to a
/// positive terminal value.
std::vector<double> survivorship_to_rates(const AgeGrid& grid, std::span<const double> l,
                                          double terminal_e);

/// log(l / (1-l)); inputs are clamped to [1e-9, 1-1e-9] first (a warning is
/// logged once per process when clamping occurs).
double survivorship_logit(double l);
double survivorship_from_logit(double z);
/// The clamp used for all logit transforms of survivorship.
double clamp_survivorship(double l);

/// Life expectancy at birth for each posterior draw of a rate schedule,
/// summarized by the empirical-quantile rule.
QuantileSummary e0_posterior(const AgeGrid& grid,
                             const std::vector<std::vector<double>>& rate_draws,
                             double lo = 0.025, double hi = 0.975);

}  // namespace submort
