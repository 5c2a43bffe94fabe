#include "submort/lifetable.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace submort {

namespace {

double infant_a(double m0) {
  double a = 0.07 + 1.7 * m0;
  if (a < 0.01) a = 0.01;
  if (a > 0.5) a = 0.5;
  return a;
}

std::atomic<bool> clamp_warned{false};

}  // namespace

double clamp_survivorship(double l) {
  const double lo = 1e-9, hi = 1.0 - 1e-9;
  if (l < lo || l > hi) {
    if (!clamp_warned.exchange(true)) {
      std::cerr << "warning: survivorship clamped into (0,1) for logit transform "
                   "(further clamps are silent)\n";
    }
    return l < lo ? lo : hi;
  }
  return l;
}

double survivorship_logit(double l) {
  double c = clamp_survivorship(l);
  return std::log(c / (1.0 - c));
}

double survivorship_from_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

LifeTable rates_to_lifetable(const AgeGrid& grid, std::span<const double> m) {
  const std::size_t g = grid.size();
  if (m.size() != g) throw std::invalid_argument("life table: rate count does not match grid");
  for (std::size_t i = 0; i < g; ++i) {
    if (!(m[i] > 0.0) || !std::isfinite(m[i]))
      throw std::invalid_argument("life table: rates must be positive and finite");
  }

  LifeTable lt;
  lt.age_grid = grid;
  lt.m.assign(m.begin(), m.end());
  lt.a.resize(g);
  lt.q.resize(g);
  lt.l.resize(g);
  lt.d.resize(g);
  lt.L.resize(g);
  lt.T.resize(g);
  lt.e.resize(g);

  for (std::size_t i = 0; i < g; ++i) {
    if (grid.open_ended(i)) {
      lt.a[i] = 0.0;  // unused; the open group is handled via e = 1/m
      lt.q[i] = 1.0;
      continue;
    }
    double n = grid.width(i);
    lt.a[i] = (i == 0) ? infant_a(m[0]) : 0.5 * n;
    double q = n * m[i] / (1.0 + (n - lt.a[i]) * m[i]);
    lt.q[i] = q > 1.0 ? 1.0 : q;
  }

  lt.l[0] = 1.0;
  for (std::size_t i = 0; i < g; ++i) {
    lt.d[i] = lt.l[i] * lt.q[i];
    if (i + 1 < g) lt.l[i + 1] = lt.l[i] - lt.d[i];
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (grid.open_ended(i)) {
      lt.L[i] = lt.l[i] / m[i];
    } else {
      double n = grid.width(i);
      lt.L[i] = n * (lt.l[i] - lt.d[i]) + lt.a[i] * lt.d[i];
    }
  }
  double acc = 0.0;
  for (std::size_t i = g; i-- > 0;) {
    acc += lt.L[i];
    lt.T[i] = acc;
    lt.e[i] = lt.l[i] > 0.0 ? lt.T[i] / lt.l[i] : 0.0;
  }
  return lt;
}

std::vector<double> survivorship_to_rates(const AgeGrid& grid, std::span<const double> l,
                                          double terminal_e) {
  const std::size_t g = grid.size();
  if (l.size() != g) throw std::invalid_argument("survivorship: length does not match grid");
  if (std::abs(l[0] - 1.0) > 1e-12)
    throw std::invalid_argument("survivorship: l_0 must be 1");
  for (std::size_t i = 0; i + 1 < g; ++i) {
    if (!(l[i + 1] < l[i]))
      throw std::invalid_argument("survivorship: not strictly decreasing at index " +
                                  std::to_string(i + 1));
  }
  if (!(l[g - 1] > 0.0)) throw std::invalid_argument("survivorship: terminal value must be positive");
  if (!(terminal_e > 0.0)) throw std::invalid_argument("survivorship: terminal e must be positive");

  std::vector<double> m(g);
  for (std::size_t i = 0; i + 1 < g; ++i) {
    double n = grid.width(i);
    double q = 1.0 - l[i + 1] / l[i];
    if (i == 0) {
      // a_0 depends on m_0; iterate the fixed point (converges in a few steps)
      double mi = q / (n - (n - 0.2) * q);
      for (int it = 0; it < 50; ++it) {
        double next = q / (n - (n - infant_a(mi)) * q);
        if (std::abs(next - mi) <= 1e-16 * std::max(1.0, std::abs(next))) {
          mi = next;
          break;
        }
        mi = next;
      }
      m[0] = mi;
    } else {
      double a = 0.5 * n;
      m[i] = q / (n - (n - a) * q);
    }
  }
  m[g - 1] = 1.0 / terminal_e;
  return m;
}

QuantileSummary e0_posterior(const AgeGrid& grid,
                             const std::vector<std::vector<double>>& rate_draws,
                             double lo, double hi) {
  if (rate_draws.empty()) throw std::invalid_argument("e0_posterior: no draws");
  std::vector<double> e0s;
  e0s.reserve(rate_draws.size());
  for (const auto& m : rate_draws) e0s.push_back(rates_to_lifetable(grid, m).e0());
  return quantile_summary(std::move(e0s), lo, hi);
}

}  // namespace submort
