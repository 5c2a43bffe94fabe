#include "submort/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "submort/rng.hpp"

namespace submort {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

double age_mid(const AgeGrid& grid, std::size_t i) {
  return grid.open_ended(i) ? grid.lower_bound(i) + 7.5
                            : grid.lower_bound(i) + 0.5 * grid.width(i);
}

}  // namespace

std::vector<double> brass_survivorship(std::span<const double> standard_l, BrassParams params,
                                       bool literal_reading) {
  if (standard_l.empty() || std::abs(standard_l[0] - 1.0) > 1e-12)
    throw std::invalid_argument("brass: standard survivorship must start at 1");
  std::vector<double> out(standard_l.size());
  out[0] = 1.0;
  if (params.alpha == 0.0 && params.beta == 1.0 && !literal_reading) {
    // identity transform: return the standard unchanged
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = standard_l[i];
    return out;
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    double y = literal_reading ? clamp_survivorship(standard_l[i])
                               : survivorship_logit(standard_l[i]);
    out[i] = survivorship_from_logit(params.alpha + params.beta * y);
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (!(out[i + 1] < out[i])) {
      throw std::invalid_argument("brass: transform not strictly decreasing (alpha=" +
                                  std::to_string(params.alpha) +
                                  ", beta=" + std::to_string(params.beta) + ")");
    }
  }
  return out;
}

std::vector<double> brass_transformed_rates(const LifeTable& standard, BrassParams params,
                                            bool literal_reading) {
  const AgeGrid& grid = standard.age_grid;
  const std::size_t g = grid.size();
  std::vector<double> l = brass_survivorship(standard.l, params, literal_reading);
  std::vector<double> m = survivorship_to_rates(grid, l, standard.e.back());
  // open-ended rate: continue the shift seen in the last closed interval
  m[g - 1] = standard.m[g - 1] * (m[g - 2] / standard.m[g - 2]);
  return m;
}

std::vector<double> default_standard_schedule() {
  return {
      0.00700,   // 0
      0.00035,   // 1-4
      0.00020,   // 5-9
      0.00025,   // 10-14
      0.00085,   // 15-19
      0.00130,   // 20-24
      0.00140,   // 25-29
      0.00150,   // 30-34
      0.00180,   // 35-39
      0.00240,   // 40-44
      0.00360,   // 45-49
      0.00550,   // 50-54
      0.00850,   // 55-59
      0.01300,   // 60-64
      0.02000,   // 65-69
      0.03100,   // 70-74
      0.05000,   // 75-79
      0.08200,   // 80-84
      0.16000};  // 85+
}

LifeTable default_standard_lifetable() {
  return rates_to_lifetable(AgeGrid::default_19(), default_standard_schedule());
}

ReferenceMatrix synthetic_reference_schedules(const LifeTable& standard) {
  const AgeGrid& grid = standard.age_grid;
  const std::size_t g = grid.size();

  std::vector<double> tilt(g), child(g), hump(g);
  for (std::size_t x = 0; x < g; ++x) {
    double mid = age_mid(grid, x);
    tilt[x] = (mid - 40.0) / 45.0;
    child[x] = std::exp(-mid / 12.0);
    double z = (mid - 22.0) / 9.0;
    hump[x] = std::exp(-z * z);
  }

  const double levels[] = {-0.35, 0.0, 0.35};
  const double tilts[] = {-0.30, 0.0, 0.30};
  const double childs[] = {-0.50, 0.0, 0.50};
  const double humps[] = {-0.40, 0.0, 0.40};

  ReferenceMatrix ref;
  ref.age_grid = grid;
  ref.n_cols = g;
  for (double c : levels) {
    for (double gt : tilts) {
      for (double h : childs) {
        for (double k : humps) {
          for (std::size_t x = 0; x < g; ++x) {
            ref.values.push_back(std::log(standard.m[x]) + c + gt * tilt[x] + h * child[x] +
                                 k * hump[x]);
          }
          ref.row_labels.push_back("ref_" + std::to_string(ref.row_labels.size()));
        }
      }
    }
  }
  ref.n_rows = ref.row_labels.size();
  return ref;
}

std::vector<SyntheticCounty> make_counties(const LifeTable& standard,
                                           const std::vector<long long>& sizes,
                                           std::span<const double> age_structure,
                                           int n_per_size, std::uint64_t seed,
                                           bool literal_reading) {
  const AgeGrid& grid = standard.age_grid;
  const std::size_t g = grid.size();

  std::vector<double> shares;
  if (age_structure.empty()) {
    shares.assign(standard.L.begin(), standard.L.end());
  } else {
    if (age_structure.size() != g)
      throw std::invalid_argument("make_counties: age structure length does not match grid");
    shares.assign(age_structure.begin(), age_structure.end());
  }
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw std::invalid_argument("make_counties: negative age-structure share");
    total += s;
  }
  if (!(total > 0.0)) throw std::invalid_argument("make_counties: empty age structure");
  for (double& s : shares) s /= total;

  std::vector<SyntheticCounty> out;
  for (long long size : sizes) {
    if (size <= 0) throw std::invalid_argument("make_counties: sizes must be positive");
    for (int rep = 0; rep < n_per_size; ++rep) {
      std::uint64_t stream = (static_cast<std::uint64_t>(size) << 20) |
                             static_cast<std::uint64_t>(rep);
      Rng rng(seed, stream);
      SyntheticCounty c;
      c.seed = stream;
      c.size = size;
      char buf[64];
      std::snprintf(buf, sizeof buf, "s%lld_r%02d", size, rep + 1);
      c.id = buf;
      c.population.resize(g);
      for (std::size_t x = 0; x < g; ++x)
        c.population[x] = static_cast<double>(size) * shares[x];

      bool ok = false;
      for (int attempt = 0; attempt < 100; ++attempt) {
        c.brass.alpha = rng.uniform(-0.75, 0.75);
        c.brass.beta = rng.uniform(0.7, 1.3);
        try {
          c.true_rates = brass_transformed_rates(standard, c.brass, literal_reading);
          ok = true;
          break;
        } catch (const std::invalid_argument&) {
          // non-monotone transform; redraw
        }
      }
      if (!ok)
        throw std::runtime_error("make_counties: 100 consecutive rejected parameter draws for " +
                                 c.id);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<long long> simulate_deaths(const SyntheticCounty& county, int n_years,
                                       std::uint64_t seed) {
  const std::size_t g = county.population.size();
  Rng rng(seed, fnv1a(county.id));
  std::vector<long long> y(g * static_cast<std::size_t>(n_years), 0);
  for (int t = 0; t < n_years; ++t) {
    for (std::size_t x = 0; x < g; ++x) {
      double lam = county.population[x] * county.true_rates[x];
      y[x + g * static_cast<std::size_t>(t)] = rng.poisson(lam);
    }
  }
  return y;
}

void simulate_all(std::vector<SyntheticCounty>& counties, int n_years, std::uint64_t seed) {
  for (auto& c : counties) c.deaths = simulate_deaths(c, n_years, seed);
}

}  // namespace submort
