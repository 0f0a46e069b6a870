#include "mgfn/synth.hpp"

#include <cmath>
#include <random>

namespace mgfn {

namespace {

constexpr double kBackgroundFraction = 0.05;  // weekday off-peak, symmetric
constexpr double kWeekendFraction = 0.5;      // weekend daytime into offices

}  // namespace

Regime regime_of_bin(Index bin) {
  const Index hour = bin % 24;
  const bool weekday = ((bin / 24) % 7) < 5;
  if (weekday) {
    if (hour == 7 || hour == 8) return Regime::WeekdayAm;
    if (hour == 17 || hour == 18) return Regime::WeekdayPm;
    return Regime::WeekdayOff;
  }
  if (hour >= 10 && hour < 20) return Regime::WeekendDay;
  return Regime::WeekendNight;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::WeekdayAm: return "weekday_am";
    case Regime::WeekdayPm: return "weekday_pm";
    case Regime::WeekdayOff: return "weekday_off";
    case Regime::WeekendDay: return "weekend_day";
    case Regime::WeekendNight: return "weekend_night";
  }
  return "?";
}

SynthCity generate_city(const SynthConfig& cfg) {
  cfg.validate();
  const Index nr = cfg.n_residential;
  const Index V = nr + cfg.n_office;
  const Index T = 24 * cfg.days;
  const double b = cfg.base_rate;

  const auto is_res = [nr](Index i) { return i < nr; };
  const auto rate = [&](Regime regime, Index i, Index j) -> double {
    if (i == j) return 0.0;
    switch (regime) {
      case Regime::WeekdayAm: return (is_res(i) && !is_res(j)) ? b : 0.0;
      case Regime::WeekdayPm: return (!is_res(i) && is_res(j)) ? b : 0.0;
      case Regime::WeekdayOff: return kBackgroundFraction * b;
      case Regime::WeekendDay: return (is_res(i) && !is_res(j)) ? kWeekendFraction * b : 0.0;
      case Regime::WeekendNight: return 0.0;
    }
    return 0.0;
  };

  SynthCity city;
  city.multigraph.regions.count = V;
  city.multigraph.bin_width_s = 3600;
  city.multigraph.period_s = 168 * 3600;
  city.multigraph.graphs.reserve(static_cast<std::size_t>(T));
  city.truth.regime_labels.reserve(static_cast<std::size_t>(T));

  std::mt19937_64 rng(cfg.seed);
  for (Index t = 0; t < T; ++t) {
    const Regime regime = regime_of_bin(t);
    city.truth.regime_labels.push_back(regime);
    Matrix w = Matrix::Zero(V, V);
    for (Index i = 0; i < V; ++i)
      for (Index j = 0; j < V; ++j) {
        const double r = rate(regime, i, j);
        if (r <= 0.0) continue;
        if (cfg.noise) {
          std::poisson_distribution<long> pois(r);
          w(i, j) = static_cast<double>(pois(rng));
        } else {
          w(i, j) = static_cast<double>(std::llround(r));
        }
      }
    city.multigraph.graphs.push_back(MobilityGraph{t, t * 3600, std::move(w)});
  }

  city.truth.region_function.resize(static_cast<std::size_t>(V));
  for (Index i = 0; i < V; ++i)
    city.truth.region_function[static_cast<std::size_t>(i)] =
        is_res(i) ? RegionFunction::Residential : RegionFunction::Office;

  // Exact expectation of each region's out-flow over the whole window.
  city.truth.activity_intensity = Vector::Zero(V);
  for (Index t = 0; t < T; ++t) {
    const Regime regime = regime_of_bin(t);
    for (Index i = 0; i < V; ++i) {
      double out = 0.0;
      for (Index j = 0; j < V; ++j) out += rate(regime, i, j);
      city.truth.activity_intensity(i) += out;
    }
  }
  return city;
}

}  // namespace mgfn
