#pragma once

#include "mgfn/types.hpp"

#include <cstdint>
#include <vector>

namespace mgfn {

// Weekly traffic regimes planted by the generator, one per hour bin.
enum class Regime { WeekdayAm, WeekdayPm, WeekdayOff, WeekendDay, WeekendNight };

enum class RegionFunction { Residential, Office };

struct SynthConfig {
  Index n_residential = 10;
  Index n_office = 10;
  Index days = 7;
  double base_rate = 50.0;  // mean trips per active pair per hour bin
  bool noise = true;        // Poisson sampling; otherwise rounded expectations
  std::uint64_t seed = 7;

  void validate() const {
    if (n_residential < 0 || n_office < 0 || n_residential + n_office < 2)
      throw ValidationError("need at least 2 regions in total");
    if (days < 1) throw ValidationError("need at least one day");
    if (base_rate < 0.0) throw ValidationError("base rate must be non-negative");
  }
};

struct GroundTruth {
  std::vector<Regime> regime_labels;           // length T = 24 * days
  std::vector<RegionFunction> region_function; // length |V|
  Vector activity_intensity;                   // expected total out-flow per region
};

struct SynthCity {
  MobilityMultiGraph multigraph;
  GroundTruth truth;
};

Regime regime_of_bin(Index bin);

// Residential regions occupy ids [0, n_residential); offices follow. Weekday
// rush hours send residential->office flows in the morning and the reverse in
// the evening at base_rate; remaining weekday hours carry a weak symmetric
// background; weekend daytime sends moderate residential->office flows and
// weekend nights are silent.
SynthCity generate_city(const SynthConfig& cfg);

const char* regime_name(Regime r);

}  // namespace mgfn
