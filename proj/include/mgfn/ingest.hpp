#pragma once

#include "mgfn/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mgfn {

// Half-open study window in epoch seconds.
struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
};

// Parses a timestamp that is either integer epoch seconds or ISO-8601
// (YYYY-MM-DD[THH:MM:SS][Z|+HH:MM|-HH:MM]). Throws ParseError otherwise.
std::int64_t parse_timestamp(const std::string& text);

// CSV with header `origin,destination,timestamp`. Rows come back in input
// order; region ids outside [0, |V|) and malformed rows throw with the
// offending line number.
std::vector<TripRecord> parse_trips(std::istream& stream, const RegionSet& regions);

struct BinnedTrips {
  MobilityMultiGraph multigraph;
  long dropped = 0;  // trips outside the window
};

// Counts trips into T = window/bin_width half-open bins. Boundary trips
// belong to the later bin; trips at or past window end are dropped.
BinnedTrips build_multigraph(const std::vector<TripRecord>& trips, const RegionSet& regions,
                             std::int64_t bin_width_s, const TimeWindow& window,
                             std::int64_t period_s = 168 * 3600);

FlowMatrix aggregate_flow(const MobilityMultiGraph& mg);

}  // namespace mgfn
