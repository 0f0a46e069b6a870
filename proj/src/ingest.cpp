#include "mgfn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <sstream>

namespace mgfn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool all_digits(const std::string& s, std::size_t from, std::size_t count) {
  if (from + count > s.size()) return false;
  for (std::size_t i = from; i < from + count; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  const std::string s = trim(text);
  std::int64_t epoch = 0;
  if (parse_int(s, epoch)) return epoch;

  // ISO-8601: date, optional time, optional zone.
  if (s.size() < 10 || !all_digits(s, 0, 4) || s[4] != '-' || !all_digits(s, 5, 2) ||
      s[7] != '-' || !all_digits(s, 8, 2))
    throw ParseError("unrecognized timestamp '" + s + "'");
  const std::int64_t year = std::stoll(s.substr(0, 4));
  const unsigned month = static_cast<unsigned>(std::stoul(s.substr(5, 2)));
  const unsigned day = static_cast<unsigned>(std::stoul(s.substr(8, 2)));
  if (month < 1 || month > 12 || day < 1 || day > 31)
    throw ParseError("timestamp out of range '" + s + "'");

  std::int64_t secs = days_from_civil(year, month, day) * 86400;
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    if (!all_digits(s, pos + 1, 2) || s[pos + 3] != ':' || !all_digits(s, pos + 4, 2) ||
        s[pos + 6] != ':' || !all_digits(s, pos + 7, 2))
      throw ParseError("unrecognized timestamp '" + s + "'");
    const long hh = std::stol(s.substr(pos + 1, 2));
    const long mm = std::stol(s.substr(pos + 4, 2));
    const long ss = std::stol(s.substr(pos + 7, 2));
    if (hh > 23 || mm > 59 || ss > 60) throw ParseError("timestamp out of range '" + s + "'");
    secs += hh * 3600 + mm * 60 + ss;
    pos += 9;
  }
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
    if ((s[pos] == '+' || s[pos] == '-') && all_digits(s, pos + 1, 2) && s[pos + 3] == ':' &&
        all_digits(s, pos + 4, 2) && pos + 6 == s.size()) {
      const long off = std::stol(s.substr(pos + 1, 2)) * 3600 + std::stol(s.substr(pos + 4, 2)) * 60;
      return s[pos] == '+' ? secs - off : secs + off;
    }
    throw ParseError("unrecognized timestamp '" + s + "'");
  }
  return secs;
}

std::vector<TripRecord> parse_trips(std::istream& stream, const RegionSet& regions) {
  regions.validate();
  std::vector<TripRecord> trips;
  std::string line;
  long line_no = 0;

  if (!std::getline(stream, line)) throw ParseError("trips stream is empty, expected a header");
  ++line_no;
  {
    std::string header = trim(line);
    std::erase(header, ' ');
    if (header != "origin,destination,timestamp")
      throw ParseError("line 1: expected header 'origin,destination,timestamp'");
  }

  while (std::getline(stream, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream row(line);
    std::string o, d, ts;
    if (!std::getline(row, o, ',') || !std::getline(row, d, ',') || !std::getline(row, ts))
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 comma-separated fields");

    std::int64_t origin = 0, dest = 0;
    if (!parse_int(o, origin) || !parse_int(d, dest))
      throw ParseError("line " + std::to_string(line_no) + ": region ids must be integers");
    if (origin < 0 || origin >= regions.count || dest < 0 || dest >= regions.count)
      throw ValidationError("line " + std::to_string(line_no) + ": region id out of range [0," +
                            std::to_string(regions.count) + ")");

    std::int64_t when;
    try {
      when = parse_timestamp(ts);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    trips.push_back(TripRecord{static_cast<Index>(origin), static_cast<Index>(dest), when});
  }
  return trips;
}

BinnedTrips build_multigraph(const std::vector<TripRecord>& trips, const RegionSet& regions,
                             std::int64_t bin_width_s, const TimeWindow& window,
                             std::int64_t period_s) {
  regions.validate();
  if (window.length() <= 0) throw ConfigError("study window must have positive length");
  if (bin_width_s <= 0) throw ConfigError("bin width must be positive");
  if (window.length() % bin_width_s != 0)
    throw ConfigError("bin width must divide the window length");

  const Index T = static_cast<Index>(window.length() / bin_width_s);
  const Index V = regions.count;

  BinnedTrips out;
  out.multigraph.regions = regions;
  out.multigraph.bin_width_s = bin_width_s;
  out.multigraph.period_s = period_s;
  out.multigraph.graphs.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t)
    out.multigraph.graphs.push_back(
        MobilityGraph{t, window.start + t * bin_width_s, Matrix::Zero(V, V)});

  for (const auto& trip : trips) {
    if (trip.timestamp < window.start || trip.timestamp >= window.end) {
      ++out.dropped;
      continue;
    }
    const Index bin = static_cast<Index>((trip.timestamp - window.start) / bin_width_s);
    out.multigraph.graphs[static_cast<std::size_t>(bin)].weights(trip.origin, trip.destination) +=
        1.0;
  }
  return out;
}

FlowMatrix aggregate_flow(const MobilityMultiGraph& mg) {
  if (mg.graphs.empty()) throw ValidationError("aggregate_flow: empty multigraph");
  Matrix total = Matrix::Zero(mg.n_regions(), mg.n_regions());
  for (const auto& g : mg.graphs) total += g.weights;
  return FlowMatrix{std::move(total)};
}

}  // namespace mgfn
