#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mgfn {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

// Error taxonomy shared by the library and the CLI exit-code mapping.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

struct RegionSet {
  Index count = 0;
  std::optional<std::vector<std::string>> labels;

  void validate() const {
    if (count < 2) throw ValidationError("region set needs at least 2 regions");
    if (labels && static_cast<Index>(labels->size()) != count)
      throw ValidationError("region labels length != region count");
  }
};

struct TripRecord {
  Index origin = 0;
  Index destination = 0;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
};

// One time bin of the multi-graph: dense |V|x|V| trip counts, row = origin.
struct MobilityGraph {
  Index time_index = 0;
  std::int64_t bin_start = 0;
  Matrix weights;

  Index n_regions() const { return weights.rows(); }

  void validate() const {
    if (weights.rows() != weights.cols())
      throw ValidationError("mobility graph weight matrix must be square");
    if ((weights.array() < 0.0).any())
      throw ValidationError("mobility graph weights must be non-negative");
  }
};

struct MobilityMultiGraph {
  std::vector<MobilityGraph> graphs;
  RegionSet regions;
  std::int64_t bin_width_s = 3600;
  std::int64_t period_s = 168 * 3600;

  Index size() const { return static_cast<Index>(graphs.size()); }
  Index n_regions() const { return regions.count; }

  void validate() const {
    regions.validate();
    if (graphs.empty()) throw ValidationError("multigraph has no time bins");
    if (bin_width_s <= 0) throw ValidationError("bin width must be positive");
    if (period_s <= 0) throw ValidationError("period must be positive");
    for (Index t = 0; t < size(); ++t) {
      const auto& g = graphs[static_cast<std::size_t>(t)];
      g.validate();
      if (g.time_index != t)
        throw ValidationError("multigraph time indices must be 0..T-1 consecutive");
      if (g.n_regions() != regions.count)
        throw ValidationError("all graphs must share the region set");
    }
  }
};

// Element-wise sum of trip counts over every time bin.
struct FlowMatrix {
  Matrix weights;
};

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

}  // namespace mgfn
