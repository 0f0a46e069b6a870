#pragma once

#include "mgfn/eval.hpp"
#include "mgfn/fusion.hpp"
#include "mgfn/ingest.hpp"
#include "mgfn/mgd.hpp"
#include "mgfn/model.hpp"
#include "mgfn/synth.hpp"
#include "mgfn/training.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace mgfn {

struct DataConfig {
  std::string trips_path;
  std::string regions_path;
  std::int64_t bin_width_s = 3600;
  std::optional<TimeWindow> window;
  std::int64_t period_s = 168 * 3600;
};

struct FusionConfig {
  Index n_patterns = 7;
  Linkage linkage = Linkage::Average;
  FuseOp fuse_op = FuseOp::Mean;
};

struct ModelConfig {
  Index hidden = 96;
  Index heads = 4;
  Index layers = 1;
  std::uint64_t seed = 42;
};

struct EvalConfig {
  double alpha = 1.0;
  Index folds = 5;
  Index k = 2;
};

// Flat INI-style file with one section per pipeline stage. Unknown sections
// or keys are rejected.
struct PipelineConfig {
  DataConfig data;
  SynthConfig synth;
  MgdConfig mgd;
  FusionConfig fusion;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  static PipelineConfig defaults() { return {}; }
  static PipelineConfig load(const std::filesystem::path& file);

  // Applies a CLI-level seed to every seeded stage.
  void override_seed(std::uint64_t seed) {
    synth.seed = seed;
    model.seed = seed;
    train.seed = seed;
  }
};

// "3600", "30m", "1h", "7d" -> seconds.
std::int64_t parse_duration(const std::string& text);

}  // namespace mgfn
