#pragma once

#include <string>

#include "hkgf/evaluation.hpp"

namespace hkgf {

// Run configuration: config-file values first, command-line flags win.
struct RunConfig {
  // model
  std::string kind = "hkgcn";
  int hidden = 64;
  double lambda = 0.01;
  double curvature = 0.001;
  int heads = 4;  // first-layer heads for attention kinds
  bool attention_bias = false;
  // training
  TrainConfig train;
  // evaluation protocol
  CvPlan cv;
  // data
  std::string manifest;
  double keep_fraction = 0.5;
  bool binarize = false;
  // run
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
};

// Strict parse: unknown keys anywhere in the file are rejected.
RunConfig load_run_config(const std::string& path);

ModelSpec make_model_spec(const RunConfig& cfg, int n_rois);

// Full command-line entry point; returns the process exit code
// (0 ok, 1 validation error, 2 numerical failure).
int run_cli(int argc, const char* const* argv);

}  // namespace hkgf
