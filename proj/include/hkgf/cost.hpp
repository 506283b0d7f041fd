#pragma once

#include "hkgf/layers.hpp"

namespace hkgf {

// Parameter and multiply-accumulate accounting for one forward encoding.
struct CostReport {
  struct LayerCost {
    std::string name;
    long long params = 0;
    long long macs = 0;
  };
  long long params = 0;
  long long macs = 0;
  std::vector<LayerCost> layers;
  std::string convention;
};

// Trainable scalars: dense layers carry a bias, attention layers follow the
// spec's bias convention (absent by default).
long long count_params(const EncoderSpec& spec);

// MAC-equivalent ops: N*D*M per dense transform, dense-bound N^2*M per
// aggregation, 2M per attended edge, one op per activated entry.
long long count_macs(const EncoderSpec& spec, int n_nodes);

CostReport cost_report(const EncoderSpec& spec, int n_nodes);

// The four-method table over the fMRI (N-dim) and DTI (3N-dim) configurations.
std::string cost_table(int n_rois);

}  // namespace hkgf
