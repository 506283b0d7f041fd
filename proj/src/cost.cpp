#include "hkgf/cost.hpp"

#include <cstdio>
#include <sstream>

namespace hkgf {

namespace {

CostReport::LayerCost layer_cost(const EncoderSpec& spec, int l, long long n) {
  const long long d = spec.layer_input_dim(l);
  const long long m = spec.layer_dims[l];
  const LayerConfig& cfg = spec.layer_configs[l];
  const bool hyper = is_hyperbolic(spec.kind);

  CostReport::LayerCost cost;
  cost.name = "l" + std::to_string(l);
  if (is_attention(spec.kind)) {
    const long long k = cfg.heads;
    cost.params = k * (m * d + 2 * m + (spec.attention_bias ? m : 0));
    const long long edges = n * n;  // dense bound on attended edges
    long long per_head = n * d * m            // feature transform
                         + edges * 2 * m      // attention scores a^T [u_i||u_j]
                         + edges              // LeakyReLU
                         + 3 * edges          // softmax: exp, normalize, divide
                         + edges * m          // neighborhood aggregation
                         + n * m;             // output activation
    if (spec.attention_bias) per_head += n * m;
    if (hyper) per_head += 3 * n * m;  // cos branch: cos, scale, add
    cost.macs = k * per_head;
    if (hyper) cost.macs += 2 * n * d;  // shared projection + log map
  } else {
    cost.params = d * m + m;
    cost.macs = n * d * m      // feature transform
                + n * m        // bias
                + n * n * m    // aggregation with the normalized adjacency
                + n * m;       // activation
    if (hyper) cost.macs += 2 * n * d + 3 * n * m;
  }
  return cost;
}

}  // namespace

long long count_params(const EncoderSpec& spec) {
  spec.validate();
  long long total = 0;
  for (int l = 0; l < spec.num_layers(); ++l) total += layer_cost(spec, l, 1).params;
  return total;
}

long long count_macs(const EncoderSpec& spec, int n_nodes) {
  spec.validate();
  require(n_nodes >= 1, "count_macs: n_nodes must be >= 1");
  long long total = 0;
  for (int l = 0; l < spec.num_layers(); ++l) total += layer_cost(spec, l, n_nodes).macs;
  return total;
}

CostReport cost_report(const EncoderSpec& spec, int n_nodes) {
  spec.validate();
  require(n_nodes >= 1, "cost_report: n_nodes must be >= 1");
  CostReport report;
  report.convention =
      "MAC-equivalent ops: N*D*M per dense transform, N^2*M dense-bound aggregation, "
      "2M per attended edge score, 1 op per activated entry; hyperbolic kinds add "
      "projection/log-map (2*N*D) and the cosine branch (3*N*M).";
  for (int l = 0; l < spec.num_layers(); ++l) {
    report.layers.push_back(layer_cost(spec, l, n_nodes));
    report.params += report.layers.back().params;
    report.macs += report.layers.back().macs;
  }
  return report;
}

std::string cost_table(int n_rois) {
  require(n_rois >= 2, "cost_table: n_rois must be >= 2");
  std::ostringstream os;
  os << "method   fmri_param_k  fmri_mmac  dti_param_k  dti_mmac\n";
  const std::vector<EncoderKind> kinds = {EncoderKind::kGcn, EncoderKind::kHkgcn,
                                          EncoderKind::kGat, EncoderKind::kHkgat};
  for (EncoderKind kind : kinds) {
    const EncoderSpec fmri = default_encoder_spec(kind, n_rois);
    const EncoderSpec dti = default_encoder_spec(kind, 3 * n_rois);
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s %12.2f %10.2f %12.2f %9.2f\n",
                  to_string(kind).c_str(), count_params(fmri) / 1e3,
                  count_macs(fmri, n_rois) / 1e6, count_params(dti) / 1e3,
                  count_macs(dti, n_rois) / 1e6);
    os << line;
  }
  return os.str();
}

}  // namespace hkgf
