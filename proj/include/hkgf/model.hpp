#pragma once

#include <json.hpp>

#include "hkgf/fusion.hpp"
#include "hkgf/predictor.hpp"

namespace hkgf {

// Full two-stage pipeline description: per-modality encoders, the coupling
// encoder, and the prediction head. gcn/gat kinds form the Euclidean
// reference pipeline (plain encoders + plain MLP head).
struct ModelSpec {
  EncoderKind kind = EncoderKind::kHkgcn;
  int n_rois = 0;
  EncoderSpec fc_encoder;
  EncoderSpec sc_encoder;
  EncoderSpec coupling_encoder;
  int hnn_hidden = 32;
  CurvatureConfig curvature;

  void validate() const;
};

// fMRI N -> 64 -> 64, DTI 3N -> 64 -> 64, coupling 128 -> 64 -> 64, HNN
// hidden 32; attention kinds use 4 heads then 1.
ModelSpec default_model_spec(EncoderKind kind, int n_rois, double lambda = 0.01,
                             double curvature_c = 0.001);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct NamedTensor {
  std::string name;
  Matrix value;
  Matrix grad;
};

class ParameterStore {
 public:
  int add(const std::string& name, Matrix value);
  int index_of(const std::string& name) const;  // -1 when absent
  NamedTensor& tensor(int i) { return tensors_[static_cast<std::size_t>(i)]; }
  const NamedTensor& tensor(int i) const { return tensors_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(tensors_.size()); }
  long long scalar_count() const;
  void zero_grads();

 private:
  std::vector<NamedTensor> tensors_;
  std::map<std::string, int> by_name_;
};

struct ForwardResult {
  double loss = 0.0;
  Vector probs;  // length 2
  Matrix x_cp;   // fused node features, N x M'
  std::vector<Matrix> coupling_attention;  // head-averaged, per coupling layer
};

// Frozen intermediate stage outputs; lets repeated loss evaluations that
// perturb only downstream tensors skip the untouched stages.
struct StageCache {
  Matrix xf, xs;   // stage-1 encoder outputs
  Matrix pooled;   // 1 x M' pooled fused features
  bool has_stage1 = false;
  bool has_pooled = false;
};

class Model {
 public:
  Model(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  std::uint64_t seed() const { return seed_; }

  ForwardResult forward(const Subject& subject) const;

  // Runs forward and adds grad_scale * dLoss/dtheta into the gradient buffers.
  ForwardResult forward_backward(const Subject& subject, double grad_scale);

  StageCache make_stage_cache(const Subject& subject, bool with_pooled) const;

  // Loss-only evaluation reusing cached stage outputs where present.
  double loss_with_cache(const Subject& subject, const StageCache& cache) const;

 private:
  ForwardResult run(const Subject& subject, bool with_grad, double grad_scale,
                    const StageCache* use_cache = nullptr, StageCache* fill_cache = nullptr);

  ModelSpec spec_;
  ParameterStore store_;
  std::uint64_t seed_ = 0;
};

}  // namespace hkgf
