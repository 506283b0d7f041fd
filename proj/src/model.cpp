#include "hkgf/model.hpp"

#include <cmath>

namespace hkgf {

using nlohmann::json;

void ModelSpec::validate() const {
  require(n_rois >= 2, "model: n_rois must be >= 2");
  fc_encoder.validate();
  sc_encoder.validate();
  coupling_encoder.validate();
  require(fc_encoder.kind == kind && sc_encoder.kind == kind && coupling_encoder.kind == kind,
          "model: all encoder stages must share the pipeline kind");
  require(fc_encoder.input_dim == n_rois, "model: fc encoder input must be N");
  require(sc_encoder.input_dim == 3 * n_rois, "model: sc encoder input must be 3N");
  require(fc_encoder.output_dim() == sc_encoder.output_dim(),
          "model: fc/sc embedding widths must match for the coupling inner product");
  require(coupling_encoder.input_dim == fc_encoder.output_dim() + sc_encoder.output_dim(),
          "model: coupling encoder input must be M_F + M_S");
  require(hnn_hidden >= 1, "model: hnn hidden width must be >= 1");
  curvature.validate();
}

ModelSpec default_model_spec(EncoderKind kind, int n_rois, double lambda, double curvature_c) {
  ModelSpec spec;
  spec.kind = kind;
  spec.n_rois = n_rois;
  spec.curvature.c = curvature_c;
  spec.fc_encoder = default_encoder_spec(kind, n_rois, lambda, curvature_c);
  spec.sc_encoder = default_encoder_spec(kind, 3 * n_rois, lambda, curvature_c);
  spec.coupling_encoder = default_encoder_spec(
      kind, spec.fc_encoder.output_dim() + spec.sc_encoder.output_dim(), lambda, curvature_c);
  spec.validate();
  return spec;
}

namespace {

json encoder_spec_to_json(const EncoderSpec& e) {
  json layers = json::array();
  for (int l = 0; l < e.num_layers(); ++l) {
    const LayerConfig& c = e.layer_configs[l];
    layers.push_back({{"dim", e.layer_dims[l]},
                      {"heads", c.heads},
                      {"lambda", c.lambda},
                      {"activation", c.activation == Activation::kRelu ? "relu" : "elu"},
                      {"elu_alpha", c.elu_alpha}});
  }
  return json{{"kind", to_string(e.kind)},
              {"input_dim", e.input_dim},
              {"layers", layers},
              {"attention_bias", e.attention_bias}};
}

EncoderSpec encoder_spec_from_json(const json& j, double curvature_c, double epsilon) {
  EncoderSpec e;
  e.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  e.input_dim = j.at("input_dim").get<int>();
  e.attention_bias = j.value("attention_bias", false);
  for (const auto& lj : j.at("layers")) {
    e.layer_dims.push_back(lj.at("dim").get<int>());
    LayerConfig c;
    c.curvature.c = curvature_c;
    c.curvature.epsilon = epsilon;
    c.heads = lj.value("heads", 1);
    c.lambda = lj.value("lambda", 0.0);
    c.activation = lj.value("activation", std::string("relu")) == "elu" ? Activation::kElu
                                                                        : Activation::kRelu;
    c.elu_alpha = lj.value("elu_alpha", 1.0);
    e.layer_configs.push_back(c);
  }
  return e;
}

}  // namespace

json model_spec_to_json(const ModelSpec& spec) {
  return json{{"kind", to_string(spec.kind)},
              {"n_rois", spec.n_rois},
              {"curvature", spec.curvature.c},
              {"ball_epsilon", spec.curvature.epsilon},
              {"hnn_hidden", spec.hnn_hidden},
              {"fc_encoder", encoder_spec_to_json(spec.fc_encoder)},
              {"sc_encoder", encoder_spec_to_json(spec.sc_encoder)},
              {"coupling_encoder", encoder_spec_to_json(spec.coupling_encoder)}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  spec.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  spec.n_rois = j.at("n_rois").get<int>();
  spec.curvature.c = j.at("curvature").get<double>();
  spec.curvature.epsilon = j.value("ball_epsilon", 1e-5);
  spec.hnn_hidden = j.at("hnn_hidden").get<int>();
  spec.fc_encoder = encoder_spec_from_json(j.at("fc_encoder"), spec.curvature.c,
                                           spec.curvature.epsilon);
  spec.sc_encoder = encoder_spec_from_json(j.at("sc_encoder"), spec.curvature.c,
                                           spec.curvature.epsilon);
  spec.coupling_encoder = encoder_spec_from_json(j.at("coupling_encoder"), spec.curvature.c,
                                                 spec.curvature.epsilon);
  spec.validate();
  return spec;
}

int ParameterStore::add(const std::string& name, Matrix value) {
  require(by_name_.find(name) == by_name_.end(), "duplicate tensor name: " + name);
  tensors_.push_back(NamedTensor{name, std::move(value), Matrix()});
  tensors_.back().grad = Matrix::Zero(tensors_.back().value.rows(), tensors_.back().value.cols());
  const int idx = static_cast<int>(tensors_.size()) - 1;
  by_name_[name] = idx;
  return idx;
}

int ParameterStore::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

long long ParameterStore::scalar_count() const {
  long long n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& t : tensors_) t.grad.setZero();
}

namespace {

// Canonical tensor enumeration shared by the initializer and the tape feeder.
struct TensorDesc {
  std::string name;
  int rows, cols;
  enum Role { kWeight, kBias, kAttention } role;
};

void encoder_tensor_descs(const EncoderSpec& spec, const std::string& stage,
                          std::vector<TensorDesc>& out) {
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int d = spec.layer_input_dim(l);
    const int m = spec.layer_dims[l];
    const std::string base = stage + ".l" + std::to_string(l);
    if (is_attention(spec.kind)) {
      for (int k = 0; k < spec.layer_configs[l].heads; ++k) {
        const std::string hb = base + ".h" + std::to_string(k);
        out.push_back({hb + ".w", m, d, TensorDesc::kWeight});
        out.push_back({hb + ".a", 2 * m, 1, TensorDesc::kAttention});
        if (spec.attention_bias) out.push_back({hb + ".b", 1, m, TensorDesc::kBias});
      }
    } else {
      out.push_back({base + ".w", d, m, TensorDesc::kWeight});
      out.push_back({base + ".b", 1, m, TensorDesc::kBias});
    }
  }
}

std::vector<TensorDesc> model_tensor_descs(const ModelSpec& spec) {
  std::vector<TensorDesc> out;
  encoder_tensor_descs(spec.fc_encoder, "fc_enc", out);
  encoder_tensor_descs(spec.sc_encoder, "sc_enc", out);
  encoder_tensor_descs(spec.coupling_encoder, "cp_enc", out);
  const int fused = spec.coupling_encoder.output_dim();
  const int h = spec.hnn_hidden;
  out.push_back({"hnn.l1.w", fused, h, TensorDesc::kWeight});
  out.push_back({"hnn.l1.b", 1, h, TensorDesc::kBias});
  out.push_back({"hnn.l2.w", h, h, TensorDesc::kWeight});
  out.push_back({"hnn.l2.b", 1, h, TensorDesc::kBias});
  out.push_back({"hnn.out.w", h, 2, TensorDesc::kWeight});
  out.push_back({"hnn.out.b", 1, 2, TensorDesc::kBias});
  return out;
}

Matrix init_tensor(const TensorDesc& d, Rng& rng) {
  if (d.role == TensorDesc::kBias) return Matrix::Zero(d.rows, d.cols);
  // Glorot uniform; the attention vector treats its 2M inputs as fan-in.
  const double fan_sum = d.role == TensorDesc::kAttention
                             ? static_cast<double>(d.rows + 1)
                             : static_cast<double>(d.rows + d.cols);
  const double limit = std::sqrt(6.0 / fan_sum);
  Matrix m(d.rows, d.cols);
  for (int i = 0; i < d.rows; ++i)
    for (int j = 0; j < d.cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  Rng rng(seed);
  for (const auto& d : model_tensor_descs(spec_)) {
    store_.add(d.name, init_tensor(d, rng));
  }
}

ForwardResult Model::forward(const Subject& subject) const {
  // run() only mutates gradients, and with_grad=false never touches them
  return const_cast<Model*>(this)->run(subject, false, 0.0);
}

ForwardResult Model::forward_backward(const Subject& subject, double grad_scale) {
  return run(subject, true, grad_scale);
}

StageCache Model::make_stage_cache(const Subject& subject, bool with_pooled) const {
  StageCache cache;
  const_cast<Model*>(this)->run(subject, false, 0.0, nullptr, &cache);
  cache.has_stage1 = true;
  cache.has_pooled = with_pooled;
  if (!with_pooled) cache.pooled = Matrix();
  return cache;
}

double Model::loss_with_cache(const Subject& subject, const StageCache& cache) const {
  return const_cast<Model*>(this)->run(subject, false, 0.0, &cache, nullptr).loss;
}

ForwardResult Model::run(const Subject& subject, bool with_grad, double grad_scale,
                         const StageCache* use_cache, StageCache* fill_cache) {
  const ConnectivityGraph& fc = subject.graph(Modality::kFc);
  const ConnectivityGraph& sc = subject.graph(Modality::kSc);
  require(fc.features.cols() == spec_.fc_encoder.input_dim,
          "subject '" + subject.id + "': fc feature width " + std::to_string(fc.features.cols()) +
              " does not match model (" + std::to_string(spec_.fc_encoder.input_dim) + ")");
  require(sc.features.cols() == spec_.sc_encoder.input_dim,
          "subject '" + subject.id + "': sc feature width mismatch");
  require(fc.num_nodes() == sc.num_nodes() && fc.num_nodes() == spec_.n_rois,
          "subject '" + subject.id + "': graphs must share the model's ROI count");
  require(subject.label == 0 || subject.label == 1, "subject label must be 0 or 1");

  Tape tape;
  tape.reserve(256 + static_cast<std::size_t>(store_.size()));

  std::vector<Tape::Ref> refs(static_cast<std::size_t>(store_.size()));
  for (int i = 0; i < store_.size(); ++i) {
    refs[static_cast<std::size_t>(i)] =
        with_grad ? tape.param(store_.tensor(i).value) : tape.constant(store_.tensor(i).value);
  }

  // Rebuild the per-layer parameter handles in canonical order.
  int cursor = 0;
  auto next_ref = [&]() { return refs[static_cast<std::size_t>(cursor++)]; };
  auto encoder_params = [&](const EncoderSpec& e) {
    std::vector<std::vector<TapeLayerParams>> params;
    for (int l = 0; l < e.num_layers(); ++l) {
      std::vector<TapeLayerParams> layer;
      if (is_attention(e.kind)) {
        for (int k = 0; k < e.layer_configs[l].heads; ++k) {
          TapeLayerParams p;
          p.weight = next_ref();
          p.attention = next_ref();
          if (e.attention_bias) {
            p.bias = next_ref();
            p.has_bias = true;
          }
          layer.push_back(p);
        }
      } else {
        TapeLayerParams p;
        p.weight = next_ref();
        p.bias = next_ref();
        p.has_bias = true;
        layer.push_back(p);
      }
      params.push_back(std::move(layer));
    }
    return params;
  };
  const auto fc_params = encoder_params(spec_.fc_encoder);
  const auto sc_params = encoder_params(spec_.sc_encoder);
  const auto cp_params = encoder_params(spec_.coupling_encoder);
  TapeHnnParams hnn;
  hnn.w1 = next_ref();
  hnn.b1 = next_ref();
  hnn.w2 = next_ref();
  hnn.b2 = next_ref();
  hnn.w_out = next_ref();
  hnn.b_out = next_ref();

  const bool attention = is_attention(spec_.kind);
  auto stage1 = [&](const ConnectivityGraph& g, const EncoderSpec& e, const auto& params) {
    Tape::Ref a_norm;
    Matrix mask;
    if (attention) {
      mask = attention_mask(g.adjacency);
    } else {
      a_norm = tape.constant(normalize_adjacency_signed(g.adjacency));
    }
    return encode_graph_tape(tape, a_norm, mask, tape.constant(g.features), e, params);
  };

  const bool skip_stage1 = use_cache && use_cache->has_stage1;
  const bool skip_coupling = use_cache && use_cache->has_pooled;

  ForwardResult result;
  Tape::Ref pooled;
  if (skip_coupling) {
    pooled = tape.constant(use_cache->pooled);
  } else {
    Tape::Ref xf_ref, xs_ref;
    if (skip_stage1) {
      xf_ref = tape.constant(use_cache->xf);
      xs_ref = tape.constant(use_cache->xs);
    } else {
      xf_ref = stage1(fc, spec_.fc_encoder, fc_params).out;
      xs_ref = stage1(sc, spec_.sc_encoder, sc_params).out;
    }
    if (fill_cache) {
      fill_cache->xf = tape.value(xf_ref);
      fill_cache->xs = tape.value(xs_ref);
    }

    TapeCoupling coupling = coupling_tape(tape, xf_ref, xs_ref);
    Tape::Ref a2;
    Matrix mask2;
    if (attention) {
      mask2 = Matrix::Ones(spec_.n_rois, spec_.n_rois);  // dense A_C: full neighborhoods
    } else {
      a2 = coupling_normalized_adjacency_tape(tape, coupling.adjacency);
    }
    TapeEncoderOut xcp =
        encode_graph_tape(tape, a2, mask2, coupling.features, spec_.coupling_encoder, cp_params);
    result.x_cp = tape.value(xcp.out);
    result.coupling_attention = xcp.attention_per_layer;
    pooled = tape.mean_rows(xcp.out);
    if (fill_cache) fill_cache->pooled = tape.value(pooled);
  }

  Tape::Ref logits = hnn_tape(tape, pooled, hnn, spec_.curvature, is_hyperbolic(spec_.kind));
  Tape::Ref loss = tape.softmax_cross_entropy(logits, subject.label);

  result.loss = tape.value(loss)(0, 0);
  result.probs = tape.ce_probs(loss).row(0).transpose();
  if (!std::isfinite(result.loss)) {
    throw NumericalError("non-finite loss for subject '" + subject.id + "'");
  }

  if (with_grad) {
    tape.backward(loss);
    for (int i = 0; i < store_.size(); ++i) {
      const Matrix& g = tape.grad(refs[static_cast<std::size_t>(i)]);
      if (g.size() != 0) store_.tensor(i).grad += grad_scale * g;
    }
  }
  return result;
}

}  // namespace hkgf
