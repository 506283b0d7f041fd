#pragma once

#include <string>
#include <vector>

#include "hkgf/autodiff.hpp"
#include "hkgf/graphs.hpp"
#include "hkgf/manifold.hpp"

namespace hkgf {

enum class EncoderKind { kHkgcn, kHkgat, kGcn, kGat };

std::string to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);

inline bool is_hyperbolic(EncoderKind k) {
  return k == EncoderKind::kHkgcn || k == EncoderKind::kHkgat;
}
inline bool is_attention(EncoderKind k) {
  return k == EncoderKind::kHkgat || k == EncoderKind::kGat;
}

enum class Activation { kRelu, kElu };

struct LayerConfig {
  CurvatureConfig curvature;
  double lambda = 0.01;  // cosine-branch scale; 0 switches the branch off
  int heads = 1;         // attention kinds only
  Activation activation = Activation::kRelu;
  double elu_alpha = 1.0;

  void validate() const;
};

struct DenseLayerParams {
  Matrix weight;  // D x M
  Vector bias;    // M
  bool weight_trainable = true;
  bool bias_trainable = true;
};

struct AttentionLayerParams {
  Matrix weight;     // M x D
  Vector attention;  // 2M
  Vector bias;       // M, optional: zero-length means absent (the default)
  double leaky_slope = 0.2;  // beta in (0, 1)

  bool has_bias() const { return bias.size() > 0; }
};

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kHkgcn;
  int input_dim = 0;
  std::vector<int> layer_dims;            // output dim M per layer
  std::vector<LayerConfig> layer_configs; // same length as layer_dims
  bool attention_bias = false;            // hkgat/gat bias convention

  int num_layers() const { return static_cast<int>(layer_dims.size()); }
  // Input width of layer l, accounting for head concatenation.
  int layer_input_dim(int l) const;
  int output_dim() const;
  void validate() const;
};

// Two 64-wide layers; attention kinds get 4 heads then 1.
EncoderSpec default_encoder_spec(EncoderKind kind, int input_dim, double lambda = 0.01,
                                 double curvature_c = 0.001);

struct EncoderParams {
  std::vector<DenseLayerParams> dense;                       // dense kinds
  std::vector<std::vector<AttentionLayerParams>> attention;  // [layer][head]
};

EncoderParams init_encoder_params(const EncoderSpec& spec, Rng& rng);

// --- single-layer operations -------------------------------------------------

// f(A^(log(P(X))W + b)) + lambda * cos(A^(log(P(X))W + b)).
Matrix hkgcn_layer(const Matrix& a_norm, const Matrix& x, const DenseLayerParams& p,
                   const LayerConfig& cfg);

// Euclidean counterpart: act(A^(XW + b)).
Matrix gcn_layer(const Matrix& a_norm, const Matrix& x, const DenseLayerParams& p,
                 const LayerConfig& cfg);

// Attention layer; all cfg.heads heads share p (distinct-parameter stacks go
// through encode_graph). Neighborhoods are adj_mask nonzeros plus self-loops.
Matrix hkgat_layer(const Matrix& adj_mask, const Matrix& x, const AttentionLayerParams& p,
                   const LayerConfig& cfg);
Matrix gat_layer(const Matrix& adj_mask, const Matrix& x, const AttentionLayerParams& p,
                 const LayerConfig& cfg);

// Multi-head with per-head parameters, heads concatenated.
Matrix hkgat_layer_multi(const Matrix& adj_mask, const Matrix& x,
                         const std::vector<AttentionLayerParams>& heads,
                         const LayerConfig& cfg);
Matrix gat_layer_multi(const Matrix& adj_mask, const Matrix& x,
                       const std::vector<AttentionLayerParams>& heads, const LayerConfig& cfg);

// --- encoder stacks ------------------------------------------------------------

// Sequential application; the adjacency is normalized once (gcn kinds) or used
// as a neighborhood mask (attention kinds).
Matrix encode_graph(const ConnectivityGraph& g, const EncoderSpec& spec,
                    const EncoderParams& params);

// Neighborhood mask: nonzero adjacency pattern with self-loops added.
Matrix attention_mask(const Matrix& adjacency);

// --- tape builders (shared by the plain ops above and the trainable model) ----

struct TapeLayerParams {
  Tape::Ref weight;     // dense: D x M; attention: M x D
  Tape::Ref bias;       // dense: 1 x M; attention: optional 1 x M
  Tape::Ref attention;  // attention kinds: 2M x 1
  bool has_bias = false;
  double leaky_slope = 0.2;
};

struct TapeEncoderOut {
  Tape::Ref out;
  std::vector<Matrix> attention_per_layer;  // head-averaged, attention kinds
};

Tape::Ref dense_graph_layer_tape(Tape& tape, Tape::Ref a_norm, Tape::Ref x,
                                 const TapeLayerParams& p, const LayerConfig& cfg,
                                 bool hyperbolic);

struct AttentionHeadOut {
  Tape::Ref out;
  Tape::Ref alpha;
};

AttentionHeadOut attention_head_tape(Tape& tape, const Matrix& mask, Tape::Ref log_x,
                                     const TapeLayerParams& p, const LayerConfig& cfg,
                                     bool hyperbolic);

// Unified encoder builder. Dense kinds aggregate with a_norm (a tape node, so
// the coupling stage can backpropagate through its normalized adjacency);
// attention kinds use the constant neighborhood mask instead.
TapeEncoderOut encode_graph_tape(Tape& tape, Tape::Ref a_norm, const Matrix& mask,
                                 Tape::Ref features, const EncoderSpec& spec,
                                 const std::vector<std::vector<TapeLayerParams>>& params);

}  // namespace hkgf
