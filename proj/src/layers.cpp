#include "hkgf/layers.hpp"

#include <cmath>

namespace hkgf {

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kHkgcn: return "hkgcn";
    case EncoderKind::kHkgat: return "hkgat";
    case EncoderKind::kGcn: return "gcn";
    case EncoderKind::kGat: return "gat";
  }
  return "?";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "hkgcn") return EncoderKind::kHkgcn;
  if (s == "hkgat") return EncoderKind::kHkgat;
  if (s == "gcn") return EncoderKind::kGcn;
  if (s == "gat") return EncoderKind::kGat;
  throw ValidationError("unknown encoder kind: '" + s + "' (expected hkgcn|hkgat|gcn|gat)");
}

void LayerConfig::validate() const {
  curvature.validate();
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
  require(heads >= 1, "heads must be >= 1");
  require(elu_alpha > 0.0, "elu_alpha must be > 0");
}

int EncoderSpec::layer_input_dim(int l) const {
  if (l == 0) return input_dim;
  const int prev = layer_dims[l - 1];
  return is_attention(kind) ? layer_configs[l - 1].heads * prev : prev;
}

int EncoderSpec::output_dim() const {
  const int last = num_layers() - 1;
  const int m = layer_dims[last];
  return is_attention(kind) ? layer_configs[last].heads * m : m;
}

void EncoderSpec::validate() const {
  require(input_dim >= 1, "encoder input_dim must be >= 1");
  require(!layer_dims.empty(), "encoder needs at least one layer");
  require(layer_dims.size() == layer_configs.size(),
          "layer_dims and layer_configs must have equal length");
  for (std::size_t l = 0; l < layer_dims.size(); ++l) {
    require(layer_dims[l] >= 1, "layer output dim must be >= 1");
    layer_configs[l].validate();
    if (!is_attention(kind)) {
      require(layer_configs[l].heads == 1, "dense encoder layers must use a single head");
    }
  }
}

EncoderSpec default_encoder_spec(EncoderKind kind, int input_dim, double lambda,
                                 double curvature_c) {
  EncoderSpec spec;
  spec.kind = kind;
  spec.input_dim = input_dim;
  spec.layer_dims = {64, 64};
  LayerConfig cfg;
  cfg.curvature.c = curvature_c;
  cfg.lambda = is_hyperbolic(kind) ? lambda : 0.0;
  cfg.activation = is_attention(kind) ? Activation::kElu : Activation::kRelu;
  LayerConfig first = cfg;
  LayerConfig second = cfg;
  if (is_attention(kind)) {
    first.heads = 4;
    second.heads = 1;
  }
  spec.layer_configs = {first, second};
  return spec;
}

EncoderParams init_encoder_params(const EncoderSpec& spec, Rng& rng) {
  spec.validate();
  EncoderParams params;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int d = spec.layer_input_dim(l);
    const int m = spec.layer_dims[l];
    if (is_attention(spec.kind)) {
      std::vector<AttentionLayerParams> heads;
      for (int k = 0; k < spec.layer_configs[l].heads; ++k) {
        AttentionLayerParams p;
        const double limit = std::sqrt(6.0 / (d + m));
        p.weight.resize(m, d);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < d; ++j) p.weight(i, j) = rng.uniform(-limit, limit);
        const double alimit = std::sqrt(6.0 / (2 * m + 1));
        p.attention.resize(2 * m);
        for (int i = 0; i < 2 * m; ++i) p.attention(i) = rng.uniform(-alimit, alimit);
        if (spec.attention_bias) p.bias = Vector::Zero(m);
        heads.push_back(std::move(p));
      }
      params.attention.push_back(std::move(heads));
    } else {
      DenseLayerParams p;
      const double limit = std::sqrt(6.0 / (d + m));
      p.weight.resize(d, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < m; ++j) p.weight(i, j) = rng.uniform(-limit, limit);
      p.bias = Vector::Zero(m);
      params.dense.push_back(std::move(p));
    }
  }
  return params;
}

// --- tape builders -------------------------------------------------------------

Tape::Ref dense_graph_layer_tape(Tape& tape, Tape::Ref a_norm, Tape::Ref x,
                                 const TapeLayerParams& p, const LayerConfig& cfg,
                                 bool hyperbolic) {
  Tape::Ref pre = x;
  if (hyperbolic) {
    pre = tape.log_map_rows(tape.project_rows(x, cfg.curvature.c, cfg.curvature.epsilon),
                            cfg.curvature.c);
  }
  Tape::Ref t = tape.matmul(pre, p.weight);
  if (p.has_bias) t = tape.add_row_vector(t, p.bias);
  Tape::Ref z = tape.matmul(a_norm, t);
  Tape::Ref act = cfg.activation == Activation::kRelu ? tape.relu(z) : tape.elu(z, cfg.elu_alpha);
  if (hyperbolic && cfg.lambda != 0.0) {
    return tape.add(act, tape.scale(tape.cosine(z), cfg.lambda));
  }
  return act;
}

AttentionHeadOut attention_head_tape(Tape& tape, const Matrix& mask, Tape::Ref log_x,
                                     const TapeLayerParams& p, const LayerConfig& cfg,
                                     bool hyperbolic) {
  const Eigen::Index n = tape.value(log_x).rows();
  const Eigen::Index m = tape.value(p.weight).rows();

  Tape::Ref u = tape.matmul(log_x, tape.transpose(p.weight));
  if (p.has_bias) u = tape.add_row_vector(u, p.bias);

  // e_ij = LeakyReLU(a1.u_i + a2.u_j): rank-one row/column broadcast.
  Tape::Ref a1 = tape.block_rows(p.attention, 0, m);
  Tape::Ref a2 = tape.block_rows(p.attention, m, m);
  Tape::Ref pvec = tape.matmul(u, a1);  // N x 1
  Tape::Ref qvec = tape.matmul(u, a2);  // N x 1
  Tape::Ref ones_row = tape.constant(Matrix::Ones(1, n));
  Tape::Ref ones_col = tape.constant(Matrix::Ones(n, 1));
  Tape::Ref scores = tape.add(tape.matmul(pvec, ones_row),
                              tape.matmul(ones_col, tape.transpose(qvec)));
  Tape::Ref e = tape.leaky_relu(scores, p.leaky_slope);
  Tape::Ref alpha = tape.masked_softmax_rows(e, mask);
  Tape::Ref h = tape.matmul(alpha, u);
  Tape::Ref act = cfg.activation == Activation::kRelu ? tape.relu(h) : tape.elu(h, cfg.elu_alpha);
  Tape::Ref out = act;
  if (hyperbolic && cfg.lambda != 0.0) {
    out = tape.add(act, tape.scale(tape.cosine(h), cfg.lambda));
  }
  return AttentionHeadOut{out, alpha};
}

TapeEncoderOut encode_graph_tape(Tape& tape, Tape::Ref a_norm, const Matrix& mask,
                                 Tape::Ref features, const EncoderSpec& spec,
                                 const std::vector<std::vector<TapeLayerParams>>& params) {
  spec.validate();
  require(params.size() == static_cast<std::size_t>(spec.num_layers()),
          "encoder params/layer count mismatch");
  const bool hyperbolic = is_hyperbolic(spec.kind);

  TapeEncoderOut result;
  Tape::Ref x = features;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const LayerConfig& cfg = spec.layer_configs[l];
    if (tape.value(x).cols() != spec.layer_input_dim(l)) {
      throw ValidationError("encoder layer " + std::to_string(l) + ": input width " +
                            std::to_string(tape.value(x).cols()) + " does not match expected " +
                            std::to_string(spec.layer_input_dim(l)));
    }
    if (is_attention(spec.kind)) {
      require(params[l].size() == static_cast<std::size_t>(cfg.heads),
              "encoder layer " + std::to_string(l) + ": head params mismatch");
      Tape::Ref pre = x;
      if (hyperbolic) {
        pre = tape.log_map_rows(tape.project_rows(x, cfg.curvature.c, cfg.curvature.epsilon),
                                cfg.curvature.c);
      }
      Tape::Ref combined;
      Matrix alpha_sum;
      for (int k = 0; k < cfg.heads; ++k) {
        AttentionHeadOut head = attention_head_tape(tape, mask, pre, params[l][k], cfg, hyperbolic);
        combined = k == 0 ? head.out : tape.concat_cols(combined, head.out);
        if (k == 0) {
          alpha_sum = tape.value(head.alpha);
        } else {
          alpha_sum += tape.value(head.alpha);
        }
      }
      result.attention_per_layer.push_back(alpha_sum / static_cast<double>(cfg.heads));
      x = combined;
    } else {
      require(params[l].size() == 1, "dense encoder layer expects a single parameter set");
      x = dense_graph_layer_tape(tape, a_norm, x, params[l][0], cfg, hyperbolic);
    }
  }
  result.out = x;
  return result;
}

// --- plain single-layer ops ------------------------------------------------------

namespace {

TapeLayerParams to_tape(Tape& tape, const DenseLayerParams& p) {
  TapeLayerParams tp;
  tp.weight = tape.constant(p.weight);
  tp.bias = tape.constant(p.bias.transpose());
  tp.has_bias = p.bias.size() > 0;
  return tp;
}

TapeLayerParams to_tape(Tape& tape, const AttentionLayerParams& p) {
  require(p.leaky_slope > 0.0 && p.leaky_slope < 1.0, "leaky_slope must lie in (0, 1)");
  require(p.attention.size() == 2 * p.weight.rows(),
          "attention vector must have length 2M");
  TapeLayerParams tp;
  tp.weight = tape.constant(p.weight);
  tp.attention = tape.constant(p.attention);
  tp.leaky_slope = p.leaky_slope;
  if (p.has_bias()) {
    tp.bias = tape.constant(p.bias.transpose());
    tp.has_bias = true;
  }
  return tp;
}

Matrix run_attention_layer(const Matrix& adj_mask, const Matrix& x,
                           const std::vector<AttentionLayerParams>& heads,
                           const LayerConfig& cfg, bool hyperbolic) {
  cfg.validate();
  require(!heads.empty(), "attention layer needs at least one head");
  const Matrix mask = attention_mask(adj_mask);
  Tape tape;
  Tape::Ref x_ref = tape.constant(x);
  Tape::Ref pre = x_ref;
  if (hyperbolic) {
    pre = tape.log_map_rows(tape.project_rows(x_ref, cfg.curvature.c, cfg.curvature.epsilon),
                            cfg.curvature.c);
  }
  Matrix out;
  for (const auto& head : heads) {
    require(head.weight.cols() == x.cols(), "attention weight/input dimension mismatch");
    TapeLayerParams tp = to_tape(tape, head);
    AttentionHeadOut h = attention_head_tape(tape, mask, pre, tp, cfg, hyperbolic);
    if (out.size() == 0) {
      out = tape.value(h.out);
    } else {
      Matrix merged(out.rows(), out.cols() + tape.value(h.out).cols());
      merged << out, tape.value(h.out);
      out = std::move(merged);
    }
  }
  return out;
}

}  // namespace

Matrix hkgcn_layer(const Matrix& a_norm, const Matrix& x, const DenseLayerParams& p,
                   const LayerConfig& cfg) {
  cfg.validate();
  require(a_norm.rows() == a_norm.cols() && a_norm.rows() == x.rows(),
          "hkgcn_layer: adjacency/features shape mismatch");
  require(p.weight.rows() == x.cols(), "hkgcn_layer: weight/input dimension mismatch");
  require(x.allFinite(), "hkgcn_layer: non-finite features");
  Tape tape;
  TapeLayerParams tp = to_tape(tape, p);
  return tape.value(
      dense_graph_layer_tape(tape, tape.constant(a_norm), tape.constant(x), tp, cfg, true));
}

Matrix gcn_layer(const Matrix& a_norm, const Matrix& x, const DenseLayerParams& p,
                 const LayerConfig& cfg) {
  cfg.validate();
  require(a_norm.rows() == a_norm.cols() && a_norm.rows() == x.rows(),
          "gcn_layer: adjacency/features shape mismatch");
  require(p.weight.rows() == x.cols(), "gcn_layer: weight/input dimension mismatch");
  Tape tape;
  TapeLayerParams tp = to_tape(tape, p);
  return tape.value(
      dense_graph_layer_tape(tape, tape.constant(a_norm), tape.constant(x), tp, cfg, false));
}

Matrix hkgat_layer(const Matrix& adj_mask, const Matrix& x, const AttentionLayerParams& p,
                   const LayerConfig& cfg) {
  std::vector<AttentionLayerParams> heads(static_cast<std::size_t>(cfg.heads), p);
  return run_attention_layer(adj_mask, x, heads, cfg, true);
}

Matrix gat_layer(const Matrix& adj_mask, const Matrix& x, const AttentionLayerParams& p,
                 const LayerConfig& cfg) {
  std::vector<AttentionLayerParams> heads(static_cast<std::size_t>(cfg.heads), p);
  return run_attention_layer(adj_mask, x, heads, cfg, false);
}

Matrix hkgat_layer_multi(const Matrix& adj_mask, const Matrix& x,
                         const std::vector<AttentionLayerParams>& heads,
                         const LayerConfig& cfg) {
  return run_attention_layer(adj_mask, x, heads, cfg, true);
}

Matrix gat_layer_multi(const Matrix& adj_mask, const Matrix& x,
                       const std::vector<AttentionLayerParams>& heads, const LayerConfig& cfg) {
  return run_attention_layer(adj_mask, x, heads, cfg, false);
}

Matrix attention_mask(const Matrix& adjacency) {
  require(adjacency.rows() == adjacency.cols(), "attention_mask: adjacency must be square");
  Matrix mask = (adjacency.array() != 0.0).cast<double>();
  mask.diagonal().setOnes();  // a node always attends to itself
  return mask;
}

Matrix encode_graph(const ConnectivityGraph& g, const EncoderSpec& spec,
                    const EncoderParams& params) {
  spec.validate();
  require(g.features.cols() == spec.input_dim,
          "encode_graph: graph feature width " + std::to_string(g.features.cols()) +
              " does not match encoder input_dim " + std::to_string(spec.input_dim));

  Tape tape;
  std::vector<std::vector<TapeLayerParams>> tape_params;
  if (is_attention(spec.kind)) {
    require(params.attention.size() == static_cast<std::size_t>(spec.num_layers()),
            "encode_graph: attention params/layer count mismatch");
    for (const auto& heads : params.attention) {
      std::vector<TapeLayerParams> layer;
      for (const auto& head : heads) layer.push_back(to_tape(tape, head));
      tape_params.push_back(std::move(layer));
    }
  } else {
    require(params.dense.size() == static_cast<std::size_t>(spec.num_layers()),
            "encode_graph: dense params/layer count mismatch");
    for (const auto& p : params.dense) tape_params.push_back({to_tape(tape, p)});
  }

  Tape::Ref a_norm;
  Matrix mask;
  if (is_attention(spec.kind)) {
    mask = attention_mask(g.adjacency);
  } else {
    a_norm = tape.constant(normalize_adjacency_signed(g.adjacency));
  }
  TapeEncoderOut out =
      encode_graph_tape(tape, a_norm, mask, tape.constant(g.features), spec, tape_params);
  return tape.value(out.out);
}

}  // namespace hkgf
