#pragma once

#include "hkgf/autodiff.hpp"
#include "hkgf/manifold.hpp"

namespace hkgf {

// Two tangent-space dense layers (hidden 32) plus a plain linear logit layer.
struct HnnParams {
  Matrix w1;  // input x hidden
  Vector b1;
  Matrix w2;  // hidden x hidden
  Vector b2;
  Matrix w_out;  // hidden x 2
  Vector b_out;

  void validate(int input_dim) const;
};

HnnParams init_hnn_params(int input_dim, int hidden, Rng& rng);

// Column means of the fused node features.
Vector average_pool(const Matrix& x_cp);

// ReLU(W^T log(P(x)) + b) twice, then an unconstrained linear map to 2 logits.
Vector hnn_forward(const Vector& x, const HnnParams& p, const CurvatureConfig& cfg);

// Euclidean counterpart (plain 2-layer ReLU perceptron + logits).
Vector mlp_forward(const Vector& x, const HnnParams& p);

struct CeResult {
  double loss = 0.0;
  Vector probs;  // strictly inside (0,1), sums to 1
};

// Numerically stable log-sum-exp formulation.
CeResult softmax_cross_entropy(const Vector& logits, int label);

// --- tape builder ---------------------------------------------------------------

struct TapeHnnParams {
  Tape::Ref w1, b1, w2, b2, w_out, b_out;  // biases as 1 x M rows
};

Tape::Ref hnn_tape(Tape& tape, Tape::Ref x_row, const TapeHnnParams& p,
                   const CurvatureConfig& cfg, bool hyperbolic);

}  // namespace hkgf
